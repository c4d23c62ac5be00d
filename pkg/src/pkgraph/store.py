"""Single-file hybrid store: graph topology, properties, provenance, vectors.

File layout (all little-endian):

    offset 0   magic ``RPKG``
    offset 4   u16 format version
    offset 6   u16 flags (reserved, 0)
    offset 8   u64 snapshot length
    offset 16  u32 snapshot CRC-32, then the zlib-compressed snapshot JSON
    then       zero or more commit frames: u32 length | u32 CRC-32 | ops JSON

A commit appends one frame holding every operation of the transaction and
fsyncs before returning, so a crash can only ever lose the frame being
written; a torn tail is detected by length/CRC and discarded on reopen.
Compaction rewrites the file (snapshot + empty log) through an atomic
rename. Deletion is therefore verifiable by inspecting a compacted file.

Concurrency: single writer, readers see only committed state. One reentrant
lock serializes every public call; transactions hold it until commit, which
keeps uncommitted writes invisible without MVCC machinery.
"""
from __future__ import annotations

import base64
import json
import os
import struct
import threading
import zlib
from contextlib import contextmanager
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from . import ids, model
from .errors import (
    CannotDeleteRootError,
    CorruptStoreError,
    DanglingEdgeError,
    DuplicateIdError,
    InvalidLabelError,
    SecondUserRootError,
    StoreError,
    StoreIOError,
    UnknownNodeError,
    VersionMismatchError,
)
from .index import VectorIndex
from .model import (
    DeletionReceipt,
    Edge,
    GraphSnapshot,
    Node,
    Partition,
    edge_from_dict,
    edge_to_dict,
    node_from_dict,
    node_to_dict,
)

MAGIC = b"RPKG"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sHHQ")  # magic, version, flags, snapshot length
FRAME = struct.Struct("<II")      # payload length, payload crc32

DEFAULT_DIMENSION = 256
AUTO_COMPACT_BYTES = 8 * 1024 * 1024

USER_ROOT_ID = ids.USER_ROOT_ID


def merge_properties(existing: dict, incoming: dict) -> dict:
    """Conflict policy: keep the old value, file the new one under key#2, #3, ...

    A value already recorded under the key (or one of its numbered variants)
    is not duplicated. Nothing a user wrote is ever silently dropped.
    """
    merged = dict(existing)
    for key in sorted(incoming, key=str):
        value = incoming[key]
        if key not in merged:
            merged[key] = value
            continue
        seen = [merged[key]]
        n = 2
        while f"{key}#{n}" in merged:
            seen.append(merged[f"{key}#{n}"])
            n += 1
        if any(value == prior and type(value) is type(prior) for prior in seen):
            continue
        merged[f"{key}#{n}"] = value
    return merged


def _vec_to_b64(vector: np.ndarray) -> str:
    return base64.b64encode(np.asarray(vector, dtype="<f4").tobytes()).decode("ascii")


def _vec_from_b64(data: str) -> np.ndarray:
    return np.frombuffer(base64.b64decode(data), dtype="<f4").copy()


class _Txn:
    __slots__ = ("ops", "undo")

    def __init__(self):
        self.ops: list[dict] = []
        self.undo: list[dict] = []


class Store:
    """Handle over one store file. Use :func:`open_store` to construct."""

    def __init__(self, path, *, create_if_missing: bool = True,
                 dimension: int = DEFAULT_DIMENSION):
        self.path = Path(path)
        self._lock = threading.RLock()
        self._closed = False
        self._txn: Optional[_Txn] = None

        self._nodes: dict[str, Node] = {}
        self._edges: dict[str, Edge] = {}
        self._out: dict[str, set[str]] = {}
        self._in: dict[str, set[str]] = {}
        self._key_index: dict[tuple[str, str], str] = {}
        self._aliases: dict[tuple[str, str], str] = {}
        self._records: dict[str, dict] = {}
        self._prov_owners: dict[str, set[str]] = {}
        self._partitions: list[Partition] = []
        self._stale = False
        self._dim = dimension
        self.index = VectorIndex(dimension)

        self._fh = None
        self._wal_bytes = 0
        self._snapshot_len = 0

        if self.path.exists():
            self._load()
        elif create_if_missing:
            self._create()
        else:
            raise StoreIOError(f"store file {self.path} does not exist")

    # --- lifecycle -----------------------------------------------------

    def _create(self):
        root = Node(id=USER_ROOT_ID, label="User", display_name="User",
                    canonical_key="user", created_at=ids.now())
        self._put_node_state(root)
        try:
            self._fh = open(self.path, "w+b")
            self._write_snapshot(self._fh)
            self._fh.flush()
            os.fsync(self._fh.fileno())
        except OSError as exc:
            raise StoreIOError(f"cannot create store at {self.path}: {exc}") from exc

    def _load(self):
        try:
            fh = open(self.path, "r+b")
        except OSError as exc:
            raise StoreIOError(f"cannot open store at {self.path}: {exc}") from exc
        try:
            header = fh.read(HEADER.size)
            if len(header) < HEADER.size:
                raise CorruptStoreError("file too short for store header")
            magic, version, _flags, snap_len = HEADER.unpack(header)
            if magic != MAGIC:
                raise CorruptStoreError("bad magic bytes: not a store file")
            if version != FORMAT_VERSION:
                raise VersionMismatchError(
                    f"store format v{version}, this build reads v{FORMAT_VERSION}")
            body = fh.read(4 + snap_len)
            if len(body) < 4 + snap_len:
                raise CorruptStoreError("truncated snapshot block")
            (crc,) = struct.unpack("<I", body[:4])
            blob = body[4:]
            if zlib.crc32(blob) != crc:
                raise CorruptStoreError("snapshot checksum mismatch")
            try:
                state = json.loads(zlib.decompress(blob).decode("utf-8"))
            except (zlib.error, ValueError) as exc:
                raise CorruptStoreError(f"snapshot unreadable: {exc}") from exc
            self._restore_state(state)
            self._snapshot_len = snap_len

            # replay committed frames; stop at the first torn or corrupt tail
            good_end = HEADER.size + 4 + snap_len
            while True:
                head = fh.read(FRAME.size)
                if len(head) < FRAME.size:
                    break
                length, crc = FRAME.unpack(head)
                payload = fh.read(length)
                if len(payload) < length or zlib.crc32(payload) != crc:
                    break
                for op in json.loads(payload.decode("utf-8")):
                    self._apply(op)
                good_end += FRAME.size + length
                self._wal_bytes += FRAME.size + length
            end = fh.seek(0, os.SEEK_END)
            if end != good_end:
                fh.truncate(good_end)  # discard the torn, uncommitted tail
                fh.flush()
                os.fsync(fh.fileno())
            fh.seek(good_end)
        except Exception:
            fh.close()
            raise
        self._fh = fh

    def close(self):
        with self._lock:
            if self._closed:
                return
            if self._txn is not None:
                raise StoreError("cannot close with an open transaction")
            self._fh.close()
            self._closed = True

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _check_open(self):
        if self._closed:
            raise StoreIOError("store handle is closed")

    @contextmanager
    def locked(self):
        """Hold the store lock across several reads for a consistent view."""
        with self._lock:
            yield self

    # --- snapshot / state ------------------------------------------------

    def _state_dict(self) -> dict:
        return {
            "dimension": self._dim,
            "nodes": [node_to_dict(self._nodes[i]) for i in sorted(self._nodes)],
            "edges": [edge_to_dict(self._edges[i]) for i in sorted(self._edges)],
            "vectors": {i: _vec_to_b64(self.index.get(i))
                        for i in sorted(self.index.ids())},
            "records": {rid: dict(entry) for rid, entry in sorted(self._records.items())},
            "aliases": [[label, key, node] for (label, key), node in
                        sorted(self._aliases.items())],
            "partitions": [self._partition_dict(p) for p in self._partitions],
            "stale": self._stale,
        }

    @staticmethod
    def _partition_dict(p: Partition) -> dict:
        return {"level": p.level, "assignment": dict(sorted(p.assignment.items())),
                "quality": p.quality}

    def _restore_state(self, state: dict):
        self._dim = state["dimension"]
        self.index = VectorIndex(self._dim)
        for nd in state["nodes"]:
            self._put_node_state(node_from_dict(nd))
        for ed in state["edges"]:
            self._put_edge_state(edge_from_dict(ed))
        for node_id in sorted(state["vectors"]):
            self.index.add(node_id, _vec_from_b64(state["vectors"][node_id]))
        self._records = {rid: dict(entry) for rid, entry in state["records"].items()}
        self._aliases = {(label, key): node for label, key, node in state["aliases"]}
        self._partitions = [
            Partition(level=p["level"], assignment=dict(p["assignment"]),
                      quality=p["quality"])
            for p in state["partitions"]
        ]
        self._stale = state["stale"]

    def _write_snapshot(self, fh):
        blob = zlib.compress(
            json.dumps(self._state_dict(), sort_keys=True,
                       separators=(",", ":")).encode("utf-8"), 6)
        fh.write(HEADER.pack(MAGIC, FORMAT_VERSION, 0, len(blob)))
        fh.write(struct.pack("<I", zlib.crc32(blob)))
        fh.write(blob)
        self._snapshot_len = len(blob)
        self._wal_bytes = 0

    def compact(self):
        """Rewrite the file as header + snapshot, atomically."""
        with self._lock:
            self._check_open()
            if self._txn is not None:
                raise StoreError("cannot compact inside a transaction")
            tmp_path = self.path.with_name(self.path.name + ".compact.tmp")
            try:
                with open(tmp_path, "wb") as tmp:
                    self._write_snapshot(tmp)
                    tmp.flush()
                    os.fsync(tmp.fileno())
                self._fh.close()
                os.replace(tmp_path, self.path)
                dir_fd = os.open(self.path.parent, os.O_RDONLY)
                try:
                    os.fsync(dir_fd)
                finally:
                    os.close(dir_fd)
                self._fh = open(self.path, "r+b")
                self._fh.seek(0, os.SEEK_END)
            except OSError as exc:
                raise StoreIOError(f"compaction failed: {exc}") from exc

    # --- transactions ----------------------------------------------------

    @contextmanager
    def transaction(self):
        """All mutations inside commit as one durable frame, or roll back fully.

        Nested uses flatten into the enclosing transaction.
        """
        self._lock.acquire()
        try:
            self._check_open()
            if self._txn is not None:
                yield self
                return
            self._txn = _Txn()
            try:
                yield self
            except BaseException:
                self._rollback()
                raise
            else:
                self._commit()
        finally:
            self._lock.release()

    def _commit(self):
        txn, self._txn = self._txn, None
        if not txn.ops:
            return
        payload = json.dumps(txn.ops, sort_keys=True,
                             separators=(",", ":")).encode("utf-8")
        try:
            self._fh.seek(0, os.SEEK_END)
            self._fh.write(FRAME.pack(len(payload), zlib.crc32(payload)))
            self._fh.write(payload)
            self._fh.flush()
            os.fsync(self._fh.fileno())
        except OSError as exc:
            raise StoreIOError(f"commit failed: {exc}") from exc
        self._wal_bytes += FRAME.size + len(payload)
        if self._wal_bytes > AUTO_COMPACT_BYTES and self._wal_bytes > 2 * self._snapshot_len:
            self.compact()

    def _rollback(self):
        txn, self._txn = self._txn, None
        for op in reversed(txn.undo):
            self._apply(op)

    def _log(self, op: dict):
        """Record the inverse, apply to in-memory state, queue for commit."""
        if self._txn is None:
            raise StoreError("mutation outside a transaction")
        self._txn.undo.append(self._inverse(op))
        self._apply(op)
        self._txn.ops.append(op)

    # --- op application ----------------------------------------------------

    def _inverse(self, op: dict) -> dict:
        t = op["t"]
        if t in ("node", "node_del"):
            prev = self._nodes.get(op["v"]["id"] if t == "node" else op["id"])
            if prev is None:
                return {"t": "node_del", "id": op["v"]["id"]}
            return {"t": "node", "v": node_to_dict(prev)}
        if t in ("edge", "edge_del"):
            prev = self._edges.get(op["v"]["id"] if t == "edge" else op["id"])
            if prev is None:
                return {"t": "edge_del", "id": op["v"]["id"]}
            return {"t": "edge", "v": edge_to_dict(prev)}
        if t in ("vec", "vec_del"):
            node_id = op["id"]
            prev_vec = self.index.get(node_id)
            if prev_vec is None:
                return {"t": "vec_del", "id": node_id}
            return {"t": "vec", "id": node_id, "d": _vec_to_b64(prev_vec)}
        if t in ("rec", "rec_del"):
            rid = op["id"]
            prev = self._records.get(rid)
            if prev is None:
                return {"t": "rec_del", "id": rid}
            return {"t": "rec", "id": rid, "head": prev["head"], "at": prev["at"]}
        if t in ("alias", "alias_del"):
            lk = (op["label"], op["key"])
            prev = self._aliases.get(lk)
            if prev is None:
                return {"t": "alias_del", "label": lk[0], "key": lk[1]}
            return {"t": "alias", "label": lk[0], "key": lk[1], "node": prev}
        if t == "parts":
            return {"t": "parts", "v": [self._partition_dict(p) for p in self._partitions]}
        if t == "stale":
            return {"t": "stale", "v": self._stale}
        raise StoreError(f"unknown op type {t!r}")

    def _apply(self, op: dict):
        t = op["t"]
        if t == "node":
            self._put_node_state(node_from_dict(op["v"]))
        elif t == "node_del":
            self._del_node_state(op["id"])
        elif t == "edge":
            self._put_edge_state(edge_from_dict(op["v"]))
        elif t == "edge_del":
            self._del_edge_state(op["id"])
        elif t == "vec":
            node_id = op["id"]
            if node_id in self.index:
                self.index.remove(node_id)
            self.index.add(node_id, _vec_from_b64(op["d"]))
            node = self._nodes.get(node_id)
            if node is not None:
                node.has_vector = True
        elif t == "vec_del":
            node_id = op["id"]
            if node_id in self.index:
                self.index.remove(node_id)
            node = self._nodes.get(node_id)
            if node is not None:
                node.has_vector = False
        elif t == "rec":
            self._records[op["id"]] = {"head": op["head"], "at": op["at"]}
        elif t == "rec_del":
            self._records.pop(op["id"], None)
        elif t == "alias":
            self._aliases[(op["label"], op["key"])] = op["node"]
        elif t == "alias_del":
            self._aliases.pop((op["label"], op["key"]), None)
        elif t == "parts":
            self._partitions = [
                Partition(level=p["level"], assignment=dict(p["assignment"]),
                          quality=p["quality"]) for p in op["v"]
            ]
        elif t == "stale":
            self._stale = op["v"]
        else:
            raise StoreError(f"unknown op type {t!r}")

    def _put_node_state(self, node: Node):
        prev = self._nodes.get(node.id)
        if prev is not None:
            self._key_index.pop((prev.label, prev.canonical_key), None)
            for rid in prev.provenance:
                self._disown(rid, node.id)
        self._nodes[node.id] = node
        self._key_index[(node.label, node.canonical_key)] = node.id
        self._out.setdefault(node.id, set())
        self._in.setdefault(node.id, set())
        for rid in node.provenance:
            self._prov_owners.setdefault(rid, set()).add(node.id)

    def _del_node_state(self, node_id: str):
        node = self._nodes.pop(node_id, None)
        if node is None:
            return
        self._key_index.pop((node.label, node.canonical_key), None)
        self._out.pop(node_id, None)
        self._in.pop(node_id, None)
        for rid in node.provenance:
            self._disown(rid, node_id)

    def _put_edge_state(self, edge: Edge):
        prev = self._edges.get(edge.id)
        if prev is not None:
            for rid in prev.provenance:
                self._disown(rid, edge.id)
        self._edges[edge.id] = edge
        self._out.setdefault(edge.src, set()).add(edge.id)
        self._in.setdefault(edge.dst, set()).add(edge.id)
        for rid in edge.provenance:
            self._prov_owners.setdefault(rid, set()).add(edge.id)

    def _del_edge_state(self, edge_id: str):
        edge = self._edges.pop(edge_id, None)
        if edge is None:
            return
        if edge.src in self._out:
            self._out[edge.src].discard(edge_id)
        if edge.dst in self._in:
            self._in[edge.dst].discard(edge_id)
        for rid in edge.provenance:
            self._disown(rid, edge_id)

    def _disown(self, record_id: str, owner_id: str):
        owners = self._prov_owners.get(record_id)
        if owners is not None:
            owners.discard(owner_id)
            if not owners:
                del self._prov_owners[record_id]

    # --- nodes ------------------------------------------------------------

    def upsert_node(self, node: Node) -> str:
        with self.transaction():
            if node.label not in model.LABELS:
                raise InvalidLabelError(f"unknown ontology label {node.label!r}")
            if node.label != "User" and not node.canonical_key:
                raise InvalidLabelError("canonical_key required for non-User nodes")
            node_id = node.id or ids.node_id(node.label, node.canonical_key)
            if node.label == "User" and node_id != USER_ROOT_ID:
                raise SecondUserRootError("a store has exactly one User root")
            if (node.valid_start and node.valid_end
                    and node.valid_start > node.valid_end):
                raise StoreError("valid_start must be <= valid_end")

            existing = self._nodes.get(node_id)
            if existing is None:
                if node.label != "User" and not node.provenance:
                    raise StoreError(
                        "every node except the User root needs provenance")
                display = node.display_name
                props = dict(node.properties)
                if len(display) > model.MAX_DISPLAY_NAME:
                    display = display[:model.MAX_DISPLAY_NAME]
                    props["display_name_truncated"] = True
                merged = Node(
                    id=node_id, label=node.label, display_name=display,
                    canonical_key=node.canonical_key, properties=props,
                    valid_start=node.valid_start, valid_end=node.valid_end,
                    provenance=set(node.provenance), has_vector=False,
                    created_at=node.created_at or ids.now(),
                )
            else:
                merged = Node(
                    id=node_id, label=existing.label,
                    display_name=existing.display_name,
                    canonical_key=existing.canonical_key,
                    properties=merge_properties(existing.properties, node.properties),
                    valid_start=existing.valid_start or node.valid_start,
                    valid_end=existing.valid_end or node.valid_end,
                    provenance=existing.provenance | node.provenance,
                    has_vector=existing.has_vector,
                    created_at=existing.created_at,
                )
            self._log({"t": "node", "v": node_to_dict(merged)})
            return node_id

    def put_node_raw(self, node: Node):
        """Exact put, bypassing merge policy. Used by portable import."""
        with self.transaction():
            if node.label not in model.LABELS:
                raise InvalidLabelError(f"unknown ontology label {node.label!r}")
            self._log({"t": "node", "v": node_to_dict(node)})

    def get_node(self, node_id: str) -> Node:
        with self._lock:
            node = self._nodes.get(node_id)
            if node is None:
                raise UnknownNodeError(node_id)
            return node

    def has_node(self, node_id: str) -> bool:
        with self._lock:
            return node_id in self._nodes

    def find_by_key(self, label: str, key: str) -> Optional[str]:
        """Live node id for (label, key), following the alias table."""
        with self._lock:
            node_id = self._key_index.get((label, key))
            if node_id is not None:
                return node_id
            alias = self._aliases.get((label, key))
            if alias is not None and alias in self._nodes:
                return alias
            return None

    def nodes_with_label(self, label: str) -> list[Node]:
        with self._lock:
            return [self._nodes[i] for i in sorted(self._nodes)
                    if self._nodes[i].label == label]

    def node_count(self) -> int:
        with self._lock:
            return len(self._nodes)

    def node_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._nodes)

    # --- edges --------------------------------------------------------------

    def upsert_edge(self, edge: Edge) -> str:
        with self.transaction():
            if not edge.predicate:
                raise StoreError("edge predicate must be non-empty")
            if edge.src not in self._nodes or edge.dst not in self._nodes:
                raise DanglingEdgeError(
                    f"edge {edge.src} -{edge.predicate}-> {edge.dst} "
                    "references a missing node")
            edge_id = edge.id or ids.edge_id(edge.src, edge.predicate, edge.dst)
            existing = self._edges.get(edge_id)
            if existing is None:
                merged = Edge(id=edge_id, src=edge.src, dst=edge.dst,
                              predicate=edge.predicate,
                              properties=dict(edge.properties),
                              provenance=set(edge.provenance))
            else:
                merged = Edge(id=edge_id, src=existing.src, dst=existing.dst,
                              predicate=existing.predicate,
                              properties=merge_properties(existing.properties,
                                                          edge.properties),
                              provenance=existing.provenance | edge.provenance)
            self._log({"t": "edge", "v": edge_to_dict(merged)})
            return edge_id

    def put_edge_raw(self, edge: Edge):
        with self.transaction():
            self._log({"t": "edge", "v": edge_to_dict(edge)})

    def delete_edge(self, edge_id: str) -> None:
        """Remove a single edge (used when merges re-point endpoints)."""
        with self.transaction():
            if edge_id not in self._edges:
                raise StoreError(f"unknown edge {edge_id}")
            self._log({"t": "edge_del", "id": edge_id})

    def get_edge(self, edge_id: str) -> Edge:
        with self._lock:
            edge = self._edges.get(edge_id)
            if edge is None:
                raise StoreError(f"unknown edge {edge_id}")
            return edge

    def has_edge(self, edge_id: str) -> bool:
        with self._lock:
            return edge_id in self._edges

    def edge_count(self) -> int:
        with self._lock:
            return len(self._edges)

    def edge_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._edges)

    def neighbors(self, node_id: str, direction: str = "both",
                  predicates: Optional[Iterable[str]] = None) -> list[tuple[Edge, Node]]:
        """Incident edges with their far endpoints, ordered by (predicate, neighbor id)."""
        with self._lock:
            if node_id not in self._nodes:
                raise UnknownNodeError(node_id)
            if direction not in ("out", "in", "both"):
                raise ValueError(f"direction must be out|in|both, got {direction!r}")
            edge_ids: set[str] = set()
            if direction in ("out", "both"):
                edge_ids |= self._out.get(node_id, set())
            if direction in ("in", "both"):
                edge_ids |= self._in.get(node_id, set())
            wanted = set(predicates) if predicates is not None else None
            rows = []
            for eid in edge_ids:
                edge = self._edges[eid]
                if wanted is not None and edge.predicate not in wanted:
                    continue
                other = edge.dst if edge.src == node_id else edge.src
                rows.append((edge, self._nodes[other]))
            rows.sort(key=lambda r: (r[0].predicate, r[1].id, r[0].id))
            return rows

    # --- cascade deletion -----------------------------------------------------

    def delete_cascade(self, root: str) -> DeletionReceipt:
        """Remove a node, its incident edges, its vector, and derived references.

        Scope is deliberately the reified object itself: neighbors survive.
        """
        with self.transaction():
            node = self._nodes.get(root)
            if node is None:
                raise UnknownNodeError(root)
            if root == USER_ROOT_ID:
                raise CannotDeleteRootError("the User root cannot be deleted")

            incident = sorted(self._out.get(root, set()) | self._in.get(root, set()))
            touched_records = set(node.provenance)
            for eid in incident:
                touched_records |= self._edges[eid].provenance
                self._log({"t": "edge_del", "id": eid})

            removed_vectors = []
            if root in self.index:
                removed_vectors.append(root)
                self._log({"t": "vec_del", "id": root})
            self._log({"t": "node_del", "id": root})

            # provenance ledger: fully orphaned records forget they were ever
            # ingested (re-ingestion is a new user action); surviving records
            # that pointed their head at the deleted node drop that head.
            for rid in sorted(touched_records):
                entry = self._records.get(rid)
                if entry is None:
                    continue
                if rid not in self._prov_owners:
                    self._log({"t": "rec_del", "id": rid})
                elif entry["head"] == root:
                    self._log({"t": "rec", "id": rid, "head": None, "at": entry["at"]})

            for (label, key), target in sorted(self._aliases.items()):
                if target == root:
                    self._log({"t": "alias_del", "label": label, "key": key})

            if self._partitions:
                pruned = []
                for p in self._partitions:
                    assignment = {nid: c for nid, c in p.assignment.items() if nid != root}
                    pruned.append({"level": p.level, "assignment": assignment,
                                   "quality": p.quality})
                self._log({"t": "parts", "v": pruned})
            self._log({"t": "stale", "v": True})

            return DeletionReceipt(
                root=root, deleted_nodes=[root], deleted_edges=incident,
                removed_vectors=removed_vectors, executed_at=ids.now(),
            )

    # --- vectors ---------------------------------------------------------------

    @property
    def dimension(self) -> int:
        return self._dim

    def add_vector(self, node_id: str, vector) -> None:
        """Attach a vector; transactional with the owning node's upsert."""
        with self.transaction():
            if node_id not in self._nodes:
                raise UnknownNodeError(node_id)
            if node_id in self.index:
                raise DuplicateIdError(f"vector for {node_id} already indexed")
            v = np.asarray(vector, dtype=np.float32).reshape(-1)
            self._log({"t": "vec", "id": node_id, "d": _vec_to_b64(v)})

    def remove_vector(self, node_id: str) -> None:
        with self.transaction():
            if node_id in self.index:
                self._log({"t": "vec_del", "id": node_id})

    def knn(self, query, k: int, min_similarity: float = -1.0):
        with self._lock:
            return self.index.knn(query, k, min_similarity)

    # --- ingested-record ledger --------------------------------------------------

    def record_exists(self, record_id: str) -> bool:
        with self._lock:
            return record_id in self._records

    def record_commit(self, record_id: str, head: Optional[str]) -> None:
        with self.transaction():
            self._log({"t": "rec", "id": record_id, "head": head,
                       "at": ids.instant_str(ids.now())})

    def record_put_raw(self, record_id: str, head: Optional[str], at: str) -> None:
        with self.transaction():
            self._log({"t": "rec", "id": record_id, "head": head, "at": at})

    def record_head(self, record_id: str) -> Optional[str]:
        with self._lock:
            entry = self._records.get(record_id)
            return entry["head"] if entry else None

    def records(self) -> dict[str, dict]:
        with self._lock:
            return {rid: dict(e) for rid, e in self._records.items()}

    # --- alias table (entity resolution) -------------------------------------------

    def set_alias(self, label: str, key: str, node_id: str) -> None:
        with self.transaction():
            self._log({"t": "alias", "label": label, "key": key, "node": node_id})

    def aliases(self) -> dict[tuple[str, str], str]:
        with self._lock:
            return dict(self._aliases)

    # --- community assignments ----------------------------------------------------

    def set_partitions(self, partitions: list[Partition]) -> None:
        with self.transaction():
            self._log({"t": "parts", "v": [self._partition_dict(p) for p in partitions]})
            self._log({"t": "stale", "v": False})

    def partitions(self) -> list[Partition]:
        with self._lock:
            return [Partition(p.level, dict(p.assignment), p.quality)
                    for p in self._partitions]

    def mark_communities_stale(self) -> None:
        with self.transaction():
            if not self._stale:
                self._log({"t": "stale", "v": True})

    @property
    def communities_stale(self) -> bool:
        with self._lock:
            return self._stale

    # --- snapshots & inspection ---------------------------------------------------

    def export_graph(self, labels: Optional[Iterable[str]] = None) -> GraphSnapshot:
        """Point-in-time snapshot with deterministic ordering."""
        with self._lock:
            wanted = set(labels) if labels is not None else None
            nodes = [self._nodes[i] for i in sorted(self._nodes)
                     if wanted is None or self._nodes[i].label in wanted]
            kept = {n.id for n in nodes}
            edges = [self._edges[i] for i in sorted(self._edges)
                     if self._edges[i].src in kept and self._edges[i].dst in kept]
            return GraphSnapshot(nodes=nodes, edges=edges)

    def scan_references(self, target_ids: Iterable[str]) -> list[str]:
        """Every place any of target_ids is still referenced; [] proves deletion."""
        targets = set(target_ids)
        hits = []
        with self._lock:
            for nid in self._nodes:
                if nid in targets:
                    hits.append(f"nodes:{nid}")
            for eid, edge in self._edges.items():
                if eid in targets:
                    hits.append(f"edges:{eid}")
                if edge.src in targets:
                    hits.append(f"edges:{eid}:src")
                if edge.dst in targets:
                    hits.append(f"edges:{eid}:dst")
            for vid in self.index.ids():
                if vid in targets:
                    hits.append(f"vectors:{vid}")
            for rid, entry in self._records.items():
                if entry["head"] in targets:
                    hits.append(f"records:{rid}:head")
            for (label, key), node_id in self._aliases.items():
                if node_id in targets:
                    hits.append(f"aliases:{label}:{key}")
            for p in self._partitions:
                for nid in p.assignment:
                    if nid in targets:
                        hits.append(f"communities:L{p.level}:{nid}")
        return sorted(hits)

    def stats(self) -> dict:
        with self._lock:
            return {
                "nodes": len(self._nodes),
                "edges": len(self._edges),
                "vectors": len(self.index),
                "records": len(self._records),
                "communities_stale": self._stale,
                "dimension": self._dim,
                "format_version": FORMAT_VERSION,
                "path": str(self.path),
            }


def open_store(path, create_if_missing: bool = True,
               dimension: int = DEFAULT_DIMENSION) -> Store:
    """Open (or create) a store file; validates header and replays the log."""
    return Store(path, create_if_missing=create_if_missing, dimension=dimension)
