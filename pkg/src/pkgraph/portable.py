"""Portable export/import: newline-delimited JSON of all live data.

One object per node, edge, embedding, alias, and ingested-record ledger
entry, deterministically sorted, so export -> import -> export round-trips
byte-identically. Community assignments are derived state and are not
exported; an import starts with the stale flag set.
"""
from __future__ import annotations

import base64
import json
from pathlib import Path

import numpy as np

from .errors import ImportFormatError, ImportStateError
from .model import edge_from_dict, edge_to_dict, node_from_dict, node_to_dict
from .store import Store


def _dump(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def export_lines(store: Store) -> list[str]:
    lines = [_dump({"kind": "meta", "format": 1, "dimension": store.dimension})]
    snapshot = store.export_graph()
    for node in snapshot.nodes:
        lines.append(_dump({"kind": "node", **node_to_dict(node)}))
    for edge in snapshot.edges:
        lines.append(_dump({"kind": "edge", **edge_to_dict(edge)}))
    for node_id in sorted(store.index.ids()):
        data = base64.b64encode(
            np.asarray(store.index.get(node_id), dtype="<f4").tobytes()).decode()
        lines.append(_dump({"kind": "vector", "id": node_id, "data": data}))
    for (label, key), node_id in sorted(store.aliases().items()):
        lines.append(_dump({"kind": "alias", "label": label, "key": key,
                            "node": node_id}))
    for record_id, entry in sorted(store.records().items()):
        lines.append(_dump({"kind": "record", "id": record_id,
                            "head": entry["head"], "at": entry["at"]}))
    return lines


def export_portable(store: Store, path) -> int:
    """Write the NDJSON dump; returns the number of lines."""
    lines = export_lines(store)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return len(lines)


def export_text(store: Store) -> str:
    return "\n".join(export_lines(store)) + "\n"


def _is_pristine(store: Store) -> bool:
    stats = store.stats()
    return (stats["nodes"] == 1 and stats["edges"] == 0
            and stats["vectors"] == 0 and stats["records"] == 0
            and not store.aliases())


def import_lines(store: Store, lines) -> int:
    """Load a dump into a freshly initialized store (root node only)."""
    if not _is_pristine(store):
        raise ImportStateError("import requires a freshly initialized store")
    count = 0
    with store.transaction():
        for number, raw in enumerate(lines, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
                kind = obj.pop("kind")
            except (ValueError, KeyError) as exc:
                raise ImportFormatError(number, f"unparseable line: {exc}") from exc
            try:
                if kind == "meta":
                    if obj.get("dimension") != store.dimension:
                        raise ImportFormatError(
                            number, f"dump dimension {obj.get('dimension')} does not "
                                    f"match store dimension {store.dimension}")
                elif kind == "node":
                    node = node_from_dict(obj)
                    node.has_vector = False  # restored when its vector arrives
                    store.put_node_raw(node)
                elif kind == "edge":
                    store.put_edge_raw(edge_from_dict(obj))
                elif kind == "vector":
                    vector = np.frombuffer(base64.b64decode(obj["data"]),
                                           dtype="<f4").copy()
                    store.add_vector(obj["id"], vector)
                elif kind == "alias":
                    store.set_alias(obj["label"], obj["key"], obj["node"])
                elif kind == "record":
                    store.record_put_raw(obj["id"], obj["head"], obj["at"])
                else:
                    raise ImportFormatError(number, f"unknown kind {kind!r}")
            except ImportFormatError:
                raise
            except Exception as exc:
                raise ImportFormatError(number, str(exc)) from exc
            count += 1
        store.mark_communities_stale()
    return count


def import_portable(store: Store, path) -> int:
    with open(path, encoding="utf-8") as fh:
        return import_lines(store, fh)
