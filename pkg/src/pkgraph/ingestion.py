"""Write path: extraction -> resolution -> persistence -> temporal linking.

Each record commits atomically; a record that fails mid-way leaves zero
trace. The ingested-record ledger (content hashes) makes replays no-ops.
"""
from __future__ import annotations

import hashlib
import json
import math
import re
import time
from pathlib import Path

from . import ids
from .embedder import node_embedding_text
from .errors import PkgraphError
from .extraction import SidecarVisionClient, caption_image, head_mention
from .model import (
    BatchStats,
    Edge,
    IngestReport,
    Literal,
    Mention,
    Node,
    SourceRecord,
    TimeInterval,
)
from .store import USER_ROOT_ID, Store, merge_properties


class Ingestor:
    def __init__(self, store: Store, embedder, extractor, resolver):
        self.store = store
        self.embedder = embedder
        self.extractor = extractor
        self.resolver = resolver

    # --- single record ------------------------------------------------------

    def ingest_record(self, record: SourceRecord) -> IngestReport:
        t0 = time.perf_counter()
        if self.store.record_exists(record.id):
            return IngestReport(record=record.id, skipped_duplicate=True,
                                elapsed_ms=(time.perf_counter() - t0) * 1000.0)

        created_nodes: list[str] = []
        merged_into: list[tuple[str, str]] = []
        created_edges = 0

        with self.store.transaction():
            triples = self.extractor.extract(record)
            head = head_mention(triples)
            head_id = self._persist_head(record, head, triples, created_nodes)
            resolved: dict[tuple[str, str], str] = {
                ("User", "user"): USER_ROOT_ID,
                (head.type_hint, head.key): head_id,
            }

            def resolve_mention(m: Mention) -> str:
                cached = resolved.get((m.type_hint, m.key))
                if cached is not None:
                    return cached
                decision = self.resolver.resolve(m, head_id=head_id)
                node_id = self.resolver.apply(decision, record.id)
                if decision.outcome == "created":
                    created_nodes.append(node_id)
                else:
                    merged_into.append((m.surface, node_id))
                resolved[(m.type_hint, m.key)] = node_id
                return node_id

            for triple in triples:
                if triple.subject.key == "user":
                    continue  # the User->head link lands after the head settles
                subj_id = resolve_mention(triple.subject)
                if isinstance(triple.obj, Literal):
                    if subj_id != head_id:  # head literals are folded in already
                        self.store.upsert_node(Node(
                            id=subj_id, label=self.store.get_node(subj_id).label,
                            display_name="", canonical_key="-",
                            properties={triple.predicate: triple.obj.value},
                            provenance={record.id}))
                    continue
                obj_id = resolve_mention(triple.obj)
                created_edges += self._link(subj_id, triple.predicate, obj_id,
                                            record.id)

            link = next(t for t in triples if t.subject.key == "user")
            created_edges += self._link(USER_ROOT_ID, link.predicate, head_id,
                                        record.id)
            created_edges += self.forge_temporal_links(head_id, record.id)

            self.store.mark_communities_stale()
            self.store.record_commit(record.id, head_id)

        return IngestReport(
            record=record.id,
            created_nodes=sorted(set(created_nodes)),
            merged_into=merged_into,
            created_edges=created_edges,
            elapsed_ms=(time.perf_counter() - t0) * 1000.0,
        )

    def _persist_head(self, record: SourceRecord, head: Mention,
                      triples, created_nodes: list[str]) -> str:
        properties: dict = {}
        for triple in triples:
            if triple.subject == head and isinstance(triple.obj, Literal):
                properties = merge_properties(properties,
                                              {triple.predicate: triple.obj.value})
        start = record.start
        if start is None and record.metadata.get("taken_at"):
            start = ids.parse_instant(record.metadata["taken_at"])
        end = record.end or start  # point events close their own interval

        head_id = ids.node_id(head.type_hint, head.key)
        is_new = not self.store.has_node(head_id)
        self.store.upsert_node(Node(
            id=head_id, label=head.type_hint, display_name=head.surface,
            canonical_key=head.key, properties=properties,
            valid_start=start, valid_end=end, provenance={record.id},
        ))
        if is_new:
            created_nodes.append(head_id)
            node = self.store.get_node(head_id)
            self.store.add_vector(head_id,
                                  self.embedder.embed(node_embedding_text(node)))
        return head_id

    def _link(self, src: str, predicate: str, dst: str, record_id: str) -> int:
        edge = Edge.make(src, predicate, dst, provenance={record_id})
        existed = self.store.has_edge(edge.id)
        self.store.upsert_edge(edge)
        return 0 if existed else 1

    # --- temporal overlap edges ------------------------------------------------

    def forge_temporal_links(self, new_head: str, record_id: str = "") -> int:
        """Connect the new head to every Event whose closed interval overlaps.

        Non-events gain (head)-[during]->(Event); two events gain
        (earlier)-[overlaps]->(later). The rule is applied symmetrically when
        the new head is itself an Event (existing timestamped non-events gain
        their during edge now), so the final graph is ingestion-order-free.
        """
        head = self.store.get_node(new_head)
        if head.valid_start is None:
            return 0
        interval = TimeInterval(head.valid_start, head.valid_end or head.valid_start)
        provenance = {record_id} if record_id else set()
        created = 0

        if head.label == "Event":
            for other_id in self.store.node_ids():
                if other_id in (new_head, USER_ROOT_ID):
                    continue
                other = self.store.get_node(other_id)
                if other.valid_start is None:
                    continue
                other_iv = TimeInterval(other.valid_start,
                                        other.valid_end or other.valid_start)
                if not interval.overlaps(other_iv):
                    continue
                if other.label == "Event":
                    first, second = sorted(
                        [(interval.start, new_head), (other_iv.start, other_id)])
                    edge = Edge.make(first[1], "overlaps", second[1],
                                     provenance=set(provenance))
                else:
                    edge = Edge.make(other_id, "during", new_head,
                                     provenance=set(provenance))
                existed = self.store.has_edge(edge.id)
                self.store.upsert_edge(edge)
                created += 0 if existed else 1
        else:
            for event in self.store.nodes_with_label("Event"):
                if event.valid_start is None:
                    continue
                event_iv = TimeInterval(event.valid_start,
                                        event.valid_end or event.valid_start)
                if not interval.overlaps(event_iv):
                    continue
                edge = Edge.make(new_head, "during", event.id,
                                 provenance=set(provenance))
                existed = self.store.has_edge(edge.id)
                self.store.upsert_edge(edge)
                created += 0 if existed else 1
        return created

    # --- batches --------------------------------------------------------------

    def ingest_batch(self, records: list[SourceRecord]
                     ) -> tuple[list[IngestReport], BatchStats]:
        """Sequential ingestion in input order; per-record errors are collected
        and the batch continues."""
        reports = []
        for record in records:
            try:
                reports.append(self.ingest_record(record))
            except PkgraphError as exc:
                reports.append(IngestReport(record=record.id, error=str(exc)))
        return reports, batch_stats(reports)

    def ingest_path(self, directory) -> tuple[list[IngestReport], BatchStats]:
        """Load and ingest a directory; a malformed file becomes an error
        report instead of sinking the batch."""
        reports: list[IngestReport] = []
        records: list[SourceRecord] = []
        for path in sorted(Path(directory).rglob("*")):
            if not path.is_file():
                continue
            try:
                record = load_record(path)
            except (PkgraphError, ValueError, KeyError, OSError,
                    json.JSONDecodeError) as exc:
                reports.append(IngestReport(record=f"file:{path.name}",
                                            error=str(exc)))
                continue
            if record is not None:
                records.append(record)
        batch_reports, _ = self.ingest_batch(records)
        reports.extend(batch_reports)
        return reports, batch_stats(reports)


def batch_stats(reports: list[IngestReport]) -> BatchStats:
    timings = sorted(r.elapsed_ms for r in reports
                     if not r.skipped_duplicate and r.error is None)
    if not timings:
        return BatchStats(count=0, mean_ms=None, p50_ms=None, p95_ms=None,
                          undefined=True)
    return BatchStats(
        count=len(timings),
        mean_ms=sum(timings) / len(timings),
        p50_ms=percentile(timings, 50),
        p95_ms=percentile(timings, 95),
    )


def percentile(sorted_values: list[float], q: float) -> float:
    """Nearest-rank percentile over an already-sorted sample."""
    if not sorted_values:
        raise ValueError("empty sample")
    rank = max(1, math.ceil(q / 100.0 * len(sorted_values)))
    return sorted_values[rank - 1]


# --- source directory loader ------------------------------------------------
# One file per record. Formats (documented in the README, byte-exact):
#   *.ics            minimal calendar (SUMMARY/DTSTART/DTEND/LOCATION/ATTENDEE/DESCRIPTION)
#   *.txt            note            *.md  document
#   *.jpg|jpeg|png   image, caption in <name>.caption.txt, extras in <name>.meta.json
#   *.json           call | contact | alarm | message, selected by "modality"

_ICS_DT = re.compile(r"^(\d{8})T(\d{6})(Z?)$")


def _parse_ics_instant(raw: str):
    raw = raw.strip()
    m = _ICS_DT.match(raw)
    if m:
        d, t = m.group(1), m.group(2)
        return ids.parse_instant(
            f"{d[0:4]}-{d[4:6]}-{d[6:8]}T{t[0:2]}:{t[2:4]}:{t[4:6]}Z")
    return ids.parse_instant(raw)


def _load_ics(path: Path) -> SourceRecord:
    fields: dict[str, str] = {}
    description: list[str] = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if ":" not in line:
            continue
        key, value = line.split(":", 1)
        key = key.strip().upper()
        if key in ("BEGIN", "END"):
            continue
        if key == "DESCRIPTION":
            description.append(value.strip())
        elif key not in fields:
            fields[key] = value.strip()
    text_lines = []
    if "SUMMARY" in fields:
        text_lines.append(f"title: {fields['SUMMARY']}")
    if "LOCATION" in fields:
        text_lines.append(f"location: {fields['LOCATION']}")
    text_lines.extend(description)
    metadata = {"filename": path.name}
    if "ATTENDEE" in fields:
        metadata["attendee"] = fields["ATTENDEE"]
    start = _parse_ics_instant(fields["DTSTART"]) if "DTSTART" in fields else None
    end = _parse_ics_instant(fields["DTEND"]) if "DTEND" in fields else None
    return SourceRecord.make("calendar", "\n".join(text_lines), start=start,
                             end=end, metadata=metadata)


def _load_image(path: Path) -> SourceRecord:
    image_bytes = path.read_bytes()
    caption = caption_image(image_bytes, SidecarVisionClient(path))
    metadata = {
        "filename": path.name,
        "content_sha256": hashlib.sha256(image_bytes).hexdigest(),
    }
    start = None
    meta_path = path.with_name(path.name + ".meta.json")
    if meta_path.exists():
        extra = json.loads(meta_path.read_text(encoding="utf-8"))
        for key, value in sorted(extra.items()):
            metadata[str(key)] = str(value)
        if "taken_at" in extra:
            start = ids.parse_instant(extra["taken_at"])
    return SourceRecord.make("image", caption, start=start, end=start,
                             metadata=metadata)


def _load_json(path: Path) -> SourceRecord:
    data = json.loads(path.read_text(encoding="utf-8"))
    modality = data.get("modality")
    metadata = {"filename": path.name}
    if modality == "call":
        metadata["peer"] = data["peer"]
        lines = []
        if "duration_min" in data:
            lines.append(f"duration_min: {data['duration_min']}")
        if "direction" in data:
            lines.append(f"direction: {data['direction']}")
        if data.get("note"):
            lines.append(data["note"])
        at = ids.parse_instant(data["at"])
        return SourceRecord.make("call", "\n".join(lines) or "call",
                                 start=at, end=at, metadata=metadata)
    if modality == "alarm":
        metadata["label"] = data["label"]
        lines = [f"label: {data['label']}"]
        if "recurrence" in data:
            lines.append(f"recurrence: {data['recurrence']}")
        at = ids.parse_instant(data["at"]) if "at" in data else None
        return SourceRecord.make("alarm", "\n".join(lines), start=at, end=at,
                                 metadata=metadata)
    if modality == "contact":
        metadata["name"] = data["name"]
        lines = [f"name: {data['name']}"]
        for key in ("phone", "email", "organization", "birthday"):
            if data.get(key):
                lines.append(f"{key}: {data[key]}")
        return SourceRecord.make("contact", "\n".join(lines), metadata=metadata)
    if modality == "message":
        metadata["sender"] = data["sender"]
        lines = []
        if data.get("subject"):
            lines.append(f"subject: {data['subject']}")
        if data.get("body"):
            lines.append(data["body"])
        at = ids.parse_instant(data["sent_at"]) if "sent_at" in data else None
        return SourceRecord.make("message", "\n".join(lines), start=at, end=at,
                                 metadata=metadata)
    raise PkgraphError(f"{path.name}: unknown or missing modality {modality!r}")


def load_record(path) -> SourceRecord | None:
    """Load one file as a SourceRecord; None for sidecar/unknown files."""
    path = Path(path)
    name = path.name.lower()
    if name.endswith(".caption.txt") or name.endswith(".meta.json"):
        return None
    suffix = path.suffix.lower()
    if suffix == ".ics":
        return _load_ics(path)
    if suffix == ".txt":
        return SourceRecord.make("note", path.read_text(encoding="utf-8"),
                                 metadata={"filename": path.name})
    if suffix == ".md":
        return SourceRecord.make("document", path.read_text(encoding="utf-8"),
                                 metadata={"filename": path.name})
    if suffix in (".jpg", ".jpeg", ".png"):
        return _load_image(path)
    if suffix == ".json":
        return _load_json(path)
    return None


def load_records(directory) -> list[SourceRecord]:
    """All records under a directory, in deterministic filename order."""
    directory = Path(directory)
    records = []
    for path in sorted(directory.rglob("*")):
        if path.is_file():
            record = load_record(path)
            if record is not None:
                records.append(record)
    return records
