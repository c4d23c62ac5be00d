"""Domain types: graph elements, source records, triples, retrieval results."""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from typing import Optional, Union

from . import ids

LABELS = frozenset({
    "User", "Person", "Event", "Location", "Photo", "Receipt", "Message",
    "Note", "Call", "Alarm", "Contact", "Organization", "Document", "Entity",
})

MODALITIES = frozenset({
    "calendar", "image", "note", "message", "call", "alarm", "contact", "document",
})

# Scalar property kinds: text, integer, decimal, boolean, instant.
Scalar = Union[str, int, float, bool, datetime]

MAX_DISPLAY_NAME = 1024  # code points; longer names truncate with a recorded flag


@dataclass
class Node:
    id: str
    label: str
    display_name: str
    canonical_key: str
    properties: dict[str, Scalar] = field(default_factory=dict)
    valid_start: Optional[datetime] = None
    valid_end: Optional[datetime] = None
    provenance: set[str] = field(default_factory=set)
    has_vector: bool = False
    created_at: Optional[datetime] = None

    @classmethod
    def make(cls, label: str, display_name: str, *, key: str | None = None, **kw) -> "Node":
        key = ids.canonical_key(display_name) if key is None else key
        return cls(id=ids.node_id(label, key), label=label,
                   display_name=display_name, canonical_key=key, **kw)


@dataclass
class Edge:
    id: str
    src: str
    dst: str
    predicate: str
    properties: dict[str, Scalar] = field(default_factory=dict)
    provenance: set[str] = field(default_factory=set)

    @classmethod
    def make(cls, src: str, predicate: str, dst: str, **kw) -> "Edge":
        return cls(id=ids.edge_id(src, predicate, dst), src=src, dst=dst,
                   predicate=predicate, **kw)


@dataclass
class DeletionReceipt:
    root: str
    deleted_nodes: list[str]
    deleted_edges: list[str]
    removed_vectors: list[str]
    executed_at: datetime

    def to_dict(self) -> dict:
        return {
            "root": self.root,
            "deleted_nodes": self.deleted_nodes,
            "deleted_edges": self.deleted_edges,
            "removed_vectors": self.removed_vectors,
            "executed_at": ids.instant_str(self.executed_at),
        }


@dataclass
class GraphSnapshot:
    nodes: list[Node]
    edges: list[Edge]


@dataclass
class SourceRecord:
    """One raw shard of digital life; id is the SHA-256 of the canonical payload."""
    id: str
    modality: str
    text: str
    start: Optional[datetime] = None
    end: Optional[datetime] = None
    metadata: dict[str, str] = field(default_factory=dict)

    @classmethod
    def make(cls, modality: str, text: str, *, start=None, end=None,
             metadata: dict[str, str] | None = None) -> "SourceRecord":
        if modality not in MODALITIES:
            raise ValueError(f"unknown modality {modality!r}")
        start = ids.parse_instant(start) if start is not None else None
        end = ids.parse_instant(end) if end is not None else None
        if modality in ("calendar", "call") and start is None:
            raise ValueError(f"{modality} records must carry a start instant")
        metadata = dict(metadata or {})
        rid = ids.content_hash(canonical_record_payload(modality, text, start, end, metadata))
        return cls(id=rid, modality=modality, text=text, start=start, end=end,
                   metadata=metadata)


def canonical_record_payload(modality: str, text: str, start, end,
                             metadata: dict[str, str]) -> bytes:
    """Byte string hashed into the record id; equal payloads mean equal ids."""
    parts = [
        modality,
        text,
        ids.instant_str(start) if start is not None else "",
        ids.instant_str(end) if end is not None else "",
    ]
    for key in sorted(metadata):
        parts.append(f"{key}={metadata[key]}")
    return "\x1f".join(parts).encode("utf-8")


@dataclass(frozen=True)
class Mention:
    """An entity mention awaiting resolution."""
    surface: str
    type_hint: str = "Entity"
    key: str = ""

    def __post_init__(self):
        if not self.key:
            object.__setattr__(self, "key", ids.canonical_key(self.surface))


@dataclass(frozen=True)
class Literal:
    value: Scalar


@dataclass
class Triple:
    subject: Mention
    predicate: str
    obj: Union[Mention, Literal]
    source: str
    confidence: float = 1.0


@dataclass
class ScoredNode:
    id: str
    score: float


@dataclass
class ResolutionDecision:
    mention: Mention
    outcome: str                      # "merged" | "created"
    node: str                         # final node id after any canonical rekey
    rule_fired: str                   # exact_key | initial_expansion | embedding_match | none
    score: Optional[float] = None
    # plan details consumed by Resolver.apply(); not part of the public contract
    merge_victim: Optional[str] = None
    create_survivor: bool = False


@dataclass
class IngestReport:
    record: str
    created_nodes: list[str] = field(default_factory=list)
    merged_into: list[tuple[str, str]] = field(default_factory=list)
    created_edges: int = 0
    skipped_duplicate: bool = False
    elapsed_ms: float = 0.0
    error: Optional[str] = None


@dataclass
class BatchStats:
    count: int
    mean_ms: Optional[float]
    p50_ms: Optional[float]
    p95_ms: Optional[float]
    undefined: bool = False


@dataclass
class TimeInterval:
    start: datetime
    end: datetime

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError("interval start after end")

    def overlaps(self, other: "TimeInterval") -> bool:
        # closed intervals: touching boundaries count as overlap
        return self.start <= other.end and other.start <= self.end


@dataclass
class RetrievalConfig:
    k_anchors: int = 5
    n_hops: int = 2
    max_nodes: int = 64
    min_similarity: float = 0.15
    include_communities: bool = False

    def __post_init__(self):
        if self.max_nodes < self.k_anchors:
            raise ValueError("max_nodes must be >= k_anchors")


@dataclass
class RetrievedSubgraph:
    anchors: list[ScoredNode]
    nodes: list[Node]
    hops: dict[str, int]
    edges: list[Edge]
    context: str = ""
    truncated: bool = False

    @property
    def node_ids(self) -> set[str]:
        return {n.id for n in self.nodes}


REFUSAL_TEXT = "I couldn't find relevant information to answer your question."


@dataclass
class Answer:
    text: str
    citations: list[str]
    refused: bool
    engine: str  # "model" | "structured"

    @classmethod
    def refusal(cls, engine: str = "structured") -> "Answer":
        return cls(text=REFUSAL_TEXT, citations=[], refused=True, engine=engine)


@dataclass
class Partition:
    level: int
    assignment: dict[str, int]
    quality: float


@dataclass
class LeidenConfig:
    resolution: float = 1.0
    seed: int = 0
    max_levels: int = 3

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")


@dataclass
class BenchmarkItem:
    id: str
    scenario: str                     # ingestion | reasoning | deletion
    question: str
    gold_facts: list[str]
    supporting_objects: list[str] = field(default_factory=list)
    full_credit_answer: Optional[str] = None


@dataclass
class DeltaResult:
    item_id: str
    score_0: int
    score_1: int

    @property
    def delta(self) -> int:
        return self.score_0 - self.score_1


@dataclass
class LatencyReport:
    phase: str                        # ingestion | retrieval_1hop | retrieval_Nhop
    samples: int
    mean_ms: Optional[float]
    p50_ms: Optional[float]
    p95_ms: Optional[float]
    insufficient: bool = False


# --- canonical (de)serialization -------------------------------------------
# Instants travel as {"$instant": "...Z"} so properties stay JSON-native.

def encode_scalar(value: Scalar):
    if isinstance(value, datetime):
        return {"$instant": ids.instant_str(value)}
    return value


def decode_scalar(value) -> Scalar:
    if isinstance(value, dict) and set(value) == {"$instant"}:
        return ids.parse_instant(value["$instant"])
    return value


def _instant_or_none(value: Optional[datetime]) -> Optional[str]:
    return ids.instant_str(value) if value is not None else None


def node_to_dict(n: Node) -> dict:
    return {
        "id": n.id,
        "label": n.label,
        "display_name": n.display_name,
        "canonical_key": n.canonical_key,
        "properties": {k: encode_scalar(v) for k, v in sorted(n.properties.items())},
        "valid_start": _instant_or_none(n.valid_start),
        "valid_end": _instant_or_none(n.valid_end),
        "provenance": sorted(n.provenance),
        "has_vector": n.has_vector,
        "created_at": _instant_or_none(n.created_at),
    }


def node_from_dict(d: dict) -> Node:
    return Node(
        id=d["id"],
        label=d["label"],
        display_name=d["display_name"],
        canonical_key=d["canonical_key"],
        properties={k: decode_scalar(v) for k, v in d["properties"].items()},
        valid_start=ids.parse_instant(d["valid_start"]) if d["valid_start"] else None,
        valid_end=ids.parse_instant(d["valid_end"]) if d["valid_end"] else None,
        provenance=set(d["provenance"]),
        has_vector=d["has_vector"],
        created_at=ids.parse_instant(d["created_at"]) if d["created_at"] else None,
    )


def edge_to_dict(e: Edge) -> dict:
    return {
        "id": e.id,
        "src": e.src,
        "dst": e.dst,
        "predicate": e.predicate,
        "properties": {k: encode_scalar(v) for k, v in sorted(e.properties.items())},
        "provenance": sorted(e.provenance),
    }


def edge_from_dict(d: dict) -> Edge:
    return Edge(
        id=d["id"],
        src=d["src"],
        dst=d["dst"],
        predicate=d["predicate"],
        properties={k: decode_scalar(v) for k, v in d["properties"].items()},
        provenance=set(d["provenance"]),
    )
