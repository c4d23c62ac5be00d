"""pkgraph: a glass-box personal knowledge graph memory engine.

Ingests heterogeneous personal records into an inspectable property graph
with vector annotations, answers questions by graph-grounded retrieval,
and supports exact cascade deletion of any memory.
"""

__version__ = "0.1.0"

from .errors import PkgraphError
from .ids import USER_ROOT_ID, canonical_key, edge_id, node_id
from .model import (
    Answer,
    DeletionReceipt,
    Edge,
    Mention,
    Node,
    RetrievalConfig,
    RetrievedSubgraph,
    ScoredNode,
    SourceRecord,
    Triple,
)
from .store import Store, open_store

__all__ = [
    "Answer", "DeletionReceipt", "Edge", "Mention", "Node", "PkgraphError",
    "RetrievalConfig", "RetrievedSubgraph", "ScoredNode", "SourceRecord",
    "Store", "Triple", "USER_ROOT_ID", "canonical_key", "edge_id", "node_id",
    "open_store", "__version__",
]
