"""Exact k-nearest-neighbor cosine search over node vectors.

A deliberate non-ANN design: the corpus is personal-scale, so a full scan
stays interactive while keeping retrieval exactly explainable. Vectors are
stored as float32; similarity accumulates in float64 to bound error.
"""
from __future__ import annotations

import numpy as np

from .errors import DimensionMismatchError, DuplicateIdError
from .model import ScoredNode

UNIT_NORM_TOL = 1e-5


def as_unit_vector(vector, dimension: int) -> np.ndarray:
    """Validate shape and unit norm; return a float32 copy."""
    v = np.asarray(vector, dtype=np.float32).reshape(-1)
    if v.shape[0] != dimension:
        raise DimensionMismatchError(
            f"vector has dimension {v.shape[0]}, index expects {dimension}")
    norm = float(np.linalg.norm(v.astype(np.float64)))
    if abs(norm - 1.0) > UNIT_NORM_TOL:
        raise DimensionMismatchError(f"vector norm {norm:.6f} outside 1 +/- {UNIT_NORM_TOL}")
    return v


class VectorIndex:
    """In-memory exact index; persistence is handled by the owning store."""

    def __init__(self, dimension: int):
        self._dim = dimension
        self._ids: list[str] = []
        self._pos: dict[str, int] = {}
        self._f32: list[np.ndarray] = []
        self._matrix = np.empty((0, dimension), dtype=np.float64)
        self._capacity = 0
        self._ranks: np.ndarray | None = None  # ascending-id rank per row, lazy

    @property
    def dimension(self) -> int:
        return self._dim

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, node_id: str) -> bool:
        return node_id in self._pos

    def ids(self) -> list[str]:
        return list(self._ids)

    def get(self, node_id: str) -> np.ndarray | None:
        pos = self._pos.get(node_id)
        return None if pos is None else self._f32[pos]

    def add(self, node_id: str, vector) -> None:
        if node_id in self._pos:
            raise DuplicateIdError(f"vector for {node_id} already indexed; remove first")
        v = as_unit_vector(vector, self._dim)
        n = len(self._ids)
        if n == self._capacity:
            self._capacity = max(64, self._capacity * 2)
            grown = np.empty((self._capacity, self._dim), dtype=np.float64)
            grown[:n] = self._matrix[:n]
            self._matrix = grown
        self._matrix[n] = v.astype(np.float64)
        self._ids.append(node_id)
        self._f32.append(v)
        self._pos[node_id] = n
        self._ranks = None

    def remove(self, node_id: str) -> np.ndarray:
        """Drop a vector (swap-with-last); returns the removed float32 vector."""
        pos = self._pos.pop(node_id, None)
        if pos is None:
            raise KeyError(node_id)
        removed = self._f32[pos]
        last = len(self._ids) - 1
        if pos != last:
            self._ids[pos] = self._ids[last]
            self._f32[pos] = self._f32[last]
            self._matrix[pos] = self._matrix[last]
            self._pos[self._ids[pos]] = pos
        self._ids.pop()
        self._f32.pop()
        self._ranks = None
        return removed

    def _id_ranks(self) -> np.ndarray:
        if self._ranks is None:
            order = sorted(range(len(self._ids)), key=lambda i: self._ids[i])
            ranks = np.empty(len(self._ids), dtype=np.int64)
            for rank, row in enumerate(order):
                ranks[row] = rank
            self._ranks = ranks
        return self._ranks

    def knn(self, query, k: int, min_similarity: float = -1.0) -> list[ScoredNode]:
        """Exact top-k by cosine; ties broken by ascending node id."""
        if k < 1:
            raise ValueError("k must be >= 1")
        q = np.asarray(query, dtype=np.float64).reshape(-1)
        if q.shape[0] != self._dim:
            raise DimensionMismatchError(
                f"query has dimension {q.shape[0]}, index expects {self._dim}")
        n = len(self._ids)
        if n == 0:
            return []
        scores = self._matrix[:n] @ q
        np.clip(scores, -1.0, 1.0, out=scores)
        order = np.lexsort((self._id_ranks(), -scores))
        out: list[ScoredNode] = []
        for row in order:
            score = float(scores[row])
            if score < min_similarity:
                break  # descending scores: nothing further qualifies
            out.append(ScoredNode(id=self._ids[row], score=score))
            if len(out) == k:
                break
        return out
