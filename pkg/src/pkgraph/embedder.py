"""Embedding providers: a deterministic offline reference embedder plus an
HTTP client for external models.

The reference embedder is hash-based (character trigrams, fixed 64-bit FNV-1a)
so embeddings are bit-stable across runs and platforms. It exists to make the
whole symbolic pipeline testable with no model in the loop; an external
provider plugs in behind the same contract (dimension-d unit vectors).
"""
from __future__ import annotations

import numpy as np

from .errors import EmptyTextError, ProviderError
from .index import UNIT_NORM_TOL

DEFAULT_DIMENSION = 256

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    """Fixed 64-bit FNV-1a; the platform-independent hash behind the embedder."""
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


class ReferenceEmbedder:
    """Trigram-hashing embedder: lowercase, overlapping character trigrams,
    each distinct trigram hashed to a signed bucket (index = hash mod d,
    sign = bit 63), accumulated as integers and L2-normalized. Counting
    distinct trigrams (not occurrences) keeps one repeated substring from
    dominating a long text.

    Text shorter than one trigram is hashed whole. If every bucket cancels
    to zero (possible but rare), the whole-text hash contributes a single +1
    so the output is always a unit vector.
    """

    #: sparse trigram vectors score low; anchor filtering defaults accordingly
    default_min_similarity = 0.15

    def __init__(self, dimension: int = DEFAULT_DIMENSION):
        self.dimension = dimension

    def embed(self, text: str) -> np.ndarray:
        t = text.strip().lower()
        if not t:
            raise EmptyTextError("cannot embed empty text")
        grams = [t] if len(t) < 3 else [t[i:i + 3] for i in range(len(t) - 2)]
        bins = [0] * self.dimension
        for gram in sorted(set(grams)):
            h = fnv1a64(gram.encode("utf-8"))
            sign = -1 if (h >> 63) & 1 else 1
            bins[h % self.dimension] += sign
        if not any(bins):
            bins[fnv1a64(t.encode("utf-8")) % self.dimension] = 1
        v = np.array(bins, dtype=np.float64)
        v /= np.linalg.norm(v)
        return v.astype(np.float32)

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        return [self.embed(t) for t in texts]


class ExternalEmbedder:
    """HTTP provider: POST {"texts": [...]} -> {"vectors": [[...], ...]}.

    Vectors are validated on receipt (dimension and unit norm).
    """

    default_min_similarity = 0.15

    def __init__(self, url: str, dimension: int = DEFAULT_DIMENSION,
                 timeout: float = 30.0, client=None):
        import httpx

        self.url = url
        self.dimension = dimension
        self.timeout = timeout
        self._client = client or httpx.Client(timeout=timeout)

    def embed(self, text: str) -> np.ndarray:
        if not text.strip():
            raise EmptyTextError("cannot embed empty text")
        return self.embed_batch([text])[0]

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        import httpx

        try:
            resp = self._client.post(self.url, json={"texts": texts})
            resp.raise_for_status()
            payload = resp.json()
        except (httpx.HTTPError, ValueError) as exc:
            raise ProviderError(f"embedding provider failed: {exc}") from exc
        vectors = payload.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProviderError("provider returned a malformed vectors payload")
        out = []
        for vec in vectors:
            v = np.asarray(vec, dtype=np.float32).reshape(-1)
            if v.shape[0] != self.dimension:
                raise ProviderError(
                    f"provider returned dimension {v.shape[0]}, expected {self.dimension}")
            norm = float(np.linalg.norm(v.astype(np.float64)))
            if abs(norm - 1.0) > UNIT_NORM_TOL:
                raise ProviderError(f"provider vector norm {norm:.6f} is not unit")
            out.append(v)
        return out


def embed_text(text: str, provider) -> np.ndarray:
    """Embed one string with the given provider; always a unit float32 vector."""
    return provider.embed(text)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity accumulated in float64."""
    return float(np.dot(np.asarray(a, dtype=np.float64),
                        np.asarray(b, dtype=np.float64)))


def node_embedding_text(node) -> str:
    """Text a node is indexed under: display name plus salient properties
    (key words de-snaked, plus string values), in key order."""
    parts = [node.display_name]
    for key in sorted(node.properties):
        value = node.properties[key]
        words = key.split("#")[0].replace("_", " ")
        if isinstance(value, str) and value:
            parts.append(f"{words} {value}")
        elif not isinstance(value, bool):
            parts.append(words)
    return " ".join(parts)
