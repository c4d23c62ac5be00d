"""Deterministic identifiers, canonical keys, and instant handling.

Node and edge ids are content-derived (truncated SHA-256), so re-ingesting
the same entity always lands on the same id. Instants are UTC datetimes
with millisecond precision and a single canonical string form.
"""
from __future__ import annotations

import hashlib
import re
import unicodedata
from datetime import datetime, timezone

_SEP = b"\x1f"
_WS = re.compile(r"\s+")


def canonical_key(text: str) -> str:
    """Normalize text for identity: strip diacritics, lowercase, collapse whitespace."""
    decomposed = unicodedata.normalize("NFKD", text)
    stripped = "".join(ch for ch in decomposed if not unicodedata.combining(ch))
    return _WS.sub(" ", stripped).strip().lower()


def node_id(label: str, key: str) -> str:
    """First 16 bytes of SHA-256 over `label 0x1F key`, as 32 hex chars."""
    digest = hashlib.sha256(label.encode("utf-8") + _SEP + key.encode("utf-8")).digest()
    return digest[:16].hex()


def edge_id(src: str, predicate: str, dst: str) -> str:
    """Deterministic edge id; uniqueness of (src, predicate, dst) falls out of it."""
    payload = _SEP.join(p.encode("utf-8") for p in (src, predicate, dst))
    return hashlib.sha256(payload).digest()[:16].hex()


def content_hash(payload: bytes) -> str:
    """Full SHA-256 hex digest used as SourceRecord id."""
    return hashlib.sha256(payload).hexdigest()


USER_ROOT_ID = node_id("User", "user")


def now() -> datetime:
    """Current UTC instant truncated to millisecond precision."""
    dt = datetime.now(timezone.utc)
    return dt.replace(microsecond=(dt.microsecond // 1000) * 1000)


def parse_instant(value: str | datetime) -> datetime:
    """Accept ISO-8601 (Z or offset or naive-as-UTC) or datetime; return UTC @ ms."""
    if isinstance(value, datetime):
        dt = value
    else:
        text = value.strip()
        if text.endswith("Z"):
            text = text[:-1] + "+00:00"
        dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    dt = dt.astimezone(timezone.utc)
    return dt.replace(microsecond=(dt.microsecond // 1000) * 1000)


def instant_str(dt: datetime) -> str:
    """Canonical form: 2025-07-18T09:00:00.000Z (always ms, always Z)."""
    dt = parse_instant(dt)
    return dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{dt.microsecond // 1000:03d}Z"
