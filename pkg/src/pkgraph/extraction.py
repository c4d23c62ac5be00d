"""Record-to-triples extraction: the perception boundary of the system.

The reference extractor is rule-based and fully deterministic, which makes
the symbolic pipeline testable end to end with no model in the loop.
Model-backed extraction (HTTP) plugs in behind the same contract and must
return the same triple shape.
"""
from __future__ import annotations

import re
from decimal import Decimal
from pathlib import Path

from . import ids
from .errors import (
    CaptionUnavailableError,
    EmptyPayloadError,
    ExtractionError,
    VisionClientError,
)
from .model import Literal, Mention, SourceRecord, Triple

USER_MENTION = Mention(surface="User", type_hint="User", key="user")

#: modality -> head node label ("image" resolves through classify_head_label)
HEAD_LABELS = {
    "calendar": "Event",
    "note": "Note",
    "message": "Message",
    "call": "Call",
    "alarm": "Alarm",
    "contact": "Contact",
    "document": "Document",
}

RECEIPT_KEYWORDS = ("receipt", "ticket", "invoice")

_KV_RE = re.compile(r"^\s*([A-Za-z][A-Za-z0-9 _-]{0,40})\s*:\s*(.+?)\s*$")
_NAME_RE = re.compile(r"\b(?:[A-Z][a-z]+|[A-Z]\.)(?:\s+(?:[A-Z][a-z]+|[A-Z]\.))+")
_LEADING_NOISE = {
    "The", "A", "An", "I", "We", "My", "On", "At", "In", "To", "And", "Met",
}

_CURRENCY_RE = re.compile(
    r"(?<![\w.,])(\d{1,9}(?:[.,]\d{1,2})?)\s*"
    r"(EUR|USD|GBP|CHF|JPY|SEK|NOK|DKK|PLN|CZK|CAD|AUD|€|\$|£)(?![A-Za-z])"
)
_SYMBOL_CODES = {"€": "EUR", "$": "USD", "£": "GBP"}

#: metadata keys that denote people, with the predicate used for the link
_PERSON_METADATA = {
    "sender": "from",
    "from": "from",
    "attendee": "with",
    "participant": "with",
    "peer": "with",
    "caller": "with",
}


def snake_case(key: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", key.strip().lower()).strip("_")


def parse_amount(text: str) -> tuple[str, float, str] | None:
    """First currency amount in the text: (normalized literal, value, code)."""
    m = _CURRENCY_RE.search(text)
    if m is None:
        return None
    number = Decimal(m.group(1).replace(",", "."))
    code = _SYMBOL_CODES.get(m.group(2), m.group(2))
    normal = format(number.normalize(), "f")
    return f"{normal} {code}", float(number), code


def classify_head_label(record: SourceRecord, caption_triples: list | None = None) -> str:
    """Head label for a record; image captions subtype into Receipt vs Photo."""
    if record.modality != "image":
        return HEAD_LABELS[record.modality]
    caption = record.text.lower()
    if any(word in caption for word in RECEIPT_KEYWORDS):
        return "Receipt"
    return "Photo"


def _kv_pairs(text: str) -> list[tuple[str, str, str]]:
    """(snake_key, value, raw_line) for every `key: value` line."""
    pairs = []
    for line in text.splitlines():
        m = _KV_RE.match(line)
        if m and snake_case(m.group(1)):
            pairs.append((snake_case(m.group(1)), m.group(2), line))
    return pairs


def _name_candidates(text: str, kv_lines: set[str]) -> list[str]:
    """Capitalized multi-word sequences from free-text lines, in order."""
    names: list[str] = []
    for line in text.splitlines():
        if line in kv_lines:
            continue
        for match in _NAME_RE.findall(line):
            tokens = match.split()
            if tokens and tokens[0] in _LEADING_NOISE:
                tokens = tokens[1:]
            if len(tokens) < 2:
                continue
            name = " ".join(tokens)
            if name not in names:
                names.append(name)
    return names


_HEAD_TITLE_KEYS = {
    "calendar": ("title", "summary"),
    "note": ("title",),
    "document": ("title",),
    "message": ("subject",),
    "contact": ("name",),
    "alarm": ("label",),
    "call": (),
    "image": (),
}


def _head_surface(record: SourceRecord, kv: list[tuple[str, str, str]]) -> str:
    if record.modality == "image":
        first = re.split(r"[,.;\n]", record.text.strip(), maxsplit=1)[0].strip()
        return (first or record.text.strip())[:64]
    if record.modality == "call":
        peer = record.metadata.get("peer")
        if peer:
            # calls to the same person must stay distinct nodes
            stamp = record.start.strftime(" on %Y-%m-%d %H:%M") if record.start else ""
            return f"Call with {peer}{stamp}"
    if record.modality == "alarm":
        label = record.metadata.get("label")
        if label:
            return f"Alarm: {label}"
    kv_map = {k: v for k, v, _ in kv}
    for key in _HEAD_TITLE_KEYS[record.modality]:
        if record.metadata.get(key):
            return record.metadata[key][:64]
        if kv_map.get(key):
            return kv_map[key][:64]
    for line in record.text.splitlines():
        line = line.strip()
        if line:
            return line[:64]
    return record.text.strip()[:64]


class ReferenceExtractor:
    """Deterministic rule-based extractor; a pure function of the record."""

    def extract(self, record: SourceRecord) -> list[Triple]:
        if not record.text.strip():
            raise EmptyPayloadError(f"record {record.id[:12]} has no text payload")

        label = classify_head_label(record)
        kv = _kv_pairs(record.text)
        surface = _head_surface(record, kv)
        head = Mention(surface=surface, type_hint=label)
        if not head.key:
            # surface was all whitespace/marks; key off the content hash so
            # any record still lands somewhere inspectable
            head = Mention(surface=surface, type_hint=label,
                           key=f"record {record.id[:12]}")
        link = "experienced" if label == "Event" else "owns"
        triples = [Triple(USER_MENTION, link, head, source=record.id)]

        for key, value, _line in kv:
            triples.append(Triple(head, key, Literal(value), source=record.id))

        body = self._body_text(record, kv)
        if body:
            triples.append(Triple(head, "content", Literal(body), source=record.id))

        amount = parse_amount(record.text)
        if amount is not None:
            literal, value, code = amount
            triples.append(Triple(head, "amount", Literal(literal), source=record.id))
            triples.append(Triple(head, "amount_value", Literal(value), source=record.id))
            triples.append(Triple(head, "amount_currency", Literal(code), source=record.id))

        kv_lines = {line for _, _, line in kv}
        head_key = ids.canonical_key(head.surface)
        for name in _name_candidates(record.text, kv_lines):
            if ids.canonical_key(name) == head_key:
                continue
            triples.append(Triple(head, "mentions", Mention(name, "Person"),
                                  source=record.id))
        for meta_key in sorted(record.metadata):
            predicate = _PERSON_METADATA.get(meta_key)
            if predicate is None:
                continue
            surface = record.metadata[meta_key].strip()
            if not surface or ids.canonical_key(surface) == head_key:
                continue
            triples.append(Triple(head, predicate, Mention(surface, "Person"),
                                  source=record.id))
        return triples

    @staticmethod
    def _body_text(record: SourceRecord, kv: list[tuple[str, str, str]],
                   limit: int = 400) -> str:
        """Free text worth keeping on the node: images keep their full caption,
        text modalities keep the non-key-value lines. Anchor search depends on
        this, since display names alone are terse."""
        if record.modality == "image":
            caption = record.text.strip()
            return caption[:limit]
        if record.modality in ("note", "document", "message"):
            kv_lines = {line for _, _, line in kv}
            body = " ".join(line.strip() for line in record.text.splitlines()
                            if line.strip() and line not in kv_lines)
            return body[:limit]
        return ""


def extract_triples(record: SourceRecord, extractor) -> list[Triple]:
    """Run an extractor over one record; the head is the object of the
    leading (User, owns|experienced, head) triple."""
    return extractor.extract(record)


def head_mention(triples: list[Triple]) -> Mention:
    for t in triples:
        if t.subject.key == "user" and isinstance(t.obj, Mention):
            return t.obj
    raise ExtractionError("extractor output carries no head triple")


# --- image captioning ----------------------------------------------------------

def caption_image(image_bytes: bytes, client) -> str:
    """Caption an image through the configured vision client."""
    if not image_bytes:
        raise VisionClientError("empty image payload")
    caption = client.caption(image_bytes)
    if not isinstance(caption, str) or not caption.strip():
        raise VisionClientError("vision client returned an empty caption")
    return caption


class SidecarVisionClient:
    """Offline stub: the caption lives in `<image>.caption.txt` next to the file.

    Tests and the shipped benchmark always use sidecars; real deployments
    configure an HTTP vision endpoint instead.
    """

    def __init__(self, image_path):
        self.image_path = Path(image_path)

    def caption(self, image_bytes: bytes) -> str:
        sidecar = self.image_path.with_name(self.image_path.name + ".caption.txt")
        if not sidecar.exists():
            raise CaptionUnavailableError(f"no caption sidecar at {sidecar}")
        return sidecar.read_text(encoding="utf-8").strip()


class HttpVisionClient:
    """POST raw image bytes -> {"caption": "..."}."""

    def __init__(self, url: str, timeout: float = 60.0, client=None):
        import httpx

        self.url = url
        self._client = client or httpx.Client(timeout=timeout)

    def caption(self, image_bytes: bytes) -> str:
        import httpx

        try:
            resp = self._client.post(self.url, content=image_bytes)
            resp.raise_for_status()
            return resp.json().get("caption", "")
        except (httpx.HTTPError, ValueError) as exc:
            raise VisionClientError(f"vision endpoint failed: {exc}") from exc


# --- model-backed extraction -----------------------------------------------------

def record_to_dict(record: SourceRecord) -> dict:
    return {
        "id": record.id,
        "modality": record.modality,
        "text": record.text,
        "start": ids.instant_str(record.start) if record.start else None,
        "end": ids.instant_str(record.end) if record.end else None,
        "metadata": dict(record.metadata),
    }


class HttpExtractor:
    """POST {"record": {...}} -> {"triples": [...]}; failures raise
    ExtractionError so the record is queued for retry, never dropped."""

    def __init__(self, url: str, timeout: float = 120.0, client=None):
        import httpx

        self.url = url
        self._client = client or httpx.Client(timeout=timeout)

    def extract(self, record: SourceRecord) -> list[Triple]:
        import httpx

        if not record.text.strip():
            raise EmptyPayloadError(f"record {record.id[:12]} has no text payload")
        try:
            resp = self._client.post(self.url, json={"record": record_to_dict(record)})
            resp.raise_for_status()
            rows = resp.json()["triples"]
        except (httpx.HTTPError, ValueError, KeyError) as exc:
            raise ExtractionError(f"model extractor failed: {exc}") from exc
        triples = []
        for row in rows:
            try:
                subject = Mention(row["subject"]["surface"],
                                  row["subject"].get("type_hint", "Entity"))
                obj_raw = row["object"]
                if "value" in obj_raw:
                    obj = Literal(obj_raw["value"])
                else:
                    obj = Mention(obj_raw["surface"], obj_raw.get("type_hint", "Entity"))
                triples.append(Triple(subject, row["predicate"], obj,
                                      source=record.id,
                                      confidence=float(row.get("confidence", 1.0))))
            except (KeyError, TypeError) as exc:
                raise ExtractionError(f"malformed triple from extractor: {exc}") from exc
        return triples
