"""Shared fixtures: stores, engines, and the demo scenario graphs."""
from __future__ import annotations

import pytest

from pkgraph.engine import Engine, ServiceConfig
from pkgraph.model import SourceRecord
from pkgraph.store import open_store


@pytest.fixture
def store_path(tmp_path):
    return tmp_path / "test.pkg"


@pytest.fixture
def store(store_path):
    s = open_store(store_path)
    yield s
    if not s._closed:
        s.close()


@pytest.fixture
def engine(store_path):
    eng = Engine(ServiceConfig(store_path=str(store_path)))
    yield eng
    if not eng.store._closed:
        eng.close()


def trip_calendar_record() -> SourceRecord:
    return SourceRecord.make(
        "calendar", "title: Weekend Trip\nlocation: Florence",
        start="2025-07-18T09:00:00Z", end="2025-07-20T18:00:00Z",
        metadata={"filename": "trip.ics"})


def ticket_image_record() -> SourceRecord:
    return SourceRecord.make(
        "image", "Train ticket, Rome to Florence, total 95 EUR",
        start="2025-07-19T10:12:00Z", end="2025-07-19T10:12:00Z",
        metadata={"filename": "ticket.jpg"})


@pytest.fixture
def scenario1_engine(engine):
    """Calendar event + ticket image, ingested: Event, Receipt, during edge."""
    engine.ingestor.ingest_record(trip_calendar_record())
    engine.ingestor.ingest_record(ticket_image_record())
    return engine


def call_and_work_records() -> list[SourceRecord]:
    return [
        SourceRecord.make("call", "duration_min: 4",
                          start="2025-07-14T08:45:00Z", end="2025-07-14T08:45:00Z",
                          metadata={"peer": "Sarah Green", "filename": "call.json"}),
        SourceRecord.make("calendar", "title: Work\nlocation: Office 4B",
                          start="2025-07-14T09:00:00Z", end="2025-07-14T17:00:00Z",
                          metadata={"filename": "work.ics"}),
    ]


@pytest.fixture
def temporal_engine(engine):
    """Call at 08:45 plus a Work event from 09:00: the before/after fixture."""
    for record in call_and_work_records():
        engine.ingestor.ingest_record(record)
    return engine


def find_node(store, label: str, needle: str = ""):
    for node in store.export_graph().nodes:
        if node.label == label and needle in node.display_name:
            return node
    raise AssertionError(f"no {label} node matching {needle!r}")
