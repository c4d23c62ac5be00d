"""Write-path orchestration: idempotency, temporal forging, atomicity, loaders."""
import json
import random

import pytest

from pkgraph.engine import Engine, ServiceConfig
from pkgraph.errors import EmptyPayloadError
from pkgraph.ingestion import load_records, percentile
from pkgraph.model import SourceRecord
from pkgraph.store import USER_ROOT_ID

from conftest import find_node, ticket_image_record, trip_calendar_record


def test_scenario1_graph_shape(scenario1_engine):
    store = scenario1_engine.store
    receipt = find_node(store, "Receipt", "Train ticket")
    event = find_node(store, "Event", "Weekend Trip")
    assert receipt.properties["amount"] == "95 EUR"
    during = [e for e, n in store.neighbors(receipt.id, "out")
              if e.predicate == "during" and n.id == event.id]
    assert len(during) == 1


def test_scenario1_order_insensitive(tmp_path):
    def build(order):
        eng = Engine(ServiceConfig(store_path=str(tmp_path / f"{order}.pkg")))
        records = [trip_calendar_record(), ticket_image_record()]
        if order == "reversed":
            records.reverse()
        for r in records:
            eng.ingestor.ingest_record(r)
        snap = eng.store.export_graph()
        shape = ({n.id for n in snap.nodes},
                 {(e.src, e.predicate, e.dst) for e in snap.edges})
        eng.close()
        return shape

    assert build("forward") == build("reversed")


def test_duplicate_record_skipped(engine):
    record = trip_calendar_record()
    first = engine.ingestor.ingest_record(record)
    assert not first.skipped_duplicate
    stats_before = engine.store.stats()
    second = engine.ingestor.ingest_record(record)
    assert second.skipped_duplicate
    assert second.created_nodes == [] and second.created_edges == 0
    assert engine.store.stats() == stats_before


def test_forge_links_boundary_touch(engine):
    # two events sharing exactly one boundary instant -> overlaps edge
    e1 = SourceRecord.make("calendar", "title: First",
                           start="2025-07-01T09:00:00Z", end="2025-07-01T10:00:00Z")
    e2 = SourceRecord.make("calendar", "title: Second",
                           start="2025-07-01T10:00:00Z", end="2025-07-01T11:00:00Z")
    engine.ingestor.ingest_record(e1)
    report = engine.ingestor.ingest_record(e2)
    assert report.created_edges >= 2  # user link + overlaps
    first = find_node(engine.store, "Event", "First")
    second = find_node(engine.store, "Event", "Second")
    overlaps = [e for e, n in engine.store.neighbors(first.id, "out")
                if e.predicate == "overlaps"]
    assert len(overlaps) == 1 and overlaps[0].dst == second.id


def test_no_interval_no_links(engine):
    engine.ingestor.ingest_record(trip_calendar_record())
    note = SourceRecord.make("note", "title: Plain\nno dates here")
    engine.ingestor.ingest_record(note)
    head = find_node(engine.store, "Note", "Plain")
    assert all(e.predicate != "during" for e, _ in engine.store.neighbors(head.id))


def test_event_arriving_second_still_gets_during(engine):
    engine.ingestor.ingest_record(ticket_image_record())
    engine.ingestor.ingest_record(trip_calendar_record())
    receipt = find_node(engine.store, "Receipt")
    event = find_node(engine.store, "Event")
    during = [e for e, _ in engine.store.neighbors(receipt.id, "out")
              if e.predicate == "during" and e.dst == event.id]
    assert len(during) == 1


def test_atomicity_on_extraction_failure(engine):
    stats_before = engine.store.stats()
    bad = SourceRecord.make("note", "x")
    bad.text = "   "  # forces the extractor to fail after the ledger check
    with pytest.raises(EmptyPayloadError):
        engine.ingestor.ingest_record(bad)
    assert engine.store.stats() == stats_before
    assert not engine.store.record_exists(bad.id)


def test_batch_reports_and_stats(engine):
    records = [trip_calendar_record(), ticket_image_record(),
               trip_calendar_record()]
    reports, stats = engine.ingestor.ingest_batch(records)
    assert len(reports) == 3
    assert sum(1 for r in reports if r.skipped_duplicate) == 1
    assert stats.count == 2
    assert stats.mean_ms is not None and stats.p50_ms <= stats.p95_ms


def test_empty_batch_stats_undefined(engine):
    reports, stats = engine.ingestor.ingest_batch([])
    assert reports == []
    assert stats.undefined and stats.mean_ms is None


def test_batch_continues_after_error(engine):
    bad = SourceRecord.make("note", "x")
    bad.text = " "
    reports, stats = engine.ingestor.ingest_batch(
        [bad, trip_calendar_record()])
    assert reports[0].error is not None
    assert reports[1].error is None
    assert stats.count == 1


def test_percentile_nearest_rank():
    values = [1.0, 2.0, 3.0, 4.0]
    assert percentile(values, 50) == 2.0
    assert percentile(values, 95) == 4.0
    assert percentile([7.0], 50) == 7.0
    with pytest.raises(ValueError):
        percentile([], 50)


def test_order_insensitivity_random_permutations(tmp_path):
    from pkgraph.bench.corpus import write_corpus

    corpus = write_corpus(tmp_path / "corpus")
    records = load_records(corpus)
    rnd = random.Random(99)

    def shape_of(records_order, tag):
        eng = Engine(ServiceConfig(store_path=str(tmp_path / f"s{tag}.pkg")))
        for record in records_order:
            eng.ingestor.ingest_record(record)
        snap = eng.store.export_graph()
        shape = ({n.id for n in snap.nodes},
                 {(e.src, e.predicate, e.dst) for e in snap.edges},
                 {n.id: n.display_name for n in snap.nodes})
        eng.close()
        return shape

    baseline = shape_of(records, "base")
    for trial in range(3):  # the 50-permutation run lives in the acceptance suite
        shuffled = records[:]
        rnd.shuffle(shuffled)
        assert shape_of(shuffled, trial) == baseline


# --- source directory loader ------------------------------------------------------

def test_load_records_formats(tmp_path):
    (tmp_path / "a_event.ics").write_text(
        "BEGIN:VEVENT\nSUMMARY:Picnic\nDTSTART:20250801T100000Z\n"
        "DTEND:20250801T120000Z\nLOCATION:Park\nATTENDEE:Sarah Green\nEND:VEVENT\n")
    (tmp_path / "b_note.txt").write_text("title: Note\nbody line\n")
    (tmp_path / "c_doc.md").write_text("title: Doc\ncontent\n")
    (tmp_path / "d_pic.jpg").write_bytes(b"notapixel")
    (tmp_path / "d_pic.jpg.caption.txt").write_text("Receipt from cafe, 4 EUR\n")
    (tmp_path / "d_pic.jpg.meta.json").write_text(
        json.dumps({"taken_at": "2025-08-01T11:00:00Z"}))
    (tmp_path / "e_call.json").write_text(json.dumps(
        {"modality": "call", "peer": "Sarah Green",
         "at": "2025-08-01T09:00:00Z", "duration_min": 5}))
    (tmp_path / "f_contact.json").write_text(json.dumps(
        {"modality": "contact", "name": "Sarah Green", "phone": "+1"}))
    (tmp_path / "g_alarm.json").write_text(json.dumps(
        {"modality": "alarm", "label": "Wake", "at": "2025-08-01T06:00:00Z"}))
    (tmp_path / "h_msg.json").write_text(json.dumps(
        {"modality": "message", "sender": "S. Green",
         "sent_at": "2025-08-01T08:00:00Z", "subject": "Hi", "body": "hello"}))

    records = load_records(tmp_path)
    modalities = [r.modality for r in records]
    assert modalities == ["calendar", "note", "document", "image", "call",
                          "contact", "alarm", "message"]
    cal = records[0]
    assert cal.start is not None and cal.metadata["attendee"] == "Sarah Green"
    assert "title: Picnic" in cal.text and "location: Park" in cal.text
    image = records[3]
    assert image.text.startswith("Receipt from cafe")
    assert image.start is not None
    assert image.metadata["content_sha256"]
    # loader is deterministic and ids are stable
    again = load_records(tmp_path)
    assert [r.id for r in records] == [r.id for r in again]


def test_ingest_loaded_directory_end_to_end(tmp_path, engine):
    (tmp_path / "x.ics").write_text(
        "BEGIN:VEVENT\nSUMMARY:Picnic\nDTSTART:20250801T100000Z\n"
        "DTEND:20250801T120000Z\nEND:VEVENT\n")
    (tmp_path / "y.jpg").write_bytes(b"img")
    (tmp_path / "y.jpg.caption.txt").write_text("Receipt from cafe, 4 EUR\n")
    (tmp_path / "y.jpg.meta.json").write_text(
        json.dumps({"taken_at": "2025-08-01T11:00:00Z"}))
    reports, stats = engine.ingestor.ingest_path(tmp_path)
    assert stats.count == 2
    receipt = find_node(engine.store, "Receipt", "Receipt from cafe")
    event = find_node(engine.store, "Event", "Picnic")
    assert any(e.predicate == "during" and e.dst == event.id
               for e, _ in engine.store.neighbors(receipt.id, "out"))


def test_provenance_always_present(scenario1_engine):
    for node in scenario1_engine.store.export_graph().nodes:
        if node.id != USER_ROOT_ID:
            assert node.provenance


def test_ingest_path_survives_malformed_file(tmp_path, engine):
    (tmp_path / "good.txt").write_text("title: Fine\nsome body\n")
    (tmp_path / "broken.json").write_text("{not json at all")
    (tmp_path / "no_start.ics").write_text("BEGIN:VEVENT\nSUMMARY:X\nEND:VEVENT\n")
    reports, stats = engine.ingestor.ingest_path(tmp_path)
    errors = [r for r in reports if r.error]
    assert len(errors) == 2
    assert {r.record for r in errors} == {"file:broken.json", "file:no_start.ics"}
    assert stats.count == 1
