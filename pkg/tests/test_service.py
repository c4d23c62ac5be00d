"""HTTP service endpoints, schema stability, and the loopback guard."""
import pytest
from fastapi.testclient import TestClient

from pkgraph.engine import Engine, ServiceConfig
from pkgraph.model import REFUSAL_TEXT
from pkgraph.service import create_app

from conftest import find_node


@pytest.fixture
def client(engine):
    app = create_app(engine)
    with TestClient(app) as c:
        yield c


@pytest.fixture
def loaded_client(scenario1_engine):
    app = create_app(scenario1_engine)
    with TestClient(app) as c:
        yield c


def test_stats_fresh_store(client):
    data = client.get("/stats").json()
    assert data["schema_version"] == 1
    assert data["nodes"] == 1 and data["edges"] == 0


def test_every_response_carries_schema_version(loaded_client):
    paths = ["/stats", "/graph", "/communities"]
    for path in paths:
        assert loaded_client.get(path).json()["schema_version"] == 1
    missing = loaded_client.get("/node/" + "00" * 16)
    assert missing.status_code == 404
    assert missing.json()["schema_version"] == 1


def test_query_scenario2(loaded_client):
    resp = loaded_client.post("/query", json={
        "question": "How much have I spent on the trip so far?"})
    body = resp.json()
    assert resp.status_code == 200
    assert "95 EUR" in body["answer"]["text"]
    assert body["answer"]["citations"]
    assert body["retrieval_ms"] >= 0
    assert body["subgraph"]["context"]


def test_delete_then_query_refuses(loaded_client, scenario1_engine):
    receipt = find_node(scenario1_engine.store, "Receipt")
    deleted = loaded_client.delete(f"/node/{receipt.id}")
    assert deleted.status_code == 200
    body = deleted.json()["receipt"]
    assert body["root"] == receipt.id
    assert len(body["deleted_nodes"]) == 1
    assert len(body["deleted_edges"]) == 2  # owns + during
    assert body["removed_vectors"] == [receipt.id]

    again = loaded_client.post("/query", json={
        "question": "How much have I spent on the trip so far?"})
    assert again.json()["answer"]["refused"] is True
    assert again.json()["answer"]["text"] == REFUSAL_TEXT


def test_delete_unknown_and_root(loaded_client, scenario1_engine):
    from pkgraph.store import USER_ROOT_ID

    assert loaded_client.delete("/node/" + "00" * 16).status_code == 404
    resp = loaded_client.delete(f"/node/{USER_ROOT_ID}")
    assert resp.status_code == 409


def test_graph_endpoint_with_filter(loaded_client):
    full = loaded_client.get("/graph").json()
    assert {n["label"] for n in full["nodes"]} >= {"User", "Event", "Receipt"}
    persons = loaded_client.get("/graph", params={"label": "Person"}).json()
    assert persons["nodes"] == []


def test_node_detail(loaded_client, scenario1_engine):
    receipt = find_node(scenario1_engine.store, "Receipt")
    body = loaded_client.get(f"/node/{receipt.id}").json()
    assert body["node"]["properties"]["amount"] == "95 EUR"
    assert body["incident_edges"] == 2


def test_ingest_record_payload(client):
    resp = client.post("/ingest", json={"record": {
        "modality": "note", "text": "title: Quick note\nremember the milk"}})
    assert resp.status_code == 200
    report = resp.json()["reports"][0]
    assert report["created_nodes"] and not report["skipped_duplicate"]


def test_ingest_path(client, tmp_path):
    (tmp_path / "e.ics").write_text(
        "BEGIN:VEVENT\nSUMMARY:Picnic\nDTSTART:20250801T100000Z\n"
        "DTEND:20250801T120000Z\nEND:VEVENT\n")
    resp = client.post("/ingest", json={"path": str(tmp_path)})
    assert resp.status_code == 200
    assert resp.json()["stats"]["count"] == 1


def test_communities_endpoint(loaded_client):
    body = loaded_client.get("/communities", params={"level": 0}).json()
    assert body["partitions"], "lazy refresh should produce level 0"
    assert body["partitions"][0]["level"] == 0


def test_export_import_over_http(loaded_client, tmp_path):
    exported = loaded_client.post("/export", json={}).json()["ndjson"]
    from pkgraph.store import open_store

    target_path = tmp_path / "restored.pkg"
    target = open_store(target_path)
    target.close()
    fresh_engine = Engine(ServiceConfig(store_path=str(target_path)), create=False)
    with TestClient(create_app(fresh_engine)) as fresh_client:
        resp = fresh_client.post("/import", json={"ndjson": exported})
        assert resp.status_code == 200
        roundtrip = fresh_client.post("/export", json={}).json()["ndjson"]
    assert roundtrip == exported
    fresh_engine.close()


def test_import_into_nonempty_store_conflicts(loaded_client):
    exported = loaded_client.post("/export", json={}).json()["ndjson"]
    resp = loaded_client.post("/import", json={"ndjson": exported})
    assert resp.status_code == 409


def test_loopback_guard_rejects_remote_clients(engine):
    app = create_app(engine)
    with TestClient(app, client=("203.0.113.9", 4444)) as remote:
        resp = remote.get("/stats")
        assert resp.status_code == 403
        assert resp.json()["error"]["type"] == "forbidden"


def test_unsafe_bind_flag_allows_remote(store_path):
    engine = Engine(ServiceConfig(store_path=str(store_path),
                                  allow_non_loopback=True))
    app = create_app(engine)
    with TestClient(app, client=("203.0.113.9", 4444)) as remote:
        assert remote.get("/stats").status_code == 200
    engine.close()


def test_bind_guard_check():
    from pkgraph.errors import BindAddressError

    ServiceConfig(store_path="x", bind_host="127.0.0.1").check_bind()
    ServiceConfig(store_path="x", bind_host="::1").check_bind()
    with pytest.raises(BindAddressError):
        ServiceConfig(store_path="x", bind_host="0.0.0.0").check_bind()
    ServiceConfig(store_path="x", bind_host="0.0.0.0",
                  allow_non_loopback=True).check_bind()


def test_bad_query_body(client):
    assert client.post("/query", json={"question": "  "}).status_code == 400
    assert client.post("/ingest", json={}).status_code == 400


def test_invalid_parameters_keep_schema(loaded_client):
    resp = loaded_client.post("/query", json={
        "question": "how much?", "max_nodes": 1, "k_anchors": 5})
    assert resp.status_code == 400
    assert resp.json()["schema_version"] == 1

    resp = loaded_client.get("/communities", params={"level": "not-a-number"})
    assert resp.json()["schema_version"] == 1


def test_unknown_route_keeps_schema(client):
    resp = client.get("/definitely/not/here")
    assert resp.status_code == 404
    assert resp.json()["schema_version"] == 1


def test_ui_static_mount(store_path, tmp_path):
    (tmp_path / "index.html").write_text("<html><body>curator shell</body></html>")
    engine = Engine(ServiceConfig(store_path=str(store_path),
                                  ui_dir=str(tmp_path)))
    with TestClient(create_app(engine)) as ui_client:
        page = ui_client.get("/")
        assert page.status_code == 200
        assert "curator shell" in page.text
        # API routes still win over the static mount
        assert ui_client.get("/stats").json()["nodes"] == 1
    engine.close()
