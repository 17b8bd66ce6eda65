import json

import pytest
from fastapi.testclient import TestClient

from queryboard.service import create_app

from conftest import FIXTURES, RUNNING_EXAMPLE


@pytest.fixture()
def client():
    return TestClient(create_app(FIXTURES))


def _generate(client, queries=RUNNING_EXAMPLE, **overrides):
    body = {
        "queries": list(queries),
        "dataset": "demo",
        "screen": {"w": 1280, "h": 800},
        "seed": 0,
        "iterations": 60,
    }
    body.update(overrides)
    return client.post("/generate", json=body)


def test_generate_returns_spec(client):
    response = _generate(client)
    assert response.status_code == 200
    body = response.json()
    assert body["version_id"] == "V1"
    spec = body["spec"]
    assert spec["version"] == 1
    assert len(spec["visualizations"]) == len(spec["forest"]["trees"])
    assert "layout" in spec and "defaults" in spec


def test_versions_are_monotone_with_snapshots(client):
    _generate(client)
    _generate(client, queries=RUNNING_EXAMPLE[:1])
    listing = client.get("/versions").json()
    assert [v["version_id"] for v in listing] == ["V1", "V2"]
    detail = client.get("/versions/V1").json()
    assert detail["query_log_snapshot"] == RUNNING_EXAMPLE


def test_unknown_version_404(client):
    assert client.get("/versions/V9").status_code == 404
    assert client.post("/export", json={"version_id": "V9"}).status_code == 404


def test_generate_parse_error_400(client):
    response = _generate(client, queries=["SELECT FROM"])
    assert response.status_code == 400
    assert response.json()["code"] == "parse_error"


def test_generate_join_422(client):
    response = _generate(client, queries=["SELECT * FROM A JOIN B"])
    assert response.status_code == 422
    assert response.json()["code"] == "unsupported_feature"


def test_generate_unknown_dataset_404(client):
    response = _generate(client, dataset="missing")
    assert response.status_code == 404
    assert response.json()["code"] == "unknown_dataset"


def test_execute_default_binding(client):
    spec = _generate(client).json()["spec"]
    tree_id = spec["forest"]["trees"][0]["id"]
    response = client.post(
        "/execute", json={"version_id": "V1", "tree_id": tree_id, "bindings": {}}
    )
    assert response.status_code == 200
    body = response.json()
    # default shows Q1; the demo fixture has a=1 on rows p=1 and p=2
    assert body["sql"] == "SELECT p, count(*) FROM T WHERE a = 1 GROUP BY p"
    assert sorted(map(tuple, body["rows"])) == [(1, 1), (2, 1)]


def test_execute_is_idempotent(client):
    spec = _generate(client).json()["spec"]
    tree_id = spec["forest"]["trees"][0]["id"]
    payload = {"version_id": "V1", "tree_id": tree_id, "bindings": {}}
    first = client.post("/execute", json=payload).json()
    second = client.post("/execute", json=payload).json()
    assert first == second


def test_execute_invalid_node_400(client):
    spec = _generate(client).json()["spec"]
    tree_id = spec["forest"]["trees"][0]["id"]
    response = client.post(
        "/execute",
        json={"version_id": "V1", "tree_id": tree_id, "bindings": {"bogus": 1}},
    )
    assert response.status_code == 400


def test_execute_unknown_tree_400(client):
    _generate(client)
    response = client.post(
        "/execute", json={"version_id": "V1", "tree_id": "t99", "bindings": {}}
    )
    assert response.status_code == 400


def test_export_follows_bindings(client):
    """On a small screen splitting overflows, so the optimum is the single
    merged tree with a button list; rebind it to Q2 and export its SQL."""
    response = _generate(client, screen={"w": 360, "h": 400})
    spec = response.json()["spec"]
    tree = spec["forest"]["trees"][0]
    root_id = tree["root"]["id"]
    assert tree["root"]["kind"] == "any"
    client.post(
        "/execute",
        json={"version_id": "V1", "tree_id": tree["id"], "bindings": {root_id: 1}},
    )
    exported = client.post("/export", json={"version_id": "V1"}).json()["sql"]
    assert exported == "SELECT p, count(*) FROM T WHERE b = 2 GROUP BY p"


def test_export_defaults_to_first_query(client):
    _generate(client, screen={"w": 360, "h": 400})
    exported = client.post("/export", json={"version_id": "V1"}).json()["sql"]
    assert exported == RUNNING_EXAMPLE[0]


def test_identical_requests_identical_specs(client):
    a = _generate(client).json()["spec"]
    b = _generate(client).json()["spec"]
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_datasets_endpoint(client):
    body = client.get("/datasets").json()
    assert "demo" in body and "sdss" in body
    assert {c["name"] for c in body["demo"]["T"]} == {"p", "a", "b"}


def test_state_persistence_round_trip(tmp_path):
    state_file = tmp_path / "state.jsonl"
    app = create_app(FIXTURES, state_file=state_file)
    client = TestClient(app)
    spec = _generate(client).json()["spec"]
    tree_id = spec["forest"]["trees"][0]["id"]
    client.post("/execute", json={"version_id": "V1", "tree_id": tree_id, "bindings": {}})

    revived = TestClient(create_app(FIXTURES, state_file=state_file))
    detail = revived.get("/versions/V1")
    assert detail.status_code == 200
    assert detail.json()["query_log_snapshot"] == RUNNING_EXAMPLE
    assert json.dumps(detail.json()["spec"], sort_keys=True) == json.dumps(spec, sort_keys=True)
