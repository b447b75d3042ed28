import warnings

import pytest

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    from fastapi.testclient import TestClient

from triggerlab.service.app import app


@pytest.fixture(scope="module")
def client():
    with TestClient(app, raise_server_exceptions=False) as c:
        yield c


def scenario(**over):
    base = {
        "model": {"preset": "example1"},
        "trigger": {"kind": "et", "cost": 0.25},
        "sim": {"steps": 20, "seed": 1},
    }
    base.update(over)
    return base


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok"}


def test_simulate_returns_csv(client):
    resp = client.post("/simulate", json=scenario())
    assert resp.status_code == 200
    assert resp.headers["content-type"].startswith("text/csv")
    lines = resp.text.strip().split("\n")
    assert lines[0].startswith("k,x0,y0")
    assert len(lines) == 21


def test_simulate_deterministic(client):
    r1 = client.post("/simulate", json=scenario())
    r2 = client.post("/simulate", json=scenario())
    assert r1.content == r2.content


def test_simulate_config_error_is_422(client):
    body = scenario(trigger={"kind": "pt", "cost": 0.25})
    resp = client.post("/simulate", json=body)
    assert resp.status_code == 422
    payload = resp.json()
    assert payload["code"] == "config"
    assert "M >= 1" in payload["message"]


def test_sweep_row_count(client):
    body = scenario()
    body["triggers"] = ["et", "st"]
    body["cost_grid"] = [0.1, 0.3, 0.6]
    body["sim"]["runs"] = 8
    resp = client.post("/sweep", json=body)
    assert resp.status_code == 200
    lines = resp.text.strip().split("\n")
    assert lines[0] == "trigger,M,C,runs,K,seed,comm_mean,err_mean,err_std"
    assert len(lines) == 7


def test_sweep_unknown_trigger_rejected(client):
    body = scenario()
    body["triggers"] = ["xx"]
    body["cost_grid"] = [0.1]
    body["sim"]["runs"] = 2
    resp = client.post("/sweep", json=body)
    assert resp.status_code == 422
    assert resp.json()["code"] == "config"


def test_period_endpoint(client):
    body = scenario()
    body["cost_grid"] = [0.25, 0.6, 3.0]
    resp = client.post("/period", json=body)
    assert resp.status_code == 200
    lines = resp.text.strip().split("\n")
    assert lines[0] == "C,M"
    assert lines[1].endswith(",3")
    assert lines[2].endswith(",7")
    assert lines[3].endswith(",-1")


def test_validate_endpoint_inconclusive_with_few_samples(client):
    body = scenario()
    body["sim"]["runs"] = 50  # far below the conclusive threshold
    resp = client.post("/validate", json=body)
    assert resp.status_code == 200
    report = resp.json()
    assert report["status"] == "inconclusive"
    names = {c["name"] for c in report["checks"]}
    assert "no_update_error_cov" in names
    assert "event_vs_zero_horizon_predictive" in names


def test_request_shape_validation(client):
    resp = client.post("/simulate", json={"model": {"nx": "not a number"}})
    assert resp.status_code == 422
