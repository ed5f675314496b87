"""HTTP API surface, one audit end to end."""

import json

import pytest
from fastapi.testclient import TestClient

from qualdash.server import ServerConfigError, create_app

MSS = {
    "audit": "picu",
    "xfield": "AdmitDate",
    "metrics": [
        {
            "metric": "Mortality",
            "ylabel": "Patients",
            "yfilters": {
                "AliveDischarges": {
                    "where": {"DischargeStatus": "alive"},
                    "valid": {"DischargeStatus": ["alive", "deceased"]},
                },
                "DeathsInUnit": {
                    "where": {"DischargeStatus": "deceased"},
                    "valid": {"DischargeStatus": ["alive", "deceased"]},
                },
            },
            "yaggregates": {"AliveDischarges": "count",
                            "DeathsInUnit": "count"},
            "categories": ["PrimReason"],
            "quantities": [{"field": "PIMScore", "aggregate": "average"}],
        },
    ],
}

DICT = {
    "AdmitDate": {"type": "temporal", "description": "admission date"},
    "DischargeDate": {"type": "temporal", "description": "discharge date"},
    "DischargeStatus": {"type": "nominal", "description": "alive or deceased"},
    "PrimReason": {"type": "nominal", "description": "admission reason"},
    "PIMScore": {"type": "quantitative", "description": "risk score"},
}

CSV = """AdmitDate,DischargeDate,DischargeStatus,PrimReason,PIMScore
2019-01-05,,alive,surgery,2.0
2019-01-20,,deceased,bronchiolitis,9.0
2019-02-02,,alive,surgery,1.0
2019-02-14,,alive,other,3.0
2019-02-28,,deceased,surgery,7.0
2019-03-01,,,surgery,
"""

Q1 = {"from": "2019-01-01", "to": "2019-03-31"}


@pytest.fixture()
def site(tmp_path):
    (tmp_path / "mss.json").write_text(json.dumps(MSS))
    (tmp_path / "dict.json").write_text(json.dumps(DICT))
    (tmp_path / "data.csv").write_text(CSV)
    cfg = tmp_path / "server.json"
    cfg.write_text(json.dumps({
        "audits": [{"name": "picu", "config": "mss.json",
                    "dictionary": "dict.json", "data": ["data.csv"]}],
        "log_path": "usage.ndjson",
    }))
    return tmp_path


@pytest.fixture()
def client(site):
    app = create_app(str(site / "server.json"))
    with TestClient(app) as c:
        yield c


def test_audits_listing(client):
    doc = client.get("/audits").json()
    assert doc == {"audits": [{"name": "picu", "metrics": ["Mortality"],
                               "years": [2019], "xfield": "AdmitDate"}]}


def test_dashboard_defaults_to_latest_year(client):
    doc = client.get("/dashboard/picu").json()
    assert doc["from"] == "2019-01-01"
    assert doc["to"] == "2019-12-31"
    assert len(doc["cards"]) == 1


def test_dashboard_entry_cards(client):
    doc = client.get("/dashboard/picu", params=Q1).json()
    card = doc["cards"][0]
    assert card["state"] == "entry"
    assert "tabs" not in card
    series = card["main"]["series"]
    assert [s["values"] for s in series] == [[1, 2, 0], [1, 1, 0]]
    assert doc["dictionary"] == {
        "DischargeStatus": {"type": "nominal",
                            "description": "alive or deceased"}}


def test_expanded_card(client):
    doc = client.get("/card/picu/Mortality",
                     params={"state": "expanded", **Q1}).json()
    cats = doc["tabs"]["categories"]
    assert cats[0]["field"] == "PrimReason"
    counts = {e["value"]: e["count"]
              for e in cats[0]["distribution"]["entries"]}
    assert counts == {"surgery": 3, "bronchiolitis": 1, "other": 1}
    assert doc["tabs"]["times"]["tspan"] == 3


def test_not_found_and_bad_state(client):
    assert client.get("/card/nhs/Mortality").status_code == 404
    assert client.get("/card/picu/Readmission").status_code == 404
    r = client.get("/card/picu/Mortality", params={"state": "wide"})
    assert r.status_code == 400


def test_inverted_timeframe_rejected(client):
    r = client.get("/dashboard/picu",
                   params={"from": "2019-06-01", "to": "2019-01-01"})
    assert r.status_code == 400
    r = client.get("/dashboard/picu", params={"from": "not-a-date"})
    assert r.status_code == 400


def test_category_tab_endpoint(client):
    doc = client.get("/card/picu/Mortality/tab",
                     params={"view": "categories", "field": "PrimReason",
                             **Q1}).json()
    assert doc["distribution"]["total"] == 5
    r = client.get("/card/picu/Mortality/tab",
                   params={"view": "categories", "field": "PIMScore", **Q1})
    assert r.status_code == 400
    r = client.get("/card/picu/Mortality/tab",
                   params={"view": "categories", "field": "Nope", **Q1})
    assert r.status_code == 400


def test_quantity_tab_endpoint(client):
    doc = client.get("/card/picu/Mortality/tab",
                     params={"view": "quantities", "field": "PIMScore",
                             "aggregate": "average", **Q1}).json()
    assert doc["series"]["values"][0] == pytest.approx(5.5)
    r = client.get("/card/picu/Mortality/tab",
                   params={"view": "quantities", "field": "DischargeStatus",
                           **Q1})
    assert r.status_code == 400


def test_times_tab_endpoint(client):
    doc = client.get("/card/picu/Mortality/tab",
                     params={"view": "times", "granularity": "quarter",
                             **Q1}).json()
    assert doc["granularity"] == "quarter"
    assert len(doc["measures"]["DeathsInUnit"]) == 3
    r = client.get("/card/picu/Mortality/tab",
                   params={"view": "sideways", **Q1})
    assert r.status_code == 400


def test_brush_roundtrip(client):
    body = {"bins": ["2019-02-01"], "granularity": "month"}
    doc = client.post("/card/picu/Mortality/brush", params=Q1,
                      json=body).json()
    assert doc["cohort_size"] == 3
    assert doc["highlight"] == [False, True, False]
    assert doc["selection_info"]["DeathsInUnit"] == \
        {"selected": 1, "total": 2}
    assert "record_ids" not in doc


def test_brush_rejects_bad_input(client):
    r = client.post("/card/picu/Mortality/brush", params=Q1,
                    json={"bins": [99]})
    assert r.status_code == 400
    r = client.post("/card/picu/Mortality/brush", params=Q1,
                    json={"category": {"field": "NotAField", "value": "x"}})
    assert r.status_code == 400


def test_export_csv(client):
    body = {"bins": ["2019-01-01", "2019-02-01"], "granularity": "month",
            "category": {"field": "DischargeStatus", "value": "deceased"}}
    r = client.post("/card/picu/Mortality/export", params=Q1, json=body)
    assert r.status_code == 200
    assert r.headers["content-type"].startswith("text/csv")
    assert r.headers["x-selection-count"] == "2"
    lines = r.text.splitlines()
    assert lines[0].startswith("record_id,AdmitDate")
    assert len(lines) == 3


def test_export_empty_selection(client):
    r = client.post("/card/picu/Mortality/export", params=Q1, json={})
    assert r.status_code == 400


def test_log_endpoint(client, site):
    entry = {"session": "s-1", "action": "expand", "metric": "Mortality",
             "detail": {"state": "expanded"}}
    r = client.post("/logs", json=entry)
    assert r.status_code == 204
    bad = {"session": "s-1", "action": "expand",
           "detail": {"record_ids": [1]}}
    assert client.post("/logs", json=bad).status_code == 400
    lines = (site / "usage.ndjson").read_text().splitlines()
    assert len(lines) == 1
    assert json.loads(lines[0])["action"] == "expand"


def test_reload_failure_keeps_serving(client, site):
    before = client.get("/dashboard/picu", params=Q1).json()
    good = (site / "mss.json").read_text()
    (site / "mss.json").write_text("{broken")
    report = client.post("/admin/reload").json()
    assert report["ok"] is False
    after = client.get("/dashboard/picu", params=Q1).json()
    assert after == before
    (site / "mss.json").write_text(good)
    assert client.post("/admin/reload").json()["ok"] is True


def test_broken_config_fails_startup(site):
    (site / "dict.json").write_text("[]")
    with pytest.raises(ServerConfigError):
        create_app(str(site / "server.json"))
