"""Snapshots real server payloads into tests/fixtures.

The UI tests run against these files through a fetch stub, so every
number they assert on came from the actual backend.  Rerun after any
payload shape change:

    python tools/capture_fixtures.py
"""

import json
import random
from importlib import resources
from pathlib import Path
from tempfile import TemporaryDirectory

from fastapi.testclient import TestClient
from qualdash.data.synth import generate_synthetic, load_profile
from qualdash.data.table import write_table
from qualdash.server import create_app

HERE = Path(__file__).resolve().parent.parent
OUT = HERE / "tests" / "fixtures"

TIMEFRAME = {"from": "2018-01-01", "to": "2018-12-31"}

# purpose-built audit exercising the UI limits: five quantity tabs
# (the maximum) and a configured event
UIFIX_DICTIONARY = {
    "EventDate": {"type": "temporal", "description": "date of the episode"},
    "Status": {"type": "nominal", "description": "episode outcome"},
    "Score": {"type": "quantitative", "description": "severity score"},
    "WaitDays": {"type": "quantitative", "description": "days waited"},
    "StayDays": {"type": "quantitative", "description": "days admitted"},
    "Reviews": {"type": "quantitative", "description": "review count"},
    "Cost": {"type": "quantitative", "description": "episode cost"},
}

UIFIX_CONFIG = {
    "audit": "uifix",
    "xfield": "EventDate",
    "metrics": [{
        "metric": "Throughput",
        "desc": "Closed episodes per month",
        "yfilters": {"Closed": {"where": {"Status": "closed"}}},
        "yaggregates": {"Closed": "count"},
        "categories": ["Status"],
        "quantities": [
            {"field": "Score", "aggregate": "average"},
            {"field": "WaitDays", "aggregate": "average"},
            {"field": "StayDays", "aggregate": "average"},
            {"field": "Reviews", "aggregate": "sum"},
            {"field": "Cost", "aggregate": "sum"},
        ],
        "event": {"name": "LatestEpisode", "date": "EventDate",
                  "desc": "Most recent recorded episode."},
    }],
}


def uifix_rows():
    rng = random.Random(99)
    rows = []
    for i in range(120):
        day = rng.randrange(365)
        date = f"2018-{day // 31 + 1:02d}-{day % 28 + 1:02d}"
        status = rng.choice(["closed", "closed", "open", "escalated"])
        rows.append(",".join([
            date, status, f"{rng.uniform(0, 20):.1f}",
            str(rng.randrange(30)), str(rng.randrange(1, 40)),
            str(rng.randrange(5)), str(rng.randrange(100, 9000)),
        ]))
    header = "EventDate,Status,Score,WaitDays,StayDays,Reviews,Cost"
    return header + "\n" + "\n".join(rows) + "\n"


def save(name, payload):
    path = OUT / name
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(payload, str):
        path.write_text(payload)
    else:
        path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")
    print(f"wrote {path.relative_to(HERE)}")


def main():
    with TemporaryDirectory() as tmp_str:
        tmp = Path(tmp_str)
        profile = load_profile("picanet")
        write_table(generate_synthetic(seed=5, n=800, profile=profile),
                    str(tmp / "picanet.csv"))
        for name in ("picanet_config.json", "picanet_dictionary.json"):
            (tmp / name).write_text(
                resources.files("qualdash.fixtures").joinpath(name)
                .read_text())
        (tmp / "uifix_config.json").write_text(json.dumps(UIFIX_CONFIG))
        (tmp / "uifix_dictionary.json").write_text(
            json.dumps(UIFIX_DICTIONARY))
        (tmp / "uifix.csv").write_text(uifix_rows())
        cfg = tmp / "server.json"
        cfg.write_text(json.dumps({"audits": [
            {"name": "picanet", "config": "picanet_config.json",
             "dictionary": "picanet_dictionary.json",
             "data": ["picanet.csv"]},
            {"name": "uifix", "config": "uifix_config.json",
             "dictionary": "uifix_dictionary.json", "data": ["uifix.csv"]},
        ], "log_path": str(tmp / "log.ndjson")}))

        client = TestClient(create_app(str(cfg)))
        save("audits.json", client.get("/audits").json())
        save("dashboard.json",
             client.get("/dashboard/picanet", params=TIMEFRAME).json())
        for metric in ("Mortality", "BedAndVentilationDays", "Admissions",
                       "AdmissionSeverity"):
            r = client.get(f"/card/picanet/{metric}",
                           params={"state": "expanded", **TIMEFRAME})
            save(f"expanded_{metric}.json", r.json())
        save("uifix_dashboard.json",
             client.get("/dashboard/uifix", params=TIMEFRAME).json())
        save("uifix_expanded_Throughput.json",
             client.get("/card/uifix/Throughput",
                        params={"state": "expanded", **TIMEFRAME}).json())

        brush = {"bins": ["2018-02-01"], "granularity": "month"}
        save("brush_Mortality_feb.json",
             client.post("/card/picanet/Mortality/brush", json=brush,
                         params=TIMEFRAME).json())
        save("tab_Mortality_quantities_SMR.json",
             client.get("/card/picanet/Mortality/tab",
                        params={"view": "quantities", "field": "SMR",
                                **TIMEFRAME}).json())
        save("tab_Mortality_categories_DischargeStatus.json",
             client.get("/card/picanet/Mortality/tab",
                        params={"view": "categories",
                                "field": "DischargeStatus",
                                **TIMEFRAME}).json())
        r = client.post("/card/picanet/Mortality/export", json=brush,
                        params=TIMEFRAME)
        save("export_Mortality_feb.csv", r.text)
        save("export_Mortality_feb.meta.json",
             {"count": r.headers["X-Selection-Count"],
              "content_type": r.headers["content-type"]})


if __name__ == "__main__":
    main()
