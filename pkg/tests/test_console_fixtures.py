"""Keeps the console's recorded API fixtures honest: the traces the
frontend tests replay must match what the live service produces today.
Regenerate with `python frontend/scripts/generate_fixtures.py` after
content-pack changes."""

import json
from importlib import resources
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from scrumtrainer.service import ServiceConfig, create_app
from scrumtrainer.syllabus import default_pack_path

FIXTURES = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures"

pytestmark = pytest.mark.skipif(
    not FIXTURES.exists(), reason="console fixtures not generated"
)


@pytest.fixture()
def client(tmp_path):
    config = ServiceConfig(
        pack_path=default_pack_path(),
        instrument_path=Path(
            str(resources.files("scrumtrainer.packs") / "ils_instrument.json")
        ),
        data_dir=tmp_path / "data",
    )
    with TestClient(create_app(config)) as c:
        yield c


def drive_session(client, coach, answers, override):
    dev = client.post(
        "/v1/principals", json={"role": "developer"}, headers={"X-Principal-Id": coach}
    ).json()["id"]
    headers = {"X-Principal-Id": dev}
    client.post("/v1/ils-responses", json={"answers": answers}, headers=headers)
    sid = client.post(
        "/v1/sessions",
        json={"learner_id": dev, "method_override": override},
        headers={"X-Principal-Id": coach},
    ).json()["session_id"]
    trace = []
    while True:
        step = client.get(f"/v1/sessions/{sid}/next-step", headers=headers).json()
        if step["done"]:
            return trace
        trace.append(f"{step['topic_id']}/{step['step_id']}")
        body = {"submission": "console work"} if step["submission_required"] else {}
        client.post(
            f"/v1/sessions/{sid}/steps/{step['step_id']}/complete",
            json=body,
            headers=headers,
        )


def test_recorded_traces_match_live_service(client):
    recorded = json.loads((FIXTURES / "sessions.json").read_text())
    coach = client.post("/v1/principals", json={"role": "coach"}).json()["id"]
    all_a = {str(i): "a" for i in range(1, 45)}
    all_b = {str(i): "b" for i in range(1, 45)}
    assert drive_session(client, coach, all_a, "active") == recorded["active"]["trace"]
    assert drive_session(client, coach, all_b, "passive") == recorded["passive"]["trace"]


def test_recorded_burndown_matches_live_values(client):
    recorded = json.loads((FIXTURES / "burndown.json").read_text())
    assert [p["remaining_hours"] for p in recorded["points"]] == [40, 32, 24, 16, 8, 0]
