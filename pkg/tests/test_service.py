import json
import random
from datetime import date, timedelta
from importlib import resources
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from scrumtrainer.service import ConfigError, ServiceConfig, create_app
from scrumtrainer.store import DataDirLocked, Store
from scrumtrainer.syllabus import default_pack_path

INSTRUMENT_PATH = Path(str(resources.files("scrumtrainer.packs") / "ils_instrument.json"))


def make_app(tmp_path, **kwargs):
    config = ServiceConfig(
        pack_path=default_pack_path(),
        instrument_path=INSTRUMENT_PATH,
        data_dir=tmp_path / "data",
        **kwargs,
    )
    return create_app(config)


@pytest.fixture()
def client(tmp_path):
    app = make_app(tmp_path)
    with TestClient(app) as c:
        yield c


def bootstrap_coach(client):
    r = client.post("/v1/principals", json={"role": "coach", "display_name": "Coach"})
    assert r.status_code == 201, r.text
    return r.json()["id"]


def add_developer(client, coach):
    r = client.post(
        "/v1/principals",
        json={"role": "developer"},
        headers={"X-Principal-Id": coach},
    )
    assert r.status_code == 201
    return r.json()["id"]


def full_answers(value="a"):
    return {str(i): value for i in range(1, 45)}


class TestHealthAndConfig:
    def test_health(self, client):
        body = client.get("/v1/health").json()
        assert body["status"] == "ok"
        assert body["pack"] == "scrum-default"

    def test_missing_pack_is_config_error(self, tmp_path):
        with pytest.raises(ConfigError):
            create_app(
                ServiceConfig(
                    pack_path=tmp_path / "nope.json",
                    instrument_path=INSTRUMENT_PATH,
                    data_dir=tmp_path / "data",
                )
            )

    def test_data_dir_lock(self, tmp_path, graph, rules, instrument):
        store1 = Store(tmp_path / "d", graph, rules, instrument)
        store1.open()
        store2 = Store(tmp_path / "d", graph, rules, instrument)
        with pytest.raises(DataDirLocked):
            store2.open()
        store1.close()
        store2.open()
        store2.close()


class TestAuth:
    def test_bootstrap_then_coach_only(self, client):
        coach = bootstrap_coach(client)
        # second unauthenticated create is rejected
        r = client.post("/v1/principals", json={"role": "developer"})
        assert r.status_code == 403
        dev = add_developer(client, coach)
        r = client.post(
            "/v1/principals", json={"role": "developer"}, headers={"X-Principal-Id": dev}
        )
        assert r.status_code == 403

    def test_unknown_principal_rejected(self, client):
        bootstrap_coach(client)
        r = client.get("/v1/principals", headers={"X-Principal-Id": "ghost"})
        assert r.status_code == 401

    def test_coach_only_routes_reject_developers(self, client):
        """Property over every coach-only surface."""
        coach = bootstrap_coach(client)
        dev = add_developer(client, coach)
        dev_headers = {"X-Principal-Id": dev}
        coach_only_calls = [
            ("POST", "/v1/principals", {"role": "developer"}),
            ("DELETE", f"/v1/principals/{dev}", None),
            ("POST", "/v1/programmes", {"cohort": [dev]}),
            ("POST", "/v1/programmes/prog-0001/advance", {"event": "profiles_complete"}),
            ("POST", "/v1/programmes/prog-0001/teams", {"team_size": 5, "seed": 1}),
            ("POST", "/v1/programmes/prog-0001/epics", {"drafts": []}),
            ("POST", "/v1/teams/team-x/board", None),
            ("POST", "/v1/teams/team-x/sprints/s/review", {"on": "2024-01-01"}),
            ("POST", "/v1/teams/team-x/tasks/t/reassign", {"learner_id": "x"}),
            ("POST", "/v1/experiment/analyze", None),
            ("POST", "/v1/admin/snapshot", None),
        ]
        for method, path, body in coach_only_calls:
            r = client.request(method, path, json=body, headers=dev_headers)
            assert r.status_code == 403, f"{method} {path} -> {r.status_code}"

    def test_method_override_is_coach_only(self, client):
        coach = bootstrap_coach(client)
        dev = add_developer(client, coach)
        client.post(
            "/v1/ils-responses",
            json={"answers": full_answers()},
            headers={"X-Principal-Id": dev},
        )
        r = client.post(
            "/v1/sessions",
            json={"method_override": "passive"},
            headers={"X-Principal-Id": dev},
        )
        assert r.status_code == 403

    def test_developer_cannot_read_other_profiles(self, client):
        coach = bootstrap_coach(client)
        dev1 = add_developer(client, coach)
        dev2 = add_developer(client, coach)
        client.post(
            "/v1/ils-responses",
            json={"answers": full_answers()},
            headers={"X-Principal-Id": dev1},
        )
        r = client.get(
            f"/v1/learners/{dev1}/profile", headers={"X-Principal-Id": dev2}
        )
        assert r.status_code == 403


class TestLearnerFlow:
    def test_sheet_scoring_and_session(self, client):
        coach = bootstrap_coach(client)
        dev = add_developer(client, coach)
        headers = {"X-Principal-Id": dev}
        r = client.post("/v1/ils-responses", json={"answers": full_answers("a")}, headers=headers)
        assert r.status_code == 201
        body = r.json()
        assert body["scored"] and body["profile"]["processing_style"] == "active"
        assert body["profile"]["dims"]["processing"] == 11

        r = client.post("/v1/sessions", json={}, headers=headers)
        assert r.status_code == 201
        session_id = r.json()["session_id"]
        assert r.json()["method"] == "active"

        r = client.get(f"/v1/sessions/{session_id}/next-step", headers=headers)
        step = r.json()
        assert step["topic_id"] == "us-definition" and step["kind"] == "show_content"

        r = client.post(
            f"/v1/sessions/{session_id}/steps/{step['step_id']}/complete",
            json={},
            headers=headers,
        )
        assert r.status_code == 200
        r = client.get(f"/v1/sessions/{session_id}/progress", headers=headers)
        assert r.json()["steps_completed"] == 1

    def test_incomplete_sheet_stored_not_scored(self, client):
        coach = bootstrap_coach(client)
        dev = add_developer(client, coach)
        headers = {"X-Principal-Id": dev}
        r = client.post(
            "/v1/ils-responses",
            json={"answers": {"1": "a", "2": "b"}},
            headers=headers,
        )
        assert r.status_code == 201
        assert r.json() == {"learner_id": dev, "scored": False, "answered": 2}
        # resume: the stored partial sheet is readable
        r = client.get(f"/v1/learners/{dev}/sheet", headers=headers)
        assert r.json()["answers"] == {"1": "a", "2": "b"}

    def test_out_of_order_completion_maps_to_409(self, client):
        coach = bootstrap_coach(client)
        dev = add_developer(client, coach)
        headers = {"X-Principal-Id": dev}
        client.post("/v1/ils-responses", json={"answers": full_answers()}, headers=headers)
        session_id = client.post("/v1/sessions", json={}, headers=headers).json()["session_id"]
        r = client.post(
            f"/v1/sessions/{session_id}/steps/not-the-next-step/complete",
            json={},
            headers=headers,
        )
        assert r.status_code == 409


def run_capstone_flow(client, coach, team_id="team-1", force=True):
    """Create a board with one committed sprint and some progress."""
    headers = {"X-Principal-Id": coach}
    client.post(f"/v1/teams/{team_id}/board", headers=headers)
    params = {"force": "true"} if force else {}
    story = client.post(
        f"/v1/teams/{team_id}/stories",
        json={
            "role": "user",
            "feature": "log in",
            "acceptance_criteria": ["works"],
        },
        headers=headers,
        params=params,
    ).json()
    client.post(
        f"/v1/teams/{team_id}/stories/{story['id']}/poker",
        json={"votes": {"a": 5, "b": 5}},
        headers=headers,
        params=params,
    )
    task = client.post(
        f"/v1/teams/{team_id}/stories/{story['id']}/tasks",
        json={"description": "build", "estimate_hours": 40.0},
        headers=headers,
        params=params,
    ).json()
    sprint = client.post(
        f"/v1/teams/{team_id}/sprints",
        json={"start_date": "2024-03-04", "end_date": "2024-03-09", "capacity_hours": 40.0},
        headers=headers,
        params=params,
    ).json()
    r = client.post(
        f"/v1/teams/{team_id}/sprints/{sprint['id']}/commit",
        json={"story_ids": [story["id"]]},
        headers=headers,
        params=params,
    )
    assert r.status_code == 200, r.text
    return story, task, sprint


class TestBoardRoutes:
    def test_burndown_endpoints(self, client):
        coach = bootstrap_coach(client)
        headers = {"X-Principal-Id": coach}
        story, task, sprint = run_capstone_flow(client, coach)
        remaining = 40.0
        for i in range(1, 6):
            remaining -= 8.0
            r = client.post(
                f"/v1/teams/team-1/tasks/{task['id']}/progress",
                json={
                    "learner_id": "dev-x",
                    "hours_spent": 8.0,
                    "remaining_hours": remaining,
                    "on": (date(2024, 3, 4) + timedelta(days=i)).isoformat(),
                },
                headers=headers,
                params={"force": "true"},
            )
            assert r.status_code == 200, r.text
        body = client.get(
            f"/v1/teams/team-1/sprints/{sprint['id']}/burndown.json", headers=headers
        ).json()
        assert [p["remaining_hours"] for p in body["points"]] == [40, 32, 24, 16, 8, 0]
        csv_text = client.get(
            f"/v1/teams/team-1/sprints/{sprint['id']}/burndown.csv", headers=headers
        ).text
        assert csv_text.splitlines()[0] == "day,remaining_hours"
        assert csv_text.splitlines()[1] == "2024-03-04,40"

    def test_sprint_event_log_csv(self, client):
        coach = bootstrap_coach(client)
        headers = {"X-Principal-Id": coach}
        story, task, sprint = run_capstone_flow(client, coach)
        client.post(
            f"/v1/teams/team-1/tasks/{task['id']}/progress",
            json={"learner_id": "lena", "hours_spent": 8.0, "remaining_hours": 32.0, "on": "2024-03-05"},
            headers=headers,
            params={"force": "true"},
        )
        text = client.get(
            f"/v1/teams/team-1/sprints/{sprint['id']}/events.csv", headers=headers
        ).text
        lines = text.strip().splitlines()
        assert lines[0] == "on,task_id,learner_id,hours_spent,remaining_hours"
        assert lines[1] == f"2024-03-05,{task['id']},lena,8,32"

    def test_export_gate(self, tmp_path):
        app = make_app(tmp_path, exports_enabled=False)
        with TestClient(app) as client:
            coach = bootstrap_coach(client)
            story, task, sprint = run_capstone_flow(client, coach)
            r = client.get(
                f"/v1/teams/team-1/sprints/{sprint['id']}/burndown.csv",
                headers={"X-Principal-Id": coach},
            )
            assert r.status_code == 403

    def test_review_route(self, client):
        coach = bootstrap_coach(client)
        headers = {"X-Principal-Id": coach}
        story, task, sprint = run_capstone_flow(client, coach)
        client.post(
            f"/v1/teams/team-1/tasks/{task['id']}/progress",
            json={"learner_id": "d", "hours_spent": 40.0, "remaining_hours": 0.0, "on": "2024-03-08"},
            headers=headers,
            params={"force": "true"},
        )
        r = client.post(
            f"/v1/teams/team-1/sprints/{sprint['id']}/review",
            json={"coach_feedback": "solid", "delivered_story_ids": [story["id"]], "on": "2024-03-09"},
            headers=headers,
        )
        assert r.status_code == 201
        assert r.json()["metrics_snapshot"]["velocity_points"] == 5.0
        metrics = client.get(
            f"/v1/teams/team-1/sprints/{sprint['id']}/metrics", headers=headers
        ).json()
        assert metrics["estimation_accuracy"] == 1.0


class TestPhaseGating:
    def test_learner_blocked_outside_sprint_phase(self, client):
        coach = bootstrap_coach(client)
        dev = add_developer(client, coach)
        coach_headers = {"X-Principal-Id": coach}
        programme = client.post(
            "/v1/programmes", json={"cohort": [dev] + [f"x{i}" for i in range(9)]},
            headers=coach_headers,
        ).json()
        client.post(
            f"/v1/programmes/{programme['id']}/teams",
            json={"team_size": 5, "seed": 1},
            headers=coach_headers,
        )
        team_id = client.get(
            f"/v1/programmes/{programme['id']}", headers=coach_headers
        ).json()["teams"][0]["team_id"]
        r = client.post(
            f"/v1/teams/{team_id}/stories",
            json={"role": "u", "feature": "f", "acceptance_criteria": ["c"]},
            headers={"X-Principal-Id": dev},
        )
        assert r.status_code == 409  # programme still profiling

        # coach can force through the gate, the override is audited
        r = client.post(
            f"/v1/teams/{team_id}/stories",
            json={"role": "u", "feature": "f", "acceptance_criteria": ["c"]},
            headers=coach_headers,
            params={"force": "true"},
        )
        assert r.status_code == 201
        audit = client.get(
            f"/v1/programmes/{programme['id']}", headers=coach_headers
        ).json()["audit"]
        assert any(entry["event"] == "phase_gate_override" for entry in audit)

        # advancing to sprint_running unblocks developers
        for event in ("profiles_complete", "instruction_complete"):
            client.post(
                f"/v1/programmes/{programme['id']}/advance",
                json={"event": event},
                headers=coach_headers,
            )
        r = client.post(
            f"/v1/teams/{team_id}/stories",
            json={"role": "u", "feature": "g", "acceptance_criteria": ["c"]},
            headers={"X-Principal-Id": dev},
        )
        assert r.status_code == 201

    def test_illegal_programme_event_409(self, client):
        coach = bootstrap_coach(client)
        headers = {"X-Principal-Id": coach}
        programme = client.post(
            "/v1/programmes", json={"cohort": ["a", "b"]}, headers=headers
        ).json()
        r = client.post(
            f"/v1/programmes/{programme['id']}/advance",
            json={"event": "sprint_ended"},
            headers=headers,
        )
        assert r.status_code == 409


class TestExperimentRoute:
    def test_analyze_csv(self, client):
        coach = bootstrap_coach(client)
        rows = ["learner_id,style,method,pre,post"]
        rng = random.Random(5)
        for i in range(8):
            rows.append(f"c{i},active,passive,40,{40 + rng.uniform(10, 40):.2f}")
            rows.append(f"e{i},active,active,40,{40 + rng.uniform(20, 35):.2f}")
        r = client.post(
            "/v1/experiment/analyze",
            content="\n".join(rows) + "\n",
            headers={"X-Principal-Id": coach, "Content-Type": "text/csv"},
        )
        assert r.status_code == 200, r.text
        body = r.json()
        assert set(body["groups"]) == {"control", "experimental"}
        assert body["mean_test"]["variant"] in ("pooled", "welch")


class TestPersistence:
    def test_restart_resumes_sessions(self, tmp_path):
        app = make_app(tmp_path)
        with TestClient(app) as client:
            coach = bootstrap_coach(client)
            dev = add_developer(client, coach)
            headers = {"X-Principal-Id": dev}
            client.post("/v1/ils-responses", json={"answers": full_answers()}, headers=headers)
            session_id = client.post("/v1/sessions", json={}, headers=headers).json()["session_id"]
            step = client.get(f"/v1/sessions/{session_id}/next-step", headers=headers).json()
            client.post(
                f"/v1/sessions/{session_id}/steps/{step['step_id']}/complete",
                json={},
                headers=headers,
            )
            expected_next = client.get(
                f"/v1/sessions/{session_id}/next-step", headers=headers
            ).json()

        app2 = make_app(tmp_path)
        with TestClient(app2) as client2:
            got = client2.get(
                f"/v1/sessions/{session_id}/next-step", headers={"X-Principal-Id": dev}
            ).json()
            assert got == expected_next

    def test_snapshot_plus_log_replay(self, tmp_path):
        app = make_app(tmp_path)
        with TestClient(app) as client:
            coach = bootstrap_coach(client)
            run_capstone_flow(client, coach)
            client.post("/v1/admin/snapshot", headers={"X-Principal-Id": coach})
            # one more mutation after the snapshot: must come from log replay
            client.post(
                "/v1/principals", json={"role": "developer"}, headers={"X-Principal-Id": coach}
            )
            before = client.get("/v1/principals", headers={"X-Principal-Id": coach}).json()

        app2 = make_app(tmp_path)
        with TestClient(app2) as client2:
            after = client2.get("/v1/principals", headers={"X-Principal-Id": coach}).json()
            assert after == before
