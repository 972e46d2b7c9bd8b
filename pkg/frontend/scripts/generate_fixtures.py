"""Record real API exchanges as test fixtures for the console.

Everything here goes through the HTTP surface, so the fixtures are
exactly what a browser would receive: worked-example session exchanges
for both methods, a linear-burn sprint, and the analysis report of the
default simulated cohort.
"""

import json
import sys
from datetime import date, timedelta
from importlib import resources
from pathlib import Path
from tempfile import TemporaryDirectory

from fastapi.testclient import TestClient

from scrumtrainer.service import ServiceConfig, create_app
from scrumtrainer.simulate import DEFAULT_COHORT_SPEC, simulate_cohort
from scrumtrainer.syllabus import default_pack_path
from scrumtrainer.ils import load_instrument

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def record_session(client, coach, style_answers, override):
    dev = client.post(
        "/v1/principals", json={"role": "developer"}, headers={"X-Principal-Id": coach}
    ).json()["id"]
    headers = {"X-Principal-Id": dev}
    client.post("/v1/ils-responses", json={"answers": style_answers}, headers=headers)
    session = client.post(
        "/v1/sessions",
        json={"learner_id": dev, "method_override": override},
        headers={"X-Principal-Id": coach},
    ).json()
    sid = session["session_id"]
    exchanges = []
    trace = []
    while True:
        step = client.get(f"/v1/sessions/{sid}/next-step", headers=headers).json()
        exchanges.append(step)
        if step["done"]:
            break
        trace.append(f"{step['topic_id']}/{step['step_id']}")
        body = {"submission": "console work"} if step["submission_required"] else {}
        client.post(
            f"/v1/sessions/{sid}/steps/{step['step_id']}/complete", json=body, headers=headers
        )
    # a real out-of-order rejection, for the blocked-advance state
    fresh_dev = client.post(
        "/v1/principals", json={"role": "developer"}, headers={"X-Principal-Id": coach}
    ).json()["id"]
    client.post(
        "/v1/ils-responses",
        json={"answers": style_answers},
        headers={"X-Principal-Id": fresh_dev},
    )
    fresh = client.post(
        "/v1/sessions",
        json={"learner_id": fresh_dev, "method_override": override},
        headers={"X-Principal-Id": coach},
    ).json()
    rejection = client.post(
        f"/v1/sessions/{fresh['session_id']}/steps/not-pending/complete",
        json={},
        headers={"X-Principal-Id": fresh_dev},
    )
    return {
        "method": override,
        "exchanges": exchanges,
        "trace": trace,
        "rejection": {"status": rejection.status_code, "body": rejection.json()},
    }


def main():
    with TemporaryDirectory() as tmp:
        config = ServiceConfig(
            pack_path=default_pack_path(),
            instrument_path=Path(
                str(resources.files("scrumtrainer.packs") / "ils_instrument.json")
            ),
            data_dir=Path(tmp) / "data",
        )
        app = create_app(config)
        with TestClient(app) as client:
            coach = client.post("/v1/principals", json={"role": "coach"}).json()["id"]
            headers = {"X-Principal-Id": coach}

            all_a = {str(i): "a" for i in range(1, 45)}
            all_b = {str(i): "b" for i in range(1, 45)}
            sessions = {
                "active": record_session(client, coach, all_a, "active"),
                "passive": record_session(client, coach, all_b, "passive"),
            }

            # linear-burn sprint
            client.post("/v1/teams/team-1/board", headers=headers)
            story = client.post(
                "/v1/teams/team-1/stories",
                json={"role": "user", "feature": "log in", "acceptance_criteria": ["works"]},
                headers=headers,
            ).json()
            client.post(
                f"/v1/teams/team-1/stories/{story['id']}/poker",
                json={"votes": {"a": 5, "b": 5}},
                headers=headers,
            )
            task = client.post(
                f"/v1/teams/team-1/stories/{story['id']}/tasks",
                json={"description": "build", "estimate_hours": 40.0},
                headers=headers,
            ).json()
            sprint = client.post(
                "/v1/teams/team-1/sprints",
                json={"start_date": "2024-03-04", "end_date": "2024-03-09", "capacity_hours": 40.0},
                headers=headers,
            ).json()
            client.post(
                f"/v1/teams/team-1/sprints/{sprint['id']}/commit",
                json={"story_ids": [story["id"]]},
                headers=headers,
            )
            remaining = 40.0
            for i in range(1, 6):
                remaining -= 8.0
                client.post(
                    f"/v1/teams/team-1/tasks/{task['id']}/progress",
                    json={
                        "learner_id": "lena",
                        "hours_spent": 8.0,
                        "remaining_hours": remaining,
                        "on": (date(2024, 3, 4) + timedelta(days=i)).isoformat(),
                    },
                    headers=headers,
                )
            burndown = client.get(
                f"/v1/teams/team-1/sprints/{sprint['id']}/burndown.json", headers=headers
            ).json()
            client.post(
                f"/v1/teams/team-1/tasks/{task['id']}/progress",
                json={"learner_id": "lena", "hours_spent": 0.0, "remaining_hours": 0.0, "on": "2024-03-09"},
                headers=headers,
            )
            metrics = client.get(
                f"/v1/teams/team-1/sprints/{sprint['id']}/metrics", headers=headers
            ).json()

            # analysis of the default simulated cohort, via the API
            graph_fixture = simulate_cohort(
                __import__("scrumtrainer.syllabus", fromlist=["load_content_pack"]).load_content_pack(
                    default_pack_path()
                ),
                load_instrument(config.instrument_path),
                DEFAULT_COHORT_SPEC,
                seed=0,
            )
            report = client.post(
                "/v1/experiment/analyze",
                content=graph_fixture.csv_text,
                headers={**headers, "Content-Type": "text/csv"},
            ).json()

            # the first developer created above (all-a answers, active style)
            profile = client.get("/v1/learners/p-0002/profile", headers=headers).json()

    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "sessions.json").write_text(json.dumps(sessions, indent=2) + "\n")
    (OUT / "burndown.json").write_text(json.dumps(burndown, indent=2) + "\n")
    (OUT / "metrics.json").write_text(json.dumps(metrics, indent=2) + "\n")
    (OUT / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    (OUT / "profile.json").write_text(json.dumps(profile, indent=2) + "\n")
    print(f"fixtures written to {OUT}")
    print("active trace:", len(sessions["active"]["trace"]), "steps")
    print("passive trace:", len(sessions["passive"]["trace"]), "steps")


if __name__ == "__main__":
    sys.exit(main())
