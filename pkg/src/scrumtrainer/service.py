"""HTTP+JSON service exposing the training engine under /v1.

Principals authenticate with the X-Principal-Id header; coach-only
routes reject developer principals. All mutations flow through the
event-log store, so a restart resumes every session and board exactly
where it stopped. When no principals exist yet, principal creation is
open so a first coach can bootstrap the installation.
"""

from __future__ import annotations

from contextlib import asynccontextmanager
from dataclasses import dataclass
from pathlib import Path

from fastapi import Depends, FastAPI, Header, HTTPException, Query, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from . import __version__
from .adaptation import (
    LearnerSession,
    MissingSubmission,
    NoApplicableRule,
    OutOfOrderCompletion,
    compile_rules,
    next_step,
    progress_report,
)
from .assessment import (
    Group,
    GroupMissing,
    analyze_experiment,
    read_gain_records,
    report_to_dict,
)
from .board import Board, BoardError, UnknownEntity
from .ils import (
    ILSInstrument,
    IncompleteSheet,
    UnknownItem,
    load_instrument,
    validate_instrument,
)
from .store import (
    FindingsRejected,
    Principal,
    Role,
    Store,
    _board_to_dict,
    _programme_to_dict,
    _session_to_dict,
)
from .syllabus import TopicGraph, load_content_pack
from .workflow import (
    CohortTooSmall,
    IllegalState,
    IllegalTransition,
    ProgrammeEvent,
    ProgrammeState,
)

__all__ = ["ServiceConfig", "ConfigError", "create_app"]


class ConfigError(ValueError):
    pass


@dataclass
class ServiceConfig:
    pack_path: Path
    instrument_path: Path
    data_dir: Path
    default_seed: int = 0  # used when requests omit a seed
    exports_enabled: bool = True  # sensitive-data gate for CSV exports
    static_dir: Path | None = None  # built web console, if any


def _default_instrument_path() -> Path:
    from importlib import resources

    return Path(str(resources.files("scrumtrainer.packs") / "ils_instrument.json"))


def create_app(config: ServiceConfig) -> FastAPI:
    pack_path = Path(config.pack_path)
    if not pack_path.exists():
        raise ConfigError(f"content pack not found: {pack_path}")
    instrument_path = Path(config.instrument_path)
    if not instrument_path.exists():
        raise ConfigError(f"instrument file not found: {instrument_path}")

    graph: TopicGraph = load_content_pack(pack_path)
    instrument: ILSInstrument = load_instrument(instrument_path)
    findings = validate_instrument(instrument)
    if findings:
        raise ConfigError(f"invalid instrument: {findings}")
    rules = compile_rules(graph)

    store = Store(config.data_dir, graph, rules, instrument)
    store.open()

    @asynccontextmanager
    async def _lifespan(app: FastAPI):
        yield
        store.close()

    app = FastAPI(title="scrumtrainer", version=__version__, lifespan=_lifespan)
    app.state.store = store

    # --- error mapping ----------------------------------------------------

    @app.exception_handler(FindingsRejected)
    async def _findings(request: Request, exc: FindingsRejected):
        return JSONResponse(status_code=422, content={"findings": exc.findings})

    error_codes = [
        (IncompleteSheet, 422),
        (UnknownItem, 422),
        (OutOfOrderCompletion, 409),
        (MissingSubmission, 422),
        (NoApplicableRule, 500),
        (IllegalTransition, 409),
        (IllegalState, 409),
        (CohortTooSmall, 422),
        (BoardError, 409),
        (GroupMissing, 422),
        (UnknownEntity, 404),
        (KeyError, 404),
        (ValueError, 422),
    ]

    def _register(exc_type, code):
        @app.exception_handler(exc_type)
        async def _handler(request: Request, exc, _code=code):
            detail = str(exc).strip("'\"")
            return JSONResponse(status_code=_code, content={"detail": detail})

    for exc_type, code in error_codes:
        _register(exc_type, code)

    # --- auth ---------------------------------------------------------------

    def principal_of(
        x_principal_id: str | None = Header(default=None),
    ) -> Principal:
        if not x_principal_id:
            raise HTTPException(401, "X-Principal-Id header required")
        principal = store.state.principals.get(x_principal_id)
        if principal is None:
            raise HTTPException(401, f"unknown principal {x_principal_id}")
        return principal

    def coach_only(principal: Principal = Depends(principal_of)) -> Principal:
        if principal.role != Role.COACH:
            raise HTTPException(403, "coach role required")
        return principal

    # --- health and pack ----------------------------------------------------

    @app.get("/v1/health")
    def health():
        return {
            "status": "ok",
            "version": __version__,
            "pack": graph.name,
            "topics": len(graph.topics),
        }

    @app.get("/v1/pack")
    def pack_info():
        return {
            "name": graph.name,
            "default_topic_order": list(graph.default_topic_order),
            "topics": {
                t.id: {
                    "title": t.title,
                    "adaptive": t.adaptive,
                    "prerequisites": sorted(t.prerequisites),
                }
                for t in graph.topics.values()
            },
        }

    @app.get("/v1/instrument")
    def instrument_view():
        # item texts plus ids only; the scoring key stays server-side
        return {
            "items": [{"id": it.id, "text": it.text} for it in instrument.items]
        }

    # --- principals -----------------------------------------------------------

    def _principal_dict(p: Principal) -> dict:
        return {"id": p.id, "role": p.role, "display_name": p.display_name}

    @app.post("/v1/principals", status_code=201)
    def create_principal(
        body: dict, x_principal_id: str | None = Header(default=None)
    ):
        if store.state.principals:
            caller = store.state.principals.get(x_principal_id or "")
            if caller is None or caller.role != Role.COACH:
                raise HTTPException(403, "coach role required to create principals")
        created = store.record(
            "principal_created",
            {
                "role": body.get("role", Role.DEVELOPER),
                "display_name": body.get("display_name", ""),
            },
            actor=x_principal_id or "",
        )
        return _principal_dict(created)

    @app.get("/v1/principals")
    def list_principals(principal: Principal = Depends(principal_of)):
        return [_principal_dict(p) for p in store.state.principals.values()]

    @app.get("/v1/principals/{pid}")
    def get_principal(pid: str, principal: Principal = Depends(principal_of)):
        if pid not in store.state.principals:
            raise HTTPException(404, f"no principal {pid}")
        return _principal_dict(store.state.principals[pid])

    @app.delete("/v1/principals/{pid}")
    def delete_principal(pid: str, principal: Principal = Depends(coach_only)):
        store.record("principal_deleted", {"id": pid}, actor=principal.id)
        return {"deleted": pid}

    # --- learner model ----------------------------------------------------------

    @app.post("/v1/ils-responses", status_code=201)
    def submit_sheet(body: dict, principal: Principal = Depends(principal_of)):
        learner_id = body.get("learner_id") or principal.id
        if principal.role != Role.COACH and learner_id != principal.id:
            raise HTTPException(403, "developers may only submit their own responses")
        answers = body.get("answers") or {}
        result = store.record(
            "sheet_submitted",
            {"learner_id": learner_id, "answers": {str(k): v for k, v in answers.items()}},
            actor=principal.id,
        )
        if learner_id in store.state.profiles:
            return {"learner_id": learner_id, "scored": True, "profile": _profile_dict(store.state.profiles[learner_id])}
        return {"learner_id": learner_id, "scored": False, "answered": len(answers)}

    def _profile_dict(profile) -> dict:
        return {
            "learner_id": profile.learner_id,
            "dims": {
                "perception": profile.dims[0],
                "understanding": profile.dims[1],
                "processing": profile.dims[2],
                "input": profile.dims[3],
            },
            "processing_style": profile.processing_style.value,
            "scored_at": profile.scored_at,
        }

    @app.get("/v1/learners/{learner_id}/profile")
    def get_profile(learner_id: str, principal: Principal = Depends(principal_of)):
        if principal.role != Role.COACH and learner_id != principal.id:
            raise HTTPException(403, "developers may only read their own profile")
        profile = store.state.profiles.get(learner_id)
        if profile is None:
            raise HTTPException(404, f"no scored profile for {learner_id}")
        return _profile_dict(profile)

    @app.get("/v1/learners/{learner_id}/sheet")
    def get_sheet(learner_id: str, principal: Principal = Depends(principal_of)):
        if principal.role != Role.COACH and learner_id != principal.id:
            raise HTTPException(403, "developers may only read their own responses")
        sheet = store.state.sheets.get(learner_id)
        if sheet is None:
            raise HTTPException(404, f"no response sheet for {learner_id}")
        return {
            "learner_id": learner_id,
            "answers": {str(k): v for k, v in sorted(sheet.answers.items())},
        }

    # --- sessions ------------------------------------------------------------

    @app.post("/v1/sessions", status_code=201)
    def create_session(body: dict, principal: Principal = Depends(principal_of)):
        learner_id = body.get("learner_id") or principal.id
        override = body.get("method_override")
        if override is not None and principal.role != Role.COACH:
            raise HTTPException(403, "method override is coach-only")
        if principal.role != Role.COACH and learner_id != principal.id:
            raise HTTPException(403, "developers may only start their own sessions")
        session = store.record(
            "session_created",
            {
                "learner_id": learner_id,
                "method_override": override,
                "topic_scope": body.get("topic_scope"),
            },
            actor=principal.id,
        )
        return _session_to_dict(session)

    def _session_or_404(session_id: str) -> LearnerSession:
        session = store.state.sessions.get(session_id)
        if session is None:
            raise HTTPException(404, f"no session {session_id}")
        return session

    def _owned_session(session_id: str, principal: Principal) -> LearnerSession:
        session = _session_or_404(session_id)
        if principal.role != Role.COACH and session.learner_id != principal.id:
            raise HTTPException(403, "not your session")
        return session

    @app.get("/v1/sessions/{session_id}")
    def get_session(session_id: str, principal: Principal = Depends(principal_of)):
        return _session_to_dict(_owned_session(session_id, principal))

    @app.get("/v1/sessions/{session_id}/next-step")
    def get_next_step(session_id: str, principal: Principal = Depends(principal_of)):
        session = _owned_session(session_id, principal)
        directive = next_step(session, rules, graph)
        if directive is None:
            return {"done": True, "phase": session.phase}
        return {
            "done": False,
            "kind": directive.kind.value,
            "topic_id": directive.topic_id,
            "step_id": directive.step_id,
            "payload": directive.payload,
            "submission_required": directive.submission_required,
        }

    @app.post("/v1/sessions/{session_id}/steps/{step_id}/complete")
    def complete(
        session_id: str,
        step_id: str,
        body: dict | None = None,
        principal: Principal = Depends(principal_of),
    ):
        _owned_session(session_id, principal)
        body = body or {}
        store.record(
            "step_completed",
            {
                "session_id": session_id,
                "step_id": step_id,
                "submission": body.get("submission"),
                "participants": body.get("participants", []),
            },
            actor=principal.id,
        )
        return _session_to_dict(store.state.sessions[session_id])

    @app.get("/v1/sessions/{session_id}/progress")
    def session_progress(session_id: str, principal: Principal = Depends(principal_of)):
        session = _owned_session(session_id, principal)
        report = progress_report(session, graph)
        return {
            "topics_completed": report.topics_completed,
            "steps_completed": report.steps_completed,
            "percent": report.percent,
        }

    # --- boards -----------------------------------------------------------------

    def _board_or_404(team_id: str) -> Board:
        board = store.state.boards.get(team_id)
        if board is None:
            raise HTTPException(404, f"no board for team {team_id}")
        return board

    def _programme_of_team(team_id: str):
        for programme in store.state.programmes.values():
            if any(t.team_id == team_id for t in programme.teams):
                return programme
        return None

    def _gate_capstone(team_id: str, principal: Principal, force: bool) -> None:
        """Developers may mutate a programme team's board only while its
        sprint phase runs; coaches can override with force (audited)."""
        programme = _programme_of_team(team_id)
        if programme is None or programme.state is ProgrammeState.SPRINT_RUNNING:
            return
        if principal.role == Role.COACH and force:
            programme.audit.append(
                {
                    "at": "",
                    "event": "phase_gate_override",
                    "from": programme.state.value,
                    "to": programme.state.value,
                    "by": principal.id,
                }
            )
            return
        raise HTTPException(
            409,
            f"board mutations are blocked while programme {programme.id} "
            f"is in {programme.state.value}",
        )

    @app.post("/v1/teams/{team_id}/board", status_code=201)
    def create_board(team_id: str, principal: Principal = Depends(coach_only)):
        board = store.record("board_created", {"team_id": team_id}, actor=principal.id)
        return _board_to_dict(board)

    @app.get("/v1/teams/{team_id}/board")
    def get_board(team_id: str, principal: Principal = Depends(principal_of)):
        return _board_to_dict(_board_or_404(team_id))

    @app.post("/v1/teams/{team_id}/stories", status_code=201)
    def create_story(
        team_id: str,
        body: dict,
        force: bool = Query(default=False),
        principal: Principal = Depends(principal_of),
    ):
        _board_or_404(team_id)
        _gate_capstone(team_id, principal, force)
        story = store.record(
            "story_created",
            {
                "team_id": team_id,
                "role": body.get("role", ""),
                "feature": body.get("feature", ""),
                "benefit": body.get("benefit", ""),
                "acceptance_criteria": body.get("acceptance_criteria", []),
                "is_epic": body.get("is_epic", False),
                "parent_epic": body.get("parent_epic"),
            },
            actor=principal.id,
        )
        return _board_to_dict(store.state.boards[team_id])["stories"][-1] if story is None else {
            "id": story.id,
            "status": story.status.value,
            "is_epic": story.is_epic,
        }

    @app.post("/v1/teams/{team_id}/stories/{story_id}/split")
    def split_story(
        team_id: str,
        story_id: str,
        body: dict,
        force: bool = Query(default=False),
        principal: Principal = Depends(principal_of),
    ):
        _board_or_404(team_id)
        _gate_capstone(team_id, principal, force)
        parts = store.record(
            "story_split",
            {"team_id": team_id, "story_id": story_id, "parts": body.get("parts", [])},
            actor=principal.id,
        )
        return {"parts": [p.id for p in parts]}

    @app.post("/v1/teams/{team_id}/stories/{story_id}/poker")
    def poker(
        team_id: str,
        story_id: str,
        body: dict,
        force: bool = Query(default=False),
        principal: Principal = Depends(principal_of),
    ):
        _board_or_404(team_id)
        _gate_capstone(team_id, principal, force)
        poker_round = store.record(
            "poker_played",
            {
                "team_id": team_id,
                "story_id": story_id,
                "votes": body.get("votes", {}),
                "deck": body.get("deck"),
            },
            actor=principal.id,
        )
        return {
            "story_id": poker_round.story_id,
            "round_number": poker_round.round_number,
            "outcome": poker_round.outcome.value,
            "value": poker_round.value,
            "votes": poker_round.votes,
        }

    @app.post("/v1/teams/{team_id}/stories/{story_id}/tasks", status_code=201)
    def add_task(
        team_id: str,
        story_id: str,
        body: dict,
        force: bool = Query(default=False),
        principal: Principal = Depends(principal_of),
    ):
        _board_or_404(team_id)
        _gate_capstone(team_id, principal, force)
        task = store.record(
            "task_added",
            {
                "team_id": team_id,
                "story_id": story_id,
                "description": body.get("description", ""),
                "estimate_hours": body.get("estimate_hours", 0),
                "on": body.get("on"),
            },
            actor=principal.id,
        )
        return {"id": task.id, "estimate_hours": task.estimate_hours}

    @app.post("/v1/teams/{team_id}/tasks/{task_id}/progress")
    def task_progress(
        team_id: str,
        task_id: str,
        body: dict,
        force: bool = Query(default=False),
        principal: Principal = Depends(principal_of),
    ):
        _board_or_404(team_id)
        _gate_capstone(team_id, principal, force)
        task = store.record(
            "task_progress",
            {
                "team_id": team_id,
                "task_id": task_id,
                "learner_id": body.get("learner_id") or principal.id,
                "hours_spent": body.get("hours_spent", 0),
                "remaining_hours": body.get("remaining_hours", 0),
                "on": body["on"],
            },
            actor=principal.id,
        )
        return {
            "id": task.id,
            "assignee": task.assignee,
            "remaining_hours": task.remaining_hours,
            "status": task.status.value,
            "hours_logged": task.hours_logged,
        }

    @app.post("/v1/teams/{team_id}/tasks/{task_id}/reassign")
    def reassign(
        team_id: str,
        task_id: str,
        body: dict,
        principal: Principal = Depends(coach_only),
    ):
        task = store.record(
            "task_reassigned",
            {
                "team_id": team_id,
                "task_id": task_id,
                "learner_id": body["learner_id"],
                "by": principal.id,
            },
            actor=principal.id,
        )
        return {"id": task.id, "assignee": task.assignee}

    @app.post("/v1/teams/{team_id}/sprints", status_code=201)
    def create_sprint(
        team_id: str,
        body: dict,
        force: bool = Query(default=False),
        principal: Principal = Depends(principal_of),
    ):
        _board_or_404(team_id)
        _gate_capstone(team_id, principal, force)
        sprint = store.record(
            "sprint_created",
            {
                "team_id": team_id,
                "start_date": body["start_date"],
                "end_date": body["end_date"],
                "capacity_hours": body["capacity_hours"],
            },
            actor=principal.id,
        )
        return {"id": sprint.id, "start_date": body["start_date"], "end_date": body["end_date"]}

    @app.post("/v1/teams/{team_id}/sprints/{sprint_id}/commit")
    def commit_sprint(
        team_id: str,
        sprint_id: str,
        body: dict,
        force: bool = Query(default=False),
        principal: Principal = Depends(principal_of),
    ):
        _board_or_404(team_id)
        _gate_capstone(team_id, principal, force)
        sprint = store.record(
            "sprint_committed",
            {"team_id": team_id, "sprint_id": sprint_id, "story_ids": body.get("story_ids", [])},
            actor=principal.id,
        )
        return {
            "id": sprint.id,
            "committed": sprint.committed,
            "committed_hours": sprint.committed_hours,
            "committed_stories": sprint.committed_stories,
        }

    @app.get("/v1/teams/{team_id}/sprints/{sprint_id}/burndown.json")
    def burndown_json(
        team_id: str,
        sprint_id: str,
        as_of: str | None = Query(default=None),
        principal: Principal = Depends(principal_of),
    ):
        from datetime import date as _date

        board = _board_or_404(team_id)
        series = board.burndown(sprint_id, _date.fromisoformat(as_of) if as_of else None)
        return {
            "sprint_id": series.sprint_id,
            "points": [
                {"day": p.day.isoformat(), "remaining_hours": p.remaining_hours}
                for p in series.points
            ],
        }

    @app.get("/v1/teams/{team_id}/sprints/{sprint_id}/burndown.csv")
    def burndown_csv(
        team_id: str,
        sprint_id: str,
        as_of: str | None = Query(default=None),
        principal: Principal = Depends(principal_of),
    ):
        from datetime import date as _date

        if not config.exports_enabled:
            raise HTTPException(403, "exports are disabled by configuration")
        board = _board_or_404(team_id)
        text = board.burndown_csv(sprint_id, _date.fromisoformat(as_of) if as_of else None)
        return PlainTextResponse(text, media_type="text/csv")

    @app.get("/v1/teams/{team_id}/sprints/{sprint_id}/events.csv")
    def sprint_events_csv(
        team_id: str, sprint_id: str, principal: Principal = Depends(principal_of)
    ):
        if not config.exports_enabled:
            raise HTTPException(403, "exports are disabled by configuration")
        board = _board_or_404(team_id)
        return PlainTextResponse(board.sprint_event_log_csv(sprint_id), media_type="text/csv")

    @app.get("/v1/teams/{team_id}/sprints/{sprint_id}/metrics")
    def sprint_metrics(
        team_id: str, sprint_id: str, principal: Principal = Depends(principal_of)
    ):
        board = _board_or_404(team_id)
        metrics = board.sprint_metrics(sprint_id)
        return {
            "work_capacity_hours": metrics.work_capacity_hours,
            "velocity_points": metrics.velocity_points,
            "estimation_accuracy": metrics.estimation_accuracy,
        }

    @app.post("/v1/teams/{team_id}/sprints/{sprint_id}/review", status_code=201)
    def record_review(
        team_id: str,
        sprint_id: str,
        body: dict,
        principal: Principal = Depends(coach_only),
    ):
        review = store.record(
            "sprint_review_recorded",
            {
                "team_id": team_id,
                "sprint_id": sprint_id,
                "coach_feedback": body.get("coach_feedback", ""),
                "delivered_story_ids": body.get("delivered_story_ids", []),
                "on": body["on"],
            },
            actor=principal.id,
        )
        return {
            "sprint_id": review.sprint_id,
            "delivered_story_ids": list(review.delivered_story_ids),
            "metrics_snapshot": {
                "work_capacity_hours": review.metrics_snapshot.work_capacity_hours,
                "velocity_points": review.metrics_snapshot.velocity_points,
                "estimation_accuracy": review.metrics_snapshot.estimation_accuracy,
            },
        }

    # --- programmes ----------------------------------------------------------

    @app.post("/v1/programmes", status_code=201)
    def create_programme(body: dict, principal: Principal = Depends(coach_only)):
        programme = store.record(
            "programme_created", {"cohort": body.get("cohort", [])}, actor=principal.id
        )
        return _programme_to_dict(programme)

    @app.get("/v1/programmes/{programme_id}")
    def get_programme(programme_id: str, principal: Principal = Depends(principal_of)):
        programme = store.state.programmes.get(programme_id)
        if programme is None:
            raise HTTPException(404, f"no programme {programme_id}")
        return _programme_to_dict(programme)

    @app.post("/v1/programmes/{programme_id}/advance")
    def advance_programme(
        programme_id: str, body: dict, principal: Principal = Depends(coach_only)
    ):
        try:
            event = ProgrammeEvent(body["event"])
        except (KeyError, ValueError):
            raise HTTPException(422, f"unknown programme event {body.get('event')!r}")
        programme = store.record(
            "programme_advanced",
            {"programme_id": programme_id, "event": event.value, "by": principal.id},
            actor=principal.id,
        )
        return _programme_to_dict(programme)

    @app.post("/v1/programmes/{programme_id}/teams")
    def form_programme_teams(
        programme_id: str, body: dict, principal: Principal = Depends(coach_only)
    ):
        teams = store.record(
            "teams_formed",
            {
                "programme_id": programme_id,
                "team_size": body.get("team_size", 5),
                "seed": body.get("seed", config.default_seed),
            },
            actor=principal.id,
        )
        return {"teams": [{"team_id": t.team_id, "members": list(t.members)} for t in teams]}

    @app.post("/v1/programmes/{programme_id}/epics", status_code=201)
    def seed_programme_epics(
        programme_id: str, body: dict, principal: Principal = Depends(coach_only)
    ):
        created = store.record(
            "epics_seeded",
            {"programme_id": programme_id, "drafts": body.get("drafts", [])},
            actor=principal.id,
        )
        return {"epics": created}

    # --- experiment analysis ------------------------------------------------

    @app.post("/v1/experiment/analyze")
    async def analyze(request: Request, principal: Principal = Depends(coach_only)):
        text = (await request.body()).decode("utf-8")
        records, excluded = read_gain_records(text)
        report = analyze_experiment(records)
        doc = report_to_dict(report)
        doc["excluded"] = excluded
        # raw per-group gains so clients can draw histograms without
        # recomputing anything
        doc["gains"] = {
            group.value: [r.gain for r in records if r.group is group]
            for group in Group
        }
        return doc

    # --- admin ----------------------------------------------------------------

    @app.post("/v1/admin/snapshot")
    def snapshot(principal: Principal = Depends(coach_only)):
        store.save_snapshot()
        return {"seq": store.seq}

    if config.static_dir and Path(config.static_dir).exists():
        app.mount("/", StaticFiles(directory=config.static_dir, html=True), name="console")

    return app
