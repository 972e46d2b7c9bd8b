"""File-backed persistence: an append-only event log plus snapshots.

Every mutation is recorded as one event and applied through a single
dispatcher, so replaying the log reproduces the state exactly (ids are
allocated from counters held in state, timestamps come from the event).
Snapshots cut replay time; the log is never truncated.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path

from .adaptation import LearnerSession, Submission, complete_step
from .board import (
    Board,
    PokerRound,
    ReviewRecord,
    Sprint,
    SprintMetrics,
    StoryDraft,
    StoryStatus,
    Task,
    TaskStatus,
    UserStory,
)
from .ils import ILSInstrument, LearnerProfile, ProcessingStyle, ResponseSheet, score_ils
from .syllabus import Method, TopicGraph
from .workflow import (
    Programme,
    ProgrammeEvent,
    Team,
    advance,
    form_teams,
    seed_epics,
)

__all__ = [
    "Principal",
    "Role",
    "AppState",
    "Store",
    "DataDirLocked",
    "FindingsRejected",
    "SNAPSHOT_SCHEMA_VERSION",
]

SNAPSHOT_SCHEMA_VERSION = 1


class DataDirLocked(RuntimeError):
    pass


class FindingsRejected(ValueError):
    """A validating operation returned findings instead of mutating."""

    def __init__(self, findings: list[str]):
        super().__init__("; ".join(findings))
        self.findings = findings


@dataclass(frozen=True)
class Principal:
    id: str
    role: str  # "developer" | "coach"
    display_name: str = ""


@dataclass
class AppState:
    principals: dict[str, Principal] = field(default_factory=dict)
    sheets: dict[str, ResponseSheet] = field(default_factory=dict)
    profiles: dict[str, LearnerProfile] = field(default_factory=dict)
    sessions: dict[str, LearnerSession] = field(default_factory=dict)
    boards: dict[str, Board] = field(default_factory=dict)
    programmes: dict[str, Programme] = field(default_factory=dict)
    counters: dict[str, int] = field(default_factory=dict)

    def next_id(self, prefix: str) -> str:
        n = self.counters.get(prefix, 0) + 1
        self.counters[prefix] = n
        return f"{prefix}-{n:04d}"


class Role:
    DEVELOPER = "developer"
    COACH = "coach"


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


# --- event application ----------------------------------------------------

def _apply(state: AppState, event: dict, graph: TopicGraph, rules, instrument: ILSInstrument):
    kind = event["kind"]
    p = event["payload"]
    at = event["at"]

    if kind == "principal_created":
        pid = p.get("id") or state.next_id("p")
        principal = Principal(id=pid, role=p["role"], display_name=p.get("display_name", ""))
        if principal.role not in (Role.DEVELOPER, Role.COACH):
            raise ValueError(f"unknown role {principal.role}")
        if pid in state.principals:
            raise ValueError(f"principal {pid} already exists")
        state.principals[pid] = principal
        return principal

    if kind == "principal_deleted":
        if p["id"] not in state.principals:
            raise KeyError(f"no principal {p['id']}")
        return state.principals.pop(p["id"])

    if kind == "sheet_submitted":
        answers = {int(k): v for k, v in p["answers"].items()}
        sheet = ResponseSheet(learner_id=p["learner_id"], answers=answers)
        state.sheets[sheet.learner_id] = sheet
        if sheet.is_complete(instrument):
            profile = score_ils(sheet, instrument)
            profile = LearnerProfile(
                learner_id=profile.learner_id,
                dims=profile.dims,
                processing_style=profile.processing_style,
                scored_at=at,
            )
            state.profiles[sheet.learner_id] = profile
            return profile
        return sheet

    if kind == "session_created":
        learner_id = p["learner_id"]
        override = Method(p["method_override"]) if p.get("method_override") else None
        if override is not None:
            method = override
        else:
            profile = state.profiles.get(learner_id)
            if profile is None:
                raise KeyError(f"learner {learner_id} has no scored profile")
            method = (
                Method.ACTIVE
                if profile.processing_style is ProcessingStyle.ACTIVE
                else Method.PASSIVE
            )
        scope = frozenset(p["topic_scope"]) if p.get("topic_scope") else None
        session = LearnerSession(
            session_id=state.next_id("sess"),
            learner_id=learner_id,
            method=method,
            topic_scope=scope,
        )
        state.sessions[session.session_id] = session
        return session

    if kind == "step_completed":
        session = state.sessions[p["session_id"]]
        return complete_step(
            session,
            rules,
            graph,
            p["step_id"],
            submission=p.get("submission"),
            participants=tuple(p.get("participants", ())),
            at=at,
        )

    if kind == "board_created":
        team_id = p["team_id"]
        if team_id in state.boards:
            raise ValueError(f"board for {team_id} already exists")
        board = Board(team_id)
        state.boards[team_id] = board
        return board

    if kind == "story_created":
        board = state.boards[p["team_id"]]
        draft = StoryDraft(
            role=p.get("role", ""),
            feature=p.get("feature", ""),
            benefit=p.get("benefit", ""),
            acceptance_criteria=tuple(p.get("acceptance_criteria", ())),
            is_epic=bool(p.get("is_epic", False)),
        )
        story, findings = board.create_story(draft, parent_epic=p.get("parent_epic"))
        if findings:
            raise FindingsRejected(findings)
        return story

    if kind == "story_split":
        board = state.boards[p["team_id"]]
        parts = [
            StoryDraft(
                role=d.get("role", ""),
                feature=d.get("feature", ""),
                benefit=d.get("benefit", ""),
                acceptance_criteria=tuple(d.get("acceptance_criteria", ())),
            )
            for d in p["parts"]
        ]
        return board.split_story(p["story_id"], parts)

    if kind == "poker_played":
        board = state.boards[p["team_id"]]
        deck = frozenset(p["deck"]) if p.get("deck") else None
        votes = {k: int(v) for k, v in p["votes"].items()}
        if deck is None:
            return board.run_poker_round(p["story_id"], votes)
        return board.run_poker_round(p["story_id"], votes, deck)

    if kind == "task_added":
        board = state.boards[p["team_id"]]
        on = date.fromisoformat(p["on"]) if p.get("on") else None
        return board.add_task(p["story_id"], p["description"], p["estimate_hours"], on=on)

    if kind == "sprint_created":
        board = state.boards[p["team_id"]]
        return board.create_sprint(
            date.fromisoformat(p["start_date"]),
            date.fromisoformat(p["end_date"]),
            p["capacity_hours"],
        )

    if kind == "sprint_committed":
        board = state.boards[p["team_id"]]
        sprint, findings = board.commit_sprint(p["sprint_id"], list(p["story_ids"]))
        if findings:
            raise FindingsRejected(findings)
        return sprint

    if kind == "task_progress":
        board = state.boards[p["team_id"]]
        return board.log_task_progress(
            p["task_id"],
            p["learner_id"],
            p["hours_spent"],
            p["remaining_hours"],
            on=date.fromisoformat(p["on"]),
        )

    if kind == "task_reassigned":
        board = state.boards[p["team_id"]]
        return board.reassign_task(p["task_id"], p["learner_id"], by_coach=p["by"])

    if kind == "sprint_review_recorded":
        board = state.boards[p["team_id"]]
        return board.record_review(
            p["sprint_id"],
            p["coach_feedback"],
            list(p["delivered_story_ids"]),
            on=date.fromisoformat(p["on"]),
        )

    if kind == "programme_created":
        programme = Programme(id=state.next_id("prog"), cohort=list(p["cohort"]))
        state.programmes[programme.id] = programme
        return programme

    if kind == "programme_advanced":
        programme = state.programmes[p["programme_id"]]
        return advance(programme, ProgrammeEvent(p["event"]), by=p.get("by", ""), at=at)

    if kind == "teams_formed":
        programme = state.programmes[p["programme_id"]]
        teams = form_teams(programme.cohort, p["team_size"], p["seed"])
        programme.teams = teams
        for team in teams:
            if team.team_id not in state.boards:
                state.boards[team.team_id] = Board(team.team_id)
        return teams

    if kind == "epics_seeded":
        programme = state.programmes[p["programme_id"]]
        drafts = [
            StoryDraft(
                role=d.get("role", ""),
                feature=d.get("feature", ""),
                benefit=d.get("benefit", ""),
                acceptance_criteria=tuple(d.get("acceptance_criteria", ())),
            )
            for d in p["drafts"]
        ]
        return seed_epics(programme, drafts, state.boards)

    raise ValueError(f"unknown event kind {kind}")


# --- serialization ---------------------------------------------------------

def _task_to_dict(t: Task) -> dict:
    return {
        "id": t.id,
        "description": t.description,
        "estimate_hours": t.estimate_hours,
        "remaining_hours": t.remaining_hours,
        "assignee": t.assignee,
        "status": t.status.value,
        "hours_logged": t.hours_logged,
    }


def _task_from_dict(d: dict) -> Task:
    return Task(
        id=d["id"],
        description=d["description"],
        estimate_hours=d["estimate_hours"],
        remaining_hours=d["remaining_hours"],
        assignee=d["assignee"],
        status=TaskStatus(d["status"]),
        hours_logged=d["hours_logged"],
    )


def _story_to_dict(s: UserStory) -> dict:
    return {
        "id": s.id,
        "role": s.role,
        "feature": s.feature,
        "benefit": s.benefit,
        "acceptance_criteria": list(s.acceptance_criteria),
        "story_points": s.story_points,
        "status": s.status.value,
        "tasks": [_task_to_dict(t) for t in s.tasks],
        "parent_epic": s.parent_epic,
        "is_epic": s.is_epic,
    }


def _story_from_dict(d: dict) -> UserStory:
    return UserStory(
        id=d["id"],
        role=d["role"],
        feature=d["feature"],
        benefit=d["benefit"],
        acceptance_criteria=tuple(d["acceptance_criteria"]),
        story_points=d["story_points"],
        status=StoryStatus(d["status"]),
        tasks=[_task_from_dict(t) for t in d["tasks"]],
        parent_epic=d["parent_epic"],
        is_epic=d["is_epic"],
    )


def _metrics_to_dict(m: SprintMetrics) -> dict:
    return {
        "work_capacity_hours": m.work_capacity_hours,
        "velocity_points": m.velocity_points,
        "estimation_accuracy": m.estimation_accuracy,
    }


def _review_to_dict(r: ReviewRecord) -> dict:
    return {
        "sprint_id": r.sprint_id,
        "coach_feedback": r.coach_feedback,
        "metrics_snapshot": _metrics_to_dict(r.metrics_snapshot),
        "delivered_story_ids": list(r.delivered_story_ids),
        "recorded_on": r.recorded_on.isoformat(),
    }


def _review_from_dict(d: dict) -> ReviewRecord:
    m = d["metrics_snapshot"]
    return ReviewRecord(
        sprint_id=d["sprint_id"],
        coach_feedback=d["coach_feedback"],
        metrics_snapshot=SprintMetrics(
            work_capacity_hours=m["work_capacity_hours"],
            velocity_points=m["velocity_points"],
            estimation_accuracy=m["estimation_accuracy"],
        ),
        delivered_story_ids=tuple(d["delivered_story_ids"]),
        recorded_on=date.fromisoformat(d["recorded_on"]),
    )


def _sprint_to_dict(s: Sprint) -> dict:
    return {
        "id": s.id,
        "team_id": s.team_id,
        "start_date": s.start_date.isoformat(),
        "end_date": s.end_date.isoformat(),
        "capacity_hours": s.capacity_hours,
        "committed_stories": list(s.committed_stories),
        "committed_hours": s.committed_hours,
        "committed": s.committed,
        "review": _review_to_dict(s.review) if s.review else None,
    }


def _sprint_from_dict(d: dict) -> Sprint:
    return Sprint(
        id=d["id"],
        team_id=d["team_id"],
        start_date=date.fromisoformat(d["start_date"]),
        end_date=date.fromisoformat(d["end_date"]),
        capacity_hours=d["capacity_hours"],
        committed_stories=list(d["committed_stories"]),
        committed_hours=d["committed_hours"],
        committed=d["committed"],
        review=_review_from_dict(d["review"]) if d["review"] else None,
    )


def _board_to_dict(b: Board) -> dict:
    return {
        "team_id": b.team_id,
        "stories": [_story_to_dict(s) for s in b.stories.values()],
        "sprints": [_sprint_to_dict(s) for s in b.sprints.values()],
        "poker_rounds": [
            {
                "story_id": r.story_id,
                "votes": r.votes,
                "round_number": r.round_number,
                "outcome": r.outcome.value,
                "value": r.value,
            }
            for r in b.poker_rounds
        ],
        "events": b.events,
        "counter": b._counter,
    }


def _board_from_dict(d: dict) -> Board:
    from .board import PokerOutcome

    board = Board(d["team_id"])
    board.stories = {s["id"]: _story_from_dict(s) for s in d["stories"]}
    board.sprints = {s["id"]: _sprint_from_dict(s) for s in d["sprints"]}
    board.poker_rounds = [
        PokerRound(
            story_id=r["story_id"],
            votes={k: int(v) for k, v in r["votes"].items()},
            round_number=r["round_number"],
            outcome=PokerOutcome(r["outcome"]),
            value=r["value"],
        )
        for r in d["poker_rounds"]
    ]
    board.events = list(d["events"])
    board._counter = d["counter"]
    return board


def _session_to_dict(s: LearnerSession) -> dict:
    return {
        "session_id": s.session_id,
        "learner_id": s.learner_id,
        "method": s.method.value,
        "completed_steps": list(s.completed_steps),
        "completed_topics": list(s.completed_topics),
        "submissions": {
            path: {
                "text": sub.text,
                "participants": list(sub.participants),
                "submitted_at": sub.submitted_at,
            }
            for path, sub in s.submissions.items()
        },
        "current_topic": s.current_topic,
        "phase": s.phase,
        "topic_scope": sorted(s.topic_scope) if s.topic_scope is not None else None,
    }


def _session_from_dict(d: dict) -> LearnerSession:
    return LearnerSession(
        session_id=d["session_id"],
        learner_id=d["learner_id"],
        method=Method(d["method"]),
        completed_steps=list(d["completed_steps"]),
        completed_topics=list(d["completed_topics"]),
        submissions={
            path: Submission(
                text=sub["text"],
                participants=tuple(sub["participants"]),
                submitted_at=sub["submitted_at"],
            )
            for path, sub in d["submissions"].items()
        },
        current_topic=d["current_topic"],
        phase=d["phase"],
        topic_scope=frozenset(d["topic_scope"]) if d["topic_scope"] is not None else None,
    )


def _programme_to_dict(p: Programme) -> dict:
    return {
        "id": p.id,
        "cohort": list(p.cohort),
        "teams": [{"team_id": t.team_id, "members": list(t.members)} for t in p.teams],
        "state": p.state.value,
        "sprint_counter": p.sprint_counter,
        "epics": list(p.epics),
        "audit": list(p.audit),
    }


def _programme_from_dict(d: dict) -> Programme:
    from .workflow import ProgrammeState

    return Programme(
        id=d["id"],
        cohort=list(d["cohort"]),
        teams=[Team(team_id=t["team_id"], members=tuple(t["members"])) for t in d["teams"]],
        state=ProgrammeState(d["state"]),
        sprint_counter=d["sprint_counter"],
        epics=list(d["epics"]),
        audit=list(d["audit"]),
    )


def state_to_dict(state: AppState) -> dict:
    return {
        "principals": [
            {"id": p.id, "role": p.role, "display_name": p.display_name}
            for p in state.principals.values()
        ],
        "sheets": [
            {"learner_id": s.learner_id, "answers": {str(k): v for k, v in s.answers.items()}}
            for s in state.sheets.values()
        ],
        "profiles": [
            {
                "learner_id": pr.learner_id,
                "dims": list(pr.dims),
                "processing_style": pr.processing_style.value,
                "scored_at": pr.scored_at,
            }
            for pr in state.profiles.values()
        ],
        "sessions": [_session_to_dict(s) for s in state.sessions.values()],
        "boards": [_board_to_dict(b) for b in state.boards.values()],
        "programmes": [_programme_to_dict(p) for p in state.programmes.values()],
        "counters": dict(state.counters),
    }


def state_from_dict(d: dict) -> AppState:
    state = AppState()
    for p in d["principals"]:
        state.principals[p["id"]] = Principal(p["id"], p["role"], p["display_name"])
    for s in d["sheets"]:
        state.sheets[s["learner_id"]] = ResponseSheet(
            learner_id=s["learner_id"],
            answers={int(k): v for k, v in s["answers"].items()},
        )
    for pr in d["profiles"]:
        state.profiles[pr["learner_id"]] = LearnerProfile(
            learner_id=pr["learner_id"],
            dims=tuple(pr["dims"]),  # type: ignore[arg-type]
            processing_style=ProcessingStyle(pr["processing_style"]),
            scored_at=pr["scored_at"],
        )
    for s in d["sessions"]:
        state.sessions[s["session_id"]] = _session_from_dict(s)
    for b in d["boards"]:
        state.boards[b["team_id"]] = _board_from_dict(b)
    for p in d["programmes"]:
        state.programmes[p["id"]] = _programme_from_dict(p)
    state.counters = dict(d["counters"])
    return state


# --- the store --------------------------------------------------------------

class Store:
    """Event log + snapshot persistence bound to one data directory."""

    def __init__(
        self,
        data_dir: str | Path,
        graph: TopicGraph,
        rules,
        instrument: ILSInstrument,
    ):
        self.data_dir = Path(data_dir)
        self.graph = graph
        self.rules = rules
        self.instrument = instrument
        self.state = AppState()
        self.seq = 0
        self._locked = False

    @property
    def _events_path(self) -> Path:
        return self.data_dir / "events.jsonl"

    @property
    def _snapshot_path(self) -> Path:
        return self.data_dir / "snapshot.json"

    @property
    def _lock_path(self) -> Path:
        return self.data_dir / "lock"

    def open(self) -> None:
        self.data_dir.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self._lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise DataDirLocked(
                f"data dir {self.data_dir} is locked by another process "
                f"(remove {self._lock_path} if stale)"
            ) from None
        with os.fdopen(fd, "w") as fh:
            fh.write(str(os.getpid()))
        self._locked = True
        self._load()

    def close(self) -> None:
        if not self._locked:
            return
        self.save_snapshot()
        self._lock_path.unlink(missing_ok=True)
        self._locked = False

    def _load(self) -> None:
        snapshot_seq = 0
        if self._snapshot_path.exists():
            doc = json.loads(self._snapshot_path.read_text())
            if doc["schema_version"] != SNAPSHOT_SCHEMA_VERSION:
                raise ValueError(f"unsupported snapshot schema {doc['schema_version']}")
            self.state = state_from_dict(doc["state"])
            snapshot_seq = doc["seq"]
        self.seq = snapshot_seq
        if self._events_path.exists():
            with self._events_path.open() as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    event = json.loads(line)
                    if event["seq"] <= snapshot_seq:
                        continue
                    _apply(self.state, event, self.graph, self.rules, self.instrument)
                    self.seq = event["seq"]

    def save_snapshot(self) -> None:
        doc = {
            "schema_version": SNAPSHOT_SCHEMA_VERSION,
            "seq": self.seq,
            "saved_at": _now_iso(),
            "state": state_to_dict(self.state),
        }
        tmp = self._snapshot_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(doc))
        tmp.replace(self._snapshot_path)

    def record(self, kind: str, payload: dict, actor: str = ""):
        """Validate + apply + append one event; returns the domain result."""
        event = {
            "seq": self.seq + 1,
            "at": _now_iso(),
            "actor": actor,
            "kind": kind,
            "payload": payload,
        }
        result = _apply(self.state, event, self.graph, self.rules, self.instrument)
        self.seq = event["seq"]
        with self._events_path.open("a") as fh:
            fh.write(json.dumps(event) + "\n")
        return result
