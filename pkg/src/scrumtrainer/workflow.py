"""Programme orchestration across the training cycle: profiling,
tailored instruction, capstone sprints, review, and the next iteration.

One programme is one serialized state machine; the transition relation
is the single source of truth for which coach events are legal, and
every transition is appended to the programme's audit log.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum

from .board import Board, StoryDraft

__all__ = [
    "ProgrammeState",
    "ProgrammeEvent",
    "Team",
    "Programme",
    "TRANSITIONS",
    "IllegalTransition",
    "IllegalState",
    "CohortTooSmall",
    "advance",
    "form_teams",
    "seed_epics",
]


class IllegalTransition(ValueError):
    pass


class IllegalState(ValueError):
    pass


class CohortTooSmall(ValueError):
    pass


class ProgrammeState(str, Enum):
    PROFILING = "profiling"
    INSTRUCTION = "instruction"
    SPRINT_RUNNING = "sprint_running"
    REVIEW = "review"
    FINISHED = "finished"


class ProgrammeEvent(str, Enum):
    PROFILES_COMPLETE = "profiles_complete"
    INSTRUCTION_COMPLETE = "instruction_complete"
    SPRINT_STARTED = "sprint_started"
    SPRINT_ENDED = "sprint_ended"
    REVIEW_RECORDED = "review_recorded"
    REMEDIATE = "remediate"
    NEXT_SPRINT = "next_sprint"
    FINISH = "finish"


# sprint_started is accepted alongside instruction_complete on the same
# arc so a coach can mark the sprint kick-off explicitly after a
# remediation pass; review_recorded acknowledges the stored review and
# keeps the programme in review until the coach routes it onward.
TRANSITIONS: dict[tuple[ProgrammeState, ProgrammeEvent], ProgrammeState] = {
    (ProgrammeState.PROFILING, ProgrammeEvent.PROFILES_COMPLETE): ProgrammeState.INSTRUCTION,
    (ProgrammeState.INSTRUCTION, ProgrammeEvent.INSTRUCTION_COMPLETE): ProgrammeState.SPRINT_RUNNING,
    (ProgrammeState.INSTRUCTION, ProgrammeEvent.SPRINT_STARTED): ProgrammeState.SPRINT_RUNNING,
    (ProgrammeState.SPRINT_RUNNING, ProgrammeEvent.SPRINT_ENDED): ProgrammeState.REVIEW,
    (ProgrammeState.REVIEW, ProgrammeEvent.REVIEW_RECORDED): ProgrammeState.REVIEW,
    (ProgrammeState.REVIEW, ProgrammeEvent.REMEDIATE): ProgrammeState.INSTRUCTION,
    (ProgrammeState.REVIEW, ProgrammeEvent.NEXT_SPRINT): ProgrammeState.SPRINT_RUNNING,
    (ProgrammeState.REVIEW, ProgrammeEvent.FINISH): ProgrammeState.FINISHED,
}


@dataclass(frozen=True)
class Team:
    team_id: str
    members: tuple[str, ...]


@dataclass
class Programme:
    id: str
    cohort: list[str]
    teams: list[Team] = field(default_factory=list)
    state: ProgrammeState = ProgrammeState.PROFILING
    sprint_counter: int = 0
    epics: list[str] = field(default_factory=list)
    audit: list[dict] = field(default_factory=list)


def advance(
    programme: Programme, event: ProgrammeEvent, by: str = "", at: str | None = None
) -> Programme:
    """Apply a coach event; raises IllegalTransition naming both the
    current state and the offending event."""
    key = (programme.state, event)
    if key not in TRANSITIONS:
        raise IllegalTransition(
            f"event {event.value} is not legal in state {programme.state.value}"
        )
    previous = programme.state
    programme.state = TRANSITIONS[key]
    if event is ProgrammeEvent.NEXT_SPRINT:
        programme.sprint_counter += 1
    programme.audit.append(
        {
            "at": at or datetime.now(timezone.utc).isoformat(),
            "event": event.value,
            "from": previous.value,
            "to": programme.state.value,
            "by": by,
        }
    )
    return programme


def form_teams(cohort: list[str], team_size: int, seed: int) -> list[Team]:
    """Seeded random partition into teams of ~team_size (sizes differ by
    at most one)."""
    if team_size < 2:
        raise ValueError("team_size must be at least 2")
    if len(cohort) < team_size:
        raise CohortTooSmall(
            f"cohort of {len(cohort)} cannot form a team of {team_size}"
        )
    members = sorted(cohort)
    random.Random(seed).shuffle(members)
    n_teams = max(1, round(len(members) / team_size))
    base, extra = divmod(len(members), n_teams)
    teams = []
    cursor = 0
    for i in range(n_teams):
        size = base + (1 if i < extra else 0)
        teams.append(
            Team(team_id=f"team-{i + 1}", members=tuple(members[cursor : cursor + size]))
        )
        cursor += size
    return teams


def seed_epics(
    programme: Programme,
    epic_drafts: list[StoryDraft],
    boards: dict[str, Board],
) -> dict[str, list[str]]:
    """Create the capstone epics on every team board as non-committable
    stories that must be split before commitment."""
    if programme.state not in (ProgrammeState.INSTRUCTION, ProgrammeState.REVIEW):
        raise IllegalState(
            f"epics can be seeded in instruction or review, not {programme.state.value}"
        )
    created: dict[str, list[str]] = {}
    for team in programme.teams:
        board = boards[team.team_id]
        ids = []
        for draft in epic_drafts:
            epic = StoryDraft(
                role=draft.role,
                feature=draft.feature,
                benefit=draft.benefit,
                acceptance_criteria=draft.acceptance_criteria,
                is_epic=True,
            )
            story, findings = board.create_story(epic)
            if findings:
                raise ValueError(f"invalid epic draft: {findings}")
            assert story is not None
            ids.append(story.id)
        created[team.team_id] = ids
        programme.epics.extend(ids)
    return created
