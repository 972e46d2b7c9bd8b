"""Capstone-phase Scrum artifacts: stories, tasks, planning poker,
sprints, burndown and sprint metrics.

All mutations append to a per-board event log; burndown charts are
reconstructed deterministically by replaying that log, so any series
can be recomputed and audited after the fact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, timedelta
from enum import Enum

__all__ = [
    "StoryStatus",
    "TaskStatus",
    "PokerOutcome",
    "StoryDraft",
    "UserStory",
    "Task",
    "Sprint",
    "PokerRound",
    "BurndownPoint",
    "BurndownSeries",
    "SprintMetrics",
    "ReviewRecord",
    "Board",
    "FIBONACCI_DECK",
    "BoardError",
    "TooFewParts",
    "AlreadyDone",
    "VoteOutsideDeck",
    "TooFewVoters",
    "UnestimatedStory",
    "NoTasks",
    "DifferentAssignee",
    "NegativeHours",
    "NotCommitted",
    "SprintActive",
    "AlreadyReviewed",
    "UnknownEntity",
]

FIBONACCI_DECK = frozenset({1, 2, 3, 5, 8, 13, 21})


class BoardError(ValueError):
    pass


class TooFewParts(BoardError):
    pass


class AlreadyDone(BoardError):
    pass


class VoteOutsideDeck(BoardError):
    pass


class TooFewVoters(BoardError):
    pass


class UnestimatedStory(BoardError):
    pass


class NoTasks(BoardError):
    pass


class DifferentAssignee(BoardError):
    pass


class NegativeHours(BoardError):
    pass


class NotCommitted(BoardError):
    pass


class SprintActive(BoardError):
    pass


class AlreadyReviewed(BoardError):
    pass


class UnknownEntity(KeyError):
    pass


class StoryStatus(str, Enum):
    BACKLOG = "backlog"
    COMMITTED = "committed"
    IN_PROGRESS = "in_progress"
    DONE = "done"


class TaskStatus(str, Enum):
    TODO = "todo"
    DOING = "doing"
    DONE = "done"


class PokerOutcome(str, Enum):
    CONSENSUS = "consensus"
    REVOTE = "revote"


@dataclass(frozen=True)
class StoryDraft:
    role: str = ""
    feature: str = ""
    benefit: str = ""
    acceptance_criteria: tuple[str, ...] = ()
    is_epic: bool = False


@dataclass
class Task:
    id: str
    description: str
    estimate_hours: float
    remaining_hours: float
    assignee: str | None = None
    status: TaskStatus = TaskStatus.TODO
    hours_logged: float = 0.0


@dataclass
class UserStory:
    id: str
    role: str
    feature: str
    benefit: str
    acceptance_criteria: tuple[str, ...]
    story_points: int | None = None
    status: StoryStatus = StoryStatus.BACKLOG
    tasks: list[Task] = field(default_factory=list)
    parent_epic: str | None = None
    is_epic: bool = False  # epics are containers, excluded from commitment until split


@dataclass
class Sprint:
    id: str
    team_id: str
    start_date: date
    end_date: date
    capacity_hours: float
    committed_stories: list[str] = field(default_factory=list)
    committed_hours: float = 0.0  # baseline at commit, anchors the burndown
    committed: bool = False
    review: "ReviewRecord | None" = None


@dataclass(frozen=True)
class PokerRound:
    story_id: str
    votes: dict[str, int]
    round_number: int
    outcome: PokerOutcome
    value: int | None = None


@dataclass(frozen=True)
class BurndownPoint:
    day: date
    remaining_hours: float


@dataclass(frozen=True)
class BurndownSeries:
    sprint_id: str
    points: tuple[BurndownPoint, ...]

    def values(self) -> list[float]:
        return [p.remaining_hours for p in self.points]


@dataclass(frozen=True)
class SprintMetrics:
    work_capacity_hours: float  # sum of committed task estimates
    velocity_points: float  # story points of done stories
    estimation_accuracy: float | None  # logged/estimated over done tasks; None if no task done


@dataclass(frozen=True)
class ReviewRecord:
    sprint_id: str
    coach_feedback: str
    metrics_snapshot: SprintMetrics
    delivered_story_ids: tuple[str, ...]
    recorded_on: date


def validate_story_draft(draft: StoryDraft) -> list[str]:
    findings = []
    if not draft.role.strip():
        findings.append("role required")
    if not draft.feature.strip():
        findings.append("feature required")
    if not [c for c in draft.acceptance_criteria if c.strip()]:
        findings.append("acceptance_criteria required")
    return findings


class Board:
    """One team's backlog, sprints and append-only event log."""

    def __init__(self, team_id: str):
        self.team_id = team_id
        self.stories: dict[str, UserStory] = {}
        self.sprints: dict[str, Sprint] = {}
        self.poker_rounds: list[PokerRound] = []
        self.events: list[dict] = []
        self._counter = 0

    def _next_id(self, prefix: str) -> str:
        self._counter += 1
        return f"{prefix}-{self._counter:04d}"

    def _log(self, kind: str, **payload) -> None:
        self.events.append({"kind": kind, **payload})

    def _story(self, story_id: str) -> UserStory:
        try:
            return self.stories[story_id]
        except KeyError:
            raise UnknownEntity(f"no story {story_id}") from None

    def _sprint(self, sprint_id: str) -> Sprint:
        try:
            return self.sprints[sprint_id]
        except KeyError:
            raise UnknownEntity(f"no sprint {sprint_id}") from None

    def _task(self, task_id: str) -> tuple[UserStory, Task]:
        for story in self.stories.values():
            for task in story.tasks:
                if task.id == task_id:
                    return story, task
        raise UnknownEntity(f"no task {task_id}")

    # --- stories ----------------------------------------------------------

    def create_story(
        self, draft: StoryDraft, parent_epic: str | None = None
    ) -> tuple[UserStory | None, list[str]]:
        """Create a story when all required elements are present;
        otherwise return the findings and create nothing."""
        findings = validate_story_draft(draft)
        if findings:
            return None, findings
        story = UserStory(
            id=self._next_id("story"),
            role=draft.role.strip(),
            feature=draft.feature.strip(),
            benefit=draft.benefit.strip(),
            acceptance_criteria=tuple(c for c in draft.acceptance_criteria if c.strip()),
            parent_epic=parent_epic,
            is_epic=draft.is_epic,
        )
        self.stories[story.id] = story
        self._log("story_created", story_id=story.id, is_epic=story.is_epic)
        return story, []

    def split_story(self, story_id: str, parts: list[StoryDraft]) -> list[UserStory]:
        """Split into >= 2 parts; the original becomes an epic-like
        container excluded from commitment, the parts start unestimated."""
        story = self._story(story_id)
        if story.status is StoryStatus.DONE:
            raise AlreadyDone(f"story {story_id} is done and cannot be split")
        if len(parts) < 2:
            raise TooFewParts("a split needs at least 2 parts")
        part_findings = [(i, validate_story_draft(d)) for i, d in enumerate(parts)]
        bad = [(i, f) for i, f in part_findings if f]
        if bad:
            raise BoardError(f"invalid split parts: {bad}")
        created = []
        for draft in parts:
            part, _ = self.create_story(draft, parent_epic=story_id)
            assert part is not None
            created.append(part)
        story.is_epic = True
        story.story_points = None
        self._log("story_split", story_id=story_id, parts=[p.id for p in created])
        return created

    # --- planning poker ---------------------------------------------------

    def run_poker_round(
        self,
        story_id: str,
        votes: dict[str, int],
        deck: frozenset[int] = FIBONACCI_DECK,
    ) -> PokerRound:
        """Consensus when all votes agree (sets the story's points);
        otherwise the round is revealed for a revote."""
        story = self._story(story_id)
        if len(votes) < 2:
            raise TooFewVoters("planning poker needs at least 2 voters")
        outside = sorted(v for v in votes.values() if v not in deck)
        if outside:
            raise VoteOutsideDeck(f"votes {outside} not in deck {sorted(deck)}")
        round_number = sum(1 for r in self.poker_rounds if r.story_id == story_id) + 1
        values = set(votes.values())
        if len(values) == 1:
            value = values.pop()
            story.story_points = value
            poker = PokerRound(story_id, dict(votes), round_number, PokerOutcome.CONSENSUS, value)
        else:
            poker = PokerRound(story_id, dict(votes), round_number, PokerOutcome.REVOTE)
        self.poker_rounds.append(poker)
        self._log(
            "poker_round",
            story_id=story_id,
            round_number=round_number,
            votes=dict(votes),
            outcome=poker.outcome.value,
        )
        return poker

    # --- tasks ------------------------------------------------------------

    def add_task(
        self, story_id: str, description: str, estimate_hours: float, on: date | None = None
    ) -> Task:
        story = self._story(story_id)
        if estimate_hours <= 0:
            raise NegativeHours("task estimate must be positive")
        task = Task(
            id=self._next_id("task"),
            description=description,
            estimate_hours=float(estimate_hours),
            remaining_hours=float(estimate_hours),
        )
        story.tasks.append(task)
        self._log(
            "task_added",
            task_id=task.id,
            story_id=story_id,
            estimate_hours=task.estimate_hours,
            on=on.isoformat() if on else None,
        )
        return task

    def log_task_progress(
        self,
        task_id: str,
        learner_id: str,
        hours_spent: float,
        remaining_hours: float,
        on: date,
    ) -> Task:
        """Record work on a task; first logger becomes the single assignee."""
        story, task = self._task(task_id)
        if hours_spent < 0 or remaining_hours < 0:
            raise NegativeHours("hours_spent and remaining_hours must be >= 0")
        if task.assignee is None:
            task.assignee = learner_id
        elif task.assignee != learner_id:
            raise DifferentAssignee(
                f"task {task_id} is assigned to {task.assignee}; one learner per task"
            )
        task.hours_logged += float(hours_spent)
        task.remaining_hours = float(remaining_hours)
        task.status = TaskStatus.DONE if remaining_hours == 0 else TaskStatus.DOING
        if story.status is StoryStatus.COMMITTED:
            story.status = StoryStatus.IN_PROGRESS
        self._log(
            "task_progress",
            task_id=task_id,
            learner_id=learner_id,
            hours_spent=float(hours_spent),
            remaining_hours=float(remaining_hours),
            on=on.isoformat(),
        )
        return task

    def reassign_task(self, task_id: str, learner_id: str, by_coach: str) -> Task:
        """Explicit coach reassignment; the only path to a second assignee."""
        _, task = self._task(task_id)
        previous = task.assignee
        task.assignee = learner_id
        self._log(
            "task_reassigned",
            task_id=task_id,
            from_learner=previous,
            to_learner=learner_id,
            by=by_coach,
        )
        return task

    # --- sprints ----------------------------------------------------------

    def create_sprint(
        self, start_date: date, end_date: date, capacity_hours: float
    ) -> Sprint:
        if start_date >= end_date:
            raise BoardError("sprint start must precede end")
        if capacity_hours <= 0:
            raise BoardError("capacity must be positive")
        sprint = Sprint(
            id=self._next_id("sprint"),
            team_id=self.team_id,
            start_date=start_date,
            end_date=end_date,
            capacity_hours=float(capacity_hours),
        )
        self.sprints[sprint.id] = sprint
        self._log(
            "sprint_created",
            sprint_id=sprint.id,
            start=start_date.isoformat(),
            end=end_date.isoformat(),
            capacity_hours=sprint.capacity_hours,
        )
        return sprint

    def commit_sprint(
        self, sprint_id: str, story_ids: list[str]
    ) -> tuple[Sprint | None, list[str]]:
        """Commit stories when total task hours fit the capacity;
        over-capacity commits are rejected with findings."""
        sprint = self._sprint(sprint_id)
        if sprint.review is not None:
            raise AlreadyReviewed(f"sprint {sprint_id} is reviewed and immutable")
        stories = [self._story(sid) for sid in story_ids]
        findings = []
        for story in stories:
            if story.is_epic:
                findings.append(f"story {story.id} is an unsplit epic; split it before committing")
        if findings:
            return None, findings
        for story in stories:
            if story.story_points is None:
                raise UnestimatedStory(f"story {story.id} has no story points")
            if not story.tasks:
                raise NoTasks(f"story {story.id} has no tasks with hour estimates")
        total = sum(t.estimate_hours for s in stories for t in s.tasks)
        if total > sprint.capacity_hours:
            over = total - sprint.capacity_hours
            return None, [f"over capacity by {over:.1f}h"]
        sprint.committed_stories = list(story_ids)
        sprint.committed_hours = total
        sprint.committed = True
        for story in stories:
            story.status = StoryStatus.COMMITTED
        self._log(
            "sprint_committed",
            sprint_id=sprint_id,
            story_ids=list(story_ids),
            task_estimates={t.id: t.estimate_hours for s in stories for t in s.tasks},
            committed_hours=total,
        )
        return sprint, []

    def _committed_task_baseline(self, sprint: Sprint) -> dict[str, float]:
        """Task -> initial remaining hours, replayed from the event log.

        Tasks in the commit snapshot start at their committed estimate;
        tasks added to committed stories later enter at their estimate
        from the day they were added.
        """
        baseline: dict[str, float] = {}
        for event in self.events:
            if event["kind"] == "sprint_committed" and event["sprint_id"] == sprint.id:
                baseline.update(event["task_estimates"])
        return baseline

    def burndown(self, sprint_id: str, as_of: date | None = None) -> BurndownSeries:
        """Daily remaining-hours series replayed from the event log.

        The first point is the committed baseline at the start date; each
        later point is the end-of-day total after all progress events up
        to and including that date.
        """
        sprint = self._sprint(sprint_id)
        if not sprint.committed:
            raise NotCommitted(f"sprint {sprint_id} is not committed")
        last_day = sprint.end_date
        if as_of is not None and as_of < last_day:
            last_day = as_of

        committed_story_ids = set(sprint.committed_stories)
        remaining = dict(self._committed_task_baseline(sprint))
        late_tasks: dict[str, tuple[date, float]] = {}
        progress: list[tuple[date, str, float]] = []
        for event in self.events:
            if event["kind"] == "task_added" and event["story_id"] in committed_story_ids:
                if event["task_id"] not in remaining and event["on"]:
                    late_tasks[event["task_id"]] = (
                        date.fromisoformat(event["on"]),
                        event["estimate_hours"],
                    )
            if event["kind"] == "task_progress":
                task_ids = set(remaining) | set(late_tasks)
                if event["task_id"] in task_ids:
                    progress.append(
                        (
                            date.fromisoformat(event["on"]),
                            event["task_id"],
                            event["remaining_hours"],
                        )
                    )
        progress.sort(key=lambda e: e[0])

        points = [BurndownPoint(sprint.start_date, sprint.committed_hours)]
        day = sprint.start_date + timedelta(days=1)
        while day <= last_day:
            for task_id, (added_on, estimate) in late_tasks.items():
                if added_on <= day and task_id not in remaining:
                    remaining[task_id] = estimate
            for on, task_id, rem in progress:
                if on <= day:
                    remaining[task_id] = rem
            points.append(BurndownPoint(day, sum(remaining.values())))
            day += timedelta(days=1)
        return BurndownSeries(sprint_id=sprint_id, points=tuple(points))

    def sprint_metrics(self, sprint_id: str) -> SprintMetrics:
        sprint = self._sprint(sprint_id)
        if not sprint.committed:
            raise NotCommitted(f"sprint {sprint_id} is not committed")
        stories = [self._story(sid) for sid in sprint.committed_stories]
        capacity = sum(t.estimate_hours for s in stories for t in s.tasks)
        velocity = sum(
            s.story_points or 0 for s in stories if s.status is StoryStatus.DONE
        )
        done_tasks = [t for s in stories for t in s.tasks if t.status is TaskStatus.DONE]
        estimated = sum(t.estimate_hours for t in done_tasks)
        logged = sum(t.hours_logged for t in done_tasks)
        accuracy = logged / estimated if estimated else None
        return SprintMetrics(
            work_capacity_hours=capacity,
            velocity_points=float(velocity),
            estimation_accuracy=accuracy,
        )

    def record_review(
        self,
        sprint_id: str,
        coach_feedback: str,
        delivered_story_ids: list[str],
        on: date,
    ) -> ReviewRecord:
        """Store the sprint review with a frozen metrics snapshot;
        the sprint becomes immutable afterwards."""
        sprint = self._sprint(sprint_id)
        if not sprint.committed:
            raise NotCommitted(f"sprint {sprint_id} is not committed")
        if sprint.review is not None:
            raise AlreadyReviewed(f"sprint {sprint_id} already reviewed")
        if on < sprint.end_date:
            raise SprintActive(
                f"sprint {sprint_id} runs until {sprint.end_date}; cannot review on {on}"
            )
        committed = set(sprint.committed_stories)
        unknown = [sid for sid in delivered_story_ids if sid not in committed]
        if unknown:
            raise BoardError(f"delivered stories {unknown} were not committed to {sprint_id}")
        for sid in delivered_story_ids:
            self._story(sid).status = StoryStatus.DONE
        review = ReviewRecord(
            sprint_id=sprint_id,
            coach_feedback=coach_feedback,
            metrics_snapshot=self.sprint_metrics(sprint_id),
            delivered_story_ids=tuple(delivered_story_ids),
            recorded_on=on,
        )
        sprint.review = review
        self._log(
            "sprint_reviewed",
            sprint_id=sprint_id,
            delivered=list(delivered_story_ids),
            on=on.isoformat(),
        )
        return review

    # --- export -----------------------------------------------------------

    def burndown_csv(self, sprint_id: str, as_of: date | None = None) -> str:
        series = self.burndown(sprint_id, as_of)
        lines = ["day,remaining_hours"]
        lines += [f"{p.day.isoformat()},{p.remaining_hours:g}" for p in series.points]
        return "\n".join(lines) + "\n"

    def sprint_event_log_csv(self, sprint_id: str) -> str:
        """Progress events affecting the sprint's committed tasks, in
        log order, for offline auditing."""
        sprint = self._sprint(sprint_id)
        if not sprint.committed:
            raise NotCommitted(f"sprint {sprint_id} is not committed")
        task_ids = set(self._committed_task_baseline(sprint))
        lines = ["on,task_id,learner_id,hours_spent,remaining_hours"]
        for event in self.events:
            if event["kind"] == "task_progress" and event["task_id"] in task_ids:
                lines.append(
                    f"{event['on']},{event['task_id']},{event['learner_id']},"
                    f"{event['hours_spent']:g},{event['remaining_hours']:g}"
                )
        return "\n".join(lines) + "\n"
