from datetime import date, timedelta

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scrumtrainer.board import (
    AlreadyDone,
    AlreadyReviewed,
    Board,
    DifferentAssignee,
    FIBONACCI_DECK,
    NegativeHours,
    NoTasks,
    NotCommitted,
    PokerOutcome,
    SprintActive,
    StoryDraft,
    StoryStatus,
    TaskStatus,
    TooFewParts,
    TooFewVoters,
    UnestimatedStory,
    VoteOutsideDeck,
)

START = date(2024, 3, 4)


def draft(role="registered user", feature="reset my password", criteria=("email link sent",)):
    return StoryDraft(role=role, feature=feature, acceptance_criteria=tuple(criteria))


def board_with_committed_sprint(task_hours=(16.0, 24.0), capacity=40.0, days=5):
    board = Board("team-1")
    story, _ = board.create_story(draft())
    board.run_poker_round(story.id, {"a": 5, "b": 5})
    tasks = [board.add_task(story.id, f"task {i}", h) for i, h in enumerate(task_hours)]
    sprint = board.create_sprint(START, START + timedelta(days=days), capacity)
    sprint, findings = board.commit_sprint(sprint.id, [story.id])
    assert findings == []
    return board, story, tasks, sprint


class TestCreateStory:
    def test_valid_draft_creates_story(self):
        board = Board("t")
        story, findings = board.create_story(draft())
        assert findings == [] and story.status is StoryStatus.BACKLOG

    def test_missing_criteria_reported(self):
        board = Board("t")
        story, findings = board.create_story(draft(criteria=()))
        assert story is None and findings == ["acceptance_criteria required"]

    def test_empty_role_reported(self):
        board = Board("t")
        story, findings = board.create_story(draft(role="  "))
        assert story is None and findings == ["role required"]


class TestSplitStory:
    def test_split_into_three(self):
        board = Board("t")
        epic, _ = board.create_story(draft(feature="whole account area"))
        board.run_poker_round(epic.id, {"a": 21, "b": 21})
        parts = board.split_story(epic.id, [draft(feature=f"part {i}") for i in range(3)])
        assert len(parts) == 3
        assert all(p.parent_epic == epic.id for p in parts)
        assert epic.is_epic and epic.story_points is None

    def test_parts_start_unestimated(self):
        board = Board("t")
        epic, _ = board.create_story(draft())
        parts = board.split_story(epic.id, [draft(), draft()])
        assert all(p.story_points is None for p in parts)

    def test_single_part_rejected(self):
        board = Board("t")
        epic, _ = board.create_story(draft())
        with pytest.raises(TooFewParts):
            board.split_story(epic.id, [draft()])

    def test_done_story_cannot_split(self):
        board, story, tasks, sprint = board_with_committed_sprint()
        for t in tasks:
            board.log_task_progress(t.id, "dev", t.estimate_hours, 0, on=START)
        board.record_review(sprint.id, "ok", [story.id], on=sprint.end_date)
        with pytest.raises(AlreadyDone):
            board.split_story(story.id, [draft(), draft()])


class TestPoker:
    def test_consensus_sets_points(self):
        board = Board("t")
        story, _ = board.create_story(draft())
        poker = board.run_poker_round(story.id, {"a": 5, "b": 5, "c": 5})
        assert poker.outcome is PokerOutcome.CONSENSUS and poker.value == 5
        assert story.story_points == 5

    def test_disagreement_reveals_revote(self):
        board = Board("t")
        story, _ = board.create_story(draft())
        poker = board.run_poker_round(story.id, {"a": 3, "b": 5, "c": 8})
        assert poker.outcome is PokerOutcome.REVOTE and poker.value is None
        assert story.story_points is None
        assert poker.votes == {"a": 3, "b": 5, "c": 8}

    def test_vote_outside_deck(self):
        board = Board("t")
        story, _ = board.create_story(draft())
        with pytest.raises(VoteOutsideDeck):
            board.run_poker_round(story.id, {"a": 4, "b": 5})

    def test_too_few_voters(self):
        board = Board("t")
        story, _ = board.create_story(draft())
        with pytest.raises(TooFewVoters):
            board.run_poker_round(story.id, {"a": 5})

    @given(
        st.lists(st.sampled_from(sorted(FIBONACCI_DECK)), min_size=2, max_size=8)
    )
    @settings(max_examples=80, deadline=None)
    def test_consensus_iff_single_distinct_value(self, votes):
        board = Board("t")
        story, _ = board.create_story(draft())
        poker = board.run_poker_round(
            story.id, {f"v{i}": v for i, v in enumerate(votes)}
        )
        if len(set(votes)) == 1:
            assert poker.outcome is PokerOutcome.CONSENSUS
        else:
            assert poker.outcome is PokerOutcome.REVOTE


class TestCommit:
    def test_within_capacity(self):
        board, story, _, sprint = board_with_committed_sprint(task_hours=(20.0, 18.0))
        assert sprint.committed and sprint.committed_hours == 38.0
        assert story.status is StoryStatus.COMMITTED

    def test_over_capacity_finding(self):
        board = Board("t")
        story, _ = board.create_story(draft())
        board.run_poker_round(story.id, {"a": 8, "b": 8})
        board.add_task(story.id, "big", 44.0)
        sprint = board.create_sprint(START, START + timedelta(days=5), 40.0)
        committed, findings = board.commit_sprint(sprint.id, [story.id])
        assert committed is None and findings == ["over capacity by 4.0h"]

    def test_unestimated_story_rejected(self):
        board = Board("t")
        story, _ = board.create_story(draft())
        board.add_task(story.id, "t", 8.0)
        sprint = board.create_sprint(START, START + timedelta(days=5), 40.0)
        with pytest.raises(UnestimatedStory):
            board.commit_sprint(sprint.id, [story.id])

    def test_story_without_tasks_rejected(self):
        board = Board("t")
        story, _ = board.create_story(draft())
        board.run_poker_round(story.id, {"a": 3, "b": 3})
        sprint = board.create_sprint(START, START + timedelta(days=5), 40.0)
        with pytest.raises(NoTasks):
            board.commit_sprint(sprint.id, [story.id])

    def test_unsplit_epic_rejected_with_finding(self):
        board = Board("t")
        epic, _ = board.create_story(StoryDraft(role="po", feature="everything", acceptance_criteria=("all",), is_epic=True))
        sprint = board.create_sprint(START, START + timedelta(days=5), 40.0)
        committed, findings = board.commit_sprint(sprint.id, [epic.id])
        assert committed is None
        assert any("unsplit epic" in f for f in findings)


class TestTaskProgress:
    def test_first_logger_becomes_assignee(self):
        board, _, tasks, _ = board_with_committed_sprint()
        task = board.log_task_progress(tasks[0].id, "lena", 2.0, 6.0, on=START)
        assert task.assignee == "lena" and task.status is TaskStatus.DOING

    def test_second_learner_rejected(self):
        board, _, tasks, _ = board_with_committed_sprint()
        board.log_task_progress(tasks[0].id, "lena", 2.0, 6.0, on=START)
        with pytest.raises(DifferentAssignee):
            board.log_task_progress(tasks[0].id, "marc", 1.0, 5.0, on=START)

    def test_zero_remaining_marks_done(self):
        board, _, tasks, _ = board_with_committed_sprint()
        task = board.log_task_progress(tasks[0].id, "lena", 16.0, 0.0, on=START)
        assert task.status is TaskStatus.DONE

    def test_negative_hours_rejected(self):
        board, _, tasks, _ = board_with_committed_sprint()
        with pytest.raises(NegativeHours):
            board.log_task_progress(tasks[0].id, "lena", -1.0, 5.0, on=START)

    def test_coach_reassignment_is_the_only_second_assignee_path(self):
        board, _, tasks, _ = board_with_committed_sprint()
        board.log_task_progress(tasks[0].id, "lena", 2.0, 6.0, on=START)
        board.reassign_task(tasks[0].id, "marc", by_coach="coach-1")
        task = board.log_task_progress(tasks[0].id, "marc", 1.0, 5.0, on=START)
        assert task.assignee == "marc"

    def test_burned_hours_accumulate(self):
        board, _, tasks, _ = board_with_committed_sprint()
        board.log_task_progress(tasks[0].id, "lena", 2.0, 10.0, on=START)
        task = board.log_task_progress(tasks[0].id, "lena", 3.5, 6.0, on=START)
        assert task.hours_logged == 5.5
        assert task.remaining_hours >= 0


class TestBurndown:
    def test_linear_burn_fixture(self):
        # 40h committed, 8h burned each of 5 days -> [40,32,24,16,8,0]
        board, story, tasks, sprint = board_with_committed_sprint(task_hours=(40.0,))
        remaining = 40.0
        for i in range(1, 6):
            remaining -= 8.0
            board.log_task_progress(
                tasks[0].id, "lena", 8.0, remaining, on=START + timedelta(days=i)
            )
        series = board.burndown(sprint.id)
        assert series.values() == [40.0, 32.0, 24.0, 16.0, 8.0, 0.0]

    def test_no_progress_is_flat(self):
        board, _, _, sprint = board_with_committed_sprint(task_hours=(40.0,))
        assert board.burndown(sprint.id).values() == [40.0] * 6

    def test_first_point_is_committed_total(self):
        board, _, tasks, sprint = board_with_committed_sprint(task_hours=(16.0, 24.0))
        board.log_task_progress(tasks[0].id, "lena", 4.0, 10.0, on=START + timedelta(days=2))
        series = board.burndown(sprint.id)
        assert series.values()[0] == 40.0

    def test_as_of_truncates(self):
        board, _, tasks, sprint = board_with_committed_sprint(task_hours=(40.0,))
        board.log_task_progress(tasks[0].id, "l", 8.0, 32.0, on=START + timedelta(days=1))
        series = board.burndown(sprint.id, as_of=START + timedelta(days=2))
        assert len(series.points) == 3

    def test_uncommitted_sprint_rejected(self):
        board = Board("t")
        sprint = board.create_sprint(START, START + timedelta(days=5), 40.0)
        with pytest.raises(NotCommitted):
            board.burndown(sprint.id)

    @pytest.mark.parametrize("seed", range(8))
    def test_random_logs_match_independent_replay(self, seed):
        import random

        rng = random.Random(seed)
        hours = [float(rng.randint(4, 12)) for _ in range(rng.randint(1, 4))]
        days = rng.randint(3, 9)
        board, story, tasks, sprint = board_with_committed_sprint(
            task_hours=tuple(hours), capacity=sum(hours) + 1, days=days
        )
        # independent oracle state: task id -> remaining by day
        oracle = {t.id: t.estimate_hours for t in tasks}
        expected = [sum(oracle.values())]
        log: list[tuple[int, str, float]] = []
        for day in range(1, days + 1):
            for t in tasks:
                if rng.random() < 0.6:
                    new_remaining = round(max(0.0, oracle[t.id] - rng.uniform(0, 5)), 2)
                    log.append((day, t.id, new_remaining))
                    oracle[t.id] = new_remaining
            expected.append(round(sum(oracle.values()), 10))
        for day, task_id, remaining in log:
            if board.stories[story.id].tasks:
                task = next(t for t in tasks if t.id == task_id)
                if task.assignee is None or True:
                    board.log_task_progress(
                        task_id, "solo", 1.0, remaining, on=START + timedelta(days=day)
                    )
        got = [round(v, 10) for v in board.burndown(sprint.id).values()]
        assert got == expected


class TestMetricsAndReview:
    def test_accuracy_one_when_on_estimate(self):
        board, story, tasks, sprint = board_with_committed_sprint(task_hours=(16.0, 24.0))
        for t in tasks:
            board.log_task_progress(t.id, "solo", t.estimate_hours, 0.0, on=START)
        metrics = board.sprint_metrics(sprint.id)
        assert metrics.estimation_accuracy == 1.0
        assert metrics.work_capacity_hours == 40.0

    def test_velocity_zero_without_done_stories(self):
        board, _, _, sprint = board_with_committed_sprint()
        assert board.sprint_metrics(sprint.id).velocity_points == 0

    def test_accuracy_ratio(self):
        # 30h logged vs 25h estimated on done tasks -> 1.2
        board, story, tasks, sprint = board_with_committed_sprint(task_hours=(25.0, 15.0))
        board.log_task_progress(tasks[0].id, "solo", 30.0, 0.0, on=START)
        metrics = board.sprint_metrics(sprint.id)
        assert metrics.estimation_accuracy == pytest.approx(1.2)

    def test_review_snapshot_and_freeze(self):
        board, story, tasks, sprint = board_with_committed_sprint()
        for t in tasks:
            board.log_task_progress(t.id, "solo", t.estimate_hours, 0.0, on=START)
        review = board.record_review(sprint.id, "good pace", [story.id], on=sprint.end_date)
        assert review.metrics_snapshot == board.sprint_metrics(sprint.id)
        assert board.stories[story.id].status is StoryStatus.DONE
        assert review.metrics_snapshot.velocity_points == 5.0

    def test_active_sprint_cannot_be_reviewed(self):
        board, story, _, sprint = board_with_committed_sprint()
        with pytest.raises(SprintActive):
            board.record_review(sprint.id, "", [story.id], on=START)

    def test_second_review_rejected(self):
        board, story, _, sprint = board_with_committed_sprint()
        board.record_review(sprint.id, "", [], on=sprint.end_date)
        with pytest.raises(AlreadyReviewed):
            board.record_review(sprint.id, "", [], on=sprint.end_date)

    def test_reviewed_sprint_cannot_recommit(self):
        board, story, _, sprint = board_with_committed_sprint()
        board.record_review(sprint.id, "", [], on=sprint.end_date)
        with pytest.raises(AlreadyReviewed):
            board.commit_sprint(sprint.id, [story.id])


class TestExport:
    def test_burndown_csv(self):
        board, _, tasks, sprint = board_with_committed_sprint(task_hours=(40.0,))
        board.log_task_progress(tasks[0].id, "l", 8.0, 32.0, on=START + timedelta(days=1))
        text = board.burndown_csv(sprint.id)
        lines = text.strip().splitlines()
        assert lines[0] == "day,remaining_hours"
        assert lines[1] == f"{START.isoformat()},40"
        assert lines[2] == f"{(START + timedelta(days=1)).isoformat()},32"
