"""Rule-based adaptation: compile the topic graph into condition/action
rules and drive per-learner sessions step by step.

Rules are generated from the graph rather than hand-authored, so the
rule set is total and deterministic by construction: for every reachable
session state exactly one rule applies per instructional method, with
simultaneous topic availability broken by the pack's default topic
order (rules are evaluated in compiled priority order).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum

from .ils import LearnerProfile, ProcessingStyle
from .syllabus import ActionKind, DeliveryStep, Method, StepKind, Topic, TopicGraph

__all__ = [
    "DirectiveKind",
    "RenderDirective",
    "RuleCondition",
    "AdaptationRule",
    "Submission",
    "LearnerSession",
    "NoApplicableRule",
    "SessionCorrupt",
    "OutOfOrderCompletion",
    "MissingSubmission",
    "select_method",
    "compile_rules",
    "next_step",
    "complete_step",
    "progress_report",
]

ANY_METHOD = "any"


class NoApplicableRule(RuntimeError):
    """No rule fired although topics remain; indicates a compiler or pack bug."""


class SessionCorrupt(ValueError):
    pass


class OutOfOrderCompletion(ValueError):
    pass


class MissingSubmission(ValueError):
    pass


class DirectiveKind(str, Enum):
    SHOW_CONTENT = "show_content"
    REQUEST_REFLECTION = "request_reflection"
    REQUEST_GROUP_WORK = "request_group_work"
    REQUEST_INDIVIDUAL_WORK = "request_individual_work"


_ACTION_DIRECTIVES = {
    ActionKind.REFLECT: DirectiveKind.REQUEST_REFLECTION,
    ActionKind.GROUP_ACTIVITY: DirectiveKind.REQUEST_GROUP_WORK,
    ActionKind.INDIVIDUAL_EXERCISE: DirectiveKind.REQUEST_INDIVIDUAL_WORK,
}


@dataclass(frozen=True)
class RenderDirective:
    kind: DirectiveKind
    topic_id: str
    step_id: str
    payload: str
    submission_required: bool

    @property
    def step_path(self) -> str:
        return f"{self.topic_id}/{self.step_id}"


@dataclass(frozen=True)
class RuleCondition:
    required_method: str  # "active" | "passive" | "any"
    required_completed: frozenset[str]  # topic ids and/or "topic/step" paths


@dataclass(frozen=True)
class AdaptationRule:
    source: str  # "enter:<topic>" or the predecessor "topic/step" path
    target: tuple[str, str]  # (topic id, step id)
    condition: RuleCondition
    action: RenderDirective
    priority: tuple[int, int]

    @property
    def is_entry(self) -> bool:
        return self.source.startswith("enter:")


@dataclass(frozen=True)
class Submission:
    text: str
    participants: tuple[str, ...] = ()
    submitted_at: str = ""


@dataclass
class LearnerSession:
    """Traversal state of one learner through the syllabus.

    The instructional method is frozen at session start; topic_scope,
    when set, restricts delivery to a subset of topics (remediation
    re-delivery), with prerequisites outside the scope treated as met.
    """

    session_id: str
    learner_id: str
    method: Method
    completed_steps: list[str] = field(default_factory=list)  # "topic/step" paths
    completed_topics: list[str] = field(default_factory=list)
    submissions: dict[str, Submission] = field(default_factory=dict)
    current_topic: str | None = None
    phase: str = "instruction"  # instruction | capstone | done
    topic_scope: frozenset[str] | None = None

    def scoped_topics(self, graph: TopicGraph) -> tuple[str, ...]:
        order = graph.default_topic_order
        if self.topic_scope is None:
            return order
        return tuple(t for t in order if t in self.topic_scope)


def select_method(profile: LearnerProfile, override: Method | None = None) -> Method:
    """Method matching the processing style, unless a coach forces one."""
    if override is not None:
        return override
    if profile.processing_style is ProcessingStyle.ACTIVE:
        return Method.ACTIVE
    return Method.PASSIVE


def _directive_for(topic: Topic, step: DeliveryStep) -> RenderDirective:
    if step.kind is StepKind.CONTENT:
        kind = DirectiveKind.SHOW_CONTENT
    else:
        kind = _ACTION_DIRECTIVES[step.action_kind]  # type: ignore[index]
    return RenderDirective(
        kind=kind,
        topic_id=topic.id,
        step_id=step.id,
        payload=step.body,
        submission_required=step.requires_submission,
    )


def compile_rules(graph: TopicGraph) -> list[AdaptationRule]:
    """One entry rule per topic/method gated on prerequisites, plus one
    transition rule per consecutive step pair within each plan."""
    rules: list[AdaptationRule] = []
    for order_idx, topic_id in enumerate(graph.default_topic_order):
        topic = graph.topics[topic_id]
        if topic.adaptive:
            variants = [(m.value, topic.plans[m.value]) for m in Method]
        else:
            variants = [(ANY_METHOD, topic.plans["shared"])]
        for method_key, plan in variants:
            steps = plan.steps
            rules.append(
                AdaptationRule(
                    source=f"enter:{topic_id}",
                    target=(topic_id, steps[0].id),
                    condition=RuleCondition(method_key, frozenset(topic.prerequisites)),
                    action=_directive_for(topic, steps[0]),
                    priority=(order_idx, 0),
                )
            )
            for i in range(1, len(steps)):
                source_path = f"{topic_id}/{steps[i - 1].id}"
                rules.append(
                    AdaptationRule(
                        source=source_path,
                        target=(topic_id, steps[i].id),
                        condition=RuleCondition(method_key, frozenset({source_path})),
                        action=_directive_for(topic, steps[i]),
                        priority=(order_idx, i),
                    )
                )
    rules.sort(key=lambda r: (r.priority, r.condition.required_method))
    return rules


def _check_session(session: LearnerSession, graph: TopicGraph) -> None:
    if session.current_topic is not None and session.current_topic not in graph.topics:
        raise SessionCorrupt(f"current_topic {session.current_topic} not in graph")
    for path in session.completed_steps:
        topic_id, _, step_id = path.partition("/")
        if topic_id not in graph.topics:
            raise SessionCorrupt(f"completed step {path} references unknown topic")
        plan = graph.topics[topic_id].plan_for(session.method)
        if step_id not in {s.id for s in plan.steps}:
            raise SessionCorrupt(f"completed step {path} not on the session's method path")


def _rule_applies(rule: AdaptationRule, session: LearnerSession, completed: set[str]) -> bool:
    cond = rule.condition
    if cond.required_method not in (ANY_METHOD, session.method.value):
        return False
    target_topic, target_step = rule.target
    if session.topic_scope is not None and target_topic not in session.topic_scope:
        return False
    if f"{target_topic}/{target_step}" in completed:
        return False
    for req in cond.required_completed:
        if req in completed:
            continue
        # prerequisite outside a remediation scope counts as met
        if "/" not in req and session.topic_scope is not None and req not in session.topic_scope:
            continue
        return False
    if rule.is_entry:
        return session.current_topic is None and target_topic not in session.completed_topics
    return session.current_topic == target_topic


def next_step(
    session: LearnerSession, rules: list[AdaptationRule], graph: TopicGraph
) -> RenderDirective | None:
    """Directive of the first applicable rule, or None when all topics
    on the session's path are complete."""
    _check_session(session, graph)
    if session.phase != "instruction":
        return None
    completed = set(session.completed_steps) | set(session.completed_topics)
    for rule in rules:
        if _rule_applies(rule, session, completed):
            return rule.action
    remaining = [t for t in session.scoped_topics(graph) if t not in session.completed_topics]
    if not remaining:
        return None
    raise NoApplicableRule(
        f"no rule applies for session {session.session_id} with topics {remaining} remaining"
    )


def complete_step(
    session: LearnerSession,
    rules: list[AdaptationRule],
    graph: TopicGraph,
    step_id: str,
    submission: str | None = None,
    participants: tuple[str, ...] = (),
    at: str | None = None,
) -> LearnerSession:
    """Record completion of the session's current pending step."""
    pending = next_step(session, rules, graph)
    if pending is None:
        raise OutOfOrderCompletion(f"session {session.session_id} has no pending step")
    if step_id not in (pending.step_id, pending.step_path):
        raise OutOfOrderCompletion(
            f"step {step_id} is not the pending step {pending.step_path}"
        )
    if pending.submission_required and not (submission and submission.strip()):
        raise MissingSubmission(f"step {pending.step_path} requires a submission")

    session.completed_steps.append(pending.step_path)
    if submission:
        session.submissions[pending.step_path] = Submission(
            text=submission,
            participants=tuple(participants),
            submitted_at=at or datetime.now(timezone.utc).isoformat(),
        )

    topic = graph.topics[pending.topic_id]
    plan = topic.plan_for(session.method)
    if pending.step_id == plan.steps[-1].id:
        session.completed_topics.append(pending.topic_id)
        session.current_topic = None
        remaining = [
            t for t in session.scoped_topics(graph) if t not in session.completed_topics
        ]
        if not remaining:
            session.phase = "capstone"
    else:
        session.current_topic = pending.topic_id
    return session


@dataclass(frozen=True)
class ProgressReport:
    topics_completed: int
    steps_completed: int
    percent: float


def progress_report(session: LearnerSession, graph: TopicGraph) -> ProgressReport:
    total = sum(
        len(graph.topics[t].plan_for(session.method).steps)
        for t in session.scoped_topics(graph)
    )
    done = len(session.completed_steps)
    return ProgressReport(
        topics_completed=len(session.completed_topics),
        steps_completed=done,
        percent=done / total if total else 1.0,
    )
