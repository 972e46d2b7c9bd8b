"""Scrum syllabus as a prerequisite DAG of topics with delivery plans.

Each topic carries either one shared plan or two style-specific plans
(active/passive), an ordered list of content and action steps. Packs are
versioned JSON documents; the default pack ships with the package.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

__all__ = [
    "Method",
    "SHARED",
    "StepKind",
    "ActionKind",
    "DeliveryStep",
    "DeliveryPlan",
    "Topic",
    "TopicGraph",
    "ParseError",
    "ValidationError",
    "UnknownTopic",
    "load_content_pack",
    "default_pack_path",
    "validate_graph",
    "available_topics",
    "pack_to_dict",
]

PACK_SCHEMA_VERSION = 1
SHARED = "shared"


class Method(str, Enum):
    """Instructional method a topic is delivered through."""

    ACTIVE = "active"
    PASSIVE = "passive"


class StepKind(str, Enum):
    CONTENT = "content"
    ACTION = "action"


class ActionKind(str, Enum):
    REFLECT = "reflect"
    GROUP_ACTIVITY = "group_activity"
    INDIVIDUAL_EXERCISE = "individual_exercise"


class ParseError(ValueError):
    pass


class ValidationError(ValueError):
    def __init__(self, findings: list[str]):
        super().__init__("; ".join(findings))
        self.findings = findings


class UnknownTopic(KeyError):
    pass


@dataclass(frozen=True)
class DeliveryStep:
    id: str
    kind: StepKind
    body: str
    action_kind: ActionKind | None = None
    requires_submission: bool = False


@dataclass(frozen=True)
class DeliveryPlan:
    steps: tuple[DeliveryStep, ...]


@dataclass(frozen=True)
class Topic:
    id: str
    title: str
    prerequisites: frozenset[str]
    adaptive: bool
    plans: dict[str, DeliveryPlan]  # keys: "active"+"passive", or "shared"
    editorial: bool = False  # plan text authored for this artifact, not source material

    def plan_for(self, method: Method) -> DeliveryPlan:
        if self.adaptive:
            return self.plans[method.value]
        return self.plans[SHARED]


@dataclass(frozen=True)
class TopicGraph:
    topics: dict[str, Topic]
    default_topic_order: tuple[str, ...]
    name: str = ""

    def topic(self, topic_id: str) -> Topic:
        try:
            return self.topics[topic_id]
        except KeyError:
            raise UnknownTopic(topic_id) from None


def _check_topic(topic: Topic) -> list[str]:
    findings = []
    keys = set(topic.plans)
    if topic.adaptive and keys != {Method.ACTIVE.value, Method.PASSIVE.value}:
        findings.append(
            f"topic {topic.id}: adaptive topics need exactly active and passive plans, got {sorted(keys)}"
        )
    if not topic.adaptive and keys != {SHARED}:
        findings.append(
            f"topic {topic.id}: missing plan; non-adaptive topics need exactly one shared plan, got {sorted(keys)}"
        )
    for key, plan in topic.plans.items():
        if not plan.steps:
            findings.append(f"topic {topic.id}: empty plan {key}")
        step_ids = [s.id for s in plan.steps]
        if len(step_ids) != len(set(step_ids)):
            findings.append(f"topic {topic.id}: duplicate step ids in plan {key}")
        for step in plan.steps:
            if (step.kind is StepKind.ACTION) != (step.action_kind is not None):
                findings.append(
                    f"topic {topic.id}: step {step.id} action_kind must be present iff kind is action"
                )
    return findings


def validate_graph(graph: TopicGraph) -> list[str]:
    """Check all graph invariants; empty list means valid."""
    findings: list[str] = []
    for topic in graph.topics.values():
        findings.extend(_check_topic(topic))
        for prereq in topic.prerequisites:
            if prereq not in graph.topics:
                findings.append(f"topic {topic.id}: unresolved prerequisite {prereq}")

    # Kahn's algorithm; leftover nodes mean a cycle.
    indegree = {
        tid: len([p for p in t.prerequisites if p in graph.topics])
        for tid, t in graph.topics.items()
    }
    queue = sorted(tid for tid, deg in indegree.items() if deg == 0)
    seen = 0
    while queue:
        node = queue.pop()
        seen += 1
        for tid, t in graph.topics.items():
            if node in t.prerequisites:
                indegree[tid] -= 1
                if indegree[tid] == 0:
                    queue.append(tid)
    if seen != len(graph.topics):
        cyclic = sorted(tid for tid, deg in indegree.items() if deg > 0)
        findings.append(f"prerequisite cycle involving {cyclic}")

    order = graph.default_topic_order
    if sorted(order) != sorted(graph.topics):
        findings.append("default_topic_order must list every topic exactly once")
    else:
        position = {tid: i for i, tid in enumerate(order)}
        for tid in order:
            for prereq in graph.topics[tid].prerequisites:
                if prereq in position and position[prereq] > position[tid]:
                    findings.append(
                        f"default_topic_order places {tid} before its prerequisite {prereq}"
                    )
    return findings


def available_topics(graph: TopicGraph, completed: set[str]) -> set[str]:
    """Topics not yet completed whose prerequisites are all completed."""
    unknown = completed - set(graph.topics)
    if unknown:
        raise UnknownTopic(f"completed references unknown topics {sorted(unknown)}")
    return {
        tid
        for tid, topic in graph.topics.items()
        if tid not in completed and topic.prerequisites <= completed
    }


def _parse_step(raw: dict) -> DeliveryStep:
    kind = StepKind(raw["kind"])
    action_kind = ActionKind(raw["action_kind"]) if "action_kind" in raw else None
    return DeliveryStep(
        id=str(raw["id"]),
        kind=kind,
        body=str(raw.get("body", "")),
        action_kind=action_kind,
        requires_submission=bool(raw.get("requires_submission", False)),
    )


def load_content_pack(source: str | Path | dict) -> TopicGraph:
    """Load and validate a content pack from JSON or a parsed document."""
    if isinstance(source, (str, Path)):
        try:
            doc = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read content pack {source}: {exc}") from exc
    else:
        doc = source

    try:
        version = int(doc.get("schema_version", 0))
        if version != PACK_SCHEMA_VERSION:
            raise ParseError(f"unsupported pack schema_version {version}")
        topics: dict[str, Topic] = {}
        for raw in doc["topics"]:
            plans = {
                key: DeliveryPlan(steps=tuple(_parse_step(s) for s in spec["steps"]))
                for key, spec in raw["plans"].items()
            }
            topic = Topic(
                id=str(raw["id"]),
                title=str(raw["title"]),
                prerequisites=frozenset(str(p) for p in raw.get("prerequisites", [])),
                adaptive=bool(raw["adaptive"]),
                plans=plans,
                editorial=bool(raw.get("editorial", False)),
            )
            if topic.id in topics:
                raise ParseError(f"duplicate topic id {topic.id}")
            topics[topic.id] = topic
        order = tuple(str(t) for t in doc["default_topic_order"])
        graph = TopicGraph(topics=topics, default_topic_order=order, name=str(doc.get("name", "")))
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed content pack: {exc}") from exc

    findings = validate_graph(graph)
    if findings:
        raise ValidationError(findings)
    return graph


def default_pack_path() -> Path:
    return Path(str(resources.files("scrumtrainer.packs") / "default_pack.json"))


def pack_to_dict(graph: TopicGraph) -> dict:
    """Serialize a graph back to the pack document form (round-trips)."""
    def step_dict(step: DeliveryStep) -> dict:
        out: dict = {"id": step.id, "kind": step.kind.value, "body": step.body}
        if step.action_kind is not None:
            out["action_kind"] = step.action_kind.value
        if step.requires_submission:
            out["requires_submission"] = True
        return out

    return {
        "schema_version": PACK_SCHEMA_VERSION,
        "name": graph.name,
        "topics": [
            {
                "id": t.id,
                "title": t.title,
                "prerequisites": sorted(t.prerequisites),
                "adaptive": t.adaptive,
                **({"editorial": True} if t.editorial else {}),
                "plans": {
                    key: {"steps": [step_dict(s) for s in plan.steps]}
                    for key, plan in t.plans.items()
                },
            }
            for t in (graph.topics[tid] for tid in graph.default_topic_order)
        ],
        "default_topic_order": list(graph.default_topic_order),
    }
