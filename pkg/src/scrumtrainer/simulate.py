"""Headless cohort driver: profiling, group assignment, tailored
instruction traversal, synthetic pre/post scoring and the full analysis,
all deterministic per seed.

The gain generator rescales stratified normal deviates so each group's
sample mean and SD hit the configured targets exactly (before the
2-decimal rounding applied when scores are written out).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

from .adaptation import LearnerSession, compile_rules, complete_step, next_step, select_method
from .assessment import (
    Assignment,
    GainRecord,
    analyze_experiment,
    assign_groups,
    make_gain_record,
    moment_matched_sample,
    report_to_dict,
    write_gain_records,
)
from .ils import Dimension, ILSInstrument, ProcessingStyle, ResponseSheet, score_ils
from .syllabus import Method, TopicGraph

__all__ = ["CohortSpec", "SimulationResult", "simulate_cohort", "DEFAULT_COHORT_SPEC"]

# Reference cohort: 20 active + 6 reflective learners, methods sized
# 11/15 with per-style strata 9+2 and 11+4, giving 13 matched and 13
# mismatched learners with distinct gain spreads per group.
DEFAULT_COHORT_SPEC = {
    "styles": {"active": 20, "reflective": 6},
    "split": {
        "active": {"active": 9, "reflective": 2},
        "passive": {"active": 11, "reflective": 4},
    },
    "pre_score": {"mean": 45.0, "sd": 12.0, "min": 5.0, "max": 85.0},
    "gain": {
        "experimental": {"mean": 0.454, "sd": 0.067},
        "control": {"mean": 0.439, "sd": 0.175},
    },
}


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class CohortSpec:
    styles: dict[ProcessingStyle, int]
    split: dict[Method, dict[ProcessingStyle, int]]
    pre_mean: float
    pre_sd: float
    pre_min: float
    pre_max: float
    gain: dict[str, tuple[float, float]]  # group value -> (mean, sd)

    @classmethod
    def from_dict(cls, doc: dict) -> "CohortSpec":
        try:
            styles = {ProcessingStyle(k): int(v) for k, v in doc["styles"].items()}
            split = {
                Method(m): {ProcessingStyle(s): int(n) for s, n in per.items()}
                for m, per in doc["split"].items()
            }
            pre = doc["pre_score"]
            gain = {
                group: (float(g["mean"]), float(g["sd"]))
                for group, g in doc["gain"].items()
            }
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"malformed cohort spec: {exc}") from exc
        if any(n < 0 for n in styles.values()) or sum(styles.values()) == 0:
            raise SpecError("cohort must have a positive number of learners")
        if set(gain) != {"control", "experimental"}:
            raise SpecError("gain spec needs exactly the control and experimental groups")
        return cls(
            styles=styles,
            split=split,
            pre_mean=float(pre["mean"]),
            pre_sd=float(pre["sd"]),
            pre_min=float(pre.get("min", 0.0)),
            pre_max=float(pre.get("max", 100.0)),
            gain=gain,
        )


@dataclass
class SimulationResult:
    seed: int
    assignments: list[Assignment]
    records: list[GainRecord]
    traces: dict[str, list[str]]  # learner id -> delivered step paths
    csv_text: str
    report: dict
    warnings: list[str] = field(default_factory=list)


def _synthetic_sheet(
    learner_id: str, style: ProcessingStyle, instrument: ILSInstrument, rng: random.Random
) -> ResponseSheet:
    """Random complete sheet whose processing score matches the style."""
    processing_ids = [it.id for it in instrument.items if it.dimension is Dimension.PROCESSING]
    toward = rng.randint(6, 11) if style is ProcessingStyle.ACTIVE else rng.randint(0, 5)
    positive_items = set(rng.sample(processing_ids, toward))
    answers = {}
    for item in instrument.items:
        if item.dimension is Dimension.PROCESSING:
            toward_positive = item.id in positive_items
            answers[item.id] = "a" if toward_positive == (item.pole_of_a.value == "positive") else "b"
        else:
            answers[item.id] = rng.choice("ab")
    return ResponseSheet(learner_id=learner_id, answers=answers)


def simulate_cohort(
    graph: TopicGraph,
    instrument: ILSInstrument,
    spec: CohortSpec | dict,
    seed: int,
) -> SimulationResult:
    if isinstance(spec, dict):
        spec = CohortSpec.from_dict(spec)
    rng = random.Random(seed)
    rules = compile_rules(graph)

    # 1. profiling
    profiles = []
    warnings = []
    for style in (ProcessingStyle.ACTIVE, ProcessingStyle.REFLECTIVE):
        count = spec.styles.get(style, 0)
        if count == 0:
            warnings.append(f"cohort has no {style.value} learners")
        for i in range(1, count + 1):
            learner_id = f"{style.value[:3]}-{i:02d}"
            sheet = _synthetic_sheet(learner_id, style, instrument, rng)
            profile = score_ils(sheet, instrument)
            assert profile.processing_style is style
            profiles.append(profile)

    # 2. group assignment
    assignments = assign_groups(profiles, spec.split, seed)
    by_learner = {a.learner_id: a for a in assignments}

    # 3. tailored instruction traversal (method forced per assignment)
    profile_by_id = {p.learner_id: p for p in profiles}
    traces: dict[str, list[str]] = {}
    for learner_id in sorted(by_learner):
        assignment = by_learner[learner_id]
        method = select_method(profile_by_id[learner_id], override=assignment.method)
        session = LearnerSession(f"sim-{learner_id}", learner_id, method)
        trace = []
        while True:
            directive = next_step(session, rules, graph)
            if directive is None:
                break
            trace.append(directive.step_path)
            complete_step(
                session,
                rules,
                graph,
                directive.step_id,
                submission=f"simulated submission by {learner_id}" if directive.submission_required else None,
                at="1970-01-01T00:00:00+00:00",
            )
        traces[learner_id] = trace

    # 4. synthetic pre/post scores; gains moment-matched per group
    group_members = {
        group: sorted(a.learner_id for a in assignments if a.group.value == group)
        for group in spec.gain
    }
    gains: dict[str, float] = {}
    for idx, group in enumerate(sorted(group_members)):
        members = group_members[group]
        if not members:
            warnings.append(f"group {group} is empty")
            continue
        mean, sd = spec.gain[group]
        if len(members) == 1:
            sample = [mean]
        else:
            sample = moment_matched_sample(len(members), mean, sd, seed * 7919 + idx)
        for learner_id, g in zip(members, sample):
            gains[learner_id] = g

    records = []
    for learner_id in sorted(by_learner):
        assignment = by_learner[learner_id]
        pre = min(max(rng.gauss(spec.pre_mean, spec.pre_sd), spec.pre_min), spec.pre_max)
        pre = round(pre, 2)
        post = pre + gains[learner_id] * (100.0 - pre)
        post = round(min(max(post, 0.0), 100.0), 2)
        records.append(
            make_gain_record(learner_id, assignment.style, assignment.method, pre, post)
        )

    # 5. analysis
    csv_text = write_gain_records(records)
    report = analyze_experiment(
        records,
        metadata={
            "seed": seed,
            "cohort": {s.value: n for s, n in spec.styles.items()},
            "group_sizes": {g: len(m) for g, m in group_members.items()},
            "warnings": warnings,
        },
    )
    return SimulationResult(
        seed=seed,
        assignments=assignments,
        records=records,
        traces=traces,
        csv_text=csv_text,
        report=report_to_dict(report),
        warnings=warnings,
    )


def load_cohort_spec(path_or_none: str | None) -> CohortSpec:
    if path_or_none is None:
        return CohortSpec.from_dict(DEFAULT_COHORT_SPEC)
    with open(path_or_none) as fh:
        return CohortSpec.from_dict(json.load(fh))
