"""Learning-style instrument handling and learner profiles.

The instrument is a 44-item a/b questionnaire, 11 items per dimension.
Scoring counts each answer as +1 toward the pole it matches and -1
against the other, giving an odd integer in [-11, +11] per dimension.
The processing dimension alone drives adaptation: a positive score
classifies the learner as active, zero or negative as reflective.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

__all__ = [
    "Dimension",
    "Pole",
    "ProcessingStyle",
    "ILSItem",
    "ILSInstrument",
    "ResponseSheet",
    "LearnerProfile",
    "IncompleteSheet",
    "UnknownItem",
    "OutOfRange",
    "InstrumentInvalid",
    "score_ils",
    "classify_processing",
    "validate_instrument",
    "load_instrument",
    "instrument_to_dict",
]

ITEM_COUNT = 44
ITEMS_PER_DIMENSION = 11


class Dimension(str, Enum):
    PERCEPTION = "perception"
    UNDERSTANDING = "understanding"
    PROCESSING = "processing"
    INPUT = "input"


# Order of the dimensions in the learner-profile 4-tuple.
DIMENSION_ORDER = (
    Dimension.PERCEPTION,
    Dimension.UNDERSTANDING,
    Dimension.PROCESSING,
    Dimension.INPUT,
)


class Pole(str, Enum):
    """Which pole an "a" answer counts toward. Positive processing = active."""

    POSITIVE = "positive"
    NEGATIVE = "negative"


class ProcessingStyle(str, Enum):
    ACTIVE = "active"
    REFLECTIVE = "reflective"


class IncompleteSheet(ValueError):
    pass


class UnknownItem(ValueError):
    pass


class OutOfRange(ValueError):
    pass


class InstrumentInvalid(ValueError):
    def __init__(self, findings: list[str]):
        super().__init__("; ".join(findings))
        self.findings = findings


@dataclass(frozen=True)
class ILSItem:
    id: int
    dimension: Dimension
    pole_of_a: Pole
    text: str = ""


@dataclass(frozen=True)
class ILSInstrument:
    items: tuple[ILSItem, ...]

    def item(self, item_id: int) -> ILSItem:
        for it in self.items:
            if it.id == item_id:
                return it
        raise UnknownItem(f"instrument has no item {item_id}")


@dataclass(frozen=True)
class ResponseSheet:
    learner_id: str
    answers: dict[int, str]  # item id -> "a" | "b"

    def is_complete(self, instrument: ILSInstrument) -> bool:
        return set(self.answers) == {it.id for it in instrument.items}


@dataclass(frozen=True)
class LearnerProfile:
    learner_id: str
    dims: tuple[int, int, int, int]  # (perception, understanding, processing, input)
    processing_style: ProcessingStyle
    scored_at: str  # UTC ISO-8601

    @property
    def processing(self) -> int:
        return self.dims[DIMENSION_ORDER.index(Dimension.PROCESSING)]


def classify_processing(d3: int) -> ProcessingStyle:
    """Active for a strictly positive processing score, reflective otherwise."""
    if not -11 <= d3 <= 11:
        raise OutOfRange(f"processing score {d3} outside [-11, +11]")
    return ProcessingStyle.ACTIVE if d3 > 0 else ProcessingStyle.REFLECTIVE

def score_ils(sheet: ResponseSheet, instrument: ILSInstrument) -> LearnerProfile:
    """Score a complete response sheet into a learner profile.

    Per dimension: (answers matching the positive pole) minus (answers
    matching the negative pole).
    """
    item_by_id = {it.id: it for it in instrument.items}
    unknown = sorted(set(sheet.answers) - set(item_by_id))
    if unknown:
        raise UnknownItem(f"answers reference unknown items {unknown}")
    missing = sorted(set(item_by_id) - set(sheet.answers))
    if missing:
        raise IncompleteSheet(f"sheet for {sheet.learner_id} missing items {missing}")

    scores = {dim: 0 for dim in Dimension}
    for item_id, answer in sheet.answers.items():
        if answer not in ("a", "b"):
            raise IncompleteSheet(f"item {item_id} has invalid answer {answer!r}")
        item = item_by_id[item_id]
        toward_positive = (answer == "a") == (item.pole_of_a is Pole.POSITIVE)
        scores[item.dimension] += 1 if toward_positive else -1

    dims = tuple(scores[d] for d in DIMENSION_ORDER)
    return LearnerProfile(
        learner_id=sheet.learner_id,
        dims=dims,  # type: ignore[arg-type]
        processing_style=classify_processing(scores[Dimension.PROCESSING]),
        scored_at=datetime.now(timezone.utc).isoformat(),
    )


def validate_instrument(instrument: ILSInstrument) -> list[str]:
    """Check instrument invariants; empty list means valid."""
    findings: list[str] = []
    ids = [it.id for it in instrument.items]
    if len(instrument.items) != ITEM_COUNT:
        findings.append(f"instrument has {len(instrument.items)} items, expected {ITEM_COUNT}")
    seen: set[int] = set()
    for item_id in ids:
        if item_id in seen:
            findings.append(f"duplicate item id {item_id}")
        seen.add(item_id)
    out_of_range = sorted(i for i in seen if not 1 <= i <= ITEM_COUNT)
    if out_of_range:
        findings.append(f"item ids outside 1..{ITEM_COUNT}: {out_of_range}")
    for dim in Dimension:
        count = sum(1 for it in instrument.items if it.dimension is dim)
        if count != ITEMS_PER_DIMENSION:
            findings.append(f"dimension {dim.value} has {count} items, expected {ITEMS_PER_DIMENSION}")
    return findings


def load_instrument(source: str | Path | dict) -> ILSInstrument:
    """Load an instrument from a JSON file or an already-parsed document."""
    if isinstance(source, (str, Path)):
        doc = json.loads(Path(source).read_text())
    else:
        doc = source
    try:
        items = tuple(
            ILSItem(
                id=int(entry["id"]),
                dimension=Dimension(entry["dimension"]),
                pole_of_a=Pole(entry["pole_of_a"]),
                text=entry.get("text", ""),
            )
            for entry in doc["items"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InstrumentInvalid([f"malformed instrument document: {exc}"]) from exc
    instrument = ILSInstrument(items=items)
    findings = validate_instrument(instrument)
    if findings:
        raise InstrumentInvalid(findings)
    return instrument


def instrument_to_dict(instrument: ILSInstrument) -> dict:
    return {
        "items": [
            {
                "id": it.id,
                "dimension": it.dimension.value,
                "pole_of_a": it.pole_of_a.value,
                "text": it.text,
            }
            for it in instrument.items
        ]
    }
