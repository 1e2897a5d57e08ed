"""Domain types shared by every other module. No I/O here."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Mapping, Union

from .errors import InvariantError, UnknownQuestionType, UnknownScale
from .markup import is_clean_cell, unescape_cell
from .numbers import canonical_number, parse_number, to_decimal


class Scale(enum.Enum):
    NONE = "none"
    PERCENT = "percent"
    THOUSAND = "thousand"
    MILLION = "million"
    BILLION = "billion"

    @property
    def factor(self) -> Decimal:
        return _SCALE_FACTORS[self]

    def render(self) -> str:
        return self.value


_SCALE_FACTORS = {
    Scale.NONE: Decimal(1),
    Scale.PERCENT: Decimal("0.01"),
    Scale.THOUSAND: Decimal(10) ** 3,
    Scale.MILLION: Decimal(10) ** 6,
    Scale.BILLION: Decimal(10) ** 9,
}

SCALE_ALIASES: Mapping[str, Scale] = {s.value: s for s in Scale}


def scale_parse(s: str) -> Scale:
    try:
        return SCALE_ALIASES[s.strip().lower()]
    except (KeyError, AttributeError):
        raise UnknownScale(f"unknown scale {s!r}") from None


class QuestionType(enum.Enum):
    SPAN = "span"
    MULTI_SPAN = "multi_span"
    COUNT = "count"
    ARITHMETIC = "arithmetic"

    def render(self) -> str:
        """Surface form used inside the five-step response table."""
        return _TEMPLATE_NAMES[self]


# Lookup is case-insensitive, so keys are stored lowercased.
QUESTION_TYPE_ALIASES: Mapping[str, QuestionType] = {
    "single span": QuestionType.SPAN,
    "span": QuestionType.SPAN,
    "multiple spans": QuestionType.MULTI_SPAN,
    "count": QuestionType.COUNT,
    "counting": QuestionType.COUNT,
    "arithmetic": QuestionType.ARITHMETIC,
}

_TEMPLATE_NAMES = {
    QuestionType.SPAN: "Single span",
    QuestionType.MULTI_SPAN: "Multiple spans",
    QuestionType.COUNT: "Count",
    QuestionType.ARITHMETIC: "Arithmetic",
}


def question_type_parse(s: str) -> QuestionType:
    try:
        return QUESTION_TYPE_ALIASES[s.strip().lower()]
    except (KeyError, AttributeError):
        raise UnknownQuestionType(f"unknown question type {s!r}") from None


class Dataset(str, enum.Enum):
    FINQA = "finqa"
    TATQA = "tatqa"
    TATDQA = "tatdqa"


class Schema(str, enum.Enum):
    THREE_STEP = "three_step"
    FIVE_STEP = "five_step"
    E2E = "e2e"

    @property
    def n_steps(self) -> int:
        return {Schema.THREE_STEP: 3, Schema.FIVE_STEP: 5}[self]


@dataclass(frozen=True)
class Table:
    rows: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.rows)
        object.__setattr__(self, "rows", rows)
        if not rows:
            raise InvariantError("table needs at least one row")
        width = len(rows[0])
        if width < 1 or any(len(r) != width for r in rows):
            raise InvariantError("table rows must all have the same non-zero length")
        for r in rows:
            for c in r:
                if not is_clean_cell(c):
                    raise InvariantError(f"cell {c!r} has an unescaped pipe or newline")

    @property
    def n_cols(self) -> int:
        return len(self.rows[0])


class AnswerKind(str, enum.Enum):
    NUMBER = "number"
    TEXT = "text"
    SPANS = "spans"
    BOOLEAN = "boolean"


AnswerPayload = Union[Decimal, str, tuple, bool]


@dataclass(frozen=True)
class AnswerValue:
    kind: AnswerKind
    value: AnswerPayload

    @classmethod
    def number(cls, x) -> "AnswerValue":
        return cls(AnswerKind.NUMBER, to_decimal(x))

    @classmethod
    def text(cls, s: str) -> "AnswerValue":
        return cls(AnswerKind.TEXT, str(s))

    @classmethod
    def spans(cls, items) -> "AnswerValue":
        return cls(AnswerKind.SPANS, tuple(str(i) for i in items))

    @classmethod
    def boolean(cls, b: bool) -> "AnswerValue":
        return cls(AnswerKind.BOOLEAN, bool(b))

    def render(self) -> str:
        if self.kind is AnswerKind.NUMBER:
            return canonical_number(self.value)
        if self.kind is AnswerKind.BOOLEAN:
            return "yes" if self.value else "no"
        if self.kind is AnswerKind.SPANS:
            return " # ".join(self.value)
        return self.value

    def as_number(self) -> Decimal | None:
        """Numeric reading of the answer, if it has one."""
        if self.kind is AnswerKind.NUMBER:
            return self.value
        if self.kind is AnswerKind.TEXT:
            return parse_number(self.value)
        return None

    def to_json(self) -> dict:
        if self.kind is AnswerKind.NUMBER:
            return {"type": "number", "value": canonical_number(self.value)}
        if self.kind is AnswerKind.SPANS:
            return {"type": "spans", "value": list(self.value)}
        return {"type": self.kind.value, "value": self.value}

    @classmethod
    def from_json(cls, obj: dict) -> "AnswerValue":
        kind = AnswerKind(obj["type"])
        if kind is AnswerKind.NUMBER:
            return cls.number(str(obj["value"]))
        if kind is AnswerKind.SPANS:
            return cls.spans(obj["value"])
        if kind is AnswerKind.BOOLEAN:
            return cls.boolean(obj["value"])
        return cls.text(obj["value"])


@dataclass(frozen=True)
class QAInstance:
    id: str
    dataset: Dataset
    question: str
    texts: tuple[str, ...] = ()
    table: Table | None = None
    gold_answer: AnswerValue | None = None
    gold_derivation: str | None = None
    gold_question_type: QuestionType | None = None
    gold_scale: Scale | None = None

    def __post_init__(self):
        object.__setattr__(self, "texts", tuple(self.texts))
        if self.dataset is Dataset.FINQA and self.table is None:
            raise InvariantError(f"{self.id}: finqa instances need a table")
        if self.dataset is Dataset.TATDQA and self.table is not None:
            raise InvariantError(f"{self.id}: tatdqa instances carry no structured table")
        if self.dataset is Dataset.FINQA and self.gold_scale is not None:
            raise InvariantError(f"{self.id}: finqa has no scale annotation")
        if self.dataset is not Dataset.FINQA and self.gold_answer is not None and self.gold_scale is None:
            raise InvariantError(f"{self.id}: labeled {self.dataset.value} instances need a scale")

    @property
    def schema(self) -> Schema:
        return Schema.THREE_STEP if self.dataset is Dataset.FINQA else Schema.FIVE_STEP


@dataclass(frozen=True)
class StepTrace:
    """Step index (1-based) to output cell text.

    Outputs are kept in escaped cell form, so they never hold a raw pipe.
    """

    steps: Mapping[int, str]
    schema: Schema

    def __post_init__(self):
        if self.schema is Schema.E2E:
            raise InvariantError("e2e responses have no step trace")
        steps = {int(k): str(v).strip() for k, v in dict(self.steps).items()}
        if set(steps) != set(range(1, self.schema.n_steps + 1)):
            raise InvariantError(
                f"{self.schema.value} trace needs steps 1..{self.schema.n_steps}, got {sorted(steps)}"
            )
        for v in steps.values():
            if not is_clean_cell(v):
                raise InvariantError(f"step output {v!r} has an unescaped pipe or newline")
        object.__setattr__(self, "steps", dict(sorted(steps.items())))

    @classmethod
    def of(cls, *outputs: str) -> "StepTrace":
        schema = {3: Schema.THREE_STEP, 5: Schema.FIVE_STEP}.get(len(outputs))
        if schema is None:
            raise InvariantError(f"no schema has {len(outputs)} steps")
        return cls(dict(enumerate(outputs, start=1)), schema)

    def __getitem__(self, i: int) -> str:
        return self.steps[i]

    def __eq__(self, other):
        if not isinstance(other, StepTrace):
            return NotImplemented
        return self.schema is other.schema and dict(self.steps) == dict(other.steps)

    def __hash__(self):
        return hash((self.schema, tuple(self.steps.items())))

    # Positions of the Algorithm inputs within each schema.
    @property
    def evidence(self) -> str:
        return self.steps[1 if self.schema is Schema.THREE_STEP else 2]

    @property
    def equation(self) -> str:
        return self.steps[2 if self.schema is Schema.THREE_STEP else 3]

    @property
    def answer(self) -> str:
        return self.steps[3 if self.schema is Schema.THREE_STEP else 4]


@dataclass(frozen=True)
class Prediction:
    evidence: str
    equation: str
    raw_answer: str
    final_answer: AnswerValue
    question_type: QuestionType | None = None
    scale: Scale | None = None
    flags: tuple[str, ...] = field(default=())

    @property
    def degraded(self) -> bool:
        return "degraded" in self.flags

    def to_json(self) -> dict:
        return {
            "question_type": self.question_type.value if self.question_type else None,
            "evidence": self.evidence,
            "equation": self.equation,
            "raw_answer": self.raw_answer,
            "scale": self.scale.value if self.scale else None,
            "final_answer": self.final_answer.to_json(),
            "flags": list(self.flags),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Prediction":
        qt = obj.get("question_type")
        sc = obj.get("scale")
        return cls(
            evidence=obj.get("evidence", ""),
            equation=obj.get("equation", ""),
            raw_answer=obj.get("raw_answer", ""),
            final_answer=AnswerValue.from_json(obj["final_answer"]),
            question_type=QuestionType(qt) if qt else None,
            scale=Scale(sc) if sc else None,
            flags=tuple(obj.get("flags", ())),
        )


def split_items(text: str) -> list[str]:
    """Split a '#'-separated output cell into trimmed, unescaped items."""
    return [unescape_cell(part.strip()) for part in text.split("#")]


def join_items(items) -> str:
    return " # ".join(items)
