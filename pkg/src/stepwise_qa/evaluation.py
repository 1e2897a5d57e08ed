"""Exact match and numeracy-focused F1, plus error categorisation.

Normalisation is DROP-style and lives in one place, :func:`normalize_span`:

* lowercase, split on whitespace;
* a token that reads as a number (after dropping currency symbols,
  brackets, commas, trailing sentence punctuation and a ``%`` sign) becomes
  its 4-decimal canonical form, so ``0.6080`` and ``0.608`` agree;
* any other token is split on hyphens, stripped of punctuation, and
  dropped if it is an article (a, an, the).

``%`` is stripped without scaling: a percentage is expressed through the
separate scale annotation, not inside the number.
"""

from __future__ import annotations

import enum
import string
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .core import AnswerKind, AnswerValue, Prediction, QAInstance, QuestionType, Scale, StepTrace, split_items
from .equations import literals, parse_equation, shape
from .errors import EquationError
from .executor import FinalAnswer
from .numbers import canonical_number, parse_number

ARTICLES = frozenset({"a", "an", "the"})
_PUNCT = str.maketrans("", "", string.punctuation)
_NUMBER_WRAP = "$€£¥()[]{}\"'"


class ScaleMode(str, enum.Enum):
    STRICT = "strict"
    IGNORE = "ignore"


@dataclass(frozen=True)
class NormalizedSpan:
    text: str                 # normalised tokens joined by single spaces
    bag: frozenset[str]
    numbers: frozenset[str]


def _as_number_token(token: str) -> str | None:
    t = token.strip(_NUMBER_WRAP).rstrip(".,;:!?").strip(_NUMBER_WRAP)
    if t.endswith("%"):
        t = t[:-1]
    if not t or not any(ch.isdigit() for ch in t):
        return None
    value = parse_number(t)
    return canonical_number(value) if value is not None else None


def normalize_span(text: str) -> NormalizedSpan:
    tokens: list[str] = []
    numbers: set[str] = set()
    for raw in text.lower().split():
        num = _as_number_token(raw)
        if num is not None:
            tokens.append(num)
            numbers.add(num)
            continue
        for piece in raw.split("-"):
            num = _as_number_token(piece)
            if num is not None:
                tokens.append(num)
                numbers.add(num)
                continue
            piece = piece.translate(_PUNCT)
            if piece and piece not in ARTICLES:
                tokens.append(piece)
    return NormalizedSpan(" ".join(tokens), frozenset(tokens), frozenset(numbers))


def _span_strings(a: AnswerValue) -> list[str]:
    if a.kind is AnswerKind.SPANS:
        return list(a.value)
    return [a.render()]


def normalize_answer(a: AnswerValue) -> list[NormalizedSpan]:
    """One normalised span per answer span (a single one for non-list answers)."""
    return [normalize_span(s) for s in _span_strings(a)]


def _token_f1(pred: NormalizedSpan, gold: NormalizedSpan) -> float:
    if gold.numbers and not (gold.numbers & pred.numbers):
        return 0.0
    common = len(pred.bag & gold.bag)
    precision = common / len(pred.bag) if pred.bag else 1.0
    recall = common / len(gold.bag) if gold.bag else 1.0
    if precision == 0.0 and recall == 0.0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _aligned_f1(pred: list[NormalizedSpan], gold: list[NormalizedSpan]) -> float:
    # greedy one-to-one alignment by descending pairwise F1; ties by index
    pairs = sorted(
        ((_token_f1(p, g), gi, pi) for gi, g in enumerate(gold) for pi, p in enumerate(pred)),
        key=lambda t: (-t[0], t[1], t[2]),
    )
    used_g: set[int] = set()
    used_p: set[int] = set()
    total = 0.0
    for score, gi, pi in pairs:
        if gi in used_g or pi in used_p:
            continue
        used_g.add(gi)
        used_p.add(pi)
        total += score
    return total / max(len(gold), len(pred), 1)


def numeracy_f1(pred: AnswerValue, gold: AnswerValue | Sequence[AnswerValue]) -> float:
    """Token-bag F1 that is 0 whenever the gold number is not predicted exactly.

    ``gold`` may be a list of alternative gold answers; the best score wins.
    """
    golds = [gold] if isinstance(gold, AnswerValue) else list(gold)
    p = normalize_answer(pred)
    return max(_aligned_f1(p, normalize_answer(g)) for g in golds)


def _answer_key(a: AnswerValue) -> tuple[str, ...]:
    return tuple(sorted(s.text for s in normalize_answer(a)))


def scales_match(pred: Scale | None, gold: Scale | None) -> bool:
    return (pred or Scale.NONE) is (gold or Scale.NONE)


def exact_match(
    pred: AnswerValue,
    gold: AnswerValue | Sequence[AnswerValue],
    mode: ScaleMode | str = ScaleMode.STRICT,
    pred_scale: Scale | None = None,
    gold_scale: Scale | None = None,
) -> int:
    mode = ScaleMode(mode)
    if mode is ScaleMode.STRICT and not scales_match(pred_scale, gold_scale):
        return 0
    golds = [gold] if isinstance(gold, AnswerValue) else list(gold)
    key = _answer_key(pred)
    return int(any(key == _answer_key(g) for g in golds))


def score_record(
    pred: AnswerValue,
    gold: AnswerValue,
    mode: ScaleMode | str = ScaleMode.STRICT,
    pred_scale: Scale | None = None,
    gold_scale: Scale | None = None,
) -> tuple[int, float]:
    """(EM, F1) for one record; in strict mode a scale mismatch zeroes both."""
    mode = ScaleMode(mode)
    em = exact_match(pred, gold, mode, pred_scale, gold_scale)
    if mode is ScaleMode.STRICT and not scales_match(pred_scale, gold_scale):
        return em, 0.0
    return em, numeracy_f1(pred, gold)


@dataclass(frozen=True)
class TypeScore:
    em: float
    f1: float
    count: int


@dataclass
class EvalReport:
    em: float
    f1: float
    per_type: dict[QuestionType | None, TypeScore]
    n: int
    scale_mode: ScaleMode
    records: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "em": self.em,
            "f1": self.f1,
            "n": self.n,
            "scale_mode": self.scale_mode.value,
            "per_type": {
                (qt.value if qt else "untyped"): {"em": s.em, "f1": s.f1, "count": s.count}
                for qt, s in self.per_type.items()
            },
        }

    def pretty(self) -> str:
        lines = [
            f"n={self.n}  scale_mode={self.scale_mode.value}",
            f"EM  {100 * self.em:6.2f}",
            f"F1  {100 * self.f1:6.2f}",
        ]
        for qt, s in self.per_type.items():
            name = qt.value if qt else "untyped"
            lines.append(f"  {name:<12} n={s.count:<6} EM {100 * s.em:6.2f}  F1 {100 * s.f1:6.2f}")
        return "\n".join(lines)


def evaluate_split(
    records: Iterable[tuple[Prediction | None, FinalAnswer, QAInstance]],
    scale_mode: ScaleMode | str = ScaleMode.STRICT,
) -> EvalReport:
    mode = ScaleMode(scale_mode)
    sums: dict[QuestionType | None, list[float]] = {}
    detail = []
    for pred, final, gold in records:
        em, f1 = score_record(final.value, gold.gold_answer, mode,
                              pred.scale if pred is not None else None, gold.gold_scale)
        bucket = sums.setdefault(gold.gold_question_type, [0, 0.0, 0])
        bucket[0] += em
        bucket[1] += f1
        bucket[2] += 1
        detail.append({"id": gold.id, "em": em, "f1": f1})
    n = sum(b[2] for b in sums.values())
    per_type = {qt: TypeScore(b[0] / b[2], b[1] / b[2], b[2]) for qt, b in sums.items()}
    em = sum(b[0] for b in sums.values()) / n if n else 0.0
    f1 = sum(b[1] for b in sums.values()) / n if n else 0.0
    return EvalReport(em, f1, per_type, n, mode, detail)


# --- error taxonomy -------------------------------------------------------------

class ErrorStep(str, enum.Enum):
    EXTRACTOR = "extractor"
    REASONER = "reasoner"


class ErrorKind(str, enum.Enum):
    WRONG_EVIDENCE = "wrong_evidence"
    MISSED_EVIDENCE = "missed_evidence"
    REDUNDANT_EVIDENCE = "redundant_evidence"
    WRONG_OPERATORS = "wrong_operators"
    WRONG_VALUES = "wrong_values"

    @property
    def step(self) -> ErrorStep:
        if self in (ErrorKind.WRONG_OPERATORS, ErrorKind.WRONG_VALUES):
            return ErrorStep.REASONER
        return ErrorStep.EXTRACTOR


@dataclass(frozen=True)
class ErrorCategory:
    step: ErrorStep
    kind: ErrorKind

    @classmethod
    def of(cls, kind: ErrorKind) -> "ErrorCategory":
        return cls(kind.step, kind)


def _evidence_bag(cell: str) -> Counter:
    items = []
    for item in split_items(cell):
        if not item:
            continue
        num = _as_number_token(item)
        items.append(num if num is not None else " ".join(item.lower().split()))
    return Counter(items)


def _equation_parts(text: str):
    try:
        node = parse_equation(text)
        return shape(node), frozenset(literals(node))
    except (EquationError, RecursionError):
        return None


def categorize_error(pred: Prediction, gold: StepTrace) -> ErrorCategory | None:
    """Place an incorrect prediction in the Extractor/Reasoner error taxonomy.

    Evidence is compared first, as multisets of normalised items. Only when
    it matches are the equations compared: same literals with a different
    operator structure is a wrong-operators error, same structure with
    different literals is a wrong-values error. Returns ``None`` when
    neither comparison is decisive.
    """
    p, g = _evidence_bag(pred.evidence), _evidence_bag(gold.evidence)
    if p != g:
        if p < g:
            return ErrorCategory.of(ErrorKind.MISSED_EVIDENCE)
        if p > g:
            return ErrorCategory.of(ErrorKind.REDUNDANT_EVIDENCE)
        return ErrorCategory.of(ErrorKind.WRONG_EVIDENCE)
    pe, ge = _equation_parts(pred.equation), _equation_parts(gold.equation)
    if pe is None or ge is None:
        return None
    same_shape, same_values = pe[0] == ge[0], pe[1] == ge[1]
    if same_values and not same_shape:
        return ErrorCategory.of(ErrorKind.WRONG_OPERATORS)
    if same_shape and not same_values:
        return ErrorCategory.of(ErrorKind.WRONG_VALUES)
    return None
