"""Re-derive the final answer from the model's intermediate step outputs.

The model's own step-3 answer is only a fallback: whenever the equation
step holds something executable (arithmetic, a '#'-list to count, a
comparison) or the question is a span type with an ``N.A.`` equation, the
answer is recomputed here.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .core import AnswerValue, Prediction, QuestionType, split_items
from .equations import eval_arithmetic, eval_comparison, round_half_even, validate_equation
from .errors import DivisionByZero, EquationError
from .markup import unescape_cell

NOT_APPLICABLE = "N.A."


class Branch(str, enum.Enum):
    MODEL_PASSTHROUGH = "model_passthrough"
    ARITHMETIC = "arithmetic"
    COUNT = "count"
    COMPARISON = "comparison"
    SPAN = "span"
    MULTI_SPAN = "multi_span"


@dataclass(frozen=True)
class FinalAnswer:
    value: AnswerValue
    branch: Branch
    flags: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {"final_answer": self.value.to_json(), "branch": self.branch.value, "flags": list(self.flags)}


def execute(o1: str, o2: str, o3: str, qt: QuestionType | None = None) -> FinalAnswer:
    """Refine the model answer ``o3`` using evidence ``o1`` and equation ``o2``.

    Never raises on content. A division by zero in an otherwise valid
    equation falls back to ``o3`` with the ``division_by_zero`` flag.
    """
    passthrough = AnswerValue.text(unescape_cell(o3))

    if validate_equation(o2):
        try:
            value = round_half_even(eval_arithmetic(o2))
        except DivisionByZero:
            return FinalAnswer(passthrough, Branch.MODEL_PASSTHROUGH, ("division_by_zero",))
        except EquationError:
            return FinalAnswer(passthrough, Branch.MODEL_PASSTHROUGH, ("eval_error",))
        return FinalAnswer(AnswerValue.number(value), Branch.ARITHMETIC)

    if "#" in o2:
        return FinalAnswer(AnswerValue.number(len(o2.split("#"))), Branch.COUNT)

    if ">" in o2 or "<" in o2:
        try:
            return FinalAnswer(AnswerValue.boolean(eval_comparison(o2)), Branch.COMPARISON)
        except DivisionByZero:
            return FinalAnswer(passthrough, Branch.MODEL_PASSTHROUGH, ("division_by_zero",))
        except EquationError:
            return FinalAnswer(passthrough, Branch.MODEL_PASSTHROUGH, ("comparison_unparseable",))

    if o2.strip() == NOT_APPLICABLE:
        if qt is QuestionType.SPAN:
            return FinalAnswer(AnswerValue.text(unescape_cell(o1.strip())), Branch.SPAN)
        if qt is QuestionType.MULTI_SPAN:
            return FinalAnswer(AnswerValue.spans(split_items(o1)), Branch.MULTI_SPAN)

    return FinalAnswer(passthrough, Branch.MODEL_PASSTHROUGH)


def execute_prediction(pred: Prediction) -> FinalAnswer:
    """Run :func:`execute` on a parsed prediction.

    Degraded predictions (no step table) have nothing to refine, so their
    statement answer is kept as-is.
    """
    if pred.degraded:
        return FinalAnswer(pred.final_answer, Branch.MODEL_PASSTHROUGH, ("degraded",))
    return execute(pred.evidence, pred.equation, pred.raw_answer, pred.question_type)
