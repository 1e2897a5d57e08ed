"""Synthesise gold step-wise responses from annotated derivations.

Each emitted training instance is checked by running its own trace through
the external executor; if that does not reproduce the annotated answer the
instance is reported instead of emitted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal

from .core import (
    AnswerKind,
    AnswerValue,
    Dataset,
    QAInstance,
    QuestionType,
    Scale,
    Schema,
    StepTrace,
    Table,
    join_items,
)
from .errors import (
    DanglingStepRef,
    InconsistentGold,
    InvariantError,
    ProgramError,
    UnsupportedOperator,
)
from .executor import NOT_APPLICABLE, Branch, FinalAnswer, execute
from .markup import normalize_cell, unescape_cell
from .numbers import round_half_even
from .parsing import render_response, render_statement
from .prompts import PromptText, build_e2e_prompt, build_stepwise_prompt

# --- FinQA programs -----------------------------------------------------------

_BINARY_OPS = {"add": "+", "subtract": "-", "multiply": "*", "divide": "/"}
_TABLE_OPS = ("table_sum", "table_average", "table_max", "table_min")
_STEP_RE = re.compile(r"\s*([A-Za-z_]+)\s*\(([^()]*)\)\s*(,|$)")
_CONST_RE = re.compile(r"^const_(m?)([0-9]+(?:\.[0-9]+)?)$")
_CELL_NUMBER = re.compile(r"[0-9][0-9,]*(?:\.[0-9]+)?|\.[0-9]+")


def parse_program(program: str) -> list[tuple[str, list[str]]]:
    steps = []
    pos = 0
    text = program.strip()
    if text.endswith("EOF"):
        text = text[:-3].rstrip().rstrip(",")
    while pos < len(text):
        m = _STEP_RE.match(text, pos)
        if m is None:
            raise ProgramError(f"malformed program near {text[pos:pos + 30]!r}")
        steps.append((m.group(1), [a.strip() for a in m.group(2).split(",")]))
        pos = m.end()
    if not steps:
        raise ProgramError("empty program")
    return steps


def _argument(arg: str, rendered: list[str]) -> str:
    if arg.startswith("#"):
        try:
            k = int(arg[1:])
        except ValueError:
            raise ProgramError(f"bad step reference {arg!r}") from None
        if not 0 <= k < len(rendered):
            raise DanglingStepRef(arg)
        return rendered[k]
    m = _CONST_RE.match(arg)
    if m:
        return ("-" if m.group(1) else "") + m.group(2)
    # '%' is dropped: the annotated arithmetic already uses the bare value
    return arg.replace("$", "").replace("%", "").strip()


def _cell_number(cell: str) -> str | None:
    raw = unescape_cell(cell)
    m = _CELL_NUMBER.search(raw)
    if m is None:
        return None
    negative = raw.strip().startswith("(") or raw.strip().startswith("-")
    return ("-" if negative else "") + m.group()


def _row_numbers(table: Table | None, name: str, op: str) -> list[str]:
    if table is None:
        raise UnsupportedOperator(op)
    key = name.strip().lower()
    for row in table.rows:
        if unescape_cell(row[0]).strip().lower() == key:
            nums = [n for n in (_cell_number(c) for c in row[1:]) if n is not None]
            if nums:
                return nums
            break
    raise ProgramError(f"{op}: no numeric table row named {name!r}")


def finqa_program_to_infix(program: str, table: Table | None = None) -> str:
    """Turn a FinQA operator program into one infix equation.

    Step references are inlined as parenthesized sub-expressions. A
    one-step program keeps its parentheses; the last step of a longer
    program is left unwrapped, e.g. ``"(201 - 125) / 125"``. ``greater``
    becomes a root comparison. Table aggregations need ``table``.
    """
    rendered: list[str] = []
    steps = parse_program(program)
    for op, args in steps:
        if op in _BINARY_OPS or op == "greater":
            if len(args) != 2:
                raise ProgramError(f"{op} takes two arguments, got {len(args)}")
            a, b = (_argument(x, rendered) for x in args)
            sym = _BINARY_OPS.get(op, ">")
            rendered.append(f"{a} > {b}" if op == "greater" else f"({a} {sym} {b})")
        elif op in _TABLE_OPS:
            nums = _row_numbers(table, args[0], op)
            if op == "table_sum":
                rendered.append("(" + " + ".join(nums) + ")")
            elif op == "table_average":
                rendered.append("((" + " + ".join(nums) + f") / {len(nums)})")
            else:
                pick = max if op == "table_max" else min
                rendered.append(pick(nums, key=lambda n: Decimal(n.replace(",", ""))))
        else:
            raise UnsupportedOperator(op)
    final = rendered[-1]
    if len(steps) > 1 and steps[-1][0] in _BINARY_OPS:
        final = final[1:-1]
    return final


# --- gold traces ----------------------------------------------------------------

_LITERAL = re.compile(r"(?<![0-9.])(?:[0-9]{1,3}(?:,[0-9]{3})+(?![0-9])|[0-9]+)(?:\.[0-9]+)?|\.[0-9]+")
_CURRENCY = str.maketrans("", "", "$€£¥%")


def clean_derivation(derivation: str) -> str:
    """Strip currency symbols and '%' and collapse whitespace."""
    return " ".join(derivation.translate(_CURRENCY).split())


def evidence_from_equation(equation: str) -> list[str]:
    """Numeric literals in order of appearance, consecutive repeats dropped."""
    out: list[str] = []
    for lit in _LITERAL.findall(equation):
        if not out or out[-1] != lit:
            out.append(lit)
    return out


def numbers_agree(computed: Decimal, gold: Decimal) -> bool:
    """Equal after 4-place half-even rounding.

    Golds annotated at coarser precision (``1.64`` for ``1.6390...``) do
    not agree: the executor would override them at inference time, so such
    traces would teach an answer that then scores as wrong.
    """
    return round_half_even(computed) == round_half_even(gold)


def answers_agree(got: AnswerValue, gold: AnswerValue) -> bool:
    if gold.kind is AnswerKind.NUMBER:
        x = got.as_number()
        return x is not None and numbers_agree(x, gold.value)
    if gold.kind is AnswerKind.BOOLEAN:
        return got.kind is AnswerKind.BOOLEAN and got.value == gold.value
    if gold.kind is AnswerKind.SPANS:
        return got.kind is AnswerKind.SPANS and [s.strip() for s in got.value] == [s.strip() for s in gold.value]
    return got.kind is AnswerKind.TEXT and got.value.strip() == gold.value.strip()


@dataclass(frozen=True)
class TrainingInstance:
    id: str
    prompt: PromptText
    gold_response: str
    trace: StepTrace | None = None
    executed: FinalAnswer | None = None

    @property
    def text(self) -> str:
        return self.prompt.text + self.gold_response

    def to_json(self) -> dict:
        return {"id": self.id, "prompt": self.prompt.text, "gold_response": self.gold_response}


@dataclass
class GoldReport:
    emitted: int = 0
    inconsistent: list[dict] = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.emitted + len(self.inconsistent)

    def to_json(self) -> dict:
        return {"emitted": self.emitted, "inconsistent_count": len(self.inconsistent),
                "inconsistent": self.inconsistent}


def _expected_branches(inst: QAInstance) -> set[Branch]:
    qt = inst.gold_question_type
    if inst.dataset is Dataset.FINQA or qt is QuestionType.ARITHMETIC:
        if inst.gold_answer is not None and inst.gold_answer.kind is AnswerKind.BOOLEAN:
            return {Branch.COMPARISON}
        return {Branch.ARITHMETIC}
    return {{QuestionType.SPAN: Branch.SPAN, QuestionType.MULTI_SPAN: Branch.MULTI_SPAN,
             QuestionType.COUNT: Branch.COUNT}[qt]}


def _evidence_equation(inst: QAInstance) -> tuple[str, str]:
    """Raw (unescaped) evidence and equation strings for ``inst``."""
    qt = inst.gold_question_type
    gold = inst.gold_answer
    derivation = inst.gold_derivation or ""
    if inst.dataset is Dataset.FINQA:
        try:
            equation = finqa_program_to_infix(derivation, inst.table)
        except ProgramError as exc:
            raise InconsistentGold(inst.id, f"program conversion failed: {exc}") from None
        return join_items(evidence_from_equation(equation)), equation
    if qt is QuestionType.ARITHMETIC:
        equation = clean_derivation(derivation)
        return join_items(evidence_from_equation(equation)), equation
    if qt is QuestionType.COUNT:
        items = [s.strip() for s in derivation.split("#") if s.strip()]
        if not items:
            raise InconsistentGold(inst.id, "count question without derivation items")
        return join_items(items), join_items(items)
    if qt is QuestionType.MULTI_SPAN:
        return join_items(gold.value), NOT_APPLICABLE
    return gold.render(), NOT_APPLICABLE


def _make_trace(inst: QAInstance, evidence: str, equation: str) -> StepTrace:
    answer = inst.gold_answer.render()
    if inst.schema is Schema.THREE_STEP:
        cells = [evidence, equation, answer]
    else:
        cells = [inst.gold_question_type.render(), evidence, equation, answer, inst.gold_scale.render()]
    try:
        return StepTrace.of(*(normalize_cell(c) for c in cells))
    except InvariantError as exc:
        raise InconsistentGold(inst.id, str(exc)) from None


def _run(trace: StepTrace, inst: QAInstance) -> FinalAnswer:
    qt = inst.gold_question_type if trace.schema is Schema.FIVE_STEP else None
    return execute(trace.evidence, trace.equation, trace.answer, qt)


def _check(inst: QAInstance, trace: StepTrace) -> FinalAnswer | str:
    result = _run(trace, inst)
    if result.branch not in _expected_branches(inst):
        return f"executor took branch {result.branch.value}"
    if not answers_agree(result.value, inst.gold_answer):
        return f"executed {result.value.render()!r} but gold is {inst.gold_answer.render()!r}"
    return result


def build_gold_response(inst: QAInstance) -> TrainingInstance:
    """Step-wise training instance with a verified gold trace.

    Raises :class:`InconsistentGold` when the trace does not execute to the
    annotated answer.
    """
    if inst.gold_answer is None:
        raise InconsistentGold(inst.id, "instance has no gold answer")
    prompt = build_stepwise_prompt(inst)
    evidence, equation = _evidence_equation(inst)
    trace = _make_trace(inst, evidence, equation)
    outcome = _check(inst, trace)
    if isinstance(outcome, str) and inst.gold_scale is Scale.PERCENT and inst.gold_question_type is QuestionType.ARITHMETIC:
        # percentage derivations are often annotated as the bare ratio
        repaired = _make_trace(inst, evidence, f"({equation}) * 100")
        second = _check(inst, repaired)
        if not isinstance(second, str):
            trace, outcome = repaired, second
    if isinstance(outcome, str):
        raise InconsistentGold(inst.id, outcome)
    response = render_response(trace, normalize_cell(inst.gold_answer.render()), inst.gold_scale)
    return TrainingInstance(inst.id, prompt, response, trace, outcome)


def build_e2e_training(inst: QAInstance) -> TrainingInstance:
    if inst.gold_answer is None:
        raise InconsistentGold(inst.id, "instance has no gold answer")
    prompt = build_e2e_prompt(inst)
    response = render_statement(inst.gold_answer.render(), inst.schema, inst.gold_scale)
    return TrainingInstance(inst.id, prompt, response)


def build_training_data(instances, pipeline: str = "stepwise") -> tuple[list[TrainingInstance], GoldReport]:
    """Build training instances in input order, reporting the inconsistent ones."""
    builder = build_gold_response if pipeline == "stepwise" else build_e2e_training
    out: list[TrainingInstance] = []
    report = GoldReport()
    for inst in instances:
        try:
            out.append(builder(inst))
        except InconsistentGold as exc:
            report.inconsistent.append({"id": exc.instance_id, "reason": exc.reason})
    report.emitted = len(out)
    return out, report
