"""Parse model output into a :class:`~stepwise_qa.core.Prediction`.

A response is a two-column ``step | output`` markdown table followed by a
``The answer is: ...`` statement. Models often restate the task before
answering, so the *last* qualifying table and the *last* statement win.
"""

from __future__ import annotations

import re

from .core import (
    AnswerValue,
    Prediction,
    Scale,
    Schema,
    StepTrace,
    question_type_parse,
    scale_parse,
)
from .errors import (
    NoFinalStatement,
    NoTableFound,
    SchemaMismatch,
    UnknownQuestionType,
    UnknownScale,
    Unparseable,
)
from .markup import is_separator_row, render_row, split_row, unescape_cell

ANSWER_MARKER = "The answer is:"
SCALE_MARKER = "#### and its corresponding scale is:"

_ANSWER_RE = re.compile(re.escape(ANSWER_MARKER), re.IGNORECASE)
_SCALE_RE = re.compile(r"#{2,}\s*and its corresponding scale is:", re.IGNORECASE)
_STEP_INDEX = re.compile(r"^[0-9]+$", re.ASCII)


def _table_blocks(text: str) -> list[list[list[str]]]:
    blocks: list[list[list[str]]] = []
    current: list[list[str]] = []
    # str.splitlines would also break on \x85 and \u2028, which may sit inside cells
    for line in text.replace("\r\n", "\n").replace("\r", "\n").split("\n"):
        cells = split_row(line)
        if cells is None:
            if current:
                blocks.append(current)
                current = []
            continue
        current.append(cells)
    if current:
        blocks.append(current)
    return blocks


def _as_steps(rows: list[list[str]]) -> dict[int, str] | None:
    body = [r for r in rows if not is_separator_row(r)]
    if body and (not body[0] or not _STEP_INDEX.match(body[0][0])):
        body = body[1:]  # header row such as "step | output"
    if not body:
        return None
    steps: dict[int, str] = {}
    for expected, row in enumerate(body, start=1):
        if not row or not _STEP_INDEX.match(row[0]) or int(row[0]) != expected:
            return None
        # an unescaped pipe inside a model's output cell splits it; re-join escaped
        steps[expected] = " \\| ".join(row[1:])
    return steps


def parse_step_table(text: str, schema: Schema) -> StepTrace:
    """Extract the last step table in ``text``.

    Raises :class:`NoTableFound` if no table has consecutive step indices
    starting at 1, or :class:`SchemaMismatch` if the last one has the wrong
    number of rows for ``schema``.
    """
    found = None
    for block in reversed(_table_blocks(text)):
        steps = _as_steps(block)
        if steps is not None:
            found = (block, steps)
            break
    if found is None:
        raise NoTableFound("no step table in response", span=text[:200])
    block, steps = found
    if len(steps) != schema.n_steps:
        span = "\n".join(render_row(r) for r in block)
        raise SchemaMismatch(f"expected {schema.n_steps} steps, found {len(steps)}", span=span)
    return StepTrace(steps, schema)


def parse_final_statement(text: str, schema: Schema) -> tuple[str, str | None]:
    matches = list(_ANSWER_RE.finditer(text))
    if not matches:
        raise NoFinalStatement("no 'The answer is:' statement", span=text[-200:])
    rest = text[matches[-1].end():]
    line = re.split(r"\r\n|\r|\n", rest, maxsplit=1)[0]
    scale = None
    m = _SCALE_RE.search(line)
    if m is not None:
        scale = line[m.end():].strip()
        line = line[:m.start()]
        if schema is Schema.THREE_STEP:
            scale = None
    return line.strip(), scale


def _strip_statement_noise(answer: str) -> str:
    # "The answer is: 0.0986." - sentence punctuation is not part of the answer
    return answer[:-1].rstrip() if answer.endswith(".") and not answer.endswith("N.A.") else answer


def parse_prediction(text: str, schema: Schema) -> Prediction:
    """Compose the table and statement parsers.

    A missing or malformed table with a usable statement yields a degraded
    prediction (``"degraded"`` in ``flags``) instead of an error.
    """
    flags: list[str] = []
    try:
        trace = parse_step_table(text, schema)
    except (NoTableFound, SchemaMismatch) as exc:
        trace = None
        flags.append("no_table" if isinstance(exc, NoTableFound) else "schema_mismatch")
    try:
        answer, scale_text = parse_final_statement(text, schema)
        answer = _strip_statement_noise(answer)
    except NoFinalStatement:
        answer, scale_text = None, None
        flags.append("no_statement")

    if trace is None and answer is None:
        raise Unparseable("neither a step table nor a final statement was found", span=text[:200])

    scale = _scale_or_flag(scale_text, flags)

    if trace is None:
        flags.append("degraded")
        return Prediction(
            evidence="",
            equation="",
            raw_answer=answer,
            final_answer=AnswerValue.text(answer),
            scale=scale,
            flags=tuple(flags),
        )

    question_type = None
    if schema is Schema.FIVE_STEP:
        try:
            question_type = question_type_parse(unescape_cell(trace[1]))
        except UnknownQuestionType:
            flags.append("unknown_question_type")
        table_scale = _scale_or_flag(trace[5], flags)
        if table_scale is not None:
            scale = table_scale

    raw = trace.answer
    final = AnswerValue.text(answer if answer is not None else unescape_cell(raw))
    return Prediction(
        evidence=trace.evidence,
        equation=trace.equation,
        raw_answer=raw,
        final_answer=final,
        question_type=question_type,
        scale=scale,
        flags=tuple(flags),
    )


def _scale_or_flag(text: str | None, flags: list[str]) -> Scale | None:
    if text is None:
        return None
    try:
        return scale_parse(unescape_cell(text))
    except UnknownScale:
        if "unknown_scale" not in flags:
            flags.append("unknown_scale")
        return None


def render_response(trace: StepTrace, final: AnswerValue | str, scale: Scale | None = None) -> str:
    """Lay out a response exactly as the training targets do."""
    lines = [render_row(["step", "output"])]
    lines += [render_row([str(i), out]) for i, out in trace.steps.items()]
    return "\n".join(lines) + "\n\n" + render_statement(final, trace.schema, scale)


def render_statement(final: AnswerValue | str, schema: Schema, scale: Scale | None = None) -> str:
    answer = final.render() if isinstance(final, AnswerValue) else final
    if schema is Schema.THREE_STEP:
        return f"{ANSWER_MARKER} {answer}"
    scale = scale or Scale.NONE
    return f"{ANSWER_MARKER} {answer} {SCALE_MARKER} {scale.render()}"
