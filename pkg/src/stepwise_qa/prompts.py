"""Prompt templates and rendering.

Every prompt has the same five parts in order: a fixed preamble with the
instruction, the table (omitted for TAT-DQA), the text, the question and a
``### Response`` header. Training targets are appended after that header.

Placeholders use :class:`string.Template` syntax so the literal
``{evidence}``-style variable names in the instructions pass through
untouched.
"""

from __future__ import annotations

from dataclasses import dataclass
from string import Template

from .core import Dataset, QAInstance, Schema, Table
from .errors import MissingTable
from .markup import render_row

_PREAMBLE_TABLE = (
    "Below is an instruction that describes a question answering task in the finance domain, "
    "paired with an input table and its relevant text that provide further context. "
    "The given question is relevant to the table and text. "
    "Generate an appropriate answer to the given question."
)
_PREAMBLE_DOC = (
    "Below is an instruction that describes a question answering task in the finance domain, "
    "paired with an input document that has one or multiple pages that provide further context. "
    "The given question is relevant to the document. "
    "Generate an appropriate answer to the given question."
)

_FIVE_STEP_BODY = """\
1. Step 1: Predict the type of question being asked. Store this prediction in the variable `{question_type}`. The value of `{question_type}` can be one of the following:`Single span`, `Multiple spans`, `Count`, or `Arithmetic`.
2. Step 2: Extract the relevant strings or numerical values from the provided $source. Store these pieces of evidence in the variable `{evidence}`. If there are multiple pieces of evidence, separate them using the '#' symbol.
3. Step 3: if the `{question_type}` is `Arithmetic`, formulate an equation using values stored in `{evidence}`. Store this equation in the variable `{equation}`. For all other question types, set the value of {equation} to 'N.A.'.
4. Step 4: Predict or calculate the answer based on the question type, evidence and equation. Store it in the variable `{answer}`. If there are multiple values, separate them using the '#' symbol.
5. Step 5: If the value of the `{answer}` is numerical, predict its scale and store it in a variable named `{scale}`. The value of `{scale}` can be one of the following: `none`, `percent`, `thousand`, `million`, or `billion`. For non-numerical values, set the value of `{scale}` to 'none'.

Please organize the results in the following table:
| step | output |
| 1 | {question_type} |
| 2 | {evidence} |
| 3 | {equation} |
| 4 | {answer} |
| 5 | {scale} |

Finally, present the final answer in the format: "The answer is: {answer} #### and its corresponding scale is: {scale}\""""

_SCALE_INSTRUCTION = (
    "Please predict the answer and store it in a variable named `{answer}`. "
    "If there are multiple values, separate them using the '#' symbol. "
    "If the value of the `{answer}` is numerical, predict its scale and store it in a variable named `{scale}`. "
    "The value of `{scale}` can be one of the following: `none`, `percent`, `thousand`, `million`, or `billion`. "
    "For non-numerical values, set the value of `{scale}` to 'none'. "
    'Finally, present the final answer in the format of "The answer is: {answer} #### and its corresponding scale is: {scale}"'
)

FINQA_STEPWISE = _PREAMBLE_TABLE + """

### Instruction:
Given a table and a list of texts in the following, what is the answer to the question? Please complete the task in three steps:
1. In the first step, extract the relevant numerical values from the provided table or texts. Store these in the variable `{evidence}`. If there are multiple values, separate them using the '#' symbol.
2. In the second step, generate an equation using the extracted numerical values. Store this equation in the variable `{equation}`.
3. In the third step, calculate the answer based on the equation and store it in the variable `{answer}`.

Please organize the results in the following table:
| step | output |
| 1 | {evidence} |
| 2 | {equation} |
| 3 | {answer} |

Finally, present the calculated answer in the format: "The answer is: {answer}"

### Table
$table

### Text
$text

### Question
$question

### Response
"""

TATQA_STEPWISE = _PREAMBLE_TABLE + """

### Instruction
Given a table and a list of texts in the following, answer the question posed using the following five-step process:

""" + Template(_FIVE_STEP_BODY).safe_substitute(source="table or texts") + """

### Table
$table

### Text
$text

### Question
$question

### Response
"""

TATDQA_STEPWISE = _PREAMBLE_DOC + """

### Instruction
Given a document that has one or multiple pages in the following, answer the question posed using the following five-step process:

""" + Template(_FIVE_STEP_BODY).safe_substitute(source="document") + """

### Text
$pages

### Question
$question

### Response
"""

FINQA_E2E = _PREAMBLE_TABLE + """

### Instruction
Given a table and a list of texts in the following, what is the answer to the question? Please output the answer in the format of "The answer is:".

### Table
$table

### Text
$text

### Question
$question

### Response
"""

TATQA_E2E = _PREAMBLE_TABLE + """

### Instruction
Given a table and a list of texts in the following, what is the answer to the question? """ + _SCALE_INSTRUCTION + """

### Table
$table

### Text
$text

### Question
$question

### Response
"""

TATDQA_E2E = _PREAMBLE_DOC + """

### Instruction
Given a document that has one or multiple pages in the following, what is the answer to the question? """ + _SCALE_INSTRUCTION + """

### Document
$pages

### Question
$question

### Response
"""

COT_SENTENCE = "Let's complete this task step by step."

ZERO_SHOT_TABLE = _PREAMBLE_TABLE + """

### Instruction
Given a table and a list of texts in the following, what is the answer to the question? ${cot}Please output the answer in the format of "The answer is:".

### Table
$table

### Text
$text

### Question
$question

### Response
"""

ZERO_SHOT_DOC = _PREAMBLE_DOC + """

### Instruction
Given a document with one or multiple pages in the following, what is the answer to the question? ${cot}Please output the answer in the format of "The answer is:".

### Text
$pages

### Question
$question

### Response
"""

TEMPLATES = {
    ("stepwise", Dataset.FINQA): FINQA_STEPWISE,
    ("stepwise", Dataset.TATQA): TATQA_STEPWISE,
    ("stepwise", Dataset.TATDQA): TATDQA_STEPWISE,
    ("e2e", Dataset.FINQA): FINQA_E2E,
    ("e2e", Dataset.TATQA): TATQA_E2E,
    ("e2e", Dataset.TATDQA): TATDQA_E2E,
    ("zero_shot", Dataset.FINQA): ZERO_SHOT_TABLE,
    ("zero_shot", Dataset.TATQA): ZERO_SHOT_TABLE,
    ("zero_shot", Dataset.TATDQA): ZERO_SHOT_DOC,
}


@dataclass(frozen=True)
class PromptText:
    text: str
    schema: Schema
    dataset: Dataset


def render_markdown_table(t: Table) -> str:
    """Header row, ``|---|`` separator, then body rows."""
    lines = [render_row(t.rows[0]), "|" + "---|" * t.n_cols]
    lines += [render_row(r) for r in t.rows[1:]]
    return "\n".join(lines)


def _fields(inst: QAInstance) -> dict[str, str]:
    if inst.dataset is not Dataset.TATDQA and inst.table is None:
        raise MissingTable(f"{inst.id}: {inst.dataset.value} prompts need a table")
    text = "\n".join(inst.texts)
    return {
        "table": render_markdown_table(inst.table) if inst.table is not None else "",
        "text": text,
        "pages": text,
        "question": inst.question,
    }


def build_stepwise_prompt(inst: QAInstance) -> PromptText:
    text = Template(TEMPLATES["stepwise", inst.dataset]).substitute(_fields(inst))
    return PromptText(text, inst.schema, inst.dataset)


def build_e2e_prompt(inst: QAInstance) -> PromptText:
    text = Template(TEMPLATES["e2e", inst.dataset]).substitute(_fields(inst))
    return PromptText(text, Schema.E2E, inst.dataset)


def build_zero_shot_prompt(inst: QAInstance, cot: bool = False) -> PromptText:
    fields = _fields(inst)
    fields["cot"] = COT_SENTENCE + " " if cot else ""
    text = Template(TEMPLATES["zero_shot", inst.dataset]).substitute(fields)
    return PromptText(text, Schema.E2E, inst.dataset)
