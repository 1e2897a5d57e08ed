import random
from pathlib import Path

import pytest

from stepwise_qa.core import AnswerValue, Dataset, QAInstance, QuestionType, Scale, Table
from stepwise_qa.equations import eval_arithmetic
from stepwise_qa.errors import DanglingStepRef, InconsistentGold, MissingTable, UnsupportedOperator
from stepwise_qa.gold import (
    build_e2e_training,
    build_gold_response,
    build_training_data,
    evidence_from_equation,
    finqa_program_to_infix,
)
from stepwise_qa.markup import split_row
from stepwise_qa.prompts import (
    build_e2e_prompt,
    build_stepwise_prompt,
    build_zero_shot_prompt,
    render_markdown_table,
)

import oracles
import samples

GOLDEN = Path(__file__).parent / "golden"


def golden(name: str) -> str:
    return (GOLDEN / name).read_text(encoding="utf-8")


@pytest.mark.parametrize("dataset", list(Dataset))
def test_stepwise_training_text_matches_golden(dataset):
    inst = samples.BY_DATASET[dataset]
    assert build_gold_response(inst).text == golden(f"{dataset.value}_stepwise.txt")


@pytest.mark.parametrize("dataset", list(Dataset))
def test_e2e_training_text_matches_golden(dataset):
    inst = samples.BY_DATASET[dataset]
    assert build_e2e_training(inst).text == golden(f"{dataset.value}_e2e.txt")


@pytest.mark.parametrize("inst,name", [(samples.TATQA, "zero_shot_table"), (samples.TATDQA, "zero_shot_doc")])
@pytest.mark.parametrize("cot", [False, True])
def test_zero_shot_matches_golden(inst, name, cot):
    assert build_zero_shot_prompt(inst, cot=cot).text == golden(f"{name}{'_cot' if cot else ''}.txt")


def test_template_markers():
    assert "extract the relevant numerical values" in build_stepwise_prompt(samples.FINQA).text
    assert "Predict the type of question" in build_stepwise_prompt(samples.TATQA).text
    doc = build_stepwise_prompt(samples.TATDQA).text
    assert "### Text" in doc and "### Table" not in doc
    assert "Please complete the task" not in build_e2e_prompt(samples.FINQA).text
    assert "its corresponding scale is" in build_e2e_prompt(samples.TATQA).text
    assert build_e2e_prompt(samples.TATQA) == build_e2e_prompt(samples.TATQA)
    assert "step by step" not in build_zero_shot_prompt(samples.FINQA).text
    assert "Let's complete this task step by step" in build_zero_shot_prompt(samples.FINQA, cot=True).text
    assert "one or multiple pages" in build_zero_shot_prompt(samples.TATDQA).text


def test_prompt_sections_in_order():
    text = build_stepwise_prompt(samples.TATQA).text
    marks = ["### Instruction", "### Table", "### Text", "### Question", "### Response"]
    positions = [text.index("\n" + m) for m in marks]
    assert positions == sorted(positions)
    assert text.endswith("### Response\n")


def test_missing_table():
    inst = QAInstance("x", Dataset.TATQA, "q")
    with pytest.raises(MissingTable):
        build_stepwise_prompt(inst)


def test_markdown_table():
    assert render_markdown_table(Table([["a", "b"], ["1", "2"]])) == "| a | b |\n|---|---|\n| 1 | 2 |"
    assert render_markdown_table(Table([["x"]])) == "| x |\n|---|"
    rendered = render_markdown_table(Table([["a \\| b", "c"]]))
    assert rendered.startswith("| a \\| b | c |")
    assert split_row(rendered.splitlines()[0]) == ["a \\| b", "c"]


# --- FinQA programs -------------------------------------------------------------

@pytest.mark.parametrize("program,infix", [
    ("subtract(201, 125), divide(#0, 125)", "(201 - 125) / 125"),
    ("add(1, 2)", "(1 + 2)"),
    ("greater(153.7, 139.9)", "153.7 > 139.9"),
    ("divide(5%, const_100)", "(5 / 100)"),
    ("add(const_m1, 2), multiply(#0, #0)", "(-1 + 2) * (-1 + 2)"),
    ("subtract(201, 125), divide(#0, 125), EOF", "(201 - 125) / 125"),
])
def test_program_to_infix(program, infix):
    assert finqa_program_to_infix(program) == infix


def test_program_errors():
    with pytest.raises(UnsupportedOperator) as info:
        finqa_program_to_infix("exp(2, 3)")
    assert info.value.op == "exp"
    with pytest.raises(DanglingStepRef):
        finqa_program_to_infix("add(1, 2), divide(#1, 3)")
    with pytest.raises(UnsupportedOperator):
        finqa_program_to_infix("table_sum(revenue, none)")


def test_table_ops_use_the_named_row():
    t = Table([["", "2019", "2018"], ["revenue", "$ 10", "(4)"]])
    assert eval_arithmetic(finqa_program_to_infix("table_sum(revenue, none)", t)) == 6
    assert eval_arithmetic(finqa_program_to_infix("table_average(revenue, none)", t)) == 3
    assert finqa_program_to_infix("table_max(revenue, none)", t) == "10"


def test_program_conversion_matches_step_interpreter():
    rng = random.Random(3)
    checked = 0
    for _ in range(10_000):
        program = oracles.random_program(rng)
        try:
            expected = oracles.run_program(program)
        except ArithmeticError:
            continue
        assert eval_arithmetic(finqa_program_to_infix(program)) == expected, program
        checked += 1
    assert checked > 9000


# --- gold responses -------------------------------------------------------------

def tat(qtype, answer, derivation="", scale=Scale.NONE):
    return QAInstance("g", Dataset.TATQA, "q", texts=("t",), table=Table([["x"]]), gold_answer=answer,
                      gold_derivation=derivation, gold_question_type=qtype, gold_scale=scale)


def test_gold_average_example():
    inst = tat(QuestionType.ARITHMETIC, AnswerValue.number("892.3"), "(950.4 + 957.4 + 769.1) / 3", Scale.MILLION)
    built = build_gold_response(inst)
    assert built.trace.equation == "(950.4 + 957.4 + 769.1) / 3"
    assert built.trace.evidence == "950.4 # 957.4 # 769.1 # 3"
    assert built.executed.value == AnswerValue.number("892.3")


def test_gold_span():
    built = build_gold_response(tat(QuestionType.SPAN, AnswerValue.text("2015")))
    assert (built.trace.equation, built.trace.answer) == ("N.A.", "2015")


def test_gold_count():
    built = build_gold_response(tat(QuestionType.COUNT, AnswerValue.number(3), "A##B##C"))
    assert built.trace.evidence == built.trace.equation == "A # B # C"
    assert built.trace.answer == "3"


def test_gold_percent_repair():
    inst = tat(QuestionType.ARITHMETIC, AnswerValue.number("60.8"), "(201 - 125) / 125", Scale.PERCENT)
    assert build_gold_response(inst).trace.equation == "((201 - 125) / 125) * 100"


def test_inconsistent_gold_is_reported():
    bad = tat(QuestionType.ARITHMETIC, AnswerValue.number(5), "1 + 2")
    with pytest.raises(InconsistentGold):
        build_gold_response(bad)
    good = tat(QuestionType.ARITHMETIC, AnswerValue.number(3), "1 + 2")
    out, report = build_training_data([bad, good, bad])
    assert len(out) == 1 and report.emitted == 1
    assert [r["id"] for r in report.inconsistent] == ["g", "g"]


def test_gold_cells_escape_pipes():
    built = build_gold_response(tat(QuestionType.SPAN, AnswerValue.text("a | b")))
    assert built.trace.evidence == "a \\| b"
    assert "| 2 | a \\| b |" in built.gold_response


def test_evidence_from_equation():
    assert evidence_from_equation("(5,829 - 5,735) / 5,735") == ["5,829", "5,735"]
    assert evidence_from_equation("1 + 1 + 2") == ["1", "2"]
