import random
import pytest
from hypothesis import given, strategies as st

from stepwise_qa.core import AnswerKind, AnswerValue, Prediction, QuestionType
from stepwise_qa.equations import validate_equation
from stepwise_qa.executor import Branch, execute, execute_prediction

import oracles

WORKED = [
    (("201 # 125", "(201 - 125) / 125", "0.61", QuestionType.ARITHMETIC),
     AnswerValue.number("0.608"), Branch.ARITHMETIC),
    (("439000 # 411636 # 556000", "439000 # 411636 # 556000", "2", QuestionType.COUNT),
     AnswerValue.number(3), Branch.COUNT),
    (("2015", "N.A.", "garbled", QuestionType.SPAN), AnswerValue.text("2015"), Branch.SPAN),
    (("A # B", "N.A.", "A", QuestionType.MULTI_SPAN), AnswerValue.spans(["A", "B"]), Branch.MULTI_SPAN),
    (("x", "hello world", "42", None), AnswerValue.text("42"), Branch.MODEL_PASSTHROUGH),
]


@pytest.mark.parametrize("args,value,branch", WORKED)
def test_worked_examples(args, value, branch):
    out = execute(*args)
    assert out.value == value
    assert out.branch is branch


def test_comparison_branch():
    out = execute("153.7 # 139.9", "153.7 > 139.9", "no")
    assert out.branch is Branch.COMPARISON
    assert out.value == AnswerValue.boolean(True)
    assert out.value.render() == "yes"


def test_count_checks_raw_string():
    # a trailing '#' still counts as a separator, exactly as written
    assert execute("", "a # b #", "").value == AnswerValue.number(3)


def test_division_by_zero_falls_back_with_flag():
    out = execute("1 # 0", "1 / 0", "n/a")
    assert out.branch is Branch.MODEL_PASSTHROUGH
    assert out.value == AnswerValue.text("n/a")
    assert "division_by_zero" in out.flags


def test_unparseable_comparison_falls_back():
    out = execute("", "revenue > costs", "yes")
    assert out.branch is Branch.MODEL_PASSTHROUGH
    assert out.flags == ("comparison_unparseable",)


def test_na_with_other_types_keeps_o3():
    for qt in (QuestionType.ARITHMETIC, QuestionType.COUNT, None):
        out = execute("a", "N.A.", "model answer", qt)
        assert (out.branch, out.value) == (Branch.MODEL_PASSTHROUGH, AnswerValue.text("model answer"))


def test_span_outputs_are_unescaped():
    assert execute("a \\| b", "N.A.", "", QuestionType.SPAN).value == AnswerValue.text("a | b")


def test_degraded_prediction_passes_through():
    p = Prediction("", "", "7", AnswerValue.text("7"), flags=("no_table", "degraded"))
    out = execute_prediction(p)
    assert out.branch is Branch.MODEL_PASSTHROUGH and out.value == AnswerValue.text("7")


def test_override_property_randomized():
    rng = random.Random(11)
    for _ in range(1000):
        o1, o2, qt = oracles.random_executor_case(rng)
        first = execute(o1, o2, "first answer", qt)
        if first.branch is Branch.MODEL_PASSTHROUGH:
            continue
        assert execute(o1, o2, str(rng.random()), qt) == first


def test_arithmetic_matches_oracle():
    rng = random.Random(5)
    for _ in range(500):
        tree = oracles.random_tree(rng, 4)
        s = oracles.render(tree, rng)
        out = execute("", s, "")
        assert out.branch is Branch.ARITHMETIC
        assert out.value.value == oracles.round4(oracles.interpret(tree))


@given(st.text(max_size=40), st.text(max_size=40), st.text(max_size=40),
       st.sampled_from(list(QuestionType) + [None]))
def test_execute_is_total_and_pure(o1, o2, o3, qt):
    a = execute(o1, o2, o3, qt)
    assert a == execute(o1, o2, o3, qt)
    if a.branch is Branch.ARITHMETIC:
        assert validate_equation(o2)
        assert a.value.kind is AnswerKind.NUMBER
