import json

import pytest

from stepwise_qa.core import AnswerKind, AnswerValue, Dataset, QuestionType, Scale
from stepwise_qa.errors import SchemaError
from stepwise_qa.ingest import (
    detect_split,
    find_release_files,
    load_finqa,
    load_tatdqa,
    load_tatqa,
    stats,
)


def write(tmp_path, obj, name="train.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj), encoding="utf-8")
    return p


def test_finqa_fields(data_dir):
    insts = load_finqa(data_dir / "finqa" / "train.json")
    assert len(insts) == 10
    first = insts[0]
    assert first.id == "SYN/1.pdf-1"
    assert first.texts == ("the company reports in millions .", "revenue grew .", "see note 7 .")
    assert first.gold_derivation == "subtract(201, 125), divide(#0, 125)"
    assert first.gold_answer == AnswerValue.number("0.608")
    assert first.gold_scale is None and first.table.rows[1][1] == "$ 201"
    assert insts[3].gold_answer == AnswerValue.boolean(True)


def test_finqa_numbered_questions(tmp_path):
    rec = {"id": "r", "pre_text": [], "post_text": [], "table": [["a"]],
           "qa_0": {"question": "q0", "program": "add(1, 2)", "exe_ans": 3},
           "qa_1": {"question": "q1", "program": "add(1, 3)", "exe_ans": 4}}
    assert [i.id for i in load_finqa(write(tmp_path, [rec]))] == ["r_0", "r_1"]


def test_empty_array(tmp_path):
    assert load_finqa(write(tmp_path, [])) == []


def test_tatqa_fields(data_dir):
    insts = load_tatqa(data_dir / "tatqa" / "tatqa_dataset_train.json")
    assert [i.id for i in insts[:5]] == ["t1", "t2", "t3", "t4", "t5"]  # sorted by "order"
    t1, t2, t3 = insts[:3]
    assert t1.texts[0].startswith("The company is headquartered")  # paragraphs sorted too
    assert (t1.gold_question_type, t1.gold_scale, t1.gold_answer) == (
        QuestionType.SPAN, Scale.THOUSAND, AnswerValue.text("5,829"))
    assert t2.gold_answer == AnswerValue.spans(["2019", "2018"]) and t2.gold_scale is Scale.NONE
    assert t3.gold_answer == AnswerValue.number(2) and t3.gold_derivation == "2019##2018"
    assert insts[0].table.rows[3][0] == "Income \\| loss"
    assert insts[0].table.rows[2][1] == "(3,100)"  # accounting negatives verbatim
    assert insts[5].texts == ("Headcount grew in 2020.\nSalaries rose modestly.",)


def test_tatqa_missing_scale(tmp_path, data_dir):
    recs = json.loads((data_dir / "tatqa" / "tatqa_dataset_train.json").read_text())
    del recs[0]["questions"][2]["scale"]
    with pytest.raises(SchemaError) as info:
        load_tatqa(write(tmp_path, recs))
    assert info.value.field == "scale"
    assert info.value.record_id == "t4"


def test_tatqa_unlabeled(tmp_path):
    rec = {"table": {"uid": "u", "table": [["a"]]}, "paragraphs": [],
           "questions": [{"uid": "q", "order": 1, "question": "?"}]}
    (inst,) = load_tatqa(write(tmp_path, [rec]), labeled=False)
    assert inst.gold_answer is None


def test_tatdqa_pages(data_dir):
    insts = load_tatdqa(data_dir / "tatdqa" / "tatdqa_dataset_train.json", docs_dir=data_dir / "tatdqa" / "docs")
    assert len(insts) == 10 and all(i.table is None for i in insts)
    assert len(insts[0].texts) == 2
    assert insts[5].texts == ("Financial statements audited by Smith & Co.\n"
                              "Debt: senior notes 950.4; term loan 560.1 (in millions).",)


def test_tatdqa_single_page(tmp_path):
    rec = {"doc": {"uid": "d", "pages": ["only page"]},
           "questions": [{"uid": "q", "question": "?", "answer": ["x"], "answer_type": "span", "scale": ""}]}
    (inst,) = load_tatdqa(write(tmp_path, [rec]))
    assert inst.texts == ("only page",)


def test_tatdqa_missing_pages(tmp_path, data_dir):
    path = data_dir / "tatdqa" / "tatdqa_dataset_train.json"
    with pytest.raises(SchemaError):
        load_tatdqa(path)
    assert len(load_tatdqa(path, require_pages=False)) == 10


def test_schema_version_envelope(tmp_path):
    assert load_finqa(write(tmp_path, {"schema_version": 1, "data": []})) == []
    with pytest.raises(SchemaError):
        load_finqa(write(tmp_path, {"schema_version": 2, "data": []}))
    with pytest.raises(SchemaError):
        load_finqa(write(tmp_path, {"not": "a list"}))


def test_missing_field_names_id(tmp_path):
    with pytest.raises(SchemaError) as info:
        load_finqa(write(tmp_path, [{"id": "abc", "pre_text": [], "post_text": []}]))
    assert (info.value.record_id, info.value.field) == ("abc", "table")


def test_ragged_table_is_padded(tmp_path):
    rec = {"id": "r", "pre_text": [], "post_text": [], "table": [["a", "b"], ["c"]],
           "qa": {"question": "q", "program": "add(1, 2)", "exe_ans": 3}}
    (inst,) = load_finqa(write(tmp_path, [rec]))
    assert inst.table.rows == (("a", "b"), ("c", ""))


def test_deterministic(data_dir):
    path = data_dir / "tatqa" / "tatqa_dataset_train.json"
    assert load_tatqa(path) == load_tatqa(path)


def test_stats():
    assert stats([]).count == 0
    assert stats([object()] * 3, Dataset.FINQA, "dev").line() == "finqa dev 3"


def test_split_detection(data_dir):
    assert detect_split("tatqa_dataset_dev.json") == "dev"
    assert detect_split("x/test.json") == "test"
    with pytest.raises(ValueError):
        detect_split("foo.json")
    assert set(find_release_files(Dataset.TATQA, data_dir / "tatqa")) == {"train", "dev", "test"}


def test_answer_kinds(data_dir):
    insts = load_tatdqa(data_dir / "tatdqa" / "tatdqa_dataset_train.json", docs_dir=data_dir / "tatdqa" / "docs")
    kinds = {i.id: i.gold_answer.kind for i in insts}
    assert kinds["d1"] is AnswerKind.NUMBER and kinds["d2"] is AnswerKind.SPANS and kinds["d4"] is AnswerKind.TEXT
