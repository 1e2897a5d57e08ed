"""Loaders for the FinQA, TAT-QA and TAT-DQA JSON releases.

The released field names are an external contract, documented in
``docs/data-format.md``. A file is either the bare released JSON array
(schema version 1) or an envelope ``{"schema_version": 1, "data": [...]}``;
any other version is rejected.

Table cells are normalised on the way in (trimmed, newlines folded, pipes
escaped) but otherwise kept verbatim, including accounting negatives such
as ``(950.4)``.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .core import (
    AnswerValue,
    Dataset,
    QAInstance,
    QuestionType,
    Scale,
    Table,
    scale_parse,
)
from .errors import InvariantError, SchemaError, UnknownScale
from .markup import normalize_cell
from .numbers import parse_number

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SPLITS = ("train", "dev", "test")

# Official release file names, per split.
RELEASE_FILES = {
    Dataset.FINQA: {"train": ["train.json"], "dev": ["dev.json"], "test": ["test.json"]},
    Dataset.TATQA: {
        "train": ["tatqa_dataset_train.json"],
        "dev": ["tatqa_dataset_dev.json"],
        "test": ["tatqa_dataset_test_gold.json", "tatqa_dataset_test.json"],
    },
    Dataset.TATDQA: {
        "train": ["tatdqa_dataset_train.json"],
        "dev": ["tatdqa_dataset_dev.json"],
        "test": ["tatdqa_dataset_test_gold.json", "tatdqa_dataset_test.json"],
    },
}

_TATQA_TYPES = {
    "span": QuestionType.SPAN,
    "multi-span": QuestionType.MULTI_SPAN,
    "count": QuestionType.COUNT,
    "arithmetic": QuestionType.ARITHMETIC,
}


@dataclass(frozen=True)
class SplitStats:
    dataset: Dataset | None
    split: str | None
    count: int

    def line(self) -> str:
        ds = self.dataset.value if self.dataset else "unknown"
        return f"{ds} {self.split or 'unknown'} {self.count}"


def stats(instances: Iterable[QAInstance], dataset: Dataset | None = None, split: str | None = None) -> SplitStats:
    instances = list(instances)
    if dataset is None and instances:
        dataset = instances[0].dataset
    return SplitStats(dataset, split, len(instances))


def detect_split(path: str | os.PathLike) -> str:
    name = Path(path).name.lower()
    for split, keys in (("train", ("train",)), ("dev", ("dev", "val")), ("test", ("test",))):
        if any(k in name for k in keys):
            return split
    raise ValueError(f"cannot tell the split of {str(path)!r} from its name")


def find_release_files(dataset: Dataset, directory: str | os.PathLike) -> dict[str, Path]:
    directory = Path(directory)
    found = {}
    for split, names in RELEASE_FILES[dataset].items():
        for name in names:
            if (directory / name).is_file():
                found[split] = directory / name
                break
    return found


# --- helpers ----------------------------------------------------------------

def _read_records(path: str | os.PathLike) -> list:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict) and "schema_version" in data:
        if data["schema_version"] != SCHEMA_VERSION:
            raise SchemaError(None, "schema_version", f"unsupported version {data['schema_version']!r}")
        data = data.get("data")
    if not isinstance(data, list):
        raise SchemaError(None, "<root>", "expected a JSON array of records")
    return data


def _need(obj: dict, key: str, rid) -> object:
    if not isinstance(obj, dict) or key not in obj or obj[key] is None:
        raise SchemaError(rid, key)
    return obj[key]


def _table(rows, rid) -> Table:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise SchemaError(rid, "table", "expected a non-empty 2D array")
    width = max(len(r) for r in rows)
    if width == 0:
        raise SchemaError(rid, "table", "all rows are empty")
    # a few released tables are ragged; pad so the table stays rectangular
    norm = [[normalize_cell(str(c)) for c in r] + [""] * (width - len(r)) for r in rows]
    return Table(norm)


def _scale(raw, rid) -> Scale:
    if raw == "":
        return Scale.NONE  # released TAT files spell "no scale" as the empty string
    try:
        return scale_parse(raw)
    except UnknownScale as exc:
        raise SchemaError(rid, "scale", str(exc)) from None


def _number_or_text(raw) -> AnswerValue:
    if isinstance(raw, bool):
        return AnswerValue.boolean(raw)
    if isinstance(raw, (int, float)):
        return AnswerValue.number(raw)
    text = str(raw).strip()
    if text.lower() in ("yes", "no"):
        return AnswerValue.boolean(text.lower() == "yes")
    if parse_number(text) is not None and not text.endswith("%"):
        return AnswerValue.number(text.replace(",", ""))
    return AnswerValue.text(text)


def _tat_answer(q: dict, qtype: QuestionType, rid) -> AnswerValue:
    raw = _need(q, "answer", rid)
    if qtype is QuestionType.MULTI_SPAN:
        if not isinstance(raw, list):
            raise SchemaError(rid, "answer", "multi-span answers must be lists")
        return AnswerValue.spans(str(a) for a in raw)
    if isinstance(raw, list):
        if qtype is QuestionType.SPAN and len(raw) == 1:
            return AnswerValue.text(str(raw[0]))
        if len(raw) == 1:
            raw = raw[0]
        else:
            return AnswerValue.spans(str(a) for a in raw)
    if qtype is QuestionType.SPAN:
        return AnswerValue.text(str(raw))
    return _number_or_text(raw)


def _tat_question(q: dict, dataset: Dataset, table, texts, labeled: bool) -> QAInstance:
    rid = q.get("uid") if isinstance(q, dict) else None
    uid = str(_need(q, "uid", rid))
    question = str(_need(q, "question", uid))
    kwargs = {}
    if labeled:
        raw_type = _need(q, "answer_type", uid)
        if raw_type not in _TATQA_TYPES:
            raise SchemaError(uid, "answer_type", f"unknown value {raw_type!r}")
        qtype = _TATQA_TYPES[raw_type]
        kwargs = dict(
            gold_question_type=qtype,
            gold_answer=_tat_answer(q, qtype, uid),
            gold_scale=_scale(_need(q, "scale", uid), uid),
            gold_derivation=str(q.get("derivation") or ""),
        )
    try:
        return QAInstance(id=uid, dataset=dataset, question=question, table=table, texts=texts, **kwargs)
    except InvariantError as exc:
        raise SchemaError(uid, "<instance>", str(exc)) from None


# --- loaders ----------------------------------------------------------------

def load_finqa(path: str | os.PathLike, labeled: bool = True) -> list[QAInstance]:
    out = []
    for i, rec in enumerate(_read_records(path)):
        rid = rec.get("id", f"#{i}") if isinstance(rec, dict) else f"#{i}"
        base_id = str(_need(rec, "id", rid))
        table = _table(_need(rec, "table", base_id), base_id)
        pre = _need(rec, "pre_text", base_id)
        post = _need(rec, "post_text", base_id)
        texts = tuple(str(t) for t in list(pre) + list(post))
        qas = _finqa_qas(rec, base_id)
        for suffix, qa in qas:
            qid = base_id + suffix
            question = str(_need(qa, "question", qid))
            kwargs = {}
            if labeled:
                kwargs = dict(
                    gold_derivation=str(_need(qa, "program", qid)),
                    gold_answer=_number_or_text(_need(qa, "exe_ans", qid)),
                )
            try:
                out.append(QAInstance(id=qid, dataset=Dataset.FINQA, question=question,
                                      table=table, texts=texts, **kwargs))
            except InvariantError as exc:
                raise SchemaError(qid, "<instance>", str(exc)) from None
    return out


def _finqa_qas(rec: dict, rid: str) -> list[tuple[str, dict]]:
    if "qa" in rec:
        return [("", rec["qa"])]
    # a few released files split two questions over qa_0 / qa_1
    numbered = sorted((k for k in rec if k.startswith("qa_")), key=lambda k: int(k[3:]))
    if not numbered:
        raise SchemaError(rid, "qa")
    return [(f"_{k[3:]}", rec[k]) for k in numbered]


def load_tatqa(path: str | os.PathLike, labeled: bool = True) -> list[QAInstance]:
    out = []
    for i, rec in enumerate(_read_records(path)):
        tbl = _need(rec, "table", f"#{i}")
        rid = tbl.get("uid", f"#{i}") if isinstance(tbl, dict) else f"#{i}"
        table = _table(_need(tbl, "table", rid), rid)
        paragraphs = _need(rec, "paragraphs", rid)
        paragraphs = sorted(paragraphs, key=lambda p: p.get("order", 0))
        texts = tuple(str(_need(p, "text", rid)) for p in paragraphs)
        questions = sorted(_need(rec, "questions", rid), key=lambda q: q.get("order", 0))
        for q in questions:
            out.append(_tat_question(q, Dataset.TATQA, table, texts, labeled))
    return out


def load_tatdqa(
    path: str | os.PathLike,
    docs_dir: str | os.PathLike | None = None,
    labeled: bool = True,
    require_pages: bool = True,
) -> list[QAInstance]:
    """Load TAT-DQA questions with their document pages as text blocks.

    Page text comes from an inline ``doc.pages`` list or, failing that,
    ``<docs_dir>/<doc uid>.json``. With ``require_pages=False`` a missing
    page source yields an instance with no texts instead of an error.
    """
    out = []
    for i, rec in enumerate(_read_records(path)):
        doc = _need(rec, "doc", f"#{i}")
        rid = str(_need(doc, "uid", f"#{i}"))
        pages = _doc_pages(doc, rid, docs_dir, require_pages)
        questions = sorted(_need(rec, "questions", rid), key=lambda q: q.get("order", 0))
        for q in questions:
            out.append(_tat_question(q, Dataset.TATDQA, None, pages, labeled))
    return out


def _doc_pages(doc: dict, rid: str, docs_dir, required: bool) -> tuple[str, ...]:
    pages = doc.get("pages")
    if pages is None and docs_dir is not None:
        doc_path = Path(docs_dir) / f"{rid}.json"
        if doc_path.is_file():
            with open(doc_path, encoding="utf-8") as fh:
                pages = _need(json.load(fh), "pages", rid)
    if pages is None:
        if required:
            raise SchemaError(rid, "pages", "no inline pages and no document file")
        return ()
    return tuple(_page_text(p, rid) for p in pages)


def _page_text(page, rid) -> str:
    if isinstance(page, str):
        return page
    if isinstance(page, dict):
        if "text" in page:
            return str(page["text"])
        blocks = _need(page, "blocks", rid)
        blocks = sorted(blocks, key=lambda b: b.get("order", 0))
        return "\n".join(str(_need(b, "text", rid)) for b in blocks)
    raise SchemaError(rid, "pages", "page must be a string or an object")


LOADERS = {Dataset.FINQA: load_finqa, Dataset.TATQA: load_tatqa, Dataset.TATDQA: load_tatdqa}


def load(dataset: Dataset | str, path, **kwargs) -> list[QAInstance]:
    return LOADERS[Dataset(dataset)](path, **kwargs)
