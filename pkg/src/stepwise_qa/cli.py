"""Command-line entry point.

Stages talk through JSON-lines files keyed by instance id::

    build-data -> infer -> execute -> evaluate / analyze

Exit codes: 0 success, 1 usage error, 2 I/O or schema error, 3 backend failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Iterator

from . import __version__
from .core import AnswerValue, Dataset, Prediction, Schema
from .equations import eval_arithmetic, eval_comparison, parse_equation, Compare, round_half_even
from .errors import EquationError, GatewayError, SchemaError, StepwiseQAError, Unparseable, InconsistentGold
from .evaluation import ScaleMode, categorize_error, evaluate_split, score_record
from .executor import Branch, FinalAnswer, execute_prediction
from .gateway import (
    DEFAULT_API_KEY_ENV,
    DEFAULT_ENDPOINT_ENV,
    Gateway,
    GenParams,
    OpenAICompatBackend,
    ReplayBackend,
)
from .gold import build_gold_response, build_training_data
from .ingest import SPLITS, detect_split, find_release_files, load, stats
from .numbers import format_decimal
from .parsing import parse_prediction
from .prompts import build_zero_shot_prompt

log = logging.getLogger("stepwise_qa")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_BACKEND = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- JSON-lines helpers ---------------------------------------------------------

def read_jsonl(path: str | os.PathLike) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            if line.strip():
                try:
                    yield json.loads(line)
                except json.JSONDecodeError as exc:
                    raise SchemaError(f"{path}:{n}", "<line>", f"invalid JSON: {exc.msg}") from None


def write_jsonl(path: str | os.PathLike, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def _load_gold(args) -> list:
    kwargs = {}
    if args.dataset == Dataset.TATDQA.value and getattr(args, "docs_dir", None):
        kwargs["docs_dir"] = args.docs_dir
    return load(args.dataset, args.path, **kwargs)


# --- commands ---------------------------------------------------------------------

def cmd_ingest_stats(args) -> int:
    dataset = Dataset(args.dataset)
    path = Path(args.path)
    if not path.exists():
        raise FileNotFoundError(f"no such file or directory: {path}")
    if path.is_dir():
        files = find_release_files(dataset, path)
        if not files:
            raise FileNotFoundError(f"no {dataset.value} release files in {path}")
        targets = [(split, files[split]) for split in SPLITS if split in files]
    else:
        targets = [(args.split or detect_split(path), path)]
    for split, file in targets:
        kwargs = {"labeled": False}
        if dataset is Dataset.TATDQA:
            kwargs.update(docs_dir=args.docs_dir, require_pages=False)
        print(stats(load(dataset, file, **kwargs), dataset, split).line())
    return EXIT_OK


def cmd_build_data(args) -> int:
    instances = _load_gold(args)
    if args.pipeline == "zero-shot":
        rows = []
        for inst in instances:
            rows.append({"id": inst.id, "prompt": build_zero_shot_prompt(inst, cot=args.cot).text,
                         "gold_response": ""})
        write_jsonl(args.out, rows)
        report = {"emitted": len(rows), "inconsistent_count": 0, "inconsistent": []}
    else:
        built, rep = build_training_data(instances, args.pipeline)
        write_jsonl(args.out, (t.to_json() for t in built))
        report = rep.to_json()
    report_path = args.report or f"{args.out}.report.json"
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, ensure_ascii=False)
        fh.write("\n")
    print(f"emitted {report['emitted']} instances, {report['inconsistent_count']} inconsistent "
          f"(see {report_path})", file=sys.stderr)
    return EXIT_OK


def cmd_infer(args) -> int:
    rows = list(read_jsonl(args.input))
    for i, r in enumerate(rows):
        if "prompt" not in r:
            raise SchemaError(r.get("id", f"line {i + 1}"), "prompt")
    if args.replay:
        backend = ReplayBackend.from_records(args.replay)
    else:
        backend = OpenAICompatBackend.from_env(args.endpoint_env, args.api_key_env,
                                               max_retries=args.max_retries)
    params = GenParams(model=args.model, temperature=args.temperature, top_p=args.top_p,
                       max_tokens=args.max_tokens)
    gateway = Gateway(backend, record_path=args.record)
    ids = [str(r.get("id", i)) for i, r in enumerate(rows)]
    results = gateway.complete_batch([r["prompt"] for r in rows], params, args.concurrency, ids)
    out = []
    for rid, res in zip(ids, results):
        if isinstance(res, GatewayError):
            out.append({"id": rid, "error": str(res), "error_type": type(res).__name__})
        else:
            out.append({"id": rid, "response_text": res})
    write_jsonl(args.out, out)
    failed = sum(isinstance(r, GatewayError) for r in results)
    if failed:
        print(f"{failed} of {len(results)} completions failed", file=sys.stderr)
    return EXIT_BACKEND if results and failed == len(results) else EXIT_OK


def _execute_record(rec: dict, schema: Schema) -> dict:
    rid = rec.get("id")
    pred = None
    parse_flags: list[str] = []
    if "prediction" in rec and rec["prediction"] is not None:
        pred = Prediction.from_json(rec["prediction"])
        parse_flags = list(pred.flags)
    elif "response_text" in rec:
        try:
            pred = parse_prediction(str(rec["response_text"]), schema)
            parse_flags = list(pred.flags)
        except Unparseable:
            parse_flags = ["unparseable", "degraded"]
    else:
        parse_flags = ["no_response", "degraded"]
    if pred is None:
        final = FinalAnswer(AnswerValue.text(""), Branch.MODEL_PASSTHROUGH, tuple(parse_flags))
    else:
        final = execute_prediction(pred)
    return {
        "id": rid,
        "prediction": pred.to_json() if pred else None,
        "parse_flags": parse_flags,
        **final.to_json(),
    }


def cmd_execute(args) -> int:
    if args.eval_only:
        return _eval_lines(args)
    schema = Schema(args.schema)
    write_jsonl(args.out, (_execute_record(r, schema) for r in read_jsonl(args.input)))
    return EXIT_OK


def _eval_lines(args) -> int:
    src = open(args.input, encoding="utf-8") if args.input and args.input != "-" else sys.stdin
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for line in src:
            expr = line.rstrip("\n")
            if not expr.strip():
                continue
            try:
                if isinstance(parse_equation(expr), Compare):
                    value = "yes" if eval_comparison(expr) else "no"
                else:
                    raw = eval_arithmetic(expr)
                    value = f"{format_decimal(raw)}\t{format_decimal(round_half_even(raw))}"
            except EquationError as exc:
                value = f"error: {exc}"
            out.write(f"{expr}\t{value}\n")
    finally:
        if src is not sys.stdin:
            src.close()
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def _joined(args):
    gold = {inst.id: inst for inst in _load_gold(args)}
    preds = {str(r["id"]): r for r in read_jsonl(args.pred)}
    for gid, inst in gold.items():
        rec = preds.get(gid)
        if rec is None:
            yield None, FinalAnswer(AnswerValue.text(""), Branch.MODEL_PASSTHROUGH, ("missing",)), inst
            continue
        pred = Prediction.from_json(rec["prediction"]) if rec.get("prediction") else None
        final = FinalAnswer(AnswerValue.from_json(rec["final_answer"]), Branch(rec.get("branch", "model_passthrough")),
                            tuple(rec.get("flags", ())))
        yield pred, final, inst


def cmd_evaluate(args) -> int:
    report = evaluate_split(_joined(args), args.scale_mode)
    print(report.pretty())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report.to_json(), fh, indent=2)
            fh.write("\n")
    return EXIT_OK


def cmd_analyze(args) -> int:
    counts = {k: 0 for k in ("wrong_evidence", "missed_evidence", "redundant_evidence",
                             "wrong_operators", "wrong_values")}
    unclassifiable = 0
    errors = 0
    samples: dict[str, list] = {k: [] for k in counts}
    for pred, final, inst in _joined(args):
        em, _ = score_record(final.value, inst.gold_answer, ScaleMode.STRICT,
                             pred.scale if pred else None, inst.gold_scale)
        if em:
            continue
        errors += 1
        category = None
        if pred is not None and not pred.degraded:
            try:
                category = categorize_error(pred, build_gold_response(inst).trace)
            except (InconsistentGold, StepwiseQAError):
                category = None
        if category is None:
            unclassifiable += 1
            continue
        kind = category.kind.value
        counts[kind] += 1
        if len(samples[kind]) < args.samples:
            gold_trace = build_gold_response(inst).trace
            samples[kind].append({
                "id": inst.id, "question": inst.question,
                "gold_evidence": gold_trace.evidence, "pred_evidence": pred.evidence,
                "gold_equation": gold_trace.equation, "pred_equation": pred.equation,
            })
    result = {"errors": errors, "unclassifiable": unclassifiable, "counts": counts, "samples": samples}
    for kind, n in counts.items():
        step = "reasoner" if kind in ("wrong_operators", "wrong_values") else "extractor"
        share = f"{100 * n / errors:5.1f}%" if errors else "  n/a"
        print(f"{step:<10} {kind:<20} {n:>6} {share}")
    print(f"{'':<10} {'unclassifiable':<20} {unclassifiable:>6}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(result, fh, indent=2, ensure_ascii=False)
            fh.write("\n")
    return EXIT_OK


# --- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stepwise-qa", description="Step-wise financial QA pipeline tools.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--config", help="JSON file whose keys provide defaults for the chosen command")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    datasets = [d.value for d in Dataset]

    s = sub.add_parser("ingest-stats", help="count question-level instances per split")
    s.add_argument("--dataset", required=True, choices=datasets)
    s.add_argument("--path", required=True, help="a release file or a directory of them")
    s.add_argument("--split", choices=SPLITS, help="override split detection for a single file")
    s.add_argument("--docs-dir", help="TAT-DQA per-document page files")
    s.set_defaults(func=cmd_ingest_stats)

    s = sub.add_parser("build-data", help="render prompts and gold responses")
    s.add_argument("--dataset", required=True, choices=datasets)
    s.add_argument("--path", required=True)
    s.add_argument("--docs-dir")
    s.add_argument("--pipeline", choices=["stepwise", "e2e", "zero-shot"], default="stepwise")
    s.add_argument("--cot", action="store_true", help="zero-shot only: add the step-by-step sentence")
    s.add_argument("--out", required=True)
    s.add_argument("--report", help="consistency report path (default: <out>.report.json)")
    s.set_defaults(func=cmd_build_data)

    s = sub.add_parser("infer", help="query a completion backend for each prompt")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--endpoint-env", default=DEFAULT_ENDPOINT_ENV,
                   help="environment variable holding the endpoint URL")
    s.add_argument("--api-key-env", default=DEFAULT_API_KEY_ENV,
                   help="environment variable holding the API key")
    defaults = GenParams()
    s.add_argument("--model", default=defaults.model)
    s.add_argument("--temperature", type=float, default=defaults.temperature)
    s.add_argument("--top-p", type=float, default=defaults.top_p)
    s.add_argument("--max-tokens", type=int, default=defaults.max_tokens)
    s.add_argument("--concurrency", type=int, default=1)
    s.add_argument("--max-retries", type=int, default=5)
    s.add_argument("--record", help="append CompletionRecords to this JSON-lines file")
    s.add_argument("--replay", help="serve responses from a CompletionRecord file instead of the network")
    s.set_defaults(func=cmd_infer)

    s = sub.add_parser("execute", help="parse responses and run the external executor")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out")
    s.add_argument("--schema", choices=[Schema.THREE_STEP.value, Schema.FIVE_STEP.value])
    s.add_argument("--eval-only", action="store_true", help="evaluate one expression per input line")
    s.set_defaults(func=cmd_execute)

    for name, func, help_ in (("evaluate", cmd_evaluate, "EM / F1 report"),
                              ("analyze", cmd_analyze, "error-category counts")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--pred", required=True, help="output of `execute`")
        s.add_argument("--gold", required=True, help="gold dataset file")
        s.add_argument("--dataset", required=True, choices=datasets)
        s.add_argument("--docs-dir")
        s.add_argument("--out")
        if name == "evaluate":
            s.add_argument("--scale-mode", choices=[m.value for m in ScaleMode], default=ScaleMode.STRICT.value)
        else:
            s.add_argument("--samples", type=int, default=3)
        s.set_defaults(func=func)
    return p


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    with open(known.config, encoding="utf-8") as fh:
        cfg = json.load(fh)
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    for action in parser._subparsers._group_actions:  # one _SubParsersAction
        for sub in action.choices.values():
            sub.set_defaults(**{k: v for k, v in cfg.items()
                                if any(a.dest == k for a in sub._actions)})
            for a in sub._actions:
                if a.dest in cfg and a.required:
                    a.required = False


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "execute" and not args.eval_only and (not args.schema or not args.out):
        parser.error("execute needs --schema and --out unless --eval-only is given")
    if args.command in ("evaluate", "analyze"):
        args.path = args.gold
    try:
        return args.func(args)
    except (OSError, SchemaError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except GatewayError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND


if __name__ == "__main__":
    sys.exit(main())
