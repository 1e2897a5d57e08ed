"""Step-wise financial question answering: prompts, parsing, execution and scoring."""

__version__ = "0.1.0"

from .core import (
    AnswerKind,
    AnswerValue,
    Dataset,
    Prediction,
    QAInstance,
    QuestionType,
    Scale,
    Schema,
    StepTrace,
    Table,
)
from .equations import eval_arithmetic, eval_comparison, parse_equation, validate_equation
from .evaluation import ScaleMode, categorize_error, evaluate_split, exact_match, numeracy_f1
from .executor import Branch, FinalAnswer, execute, execute_prediction
from .gateway import Gateway, GenParams, OpenAICompatBackend, ReplayBackend
from .gold import build_gold_response, build_training_data, finqa_program_to_infix
from .ingest import load, load_finqa, load_tatdqa, load_tatqa
from .parsing import parse_prediction, render_response
from .prompts import build_e2e_prompt, build_stepwise_prompt, build_zero_shot_prompt

__all__ = [
    "AnswerKind",
    "AnswerValue",
    "Dataset",
    "Prediction",
    "QAInstance",
    "QuestionType",
    "Scale",
    "Schema",
    "StepTrace",
    "Table",
    "eval_arithmetic",
    "eval_comparison",
    "parse_equation",
    "validate_equation",
    "ScaleMode",
    "categorize_error",
    "evaluate_split",
    "exact_match",
    "numeracy_f1",
    "Branch",
    "FinalAnswer",
    "execute",
    "execute_prediction",
    "Gateway",
    "GenParams",
    "OpenAICompatBackend",
    "ReplayBackend",
    "build_gold_response",
    "build_training_data",
    "finqa_program_to_infix",
    "load",
    "load_finqa",
    "load_tatdqa",
    "load_tatqa",
    "parse_prediction",
    "render_response",
    "build_e2e_prompt",
    "build_stepwise_prompt",
    "build_zero_shot_prompt",
]
