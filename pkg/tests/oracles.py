"""Reference implementations used only by the tests.

They work on trees and programs directly, never on the strings the
library parses, and share no code with it.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Context, Decimal

CTX = Context(prec=50, rounding=ROUND_HALF_EVEN, Emax=999_999, Emin=-999_999)


@dataclass
class Lit:
    value: Decimal
    text: str


@dataclass
class Un:
    child: object


@dataclass
class Bin:
    op: str
    left: object
    right: object


def round4(x: Decimal) -> Decimal:
    return Context(prec=1000, rounding=ROUND_HALF_EVEN).quantize(x, Decimal("0.0001"))


def interpret(node) -> Decimal:
    """Naive recursive evaluation in the same 50-digit half-even context."""
    if isinstance(node, Lit):
        return node.value
    if isinstance(node, Un):
        return CTX.minus(interpret(node.child))
    a, b = interpret(node.left), interpret(node.right)
    return {"+": CTX.add, "-": CTX.subtract, "*": CTX.multiply, "/": CTX.divide}[node.op](a, b)


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def render(node, rng: random.Random) -> str:
    """Infix text with only the parentheses precedence requires (plus random extras)."""
    if isinstance(node, Lit):
        return node.text
    if isinstance(node, Un):
        inner = render(node.child, rng)
        if not isinstance(node.child, Lit):
            inner = f"({inner})"
        return f"-{inner}"
    left, right = render(node.left, rng), render(node.right, rng)
    p = _PREC[node.op]
    if isinstance(node.left, Bin) and (_PREC[node.left.op] < p or rng.random() < 0.2):
        left = f"({left})"
    if isinstance(node.right, Bin) and (_PREC[node.right.op] <= p or rng.random() < 0.2):
        right = f"({right})"
    if isinstance(node.right, Un) and rng.random() < 0.5:
        right = f"({right})"
    sep = rng.choice([" ", "", "  "])
    return f"{left}{sep}{node.op}{sep}{right}"


def random_literal(rng: random.Random) -> Lit:
    whole = rng.randint(0, 10**6)
    places = rng.choice([0, 0, 1, 2, 4])
    frac = "".join(rng.choice("0123456789") for _ in range(places))
    if whole == 10**6:
        frac = "0" * places
    digits = f"{whole}" + (f".{frac}" if places else "")
    value = Decimal(digits)
    text = f"{whole:,}" + (f".{frac}" if places else "") if rng.random() < 0.3 else digits
    if rng.random() < 0.1:
        return Lit(value.scaleb(-2), text + "%")
    return Lit(value, text)


def random_tree(rng: random.Random, depth: int = 5):
    """Comparison-free tree of depth <= ``depth`` with literals in [-10^6, 10^6]."""
    if depth <= 1 or rng.random() < 0.25:
        lit = random_literal(rng)
        return Un(lit) if rng.random() < 0.15 else lit
    op = rng.choice("+-*/")
    left = random_tree(rng, depth - 1)
    while True:
        right = random_tree(rng, depth - 1)
        if op != "/" or interpret(right) != 0:
            return Bin(op, left, right)


# --- FinQA programs ----------------------------------------------------------

_STEP = re.compile(r"(\w+)\(([^()]*)\)")


def run_program(program: str) -> Decimal:
    """Execute a binary-op FinQA program one step at a time."""
    results: list[Decimal] = []
    for op, args in _STEP.findall(program):
        vals = []
        for a in (x.strip() for x in args.split(",")):
            if a.startswith("#"):
                vals.append(results[int(a[1:])])
            elif a.startswith("const_m"):
                vals.append(-Decimal(a[7:]))
            elif a.startswith("const_"):
                vals.append(Decimal(a[6:]))
            else:
                vals.append(Decimal(a))
        fn = {"add": CTX.add, "subtract": CTX.subtract, "multiply": CTX.multiply, "divide": CTX.divide}[op]
        results.append(fn(*vals))
    return results[-1]


def random_program(rng: random.Random, steps: int = 3) -> str:
    parts = []
    for i in range(steps):
        args = []
        for _ in range(2):
            r = rng.random()
            if i and r < 0.4:
                args.append(f"#{rng.randrange(i)}")
            elif r < 0.5:
                args.append(rng.choice(["const_100", "const_1000", "const_2", "const_m1"]))
            else:
                args.append(f"{rng.randint(1, 99999)}.{rng.randint(0, 99)}")
        op = rng.choice(["add", "subtract", "multiply", "divide"])
        parts.append(f"{op}({args[0]}, {args[1]})")
    return ", ".join(parts)


# --- executor cases ------------------------------------------------------------

def random_executor_case(rng: random.Random):
    """(o1, o2, qt) drawn so that every non-passthrough branch is exercised."""
    from stepwise_qa.core import QuestionType

    kind = rng.randrange(6)
    if kind == 0:
        tree = random_tree(rng, 3)
        return "e", render(tree, rng), rng.choice(list(QuestionType) + [None])
    if kind == 1:
        items = [f"item{rng.randint(0, 99)}" for _ in range(rng.randint(2, 6))]
        return " # ".join(items), " # ".join(items), QuestionType.COUNT
    if kind == 2:
        return "", f"{rng.randint(0, 99)} {rng.choice('<>')} {rng.randint(0, 99)}", None
    if kind == 3:
        return f"span {rng.randint(0, 9)}", "N.A.", QuestionType.SPAN
    if kind == 4:
        return " # ".join(f"s{rng.randint(0, 9)}" for _ in range(rng.randint(1, 4))), "N.A.", QuestionType.MULTI_SPAN
    return "x", rng.choice(["hello", "N.A.", "", "1 +"]), rng.choice([None, QuestionType.ARITHMETIC])
