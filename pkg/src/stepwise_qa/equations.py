"""Grammar, validity check and exact evaluator for Reasoner equations.

Grammar (whitespace-insensitive)::

    equation   := arith [ ('>' | '<') arith ]
    arith      := term   (('+' | '-') term)*
    term       := unary  (('*' | '/') unary)*
    unary      := ('-' | '+') unary | primary
    primary    := NUMBER | '(' arith ')'
    NUMBER     := digits with optional thousands commas and decimals, optional '%'

A comparison may only appear at the root. ``%`` multiplies the literal by
0.01. The unicode operators ``−``, ``×`` and ``÷`` are read as ``-``, ``*``
and ``/``. Accounting negatives such as ``(123.4)`` are just parenthesized
positives here; normalise them upstream if needed.
"""

from __future__ import annotations

import decimal
import re
from dataclasses import dataclass
from decimal import Decimal, localcontext
from typing import Union

from .errors import DivisionByZero, EquationError, ParseError
from .numbers import DECIMAL_CONTEXT, round_half_even

__all__ = [
    "Num", "Neg", "BinOp", "Compare", "Expr",
    "parse_equation", "validate_equation", "eval_arithmetic", "eval_comparison",
    "evaluate", "round_half_even", "literals", "shape",
]

MAX_DEPTH = 100

_UNICODE_OPS = str.maketrans({"−": "-", "×": "*", "÷": "/"})

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:[0-9]{1,3}(?:,[0-9]{3})+(?![0-9])(?:\.[0-9]+)?|[0-9]+(?:\.[0-9]+)?|\.[0-9]+)%?)
  | (?P<op>[-+*/()<>])
    """,
    re.VERBOSE | re.ASCII,
)


@dataclass(frozen=True)
class Num:
    value: Decimal
    text: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Compare:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[Num, Neg, BinOp, Compare]


def _tokenize(s: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(s):
        m = _TOKEN_RE.match(s, pos)
        if m is None:
            raise ParseError(s, pos, f"unexpected character {s[pos]!r}")
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    return tokens


def _literal(text: str) -> Decimal:
    percent = text.endswith("%")
    value = Decimal(text.rstrip("%").replace(",", ""))
    return value.scaleb(-2) if percent else value


class _Parser:
    def __init__(self, s: str):
        self.s = s
        self.tokens = _tokenize(s)
        self.i = 0
        self.depth = 0

    def peek(self) -> tuple[str, str, int] | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def fail(self, reason: str):
        tok = self.peek()
        pos = tok[2] if tok else len(self.s)
        raise ParseError(self.s, pos, reason)

    def take_op(self, *ops: str) -> str | None:
        tok = self.peek()
        if tok and tok[0] == "op" and tok[1] in ops:
            self.i += 1
            return tok[1]
        return None

    def equation(self) -> Expr:
        if not self.tokens:
            self.fail("empty equation")
        left = self.arith()
        op = self.take_op(">", "<")
        if op:
            left = Compare(op, left, self.arith())
        if self.peek() is not None:
            self.fail("unexpected token")
        return left

    def arith(self) -> Expr:
        node = self.term()
        while (op := self.take_op("+", "-")):
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while (op := self.take_op("*", "/")):
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        self.depth += 1
        if self.depth > MAX_DEPTH:
            self.fail("expression nested too deeply")
        try:
            op = self.take_op("-", "+")
            if op == "-":
                return Neg(self.unary())
            if op == "+":
                return self.unary()
            return self.primary()
        finally:
            self.depth -= 1

    def primary(self) -> Expr:
        tok = self.peek()
        if tok is None:
            self.fail("unexpected end of equation")
        kind, text, _ = tok
        if kind == "num":
            self.i += 1
            with localcontext(DECIMAL_CONTEXT):
                return Num(_literal(text), text)
        if self.take_op("("):
            node = self.arith()
            if not self.take_op(")"):
                self.fail("expected ')'")
            return node
        self.fail(f"unexpected token {text!r}")


def parse_equation(s: str) -> Expr:
    """Parse ``s`` into an expression tree; raises :class:`ParseError`."""
    if not isinstance(s, str):
        raise ParseError(repr(s), 0, "equation must be a string")
    return _Parser(s.translate(_UNICODE_OPS)).equation()


def validate_equation(s: str) -> bool:
    """True iff ``s`` is a comparison-free arithmetic equation."""
    try:
        return not isinstance(parse_equation(s), Compare)
    except ParseError:
        return False


def evaluate(node: Expr) -> Decimal:
    """Exact decimal value of a comparison-free tree."""
    with localcontext(DECIMAL_CONTEXT) as ctx:
        ctx.traps[decimal.DivisionByZero] = True
        ctx.traps[decimal.InvalidOperation] = True
        ctx.traps[decimal.Overflow] = True
        try:
            return _eval(node)
        except decimal.DivisionByZero as exc:
            raise DivisionByZero("division by zero") from exc
        except decimal.InvalidOperation as exc:
            # with finite operands only 0/0 can signal this
            raise DivisionByZero("0/0 is undefined") from exc
        except decimal.Overflow as exc:
            raise EquationError("numeric overflow") from exc


def _eval(root: Expr) -> Decimal:
    # explicit stack: long "a + b + c + ..." chains would overflow recursion
    values: list[Decimal] = []
    stack: list[tuple[Expr, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if isinstance(node, Num):
            values.append(node.value)
        elif isinstance(node, Neg):
            if expanded:
                values.append(-values.pop())
            else:
                stack += [(node, True), (node.operand, False)]
        elif isinstance(node, BinOp):
            if expanded:
                right = values.pop()
                left = values.pop()
                values.append(_APPLY[node.op](left, right))
            else:
                stack += [(node, True), (node.right, False), (node.left, False)]
        else:
            raise ParseError(str(node), 0, "comparison is only allowed at the root")
    return values[0]


_APPLY = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: a / b,
}


def eval_arithmetic(s: str) -> Decimal:
    """Unrounded value of a comparison-free equation."""
    node = parse_equation(s)
    if isinstance(node, Compare):
        raise ParseError(s, 0, "expected an arithmetic equation, found a comparison")
    return evaluate(node)


def eval_comparison(s: str) -> bool:
    node = parse_equation(s)
    if not isinstance(node, Compare):
        raise ParseError(s, 0, "expected a comparison")
    left, right = evaluate(node.left), evaluate(node.right)
    return left > right if node.op == ">" else left < right


def literals(node: Expr) -> list[Decimal]:
    """Numeric literals in left-to-right order."""
    if isinstance(node, Num):
        return [node.value]
    if isinstance(node, Neg):
        return literals(node.operand)
    return literals(node.left) + literals(node.right)


def shape(node: Expr) -> tuple:
    """Operator structure with every literal replaced by a placeholder."""
    if isinstance(node, Num):
        return ("n",)
    if isinstance(node, Neg):
        return ("neg", shape(node.operand))
    return (node.op, shape(node.left), shape(node.right))
