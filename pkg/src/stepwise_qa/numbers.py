"""Exact decimal helpers shared by the executor, the metrics and rendering."""

from __future__ import annotations

import re
from decimal import ROUND_HALF_EVEN, Context, Decimal, InvalidOperation, localcontext

# Working precision for every arithmetic step. Division results are rounded
# to this many significant digits, then the executor rounds to 4 places.
DECIMAL_CONTEXT = Context(prec=50, rounding=ROUND_HALF_EVEN, Emax=999_999, Emin=-999_999)

ANSWER_PLACES = 4

_NUMBER_RE = re.compile(
    r"""^[+-]?
        (?:\d{1,3}(?:,\d{3})+(?:\.\d*)?   # 1,234,567.89
          |\d+(?:\.\d*)?                  # 1234.5 / 12.
          |\.\d+)                         # .5
        %?$""",
    re.VERBOSE,
)


def round_half_even(x: Decimal, places: int = ANSWER_PLACES) -> Decimal:
    """Banker's rounding of ``x`` to ``places`` decimals."""
    if not x.is_finite():
        raise ValueError(f"cannot round non-finite value {x}")
    exp = Decimal(1).scaleb(-places)
    with localcontext(DECIMAL_CONTEXT) as ctx:
        # quantize needs enough digits to hold the integer part as well
        ctx.prec = max(ctx.prec, x.adjusted() + places + 2)
        return x.quantize(exp, rounding=ROUND_HALF_EVEN)


def format_decimal(x: Decimal) -> str:
    """Plain (non-exponent) rendering with trailing zeros removed."""
    if x.is_zero():
        return "0"
    s = format(x.normalize(DECIMAL_CONTEXT), "f")
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    return s


def canonical_number(x: Decimal) -> str:
    """The 4-decimal canonical form used for rendering and exact matching."""
    return format_decimal(round_half_even(x))


def parse_number(text: str) -> Decimal | None:
    """Parse a financial-style literal ("1,234.5", "-3", "12.5%").

    Returns ``None`` for anything that is not a single number. A trailing
    ``%`` scales by 0.01.
    """
    s = text.strip()
    if not s or not _NUMBER_RE.match(s):
        return None
    percent = s.endswith("%")
    s = s.rstrip("%").replace(",", "")
    try:
        value = Decimal(s)
    except InvalidOperation:
        return None
    if percent:
        with localcontext(DECIMAL_CONTEXT):
            value = value * Decimal("0.01")
    return value


def to_decimal(value: object) -> Decimal:
    """Decimal from a JSON number or numeric string, via its shortest repr."""
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, Decimal):
        return value
    if isinstance(value, (int, float)):
        return Decimal(repr(value)) if isinstance(value, float) else Decimal(value)
    if isinstance(value, str):
        parsed = parse_number(value)
        if parsed is None:
            raise ValueError(f"not a number: {value!r}")
        return parsed
    raise TypeError(f"cannot convert {type(value).__name__} to Decimal")
