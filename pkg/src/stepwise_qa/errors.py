"""Exception hierarchy.

Every error raised by the library derives from :class:`StepwiseQAError` so
callers that only want to log-and-continue can catch one type.
"""

from __future__ import annotations


class StepwiseQAError(Exception):
    pass


# --- core values -----------------------------------------------------------

class UnknownScale(StepwiseQAError, ValueError):
    pass


class UnknownQuestionType(StepwiseQAError, ValueError):
    pass


class InvariantError(StepwiseQAError, ValueError):
    """A value type was constructed in violation of its invariants."""


# --- ingestion -------------------------------------------------------------

class SchemaError(StepwiseQAError, ValueError):
    def __init__(self, record_id: str | None, field: str, detail: str = ""):
        self.record_id = record_id
        self.field = field
        msg = f"record {record_id!r}: missing or invalid field {field!r}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


# --- prompt / gold construction -------------------------------------------

class MissingTable(StepwiseQAError, ValueError):
    pass


class ProgramError(StepwiseQAError, ValueError):
    pass


class UnsupportedOperator(ProgramError):
    def __init__(self, op: str):
        self.op = op
        super().__init__(f"unsupported program operator: {op!r}")


class DanglingStepRef(ProgramError):
    def __init__(self, ref: str):
        self.ref = ref
        super().__init__(f"step reference {ref!r} points at no earlier step")


class InconsistentGold(StepwiseQAError):
    def __init__(self, instance_id: str, reason: str):
        self.instance_id = instance_id
        self.reason = reason
        super().__init__(f"{instance_id}: {reason}")


# --- equations -------------------------------------------------------------

class EquationError(StepwiseQAError):
    pass


class ParseError(EquationError, ValueError):
    def __init__(self, text: str, pos: int, reason: str):
        self.text = text
        self.pos = pos
        super().__init__(f"{reason} at position {pos} in {text!r}")


class DivisionByZero(EquationError, ZeroDivisionError):
    pass


# --- response parsing ------------------------------------------------------

class ResponseParseError(StepwiseQAError, ValueError):
    def __init__(self, message: str, span: str = ""):
        self.span = span
        super().__init__(message)


class NoTableFound(ResponseParseError):
    pass


class SchemaMismatch(ResponseParseError):
    pass


class NoFinalStatement(ResponseParseError):
    pass


class Unparseable(ResponseParseError):
    pass


# --- gateway ---------------------------------------------------------------

class GatewayError(StepwiseQAError):
    pass


class AuthError(GatewayError):
    pass


class RateLimited(GatewayError):
    pass


class Timeout(GatewayError):
    pass


class BackendError(GatewayError):
    pass


class MissingFixture(GatewayError, KeyError):
    def __str__(self) -> str:  # KeyError would repr() the message
        return str(self.args[0]) if self.args else "missing fixture"
