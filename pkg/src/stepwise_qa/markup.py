"""Markdown table cells: the single escape table plus row split/join.

Both the prompt renderer and the response parser go through this module so
their escaping can never drift apart.
"""

from __future__ import annotations

import re

# raw text -> cell text. Applied in order.
ESCAPES: tuple[tuple[str, str], ...] = (("|", r"\|"),)

_NEWLINES = re.compile(r"\s*(?:\r\n|\r|\n)\s*")
_UNESCAPED_PIPE = re.compile(r"(?<!\\)\|")
_SEPARATOR_CELL = re.compile(r"^:?-+:?$")


def normalize_cell(raw: str) -> str:
    """Ingest-time normalization: trim, fold newlines to a space, escape."""
    text = _NEWLINES.sub(" ", raw).strip()
    return escape_cell(text)


def escape_cell(text: str) -> str:
    for raw, esc in ESCAPES:
        # leave already-escaped pipes alone so escaping is idempotent
        if raw == "|":
            text = _UNESCAPED_PIPE.sub(lambda _m: esc, text)
        else:
            text = text.replace(raw, esc)
    return text


def unescape_cell(text: str) -> str:
    for raw, esc in reversed(ESCAPES):
        text = text.replace(esc, raw)
    return text


def is_clean_cell(text: str) -> bool:
    return "\n" not in text and "\r" not in text and not _UNESCAPED_PIPE.search(text)


def render_row(cells: list[str] | tuple[str, ...]) -> str:
    return "| " + " | ".join(cells) + " |"


def split_row(line: str) -> list[str] | None:
    """Split a markdown table line into trimmed cells.

    Returns ``None`` when the line is not a table row (no leading pipe).
    The trailing pipe is optional.
    """
    s = line.strip()
    if not s.startswith("|"):
        return None
    parts = _UNESCAPED_PIPE.split(s)
    # parts[0] is the empty text before the leading pipe
    parts = parts[1:]
    if parts and s.endswith("|") and not s.endswith("\\|"):
        parts = parts[:-1]
    return [p.strip() for p in parts]


def is_separator_row(cells: list[str]) -> bool:
    return bool(cells) and all(_SEPARATOR_CELL.match(c.replace(" ", "")) for c in cells)
