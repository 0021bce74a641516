"""Strict ``key = value`` text files used for parameters and coefficient tables.

Blank lines and ``#`` comments are ignored. Keys are case sensitive
(``C_L`` and ``C_l`` are different channels). Every key must appear exactly
once; the caller decides which keys are allowed.
"""

from pathlib import Path

from .errors import ParseError


def parse_kv(text, path=None):
    """Parse ``text`` into an ordered dict of ``key -> raw string value``."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw.strip()!r}", path, lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or not value:
            raise ParseError(f"empty key or value in {raw.strip()!r}", path, lineno)
        if key in out:
            raise ParseError(f"duplicate key {key!r}", path, lineno)
        out[key] = (value, lineno)
    return out


def read_kv(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc.strerror}", path) from exc
    return parse_kv(text, path)


def check_keys(entries, allowed, required, path=None):
    """Reject unknown keys and report the first missing required key by name."""
    for key, (_, lineno) in entries.items():
        if key not in allowed:
            raise ParseError(f"unknown key {key!r}", path, lineno)
    for key in required:
        if key not in entries:
            raise ParseError(f"missing key {key!r}", path)


def as_float(entries, key, path=None):
    value, lineno = entries[key]
    try:
        return float(value)
    except ValueError:
        raise ParseError(f"key {key!r}: not a number: {value!r}", path, lineno) from None


def format_kv(items, header=()):
    """Render ``(key, value)`` pairs; floats use ``repr`` so reading back is exact."""
    lines = [f"# {h}" if h else "#" for h in header]
    if header:
        lines.append("")
    for key, value in items:
        if key is None:
            lines.append(f"# {value}" if value else "")
            continue
        if isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
