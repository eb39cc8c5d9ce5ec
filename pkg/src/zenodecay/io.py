"""Delimited-text and JSON output helpers.

CSV files carry a single ``#`` metadata line, a header row and one row per
sample.  Floats are written with ``repr`` precision so identical inputs
produce byte-identical files.
"""
from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from . import __version__


def _fmt(value):
    if isinstance(value, str):
        return value
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def metadata_line(tool, params):
    items = " ".join(f"{key}={_fmt(value)}" for key, value in params.items())
    return f"# zenodecay {__version__} {tool} {items}".rstrip()


def format_csv(header, rows, meta=None, trailer=None):
    lines = []
    if meta is not None:
        lines.append(meta)
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    if trailer is not None:
        lines.append(trailer)
    return "\n".join(lines) + "\n"


def complex_to_json(z):
    return {"re": float(z.real), "im": float(z.imag)}


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file and rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
