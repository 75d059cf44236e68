"""Atomic, schema-versioned output helpers."""

import csv
import io
import json
import os
import tempfile

import numpy as np

SCHEMA_VERSION = "1.0"


def atomic_write_text(path, text):
    """Write via a temp file in the target directory and rename over ``path``."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def to_json(obj):
    payload = {"schema_version": SCHEMA_VERSION}
    payload.update(obj)
    return json.dumps(payload, indent=2, sort_keys=True, default=_default, allow_nan=True) + "\n"


def write_json(path, obj):
    atomic_write_text(path, to_json(obj))


def rows_to_csv(rows, fields=None):
    fields = fields or list(dict.fromkeys(k for r in rows for k in r))
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()
