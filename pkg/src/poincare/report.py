"""JSON and CSV writers.

Every file carries a format version string and the run configuration.
CSV numbers use 17 significant digits so values round-trip exactly.
"""

import csv
import json
import math
from pathlib import Path

from .errors import ValidationError
from .mixture import mixture_from_dict

FORMATS = {
    "bound": "poincare-bound/1",
    "spectrum": "poincare-spectrum/1",
    "eigenfunction": "poincare-eigenfunction/1",
    "bu-scan": "poincare-bu-scan/1",
    "clt": "poincare-clt/1",
    "recursion": "poincare-recursion/1",
}


def load_mixture(path):
    """Read a mixture JSON file, reporting syntax errors by line and column."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read: {exc.strerror}", field=str(path))
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"line {exc.lineno} column {exc.colno}: {exc.msg}", field=str(path))
    return mixture_from_dict(data)


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "item"):
        return _jsonable(value.item())
    return value


def write_json(path, kind, payload, config):
    doc = {"format": FORMATS[kind], "config": config.to_dict()}
    doc.update(payload)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(doc), indent=2, allow_nan=False) + "\n")
    return path


def fmt(value):
    if value is None:
        return ""
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    if hasattr(value, "item"):
        value = value.item()
        if isinstance(value, int):
            return str(value)
    return format(float(value), ".17g")


def write_csv(path, kind, columns, rows, config):
    """Write ``rows`` (sequences aligned with ``columns``) after two ``#`` header lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(f"# format: {FORMATS[kind]}\n")
        fh.write(f"# config: {json.dumps(config.to_dict(), sort_keys=True)}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def read_csv(path):
    """Inverse of :func:`write_csv`: returns ``(columns, rows)`` with floats (None for blanks)."""
    with Path(path).open() as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    columns = next(reader)
    rows = [[float(v) if v != "" else None for v in row] for row in reader]
    return columns, rows
