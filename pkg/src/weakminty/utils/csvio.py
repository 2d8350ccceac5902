"""
CSV artifacts for runs, certificates, sign grids and sweeps.

Files are UTF-8 with LF line endings and reals printed with
settings.csv_precision significant digits. Every file is written to a
temporary sibling first and moved into place, so a reader never sees a
partial file.
"""

from __future__ import annotations

import csv
import io
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Sequence

from weakminty.config.settings import settings
from weakminty.core.diagnostics import IterateTrace, RateCertificate, SignGrid

logger = logging.getLogger(__name__)

CERTIFICATE_HEADER = ("k", "bound", "best_norm_sq", "ok")
SIGN_GRID_HEADER = ("x", "y", "sign")


def format_real(x: float) -> str:
    return f"{float(x):.{settings.csv_precision}g}"


def format_cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_real(value)
    return str(value)


def atomic_write_text(path: Path, text: str) -> Path:
    """Write text to path via a temporary file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    out = atomic_write_text(path, buf.getvalue())
    logger.debug(f"Wrote {out}")
    return out


def trace_header(dim: int) -> list[str]:
    return ["k", *[f"u_{i}" for i in range(dim)], "field_norm_sq", "step", "oracle_calls"]


def write_trace_csv(path: Path, trace: IterateTrace) -> Path:
    rows = (
        [r.k, *[float(x) for x in r.u], float(r.field_norm_sq), float(r.step), int(r.oracle_calls)]
        for r in trace.rows
    )
    return write_rows(path, trace_header(trace.dim), rows)


def write_certificate_csv(path: Path, cert: RateCertificate, trace: IterateTrace) -> Path:
    """One row per certified trace row; k is the trace row's iteration index."""
    rows = (
        [trace.rows[index].k, float(bound), float(best), ok]
        for index, bound, best, ok in cert.rows()
    )
    return write_rows(path, CERTIFICATE_HEADER, rows)


def write_sign_grid_csv(path: Path, grid: SignGrid) -> Path:
    return write_rows(path, SIGN_GRID_HEADER, grid.rows())


def write_summary(path: Path, fields: dict[str, Any]) -> Path:
    """Single line of space separated key=value pairs."""
    line = " ".join(f"{k}={_summary_value(v)}" for k, v in fields.items())
    return atomic_write_text(path, line + "\n")


def _summary_value(value: Any) -> str:
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(format_cell(v) for v in value) + "]"
    return format_cell(value)
