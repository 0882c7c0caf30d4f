"""Uniform record for a single identity check, plus JSON/CSV emission."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

# reference magnitudes below this are treated as an exact zero
ZERO_REFERENCE = 1e-300


@dataclass
class CheckReport:
    """Outcome of comparing a computed quantity with its reference.

    ``passed`` is derived: ``rel_err <= tol`` unless the reference is zero,
    in which case ``abs_err <= tol``. A non-``"ok"`` status (quadrature
    failure, rejected input surfaced as a report) always fails.
    """

    name: str
    params: dict[str, Any]
    abs_err: float
    rel_err: float
    tol: float
    reference_is_zero: bool = False
    status: str = "ok"
    anchor: str = ""
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        if self.status != "ok":
            return False
        err = self.abs_err if self.reference_is_zero else self.rel_err
        return math.isfinite(err) and err <= self.tol

    def to_record(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "paper_anchor": self.anchor,
            "params": _jsonable(self.params),
            "abs_err": self.abs_err,
            "rel_err": self.rel_err,
            "tol": self.tol,
            "pass": self.passed,
            "status": self.status,
            "metadata": _jsonable(self.metadata),
        }

    def summary_line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (f"{flag} {self.name:<32s} abs={self.abs_err:.3e} "
                f"rel={self.rel_err:.3e} tol={self.tol:.1e}")


def compare(name: str, computed, reference, tol: float, *,
            params: Mapping[str, Any] | None = None, anchor: str = "",
            metadata: Mapping[str, Any] | None = None,
            status: str = "ok") -> CheckReport:
    """Build a report from array-like computed/reference values (max-norm)."""
    import numpy as np

    c = np.asarray(computed, dtype=complex)
    r = np.asarray(reference, dtype=complex)
    abs_err = float(np.max(np.abs(c - r))) if c.size else 0.0
    scale = float(np.max(np.abs(r))) if r.size else 0.0
    zero = scale <= ZERO_REFERENCE
    rel_err = abs_err / scale if not zero else (0.0 if abs_err == 0 else math.inf)
    return CheckReport(name=name, params=dict(params or {}), abs_err=abs_err,
                       rel_err=rel_err, tol=tol, reference_is_zero=zero,
                       status=status, anchor=anchor,
                       metadata=dict(metadata or {}))


def _jsonable(obj):
    import numpy as np

    if isinstance(obj, Mapping):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def write_jsonl(reports: Iterable[CheckReport], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rep in reports:
            fh.write(json.dumps(rep.to_record(), sort_keys=True) + "\n")


def write_csv(rows: Sequence[Mapping[str, Any]], path: str | Path) -> None:
    """Flat table, one row per parameter point; columns are the union of keys."""
    columns: list[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _csv_cell(row.get(k, "")) for k in columns})


def _csv_cell(value):
    if isinstance(value, complex):
        return repr(value)
    return value


def report_row(rep: CheckReport) -> dict[str, Any]:
    row: dict[str, Any] = {"name": rep.name}
    for key, value in rep.params.items():
        if isinstance(value, (int, float, str, bool)):
            row[key] = value
    row.update(abs_err=rep.abs_err, rel_err=rep.rel_err, tol=rep.tol,
               passed=rep.passed)
    return row
