"""Verification records and deterministic CSV output."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np


def fmt(x):
    """Render a value for CSV output; floats use 17 significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return "%.17g" % x
    if x is None:
        return ""
    return str(x)


def write_csv(path, rows, columns=None):
    """Write a list of dicts with a fixed column order."""
    rows = list(rows)
    if columns is None:
        columns = []
        for r in rows:
            for k in r:
                if k not in columns:
                    columns.append(k)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(columns)
        for r in rows:
            wr.writerow([fmt(r.get(c)) for c in columns])
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@dataclass
class VerificationReport:
    """Outcome of one inequality check ``lhs <= constant * rhs``.

    ``ratio`` is ``lhs / rhs`` (0 when both vanish, inf when only ``rhs``
    does). ``passed`` is decided by the caller against its own constant.
    """

    name: str
    lhs: float
    rhs: float
    passed: bool
    params: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def ratio(self):
        return safe_ratio(self.lhs, self.rhs)

    def row(self):
        out = {"check": self.name, "lhs": self.lhs, "rhs": self.rhs, "ratio": self.ratio,
               "passed": self.passed}
        for k, v in self.params.items():
            out[k] = v
        for k, v in self.details.items():
            if np.isscalar(v) or v is None:
                out[k] = v
        return out

    def summary(self):
        state = "PASS" if self.passed else "FAIL"
        return f"[{state}] {self.name}: lhs={fmt(self.lhs)} rhs={fmt(self.rhs)} ratio={fmt(self.ratio)}"

    def __bool__(self):
        return bool(self.passed)


def safe_ratio(a, b):
    a = float(a)
    b = float(b)
    if b == 0.0:
        return 0.0 if a == 0.0 else math.inf
    return a / b
