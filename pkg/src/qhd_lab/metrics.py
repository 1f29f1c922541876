"""Per-iteration metric series and their CSV form."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

CSV_HEADER = ("k", "t", "exp_f", "exp_gradnorm_sq", "success_prob", "norm_drift", "lyapunov")


class SchemaError(ValueError):
    pass


@dataclass
class Record:
    k: int
    t: float
    exp_f: float
    exp_gradnorm_sq: float
    success_prob: float
    norm_drift: float = 0.0
    lyapunov: Optional[float] = None


def _fmt(x: float) -> str:
    # 17 significant digits round-trip any double
    return format(float(x), ".17g")


@dataclass
class MetricsSeries:
    records: list = field(default_factory=list)
    delta: float = 1.0
    f_min: float = 0.0
    meta: dict = field(default_factory=dict)

    def append(self, rec: Record):
        if not 0.0 <= rec.success_prob <= 1.0 + 1e-12:
            raise ValueError(f"success probability {rec.success_prob} outside [0, 1]")
        if self.records and rec.k <= self.records[-1].k:
            raise ValueError("records must be strictly ordered by k")
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        vals = [getattr(r, name) for r in self.records]
        return np.array([np.nan if v is None else v for v in vals], dtype=float)

    @property
    def k(self):
        return self.column("k").astype(int)

    @property
    def t(self):
        return self.column("t")

    @property
    def exp_f(self):
        return self.column("exp_f")

    @property
    def success_prob(self):
        return self.column("success_prob")

    @property
    def max_norm_drift(self) -> float:
        return float(max((r.norm_drift for r in self.records), default=0.0))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.records:
            w.writerow([
                str(int(r.k)), _fmt(r.t), _fmt(r.exp_f), _fmt(r.exp_gradnorm_sq),
                _fmt(r.success_prob), _fmt(r.norm_drift),
                "" if r.lyapunov is None else _fmt(r.lyapunov),
            ])
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

    @classmethod
    def read_csv(cls, path) -> "MetricsSeries":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or tuple(rows[0]) != CSV_HEADER:
            raise SchemaError(f"{path}: header must be {','.join(CSV_HEADER)}")
        out = cls()
        for lineno, row in enumerate(rows[1:], start=2):
            if len(row) != len(CSV_HEADER):
                raise SchemaError(f"{path}:{lineno}: expected {len(CSV_HEADER)} fields, got {len(row)}")
            out.records.append(Record(
                int(row[0]), float(row[1]), float(row[2]), float(row[3]), float(row[4]), float(row[5]),
                None if row[6] == "" else float(row[6]),
            ))
        return out

    def to_dict(self) -> dict:
        def clean(v):
            return None if v is None or (isinstance(v, float) and math.isnan(v)) else v

        return {
            "delta": self.delta,
            "f_min": self.f_min,
            "meta": self.meta,
            "records": [{k: clean(getattr(r, k)) for k in CSV_HEADER} for r in self.records],
        }
