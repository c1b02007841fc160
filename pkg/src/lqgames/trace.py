"""Per-iteration traces of the outer solvers plus CSV/JSON serialization.

One schema serves the nested methods, the AG/GDA baselines, and the
model-free runs so downstream tooling (plots, comparisons) stays uniform.
CSV columns are fixed; floats are written with repr so a rerun with the
same inputs produces byte-identical files.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

CSV_HEADER = "t,cost,grad_map_norm,grad_norm,lambda_min_qtilde,rho,proj_active"

RATE_FIT_WINDOW = 20
MONOTONE_SLACK = 1e-9


@dataclass
class TraceRow:
    t: int
    cost: float
    grad_map_norm: float
    grad_norm: float
    lambda_min_qtilde: float
    rho: float
    proj_active: bool
    # in-memory extras, not serialized to CSV
    K: np.ndarray | None = None
    L: np.ndarray | None = None
    grad_k_norm: float | None = None


def _f(x):
    # plain-float repr: shortest round-trippable decimal, numpy scalars unwrapped
    return repr(float(x))


@dataclass
class OuterTrace:
    rows: list[TraceRow] = field(default_factory=list)
    converged: bool = False
    meta: dict = field(default_factory=dict)

    def append(self, row):
        self.rows.append(row)

    def costs(self):
        return [r.cost for r in self.rows]

    def map_norms(self):
        return [r.grad_map_norm for r in self.rows]

    def to_csv(self):
        lines = [CSV_HEADER]
        for r in self.rows:
            lines.append(",".join([
                str(r.t), _f(r.cost), _f(r.grad_map_norm), _f(r.grad_norm),
                _f(r.lambda_min_qtilde), _f(r.rho), str(int(r.proj_active)),
            ]))
        return "\n".join(lines) + "\n"

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text):
        lines = [ln for ln in text.strip().split("\n") if ln]
        if not lines or lines[0] != CSV_HEADER:
            raise ValueError(f"unrecognized trace CSV header: {lines[0] if lines else '(empty)'!r}")
        rows = []
        for ln in lines[1:]:
            parts = ln.split(",")
            if len(parts) != 7:
                raise ValueError(f"malformed trace CSV row: {ln!r}")
            rows.append(TraceRow(
                t=int(parts[0]), cost=float(parts[1]), grad_map_norm=float(parts[2]),
                grad_norm=float(parts[3]), lambda_min_qtilde=float(parts[4]),
                rho=float(parts[5]), proj_active=bool(int(parts[6]))))
        return cls(rows=rows, converged=False, meta={"source": "csv"})

    @classmethod
    def read_csv(cls, path):
        with open(path) as fh:
            return cls.from_csv(fh.read())

    def monotone_cost(self, slack=MONOTONE_SLACK):
        """True if cost never drops by more than slack across unprojected steps."""
        for a, b in zip(self.rows, self.rows[1:]):
            if not a.proj_active and b.cost < a.cost - slack:
                return False
        return True

    def cesaro_constant(self):
        """sup_t of t x (running mean of squared mapping norms).

        t x mean over the first t rows equals the partial sum of squares, so
        the supremum is the full sum; it stays bounded exactly when the
        mapping norms are square-summable (the O(1/t) Cesaro property).
        """
        return float(sum(r.grad_map_norm ** 2 for r in self.rows))

    def summary(self, oracle_value=None):
        last = self.rows[-1] if self.rows else None
        gap = None
        rate = None
        if last is not None:
            if oracle_value is not None:
                gap = last.cost - float(oracle_value)
                rate = fit_log_slope([abs(float(oracle_value) - r.cost) for r in self.rows])
            if rate is None:
                rate = fit_log_slope(self.map_norms())
        out = {
            "converged": bool(self.converged),
            "iters": int(last.t) if last is not None else 0,
            "final_cost": float(last.cost) if last is not None else None,
            "gap_to_oracle": gap,
            "fitted_local_rate": rate,
            "final_grad_map_norm": float(last.grad_map_norm) if last is not None else None,
            "monotone_cost": self.monotone_cost(),
            "cesaro_constant": self.cesaro_constant(),
        }
        if oracle_value is not None:
            out["oracle_value"] = float(oracle_value)
        for k, v in self.meta.items():
            out.setdefault(k, v)
        return out

    def write_summary(self, path, oracle_value=None):
        with open(path, "w") as fh:
            json.dump(self.summary(oracle_value=oracle_value), fh,
                      indent=2, sort_keys=True)
            fh.write("\n")


def fit_log_slope(values, window=RATE_FIT_WINDOW):
    """Least-squares slope of log(values) against iteration index over the
    trailing window. Non-positive and non-finite entries are skipped; returns
    None when fewer than two usable points remain."""
    pts = [(i, math.log(v)) for i, v in enumerate(values)
           if v is not None and math.isfinite(v) and v > 0.0]
    pts = pts[-window:]
    if len(pts) < 2:
        return None
    xs = np.array([p[0] for p in pts], dtype=float)
    ys = np.array([p[1] for p in pts], dtype=float)
    xs -= xs.mean()
    denom = float(xs @ xs)
    if denom == 0.0:
        return None
    return float(xs @ (ys - ys.mean()) / denom)
