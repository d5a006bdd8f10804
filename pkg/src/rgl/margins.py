"""Margin profiling: subspace-constrained DeepFool over a family of subspaces."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .attacks import deepfool_subspace, refine_to_boundary
from .errors import DegenerateDirectionError, ParameterError


@dataclass
class MarginRecord:
    """Margin of one sample in one subspace (``inf`` when the attack failed)."""

    sample: int
    subspace_index: int
    margin: float
    success: bool
    iterations: int
    support: int = 0


@dataclass
class MarginSummary:
    subspace_index: int
    dim: int
    start_index: int | None
    p05: float | None
    median: float | None
    p95: float | None
    n_success: int
    n_fail: int

    @property
    def available(self) -> bool:
        return self.n_success > 0


def _percentiles(values):
    if not len(values):
        return None, None, None
    p = np.percentile(values, [5, 50, 95])
    return float(p[0]), float(p[1]), float(p[2])


def margin_profile(model, samples, subspaces, *, max_iter: int = 50, overshoot: float = 0.02,
                   refine: bool = True):
    """Measure the margin of every sample in every subspace.

    The raw estimate is the norm of the DeepFool boundary step before
    overshoot. With ``refine`` the successful perturbation is bisected
    back to the first class change along its direction, which removes
    the overestimate DeepFool makes on curved (rectifier) boundaries.
    Degenerate subspaces (projected gradient zero) and attacks that run
    out of iterations count as failures. Returns ``(records, summaries)``;
    records are sample-major.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if not len(samples) or not len(subspaces):
        raise ParameterError("need at least one sample and one subspace")
    records = []
    for i, x in enumerate(samples):
        for j, s in enumerate(subspaces):
            try:
                res = deepfool_subspace(model, x, s, max_iter, overshoot)
            except DegenerateDirectionError:
                records.append(MarginRecord(i, j, math.inf, False, 0))
                continue
            if not res.success:
                margin = math.inf
            elif refine:
                margin = refine_to_boundary(model, x, res.delta, int(model.class_index(x)))
            else:
                margin = res.boundary_distance
            records.append(MarginRecord(i, j, margin, res.success, res.iterations, res.l0))
    summaries = []
    for j, s in enumerate(subspaces):
        ok = [r.margin for r in records if r.subspace_index == j and r.success]
        p05, med, p95 = _percentiles(ok)
        summaries.append(MarginSummary(j, s.dim, s.start_index, p05, med, p95, len(ok),
                                       len(samples) - len(ok)))
    return records, summaries


def _fmt(v):
    if v is None:
        return "NA"
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".9g")


SUMMARY_HEADER = ["subspace_index", "dim", "start_index", "p05", "median", "p95", "n_success",
                  "n_fail"]
RECORD_HEADER = ["sample", "subspace_index", "margin", "iterations", "success"]


def _table(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def summary_csv(summaries) -> str:
    """Unavailable statistics print as ``NA``; a missing start index is empty."""
    return _table(SUMMARY_HEADER, (
        [s.subspace_index, s.dim, "" if s.start_index is None else s.start_index,
         s.p05, s.median, s.p95, s.n_success, s.n_fail] for s in summaries))


def records_csv(records) -> str:
    return _table(RECORD_HEADER, ([r.sample, r.subspace_index, r.margin, r.iterations, r.success]
                                  for r in records))
