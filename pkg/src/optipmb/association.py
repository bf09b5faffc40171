"""Gating, cost-matrix assembly and optimal global hypothesis selection.

Cost-matrix layout: one row per measurement; the first ``n_objects``
columns hold detection costs for previously detected objects, followed by
one first-detection column per measurement. The first-detection block is
diagonal, so every row always has a finite option.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .density import BernoulliComponent, PoissonComponent
from .detection import Detection
from .filter import CLUTTER, DETECTION, FIRST_DETECTION, LocalHypothesis


def _within(center, point, dist) -> bool:
    return math.hypot(point[0] - center[0], point[1] - center[1]) <= dist


def gate_object(bern: BernoulliComponent, dets: Sequence[Detection], eta_dist: float) -> List[int]:
    """Indices of same-class detections within ``eta_dist`` of the predicted centre."""
    c = bern.density.mean
    return [i for i, d in enumerate(dets)
            if d.label == bern.label and _within(c, d.z_xy, eta_dist)]


def gate_measurement(det: Detection, poisson: Sequence[PoissonComponent], eta_dist: float) -> List[int]:
    return [j for j, p in enumerate(poisson)
            if p.label == det.label and _within(p.density.mean, det.z_xy, eta_dist)]


@dataclass
class CostMatrix:
    values: np.ndarray
    n_objects: int

    @property
    def n_measurements(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class GlobalHypothesis:
    assignment: Tuple[int, ...]
    total: float

    def object_for(self, row: int) -> int:
        return self.assignment[row]


def build_cost_matrix(hyps: Iterable[LocalHypothesis], n_measurements: int,
                      n_objects: int) -> CostMatrix:
    W = np.full((n_measurements, n_objects + n_measurements), np.inf)
    for h in hyps:
        if h.kind == DETECTION:
            W[h.measurement_index, h.object_index] = h.cost
        elif h.kind in (FIRST_DETECTION, CLUTTER):
            W[h.measurement_index, n_objects + h.measurement_index] = h.cost
    return CostMatrix(W, n_objects)


def total_cost(values: np.ndarray, assignment: Sequence[int]) -> float:
    return math.fsum(values[i, j] for i, j in enumerate(assignment))


def _sentinel(values: np.ndarray) -> float:
    finite = values[np.isfinite(values)]
    if finite.size == 0:
        return 1.0
    hi, lo = float(finite.max()), float(finite.min())
    # any assignment through the sentinel costs more than any finite one
    return abs(hi) + values.shape[0] * (hi - lo) + 1.0


def solve_assignment(c: CostMatrix) -> GlobalHypothesis:
    """Minimum-cost assignment of every measurement to one column."""
    W = np.asarray(c.values, dtype=float)
    if W.shape[0] == 0:
        return GlobalHypothesis((), 0.0)
    big = _sentinel(W)
    rows, cols = linear_sum_assignment(np.where(np.isfinite(W), W, big))
    assignment = [0] * W.shape[0]
    for r, col in zip(rows, cols):
        assignment[r] = int(col)
    assert all(np.isfinite(W[i, j]) for i, j in enumerate(assignment)), \
        "assignment selected an impossible hypothesis"
    return GlobalHypothesis(tuple(assignment), total_cost(W, assignment))


def brute_force_assignment(c: CostMatrix) -> GlobalHypothesis:
    """Exhaustive search; returns the lexicographically smallest optimum."""
    W = np.asarray(c.values, dtype=float)
    m = W.shape[0]
    if m > 8:
        raise ValueError("brute force limited to 8 measurements")
    if m == 0:
        return GlobalHypothesis((), 0.0)
    options = [[j for j in range(W.shape[1]) if np.isfinite(W[i, j])] for i in range(m)]
    row_min = [min(W[i, j] for j in opts) if opts else math.inf for i, opts in enumerate(options)]
    # suffix lower bounds on the cost of rows i..m-1
    bound = [0.0] * (m + 1)
    for i in range(m - 1, -1, -1):
        bound[i] = bound[i + 1] + row_min[i]
    scale = 1e-9 * (1.0 + float(np.abs(W[np.isfinite(W)]).sum()))
    best: List = [math.inf, None]
    chosen: List[int] = []
    used = set()

    def search(i, partial):
        if partial + bound[i] > best[0] + scale:
            return
        if i == m:
            t = total_cost(W, chosen)
            if t < best[0]:
                best[0], best[1] = t, tuple(chosen)
            return
        for j in options[i]:
            if j in used:
                continue
            used.add(j)
            chosen.append(j)
            search(i + 1, partial + W[i, j])
            chosen.pop()
            used.discard(j)

    search(0, 0.0)
    if best[1] is None:
        raise ValueError("no feasible assignment")
    return GlobalHypothesis(best[1], best[0])
