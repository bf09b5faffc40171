"""Gaussian, Poisson and Bernoulli containers for the PMB posterior."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from .motion import HEADING, MotionState, NumericalError, wrap_angle

LOG_2PI = math.log(2.0 * math.pi)

TrackId = Tuple[int, int]


# A GaussianDensity carries exactly the same data as a motion state.
GaussianDensity = MotionState


@dataclass(frozen=True)
class AuxState:
    length: float
    width: float
    height: float
    z: float

    def __post_init__(self):
        if not (self.length > 0 and self.width > 0 and self.height > 0):
            raise ValueError("box extents must be positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.length, self.width, self.height, self.z])

    @classmethod
    def from_array(cls, a) -> "AuxState":
        return cls(*(float(v) for v in a))


@dataclass(frozen=True)
class PoissonComponent:
    weight: float
    density: GaussianDensity
    label: str
    age: int = 0
    marked: bool = False
    lidar_pts: Optional[int] = None


@dataclass(frozen=True)
class BernoulliComponent:
    """One detected potential object.

    ``label``/``track_id`` form the time-invariant state and never change
    after creation. ``lidar_pts`` holds the point count of the last
    associated detection and feeds the adaptive detection probability.
    """

    existence: float
    density: GaussianDensity
    aux: AuxState
    label: str
    track_id: TrackId
    miss_count: int = 0
    track_len: int = 1
    score: float = 0.0
    lidar_pts: Optional[int] = None


@dataclass
class PmbPosterior:
    poisson: List[PoissonComponent] = field(default_factory=list)
    bernoulli: List[BernoulliComponent] = field(default_factory=list)
    extracted_ids: Set[TrackId] = field(default_factory=set)

    def copy(self) -> "PmbPosterior":
        return PmbPosterior(list(self.poisson), list(self.bernoulli), set(self.extracted_ids))


def gaussian_position_loglik(z_xy, z_hat, S) -> float:
    """Log of the bivariate normal density ``N(z_xy; z_hat, S)``."""
    S = np.asarray(S, dtype=float)
    if S.shape == (2, 2):
        a, b, d = S[0, 0], 0.5 * (S[0, 1] + S[1, 0]), S[1, 1]
        det = a * d - b * b
        if not (a > 0 and det > 0):
            raise NumericalError("innovation covariance is not positive definite")
        ex = z_xy[0] - z_hat[0]
        ey = z_xy[1] - z_hat[1]
        maha = (d * ex * ex - 2.0 * b * ex * ey + a * ey * ey) / det
        return float(-0.5 * maha - 0.5 * math.log(det) - LOG_2PI)
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("innovation covariance is not positive definite") from exc
    d = np.asarray(z_xy, dtype=float) - np.asarray(z_hat, dtype=float)
    u = np.linalg.solve(L, d)
    k = d.shape[0]
    return float(-0.5 * (u @ u) - np.log(np.diag(L)).sum() - 0.5 * k * LOG_2PI)


def gaussian_position_likelihood(z_xy, z_hat, S) -> float:
    return math.exp(gaussian_position_loglik(z_xy, z_hat, S))


def moment_match(terms: Sequence[Tuple[float, GaussianDensity]],
                 angle_dims: Iterable[int] = (HEADING,)) -> GaussianDensity:
    """Collapse a weighted Gaussian mixture to one Gaussian.

    Angle dimensions use a weighted circular mean and wrapped spread terms.
    """
    if not terms:
        raise ValueError("moment_match needs at least one term")
    w = np.array([t[0] for t in terms], dtype=float)
    if np.any(w < 0) or not np.isfinite(w).all():
        raise ValueError("mixture weights must be finite and non-negative")
    total = w.sum()
    if total <= 0:
        raise ValueError("mixture weights sum to zero")
    if abs(total - 1.0) > 1e-12:
        w = w / total
    means = np.array([t[1].mean for t in terms], dtype=float)
    covs = np.array([t[1].cov for t in terms], dtype=float)
    angle_dims = tuple(angle_dims)
    m = w @ means
    for d in angle_dims:
        m[d] = math.atan2(w @ np.sin(means[:, d]), w @ np.cos(means[:, d]))
    res = means - m
    for d in angle_dims:
        res[:, d] = wrap_angle(res[:, d])
    P = np.einsum("i,ijk->jk", w, covs) + (res * w[:, None]).T @ res
    return GaussianDensity(m, 0.5 * (P + P.T))


def with_existence(b: BernoulliComponent, r: float) -> BernoulliComponent:
    return replace(b, existence=float(r))
