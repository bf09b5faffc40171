"""CTRA motion model, unscented transform and UKF measurement update.

Motion state layout: ``[x, y, v, phi, omega, a]`` (m, m, m/s, rad, rad/s, m/s^2).
Measurement layout: ``[x, y, v*cos(phi), v*sin(phi), phi]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

HEADING = 3
MEAS_HEADING = 4
OMEGA_EPS = 1e-6

H_XY = np.array([[1.0, 0, 0, 0, 0, 0], [0, 1.0, 0, 0, 0, 0]])


class NumericalError(ArithmeticError):
    """Raised when a covariance cannot be factorised or inverted."""


def wrap_angle(a):
    """Wrap angle(s) to [-pi, pi)."""
    return (np.asarray(a, dtype=float) + np.pi) % (2.0 * np.pi) - np.pi


@dataclass(frozen=True)
class UTParams:
    alpha: float = 1.0
    beta: float = 2.0
    kappa: Optional[float] = None  # None -> 3 - n

    def weights(self, n: int):
        kappa = 3.0 - n if self.kappa is None else self.kappa
        lam = self.alpha**2 * (n + kappa) - n
        c = n + lam
        if c <= 0:
            raise ValueError(f"degenerate sigma-point spread n + lambda = {c}")
        wm = np.full(2 * n + 1, 0.5 / c)
        wc = wm.copy()
        wm[0] = lam / c
        wc[0] = lam / c + (1.0 - self.alpha**2 + self.beta)
        return wm, wc, c


DEFAULT_UT = UTParams()


@dataclass(frozen=True)
class NoiseConfig:
    """Process noise ``Q`` (per second) and measurement noise ``R`` (5x5)."""

    Q: np.ndarray
    R: np.ndarray
    R_xy: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float)
        R = np.array(self.R, dtype=float)
        if Q.shape != (6, 6) or R.shape != (5, 5):
            raise ValueError("Q must be 6x6 and R must be 5x5")
        for name, m in (("Q", Q), ("R", R)):
            if not np.allclose(m, m.T, atol=1e-12):
                raise ValueError(f"{name} is not symmetric")
            if np.linalg.eigvalsh(m).min() < -1e-12:
                raise ValueError(f"{name} is not positive semidefinite")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "R_xy", R[:2, :2].copy())


@dataclass(frozen=True)
class MotionState:
    mean: np.ndarray
    cov: np.ndarray


def _ctra_rows(X, dt):
    x, y, v, phi, omega, a = X.T
    turning = np.abs(omega) >= OMEGA_EPS
    w = np.where(turning, omega, 1.0)
    d = omega * dt
    mid = phi + 0.5 * d
    end = phi + d
    # half-angle form of the closed solution; avoids the cancellation of
    # the textbook 1/omega^2 expression at small turn rates
    chord = 2.0 * np.sin(0.5 * d)
    dx_t = (v / w) * np.cos(mid) * chord + (a * dt / w) * np.sin(end) - (a / w**2) * np.sin(mid) * chord
    dy_t = (v / w) * np.sin(mid) * chord - (a * dt / w) * np.cos(end) + (a / w**2) * np.cos(mid) * chord
    s = v * dt + 0.5 * a * dt * dt
    dx = np.where(turning, dx_t, s * np.cos(phi))
    dy = np.where(turning, dy_t, s * np.sin(phi))
    return np.stack([x + dx, y + dy, v + a * dt, wrap_angle(end), omega, a], axis=1)


def ctra_transition(mean, dt: float) -> np.ndarray:
    """Noiseless CTRA propagation.

    Accepts one state vector or a stack of them (one per row). Below
    ``OMEGA_EPS`` rad/s the straight-line constant-acceleration limit is used.
    """
    if dt < 0:
        raise ValueError("dt must be non-negative")
    X = np.array(mean, dtype=float)
    if dt == 0:
        return X
    if X.ndim == 1:
        return _ctra_rows(X[None, :], dt)[0]
    return _ctra_rows(X, dt)


def sqrt_psd(P: np.ndarray) -> np.ndarray:
    """Lower-triangular square root of a PSD matrix.

    Rows/columns that are identically zero are kept exactly deterministic.
    Otherwise a single diagonal jitter of ``1e-9 * trace / n`` is tried
    before giving up.
    """
    P = 0.5 * (P + P.T)
    n = P.shape[0]
    active = ~(np.all(P == 0.0, axis=0))
    L = np.zeros_like(P)
    if not active.any():
        return L
    sub = P[np.ix_(active, active)]
    try:
        Ls = np.linalg.cholesky(sub)
    except np.linalg.LinAlgError:
        jitter = 1e-9 * np.trace(sub) / sub.shape[0]
        try:
            Ls = np.linalg.cholesky(sub + jitter * np.eye(sub.shape[0]))
        except np.linalg.LinAlgError as exc:
            raise NumericalError("covariance is not decomposable") from exc
    idx = np.flatnonzero(active)
    L[np.ix_(idx, idx)] = Ls
    assert L.shape == (n, n)
    return L


def sigma_points(mean, cov, ut: UTParams = DEFAULT_UT):
    n = len(mean)
    wm, wc, c = ut.weights(n)
    L = sqrt_psd(np.asarray(cov, dtype=float)) * np.sqrt(c)
    pts = np.empty((2 * n + 1, n))
    pts[0] = mean
    pts[1:n + 1] = mean + L.T
    pts[n + 1:] = mean - L.T
    return pts, wm, wc


def weighted_mean(points, wm, angle_dims: Sequence[int] = ()):
    mean = wm @ points
    for d in angle_dims:
        mean[d] = np.arctan2(wm @ np.sin(points[:, d]), wm @ np.cos(points[:, d]))
    return mean


def residuals(points, mean, angle_dims: Sequence[int] = ()):
    res = points - mean
    for d in angle_dims:
        res[:, d] = wrap_angle(res[:, d])
    return res


def ut_propagate(mean, cov, fn: Callable[[np.ndarray], np.ndarray],
                 angle_dims: Sequence[int] = (), ut: UTParams = DEFAULT_UT,
                 vectorized: bool = False):
    """Propagate ``N(mean, cov)`` through ``fn`` with the unscented transform.

    ``angle_dims`` lists output dimensions that are angles; those are
    averaged circularly and their residuals wrapped. With ``vectorized``
    the map is called once on the stacked sigma points.
    """
    mean = np.asarray(mean, dtype=float)
    pts, wm, wc = sigma_points(mean, cov, ut)
    if vectorized:
        out = np.asarray(fn(pts), dtype=float).reshape(len(pts), -1)
    else:
        out = np.array([np.atleast_1d(fn(p)) for p in pts], dtype=float)
    m = weighted_mean(out, wm, angle_dims)
    res = residuals(out, m, angle_dims)
    P = (res * wc[:, None]).T @ res
    return m, 0.5 * (P + P.T)


def predict_motion(state: MotionState, dt: float, noise: NoiseConfig,
                   ut: UTParams = DEFAULT_UT) -> MotionState:
    if dt < 0:
        raise ValueError("dt must be non-negative")
    if dt == 0:
        return MotionState(np.array(state.mean, dtype=float), np.array(state.cov, dtype=float))
    m, P = ut_propagate(state.mean, state.cov, lambda x: ctra_transition(x, dt),
                        angle_dims=(HEADING,), ut=ut, vectorized=True)
    P = P + noise.Q * dt
    return MotionState(m, 0.5 * (P + P.T))


def measurement_fn(mean) -> np.ndarray:
    """``[x, y, v cos(phi), v sin(phi), phi]``; rows are mapped independently."""
    X = np.asarray(mean, dtype=float)
    x, y, v, phi = X[..., 0], X[..., 1], X[..., 2], X[..., 3]
    return np.stack([x, y, v * np.cos(phi), v * np.sin(phi), phi], axis=-1)


def unscented_update(mean, cov, z, R, h=measurement_fn, meas_angle_dims=(MEAS_HEADING,),
                     state_angle_dims=(HEADING,), ut: UTParams = DEFAULT_UT,
                     vectorized: bool = True):
    """Generic UKF update; returns ``(mean, cov)``.

    ``h`` must map a stack of states row-wise when ``vectorized`` is set.
    """
    mean = np.asarray(mean, dtype=float)
    pts, wm, wc = sigma_points(mean, cov, ut)
    if vectorized:
        Z = np.asarray(h(pts), dtype=float).reshape(len(pts), -1)
    else:
        Z = np.array([np.atleast_1d(h(p)) for p in pts], dtype=float)
    z_hat = weighted_mean(Z, wm, meas_angle_dims)
    dz = residuals(Z, z_hat, meas_angle_dims)
    # sigma points are mean +/- L columns; wrapping these residuals would
    # break consistency with ``cov`` and with it the PSD guarantee
    dx = pts - mean
    S = (dz * wc[:, None]).T @ dz + R
    Pxz = (dx * wc[:, None]).T @ dz
    try:
        K = np.linalg.solve(S.T, Pxz.T).T
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular innovation covariance") from exc
    nu = np.asarray(z, dtype=float) - z_hat
    for d in meas_angle_dims:
        nu[d] = wrap_angle(nu[d])
    m = mean + K @ nu
    for d in state_angle_dims:
        m[d] = wrap_angle(m[d])
    P = cov - K @ S @ K.T
    return m, 0.5 * (P + P.T)


def ukf_update(pred: MotionState, z_M, noise: NoiseConfig, ut: UTParams = DEFAULT_UT) -> MotionState:
    m, P = unscented_update(pred.mean, pred.cov, z_M, noise.R, ut=ut)
    return MotionState(m, P)


def predict_position_measurement(pred: MotionState, noise: NoiseConfig):
    """Position-only predicted measurement ``(z_hat, S)`` used for association costs."""
    z_hat = H_XY @ pred.mean
    S = H_XY @ pred.cov @ H_XY.T + noise.R_xy
    return z_hat, 0.5 * (S + S.T)
