"""PMB prediction and update: local hypotheses, PPP update and hybrid birth."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .density import (BernoulliComponent, GaussianDensity, PmbPosterior, PoissonComponent,
                      gaussian_position_loglik, moment_match)
from .detection import Detection
from .motion import (DEFAULT_UT, MotionState, UTParams, predict_motion,
                     predict_position_measurement, ukf_update, wrap_angle)
from .params import ClassParams, RegionConfig

MISDETECTION = "misdetection"
DETECTION = "detection"
FIRST_DETECTION = "first_detection"
CLUTTER = "clutter"

# floor for arguments of -log so generated costs stay finite
TINY = 1e-300


@dataclass
class LocalHypothesis:
    kind: str
    cost: float
    component: Optional[BernoulliComponent]
    measurement_index: Optional[int] = None
    object_index: Optional[int] = None
    marks: Tuple[int, ...] = field(default=())


def neg_log(x: float) -> float:
    return -math.log(max(x, TINY))


def clutter_intensity(label: str, params: ClassParams, region: RegionConfig) -> float:
    return params.clutter_rate / region.area


def adaptive_pd(params: ClassParams, lidar_pts: Optional[int] = None) -> float:
    """Detection probability lowered for boxes with few LiDAR points."""
    if lidar_pts is None or lidar_pts < 0:
        return params.base_pd
    s = params.min_scale
    return params.base_pd * min(1.0, (1.0 - s) * lidar_pts / params.expected_pts + s)


def predict(pmb: PmbPosterior, dt: float, classes: Mapping[str, ClassParams],
            ut: UTParams = DEFAULT_UT) -> PmbPosterior:
    """Survival thinning and motion prediction; no birth is added here."""
    poisson = []
    for c in pmb.poisson:
        p = classes[c.label]
        poisson.append(replace(c, weight=c.weight * p.survival,
                               density=predict_motion(c.density, dt, p.noise, ut),
                               age=c.age + 1))
    bernoulli = []
    for b in pmb.bernoulli:
        p = classes[b.label]
        bernoulli.append(replace(b, existence=b.existence * p.survival,
                                 density=predict_motion(b.density, dt, p.noise, ut)))
    return PmbPosterior(poisson, bernoulli, set(pmb.extracted_ids))


def _miss_denominator(r: float, p_d: float) -> float:
    return 1.0 - r + r * (1.0 - p_d)


def hyp_misdetection(bern: BernoulliComponent, p_d: float,
                     object_index: Optional[int] = None) -> LocalHypothesis:
    r = bern.existence
    den = _miss_denominator(r, p_d)
    r_new = r * (1.0 - p_d) / den if den > 0 else 0.0
    return LocalHypothesis(MISDETECTION, 0.0, replace(bern, existence=min(r_new, r)),
                           object_index=object_index)


def detection_cost(r: float, p_d: float, loglik: float) -> float:
    """``-ln(r p_d N / (1 - r p_d))`` evaluated in the log domain."""
    if r <= 0 or p_d <= 0:
        return math.inf
    den = max(_miss_denominator(r, p_d), TINY)
    return -(math.log(r) + math.log(p_d) + loglik - math.log(den))


def hyp_detection(bern: BernoulliComponent, det: Detection, p_d: float, params: ClassParams,
                  measurement_index: Optional[int] = None, object_index: Optional[int] = None,
                  ut: UTParams = DEFAULT_UT) -> LocalHypothesis:
    z_hat, S = predict_position_measurement(bern.density, params.noise)
    loglik = gaussian_position_loglik(det.z_xy, z_hat, S)
    w = detection_cost(bern.existence, p_d, loglik)
    post = ukf_update(bern.density, det.z_motion, params.noise, ut)
    return LocalHypothesis(DETECTION, w, replace(bern, existence=1.0, density=post),
                           measurement_index, object_index)


def _logsumexp(xs: Sequence[float]) -> float:
    m = max(xs)
    if m == -math.inf:
        return -math.inf
    return m + math.log(sum(math.exp(x - m) for x in xs))


def _new_component(det: Detection, existence: float, density: GaussianDensity,
                   frame: int, measurement_index: int) -> BernoulliComponent:
    return BernoulliComponent(existence=existence, density=density, aux=det.aux,
                              label=det.label, track_id=(frame, measurement_index),
                              lidar_pts=det.lidar_pts)


def hyp_first_detection_ppp(gated: Sequence[Tuple[int, PoissonComponent]], det: Detection,
                            p_ds: Sequence[float], lambda_c: float, params: ClassParams,
                            measurement_index: int = 0, frame: int = 0,
                            object_index: Optional[int] = None,
                            ut: UTParams = DEFAULT_UT) -> LocalHypothesis:
    """First-time detection of a measurement explained by gated Poisson components.

    ``gated`` pairs each component with its index in the PPP so the
    contributing components can be marked for pruning.
    """
    if not gated:
        raise ValueError("no gated Poisson component; route the measurement to HABM")
    log_e = []
    terms = []
    for (_, comp), p_d in zip(gated, p_ds):
        z_hat, S = predict_position_measurement(comp.density, params.noise)
        lw = gaussian_position_loglik(det.z_xy, z_hat, S)
        if comp.weight <= 0 or p_d <= 0:
            log_e.append(-math.inf)
        else:
            log_e.append(math.log(comp.weight) + math.log(p_d) + lw)
        terms.append(ukf_update(comp.density, det.z_motion, params.noise, ut))
    log_sum_e = _logsumexp(log_e)
    log_lc = math.log(lambda_c) if lambda_c > 0 else -math.inf
    log_total = _logsumexp([log_sum_e, log_lc])
    if log_total == -math.inf:
        w, r = -math.log(TINY), 0.0
        density = moment_match([(1.0, t) for t in terms])
    else:
        w = -log_total
        r = math.exp(log_sum_e - log_total)
        if log_sum_e == -math.inf:
            density = moment_match([(1.0, t) for t in terms])
        else:
            density = moment_match([(math.exp(le - log_sum_e), t) for le, t in zip(log_e, terms)])
    comp = _new_component(det, r, density, frame, measurement_index)
    return LocalHypothesis(FIRST_DETECTION, w, comp, measurement_index, object_index,
                           marks=tuple(i for i, _ in gated))


def association_probability(det: Detection, objects: Sequence[BernoulliComponent],
                            classes: Mapping[str, ClassParams]) -> float:
    """Clamped sum of position likelihoods of ``det`` under each existing object."""
    total = 0.0
    for b in objects:
        z_hat, S = predict_position_measurement(b.density, classes[b.label].noise)
        total += math.exp(gaussian_position_loglik(det.z_xy, z_hat, S))
        if total >= 1.0:
            return 1.0
    return total


def measurement_density(det: Detection, params: ClassParams) -> GaussianDensity:
    vx, vy = det.z_v
    mean = np.array([det.z_xy[0], det.z_xy[1], math.hypot(vx, vy),
                     float(wrap_angle(math.atan2(vy, vx))), 0.0, 0.0])
    return MotionState(mean, params.newborn_cov.copy())


def habm_unused(det: Detection, p_a: float, lambda_c: float, params: ClassParams,
                region: RegionConfig, measurement_index: int = 0, frame: int = 0,
                object_index: Optional[int] = None) -> LocalHypothesis:
    """First-detection hypothesis for a measurement no Poisson component explains."""
    if det.score < params.habm_score:
        return LocalHypothesis(CLUTTER, neg_log(lambda_c), None, measurement_index, object_index)
    birth = params.undetected_birth_rate * (1.0 - p_a) / region.area
    comp = _new_component(det, 1.0, measurement_density(det, params), frame, measurement_index)
    return LocalHypothesis(FIRST_DETECTION, neg_log(birth + lambda_c), comp,
                           measurement_index, object_index)


def habm_birth_intensity(low_score: Sequence[Tuple[Detection, float]],
                         classes: Mapping[str, ClassParams]) -> List[PoissonComponent]:
    out = []
    for det, p_a in low_score:
        p = classes[det.label]
        out.append(PoissonComponent(weight=p.adaptive_birth_rate * (1.0 - p_a),
                                    density=measurement_density(det, p), label=det.label,
                                    age=0, marked=False, lidar_pts=det.lidar_pts))
    return out


def ppp_update(predicted: Sequence[PoissonComponent], p_ds: Sequence[float],
               birth: Sequence[PoissonComponent] = ()) -> List[PoissonComponent]:
    """Missed-detection thinning of the undetected intensity plus new birth terms."""
    out = [replace(c, weight=c.weight * (1.0 - p_d)) for c, p_d in zip(predicted, p_ds)]
    out.extend(birth)
    return out
