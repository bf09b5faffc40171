"""Online PMB tracker exposed through a scikit-learn style estimator."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, replace
from typing import Iterable, List, Optional

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .association import build_cost_matrix, gate_measurement, gate_object, solve_assignment
from .density import PmbPosterior
from .detection import FrameBundle, preprocess
from .filter import (CLUTTER, adaptive_pd, association_probability, clutter_intensity,
                     habm_birth_intensity, habm_unused, hyp_detection,
                     hyp_first_detection_ppp, hyp_misdetection, ppp_update, predict)
from .params import RunConfig
from .tracks import (HypothesisTable, TrackRecord, extract_tracks, lightweight_update,
                     prune_bernoulli, prune_ppp)
from .validation import check_frames

log = logging.getLogger(__name__)


class OptiPMBTracker(BaseEstimator):
    """Poisson multi-Bernoulli tracker for 3D bounding-box detections.

    Parameters
    ----------
    config : RunConfig, optional
        Per-class parameters, observation region and UT settings. Defaults
        to the nuScenes configuration.
    adaptive_pd : bool
        Scale detection probabilities by LiDAR point counts when available.

    Attributes
    ----------
    posterior_ : PmbPosterior
        Belief after the last processed frame.
    tracks_ : list of list of TrackRecord
        Extracted tracks per processed frame.
    """

    def __init__(self, config: Optional[RunConfig] = None, adaptive_pd: bool = True):
        self.config = config
        self.adaptive_pd = adaptive_pd

    def _cfg(self) -> RunConfig:
        return self.config if self.config is not None else RunConfig()

    def reset(self) -> "OptiPMBTracker":
        self.posterior_ = PmbPosterior()
        self.tracks_ = []
        self.last_timestamp_ = None
        self.hypotheses_ = None
        return self

    def fit(self, frames: Iterable[FrameBundle], y=None) -> "OptiPMBTracker":
        """Track a whole scene from an empty prior."""
        self.reset()
        return self.partial_fit(frames)

    def partial_fit(self, frames: Iterable[FrameBundle], y=None) -> "OptiPMBTracker":
        if not hasattr(self, "posterior_"):
            self.reset()
        cfg = self._cfg()
        frames = check_frames(frames, cfg.classes)
        if frames and self.last_timestamp_ is not None and frames[0].timestamp <= self.last_timestamp_:
            raise ValueError("frames must continue after the last processed timestamp")
        for f in frames:
            self.step(f)
        return self

    def fit_predict(self, frames: Iterable[FrameBundle], y=None) -> List[List[TrackRecord]]:
        return self.fit(frames).tracks_

    def predict(self, frames: Iterable[FrameBundle]) -> List[List[TrackRecord]]:
        """Continue tracking on further frames and return their tracks."""
        if not hasattr(self, "posterior_"):
            raise NotFittedError("call fit or partial_fit first")
        start = len(self.tracks_)
        self.partial_fit(frames)
        return self.tracks_[start:]

    def _pd(self, params, pts):
        return adaptive_pd(params, pts if self.adaptive_pd else None)

    def step(self, frame: FrameBundle) -> List[TrackRecord]:
        """Run one full predict/update/prune/extract cycle."""
        if not hasattr(self, "posterior_"):
            self.reset()
        cfg = self._cfg()
        classes, region, ut = cfg.classes, cfg.region, cfg.ut
        k = frame.frame
        dt = cfg.dt_fallback if self.last_timestamp_ is None else frame.timestamp - self.last_timestamp_
        dets = preprocess(frame.detections, classes)
        pred = predict(self.posterior_, dt, classes, ut)
        objects = pred.bernoulli
        n_obj = len(objects)

        table = HypothesisTable()
        for n, b in enumerate(objects):
            p = classes[b.label]
            p_d = self._pd(p, b.lidar_pts)
            table.misdetections.append(hyp_misdetection(b, p_d, n))
            for m in gate_object(b, dets, p.gate_dist):
                table.detections[(m, n)] = hyp_detection(b, dets[m], p_d, p, m, n, ut)

        poisson = pred.poisson
        ppp_pd = [self._pd(classes[c.label], c.lidar_pts) for c in poisson]
        marked = set()
        low = []
        for m, det in enumerate(dets):
            p = classes[det.label]
            lam_c = clutter_intensity(det.label, p, region)
            gated = gate_measurement(det, poisson, p.gate_dist)
            if gated:
                h = hyp_first_detection_ppp([(j, poisson[j]) for j in gated], det,
                                            [ppp_pd[j] for j in gated], lam_c, p,
                                            measurement_index=m, frame=k,
                                            object_index=n_obj + m, ut=ut)
                marked.update(h.marks)
            else:
                p_a = association_probability(det, objects, classes)
                h = habm_unused(det, p_a, lam_c, p, region, m, k, n_obj + m)
                if h.kind == CLUTTER:
                    low.append((det, p_a))
            table.first.append(h)

        poisson = [replace(c, marked=True) if j in marked else c for j, c in enumerate(poisson)]
        ppp = ppp_update(poisson, ppp_pd, habm_birth_intensity(low, classes))

        global_hyp = solve_assignment(build_cost_matrix(table.all(), len(dets), n_obj))
        survivors = prune_bernoulli(table, global_hyp)
        ppp = prune_ppp(ppp, {c: p.ppp_max_age for c, p in classes.items()})

        bern = []
        for s in survivors:
            assoc = dets[s.measurement_index] if s.measurement_index is not None else None
            b = lightweight_update(s.component, assoc, s.is_new)
            if b.existence >= cfg.existence_floor:
                bern.append(b)

        post = PmbPosterior(ppp, bern, set(pred.extracted_ids))
        records, ids = extract_tracks(post, post.extracted_ids, classes, k, frame.timestamp)
        post.extracted_ids = ids
        self.posterior_ = post
        self.hypotheses_ = (table, global_hyp)
        self.last_timestamp_ = frame.timestamp
        self.tracks_.append(records)
        return records


@dataclass(frozen=True)
class RunSummary:
    frames: int
    tracks: int
    records: int
    wall_time: float


def run_tracker(config: RunConfig, detections_path, output_path, adaptive_pd: bool = True) -> RunSummary:
    """Track one scene file and write the track file."""
    from .io import load_detections, write_tracks

    t0 = time.perf_counter()
    frames = load_detections(detections_path, classes=config.classes)
    tracker = OptiPMBTracker(config, adaptive_pd=adaptive_pd).fit(frames)
    write_tracks(output_path, tracker.tracks_)
    ids = {r.track_id for recs in tracker.tracks_ for r in recs}
    summary = RunSummary(len(frames), len(ids), sum(len(r) for r in tracker.tracks_),
                         time.perf_counter() - t0)
    log.info("tracked %d frames, %d tracks in %.2fs", summary.frames, summary.tracks, summary.wall_time)
    return summary
