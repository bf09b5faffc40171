"""CLEAR-MOT counts, a simplified AMOTA sweep and center-distance similarity.

Matching is per frame: a minimum-total-distance bipartite matching among
pairs whose BEV center distance is at most ``d0``. The number of matches
is maximised first, then the summed distance minimised.

AMOTA here is a desk-scale surrogate of the AB3DMOT / nuScenes protocol:
for each target recall ``r = l / n_points`` the most selective score
threshold reaching recall ``r`` is used and its recall-normalised MOTA
``max(0, 1 - (IDS + FP + FN - (1 - rho) P) / (rho P))`` (``rho`` the
achieved recall, ``P`` the ground-truth count) is averaged; unreachable
recalls contribute 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .tracks import TrackRecord


def similarity(track_xy, gt_xy, d0: float = 2.0) -> float:
    if d0 <= 0:
        raise ValueError("d0 must be positive")
    d = math.hypot(track_xy[0] - gt_xy[0], track_xy[1] - gt_xy[1])
    return max(0.0, 1.0 - d / d0)


@dataclass
class FrameMatch:
    pairs: List[Tuple[int, int, float]]  # (track index, gt index, distance)
    n_tracks: int
    n_gt: int

    @property
    def tp(self) -> int:
        return len(self.pairs)

    @property
    def fp(self) -> int:
        return self.n_tracks - len(self.pairs)

    @property
    def fn(self) -> int:
        return self.n_gt - len(self.pairs)


def _distances(tracks, gt):
    t = np.array([[r.x, r.y] for r in tracks], dtype=float).reshape(-1, 2)
    g = np.array([[r.x, r.y] for r in gt], dtype=float).reshape(-1, 2)
    return np.hypot(t[:, None, 0] - g[None, :, 0], t[:, None, 1] - g[None, :, 1])


def match_frame(tracks: Sequence[TrackRecord], gt: Sequence[TrackRecord], d0: float = 2.0) -> FrameMatch:
    if not tracks or not gt:
        return FrameMatch([], len(tracks), len(gt))
    D = _distances(tracks, gt)
    feasible = D <= d0
    # infeasible cost exceeds any total of feasible ones: maximal matching first
    big = d0 * (min(D.shape) + 1) + 1.0
    rows, cols = linear_sum_assignment(np.where(feasible, D, big))
    pairs = [(int(i), int(j), float(D[i, j])) for i, j in zip(rows, cols) if feasible[i, j]]
    return FrameMatch(pairs, len(tracks), len(gt))


@dataclass
class ClearMetrics:
    mota: float
    motp: float
    tp: int
    fp: int
    fn: int
    ids: int
    gt: int
    mean_similarity: float = float("nan")

    def as_dict(self) -> Dict[str, float]:
        return dict(self.__dict__)


def _frames(records: Sequence[TrackRecord]) -> Dict[int, List[TrackRecord]]:
    out: Dict[int, List[TrackRecord]] = {}
    for r in records:
        out.setdefault(r.frame, []).append(r)
    return out


def _flatten(x) -> List[TrackRecord]:
    if x and isinstance(x[0], (list, tuple)):
        return [r for frame in x for r in frame]
    return list(x)


def clear_metrics(tracks, gt, d0: float = 2.0, min_score: Optional[float] = None,
                  skip_frames: Sequence[int] = ()) -> ClearMetrics:
    """CLEAR-MOT tallies over a scene.

    ``tracks`` and ``gt`` are either flat record lists or per-frame lists.
    An identity switch is counted when the track id matched to a ground
    truth object differs from the id it was matched to at its previous
    matched frame.
    """
    tracks = _flatten(tracks)
    gt = _flatten(gt)
    if min_score is not None:
        tracks = [r for r in tracks if r.score >= min_score]
    skip = set(skip_frames)
    tf, gf = _frames(tracks), _frames(gt)
    last_id: Dict[Hashable, Hashable] = {}
    tp = fp = fn = ids = n_gt = 0
    dist_sum = sim_sum = 0.0
    for k in sorted(set(tf) | set(gf)):
        if k in skip:
            continue
        ts, gs = tf.get(k, []), gf.get(k, [])
        fm = match_frame(ts, gs, d0)
        tp += fm.tp
        fp += fm.fp
        fn += fm.fn
        n_gt += len(gs)
        for i, j, d in fm.pairs:
            dist_sum += d
            sim_sum += max(0.0, 1.0 - d / d0)
            gid, tid = gs[j].track_id, ts[i].track_id
            if gid in last_id and last_id[gid] != tid:
                ids += 1
            last_id[gid] = tid
    mota = 1.0 - (fn + fp + ids) / n_gt if n_gt else (1.0 if fp == 0 else -math.inf)
    motp = dist_sum / tp if tp else float("nan")
    mean_sim = sim_sum / tp if tp else float("nan")
    return ClearMetrics(mota, motp, tp, fp, fn, ids, n_gt, mean_sim)


def amota(tracks, gt, d0: float = 2.0, n_points: int = 40) -> float:
    """Average recall-normalised MOTA over ``n_points`` target recalls."""
    tracks = _flatten(tracks)
    gt = _flatten(gt)
    if not gt:
        raise ValueError("AMOTA needs ground truth")
    if not tracks:
        return 0.0
    P = len(gt)
    thresholds = sorted({r.score for r in tracks}, reverse=True)
    cache: Dict[float, ClearMetrics] = {}

    def at(i):
        thr = thresholds[i]
        if thr not in cache:
            cache[thr] = clear_metrics(tracks, gt, d0, min_score=thr)
        return cache[thr]

    full = at(len(thresholds) - 1)
    total = 0.0
    for l in range(1, n_points + 1):
        target = l / n_points
        if full.tp / P < target - 1e-12:
            continue
        lo, hi = 0, len(thresholds) - 1
        while lo < hi:  # first threshold index whose recall reaches the target
            mid = (lo + hi) // 2
            if at(mid).tp / P >= target - 1e-12:
                hi = mid
            else:
                lo = mid + 1
        m = at(lo)
        rho = m.tp / P
        motar = 1.0 - (m.ids + m.fp + m.fn - (1.0 - rho) * P) / (rho * P)
        total += max(0.0, motar)
    return total / n_points
