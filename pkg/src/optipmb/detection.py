"""Detection records, oriented BEV box overlap and detection preprocessing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from .density import AuxState
from .motion import wrap_angle


@dataclass(frozen=True)
class Detection:
    z_xy: np.ndarray
    z_v: np.ndarray
    z_phi: float
    aux: AuxState
    label: str
    score: float
    lidar_pts: Optional[int] = None

    def __post_init__(self):
        if not 0.0 < self.score <= 1.0:
            raise ValueError(f"detection score must lie in (0, 1], got {self.score}")
        object.__setattr__(self, "z_xy", np.asarray(self.z_xy, dtype=float))
        object.__setattr__(self, "z_v", np.asarray(self.z_v, dtype=float))

    @property
    def z_motion(self) -> np.ndarray:
        """Motion measurement ``[x, y, vx, vy, phi]``."""
        return np.array([self.z_xy[0], self.z_xy[1], self.z_v[0], self.z_v[1],
                         float(wrap_angle(self.z_phi))])

    def corners(self) -> np.ndarray:
        return box_corners(self.z_xy[0], self.z_xy[1], self.aux.length, self.aux.width, self.z_phi)


@dataclass(frozen=True)
class FrameBundle:
    frame: int
    timestamp: float
    detections: List[Detection] = field(default_factory=list)


def box_corners(x, y, length, width, yaw) -> np.ndarray:
    """Counter-clockwise corners of an oriented BEV rectangle."""
    c, s = math.cos(yaw), math.sin(yaw)
    hl, hw = 0.5 * length, 0.5 * width
    local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.array([x, y])


def _polygon_area(poly) -> float:
    if len(poly) < 3:
        return 0.0
    p = np.asarray(poly)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _clip(subject, clip):
    """Sutherland-Hodgman clipping of ``subject`` by a convex CCW ``clip`` polygon."""
    out = [tuple(p) for p in subject]
    n = len(clip)
    for i in range(n):
        if not out:
            break
        ax, ay = clip[i]
        bx, by = clip[(i + 1) % n]
        ex, ey = bx - ax, by - ay

        def side(p):
            return ex * (p[1] - ay) - ey * (p[0] - ax)

        inp, out = out, []
        prev = inp[-1]
        sp = side(prev)
        for cur in inp:
            sc = side(cur)
            if sc >= 0:
                if sp < 0:
                    out.append(_intersect(prev, cur, sp, sc))
                out.append(cur)
            elif sp >= 0:
                out.append(_intersect(prev, cur, sp, sc))
            prev, sp = cur, sc
    return out


def _intersect(p, q, sp, sq):
    t = sp / (sp - sq)
    return (p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]))


def bev_iou(a: np.ndarray, b: np.ndarray) -> float:
    """IoU of two oriented rectangles given as 4x2 CCW corner arrays."""
    inter = _polygon_area(_clip(a, b))
    union = _polygon_area(a) + _polygon_area(b) - inter
    if union <= 0:
        return 0.0
    return float(min(1.0, max(0.0, inter / union)))


def _may_overlap(a: Detection, b: Detection, reach: float) -> bool:
    return math.hypot(a.z_xy[0] - b.z_xy[0], a.z_xy[1] - b.z_xy[1]) < reach


def preprocess(dets: Sequence[Detection], params: Mapping) -> List[Detection]:
    """Per-class score filter followed by greedy BEV NMS.

    Output keeps the input order of surviving detections.
    """
    by_class: Dict[str, List[int]] = {}
    for i, d in enumerate(dets):
        p = params[d.label]
        if d.score < p.score_filter:
            continue
        by_class.setdefault(d.label, []).append(i)
    keep = []
    for label, idx in by_class.items():
        thr = params[label].nms_iou
        order = sorted(idx, key=lambda i: (-dets[i].score, i))
        corners = {i: dets[i].corners() for i in order}
        radius = {i: 0.5 * math.hypot(dets[i].aux.length, dets[i].aux.width) for i in order}
        kept: List[int] = []
        for i in order:
            if all(not _may_overlap(dets[i], dets[j], radius[i] + radius[j])
                   or bev_iou(corners[i], corners[j]) <= thr for j in kept):
                kept.append(i)
        keep.extend(kept)
    return [dets[i] for i in sorted(keep)]
