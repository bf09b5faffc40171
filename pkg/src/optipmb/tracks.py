"""Pruning, non-motion light-weight filter and track extraction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from .association import GlobalHypothesis
from .density import AuxState, BernoulliComponent, PmbPosterior, PoissonComponent, TrackId
from .detection import Detection
from .filter import CLUTTER, LocalHypothesis
from .params import ClassParams


@dataclass(frozen=True)
class TrackRecord:
    track_id: TrackId
    label: str
    frame: int
    timestamp: float
    x: float
    y: float
    z: float
    vx: float
    vy: float
    yaw: float
    length: float
    width: float
    height: float
    score: float

    @property
    def track_id_str(self) -> str:
        return f"{self.track_id[0]}-{self.track_id[1]}"


@dataclass
class HypothesisTable:
    """All local hypotheses generated in one update step."""

    misdetections: List[LocalHypothesis] = field(default_factory=list)
    detections: Dict[Tuple[int, int], LocalHypothesis] = field(default_factory=dict)
    first: List[LocalHypothesis] = field(default_factory=list)

    def all(self) -> List[LocalHypothesis]:
        return list(self.detections.values()) + self.first


@dataclass(frozen=True)
class Survivor:
    component: BernoulliComponent
    measurement_index: Optional[int]
    is_new: bool


def prune_bernoulli(table: HypothesisTable, global_hyp: GlobalHypothesis) -> List[Survivor]:
    """Keep exactly the local hypotheses selected by the global hypothesis.

    Previously detected objects that received no measurement keep their
    misdetection hypothesis. New potential objects survive only when their
    own first-detection column was chosen and it was not judged clutter.
    """
    n_obj = len(table.misdetections)
    obj_meas: Dict[int, int] = {}
    chosen_first = set()
    for m, col in enumerate(global_hyp.assignment):
        if col < n_obj:
            obj_meas[col] = m
        else:
            chosen_first.add(col - n_obj)
    out = []
    for n, miss in enumerate(table.misdetections):
        if n in obj_meas:
            m = obj_meas[n]
            out.append(Survivor(table.detections[(m, n)].component, m, False))
        else:
            out.append(Survivor(miss.component, None, False))
    for m, h in enumerate(table.first):
        if m in chosen_first and h.kind != CLUTTER and h.component is not None:
            out.append(Survivor(h.component, m, True))
    return out


def prune_ppp(poisson: Sequence[PoissonComponent], max_age: Mapping[str, int]) -> List[PoissonComponent]:
    """Drop marked components and those older than their class's ``eta_step``."""
    return [c for c in poisson if not c.marked and c.age <= max_age[c.label]]


def confidence_score(track_len: int, det_score: float) -> float:
    return (1.0 - math.exp(-track_len)) * det_score


def lightweight_update(bern: BernoulliComponent, assoc: Optional[Detection] = None,
                       is_new: bool = False) -> BernoulliComponent:
    if is_new:
        if assoc is None:
            raise ValueError("a new object needs the measurement that created it")
        return replace(bern, aux=assoc.aux, miss_count=0, track_len=1,
                       score=confidence_score(1, assoc.score), lidar_pts=assoc.lidar_pts)
    track_len = bern.track_len + 1
    if assoc is None:
        return replace(bern, miss_count=bern.miss_count + 1, track_len=track_len, score=0.0)
    s = assoc.score
    aux = AuxState.from_array((1.0 - s) * bern.aux.as_array() + s * assoc.aux.as_array())
    return replace(bern, aux=aux, miss_count=0, track_len=track_len,
                   score=confidence_score(track_len, s), lidar_pts=assoc.lidar_pts)


def _should_extract(b: BernoulliComponent, prev_ids: Set[TrackId], p: ClassParams) -> bool:
    if b.track_id not in prev_ids:
        return b.existence >= p.extract1
    return b.existence >= p.extract2 and b.miss_count < p.miss_limit


def extract_tracks(pmb: PmbPosterior, prev_ids: Set[TrackId], classes: Mapping[str, ClassParams],
                   frame: int = 0, timestamp: float = 0.0) -> Tuple[List[TrackRecord], Set[TrackId]]:
    """Dual-threshold extraction; returns the records and the accumulated id set."""
    records = []
    new_ids = set(prev_ids)
    for b in pmb.bernoulli:
        if not _should_extract(b, prev_ids, classes[b.label]):
            continue
        x, y, v, phi = (float(u) for u in b.density.mean[:4])
        records.append(TrackRecord(
            track_id=b.track_id, label=b.label, frame=frame, timestamp=timestamp,
            x=x, y=y, z=b.aux.z, vx=v * math.cos(phi), vy=v * math.sin(phi), yaw=phi,
            length=b.aux.length, width=b.aux.width, height=b.aux.height,
            score=float(np.clip(b.score, 0.0, 1.0))))
        new_ids.add(b.track_id)
    records.sort(key=lambda r: r.track_id)
    return records, new_ids
