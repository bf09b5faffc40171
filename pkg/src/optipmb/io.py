"""Line-delimited JSON readers and writers.

Detection lines::

    {"frame": 0, "t": 0.0, "class": "car", "x": .., "y": .., "z": ..,
     "vx": .., "vy": .., "yaw": .., "l": .., "w": .., "h": .., "score": ..,
     "num_pts": -1}

``num_pts`` is optional (``-1`` or missing means no point count). A line
holding only ``frame`` and ``t`` declares a frame without detections.

Track lines carry ``frame, t, track_id ("k-m"), class, x, y, z, vx, vy,
yaw, l, w, h, score``. Ground-truth files use the track schema with a
score of 1. Floats are written with 17 significant digits.
"""

from __future__ import annotations

import json
import math
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .density import AuxState, BernoulliComponent, PmbPosterior, PoissonComponent
from .detection import Detection, FrameBundle
from .motion import MotionState
from .tracks import TrackRecord

DETECTION_FIELDS = ("frame", "t", "class", "x", "y", "z", "vx", "vy", "yaw", "l", "w", "h", "score")
TRACK_FIELDS = ("frame", "t", "track_id", "class", "x", "y", "z", "vx", "vy", "yaw", "l", "w", "h", "score")


class FormatError(ValueError):
    pass


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            raise FormatError(f"cannot serialise non-finite value {v}")
        return format(v, ".17g")
    return json.dumps(v)


def dumps_line(record: Dict) -> str:
    return "{" + ", ".join(f"{json.dumps(k)}: {_fmt(v)}" for k, v in record.items()) + "}"


def _parse_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: malformed line ({exc.msg})") from None
            if not isinstance(obj, dict):
                raise FormatError(f"{path}:{lineno}: expected an object")
            yield lineno, obj


def _require(obj, fields, path, lineno):
    for f in fields:
        if f not in obj:
            raise FormatError(f"{path}:{lineno}: missing required field '{f}'")


def load_detections(path, classes: Optional[Iterable[str]] = None) -> List[FrameBundle]:
    """Parse a detection file into frame bundles sorted by frame index."""
    known = set(classes) if classes is not None else None
    frames: Dict[int, FrameBundle] = {}
    for lineno, obj in _parse_lines(path):
        _require(obj, ("frame", "t"), path, lineno)
        frame, t = int(obj["frame"]), float(obj["t"])
        bundle = frames.get(frame)
        if bundle is None:
            bundle = frames[frame] = FrameBundle(frame, t, [])
        elif bundle.timestamp != t:
            raise FormatError(f"{path}:{lineno}: frame {frame} has inconsistent timestamps")
        if set(obj) <= {"frame", "t"}:
            continue
        _require(obj, DETECTION_FIELDS, path, lineno)
        label = obj["class"]
        if known is not None and label not in known:
            raise FormatError(f"{path}:{lineno}: unknown class '{label}'")
        pts = obj.get("num_pts", -1)
        try:
            det = Detection(
                z_xy=np.array([obj["x"], obj["y"]], dtype=float),
                z_v=np.array([obj["vx"], obj["vy"]], dtype=float),
                z_phi=float(obj["yaw"]),
                aux=AuxState(float(obj["l"]), float(obj["w"]), float(obj["h"]), float(obj["z"])),
                label=label, score=float(obj["score"]),
                lidar_pts=None if pts is None or int(pts) < 0 else int(pts))
        except (TypeError, ValueError) as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from None
        bundle.detections.append(det)
    out = [frames[k] for k in sorted(frames)]
    for prev, cur in zip(out, out[1:]):
        if not cur.timestamp > prev.timestamp:
            raise FormatError(f"{path}: timestamps not strictly increasing at frame {cur.frame}")
    return out


def detection_record(frame: int, t: float, d: Detection) -> Dict:
    return {"frame": frame, "t": float(t), "class": d.label,
            "x": float(d.z_xy[0]), "y": float(d.z_xy[1]), "z": d.aux.z,
            "vx": float(d.z_v[0]), "vy": float(d.z_v[1]), "yaw": float(d.z_phi),
            "l": d.aux.length, "w": d.aux.width, "h": d.aux.height, "score": d.score,
            "num_pts": -1 if d.lidar_pts is None else int(d.lidar_pts)}


def write_detections(path, bundles: Sequence[FrameBundle]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for b in bundles:
            if not b.detections:
                fh.write(dumps_line({"frame": b.frame, "t": float(b.timestamp)}) + "\n")
            for d in b.detections:
                fh.write(dumps_line(detection_record(b.frame, b.timestamp, d)) + "\n")


def track_record(r: TrackRecord) -> Dict:
    return {"frame": r.frame, "t": float(r.timestamp), "track_id": r.track_id_str,
            "class": r.label, "x": r.x, "y": r.y, "z": r.z, "vx": r.vx, "vy": r.vy,
            "yaw": r.yaw, "l": r.length, "w": r.width, "h": r.height, "score": r.score}


def write_tracks(path, frames: Iterable[Sequence[TrackRecord]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for records in frames:
            for r in records:
                fh.write(dumps_line(track_record(r)) + "\n")


def _parse_track_id(s: str):
    k, _, m = str(s).partition("-")
    try:
        return int(k), int(m)
    except ValueError:
        return str(s), 0


def load_tracks(path) -> List[TrackRecord]:
    out = []
    for lineno, obj in _parse_lines(path):
        _require(obj, TRACK_FIELDS, path, lineno)
        out.append(TrackRecord(
            track_id=_parse_track_id(obj["track_id"]), label=obj["class"],
            frame=int(obj["frame"]), timestamp=float(obj["t"]),
            x=float(obj["x"]), y=float(obj["y"]), z=float(obj["z"]),
            vx=float(obj["vx"]), vy=float(obj["vy"]), yaw=float(obj["yaw"]),
            length=float(obj["l"]), width=float(obj["w"]), height=float(obj["h"]),
            score=float(obj["score"])))
    return out


def group_by_frame(records: Iterable[TrackRecord]) -> Dict[int, List[TrackRecord]]:
    out: Dict[int, List[TrackRecord]] = {}
    for r in records:
        out.setdefault(r.frame, []).append(r)
    return out


# posterior snapshots ------------------------------------------------------

def _gauss(d: MotionState) -> Dict:
    return {"mean": [float(v) for v in d.mean], "cov": [[float(v) for v in row] for row in d.cov]}


def _ungauss(d) -> MotionState:
    return MotionState(np.array(d["mean"], dtype=float), np.array(d["cov"], dtype=float))


def posterior_to_dict(pmb: PmbPosterior) -> Dict:
    return {
        "poisson": [{"weight": c.weight, "density": _gauss(c.density), "class": c.label,
                     "age": c.age, "marked": c.marked, "lidar_pts": c.lidar_pts}
                    for c in pmb.poisson],
        "bernoulli": [{"existence": b.existence, "density": _gauss(b.density),
                       "aux": [b.aux.length, b.aux.width, b.aux.height, b.aux.z],
                       "class": b.label, "track_id": list(b.track_id),
                       "miss_count": b.miss_count, "track_len": b.track_len,
                       "score": b.score, "lidar_pts": b.lidar_pts}
                      for b in pmb.bernoulli],
        "extracted_ids": sorted(list(t) for t in pmb.extracted_ids),
    }


def posterior_from_dict(d: Dict) -> PmbPosterior:
    poisson = [PoissonComponent(weight=c["weight"], density=_ungauss(c["density"]), label=c["class"],
                                age=c["age"], marked=c["marked"], lidar_pts=c["lidar_pts"])
               for c in d["poisson"]]
    bern = [BernoulliComponent(existence=b["existence"], density=_ungauss(b["density"]),
                               aux=AuxState(*b["aux"]), label=b["class"],
                               track_id=tuple(b["track_id"]), miss_count=b["miss_count"],
                               track_len=b["track_len"], score=b["score"], lidar_pts=b["lidar_pts"])
            for b in d["bernoulli"]]
    return PmbPosterior(poisson, bern, {tuple(t) for t in d["extracted_ids"]})


def dump_posterior(pmb: PmbPosterior) -> str:
    return json.dumps(posterior_to_dict(pmb), sort_keys=True)


def load_posterior(text: str) -> PmbPosterior:
    return posterior_from_dict(json.loads(text))
