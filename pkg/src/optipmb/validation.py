"""Input checks shared by the estimator and the CLI."""

from __future__ import annotations

from typing import Iterable, List, Mapping

import numpy as np

from .detection import Detection, FrameBundle


def check_frames(frames: Iterable[FrameBundle], classes: Mapping = None) -> List[FrameBundle]:
    """Return ``frames`` as a list after checking ordering, finiteness and classes."""
    frames = list(frames)
    for f in frames:
        if not isinstance(f, FrameBundle):
            raise TypeError(f"expected FrameBundle, got {type(f).__name__}")
        if not np.isfinite(f.timestamp):
            raise ValueError(f"frame {f.frame}: non-finite timestamp")
        for d in f.detections:
            check_detection(d, classes)
    for prev, cur in zip(frames, frames[1:]):
        if not cur.timestamp > prev.timestamp:
            raise ValueError(f"timestamps must increase strictly (frame {prev.frame} -> {cur.frame})")
    return frames


def check_detection(d: Detection, classes: Mapping = None) -> None:
    if not isinstance(d, Detection):
        raise TypeError(f"expected Detection, got {type(d).__name__}")
    if not (np.isfinite(d.z_xy).all() and np.isfinite(d.z_v).all() and np.isfinite(d.z_phi)):
        raise ValueError("detection has non-finite motion fields")
    if classes is not None and d.label not in classes:
        raise ValueError(f"no parameters configured for class {d.label!r}")
