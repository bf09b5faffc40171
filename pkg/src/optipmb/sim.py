"""Synthetic scenarios: CTRA ground truth plus noisy, cluttered detections."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .density import AuxState
from .detection import Detection, FrameBundle
from .motion import ctra_transition, measurement_fn
from .params import RegionConfig
from .tracks import TrackRecord


@dataclass(frozen=True)
class ScenarioConfig:
    """Generative settings for one scene.

    ``schedule`` optionally fixes ``(birth_frame, death_frame)`` per object
    (death exclusive, ``None`` for never); otherwise births are drawn
    uniformly from the first ``birth_window`` fraction of the scene and
    objects live until they leave the region. ``initial_states`` likewise
    overrides the random ``[x, y, v, phi, omega, a]`` draw.
    """

    region: RegionConfig = field(default_factory=RegionConfig)
    n_objects: int = 10
    n_frames: int = 100
    dt: float = 0.5
    p_detect: float = 0.95
    noise_std: Tuple[float, ...] = (0.2, 0.2, 0.3, 0.3, 0.05)
    clutter_rate: float = 5.0
    true_score: Tuple[float, float] = (0.5, 1.0)
    clutter_score: Tuple[float, float] = (0.1, 0.6)
    speed: Tuple[float, float] = (0.5, 3.0)
    turn_rate: Tuple[float, float] = (-0.1, 0.1)
    accel: Tuple[float, float] = (-0.2, 0.2)
    birth_window: float = 0.5
    label: str = "car"
    extent: Tuple[float, float, float] = (4.5, 1.9, 1.6)
    schedule: Optional[Tuple[Tuple[int, Optional[int]], ...]] = None
    initial_states: Optional[Tuple[Tuple[float, ...], ...]] = None

    def __post_init__(self):
        if not 0.0 <= self.p_detect <= 1.0:
            raise ValueError("p_detect must lie in [0, 1]")
        if self.clutter_rate < 0 or self.n_objects < 0 or self.n_frames < 0 or self.dt <= 0:
            raise ValueError("rates and counts must be non-negative, dt positive")
        if len(self.noise_std) != 5 or min(self.noise_std) < 0:
            raise ValueError("noise_std needs five non-negative entries")
        for lo, hi in (self.true_score, self.clutter_score):
            if not 0.0 < lo <= hi <= 1.0:
                raise ValueError("score ranges must lie inside (0, 1]")

    def to_dict(self) -> dict:
        d = asdict(self)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        d = dict(d)
        if "region" in d and isinstance(d["region"], dict):
            d["region"] = RegionConfig(**d["region"])
        for key in ("noise_std", "true_score", "clutter_score", "speed", "turn_rate", "accel", "extent"):
            if key in d:
                d[key] = tuple(d[key])
        for key in ("schedule", "initial_states"):
            if d.get(key) is not None:
                d[key] = tuple(tuple(x) for x in d[key])
        return cls(**d)


SCENARIOS = {
    "desk": ScenarioConfig(),
    "single": ScenarioConfig(n_objects=1, p_detect=1.0, clutter_rate=0.0,
                             noise_std=(0, 0, 0, 0, 0), schedule=((0, None),),
                             initial_states=((-25.0, -5.0, 1.0, 0.2, 0.005, 0.0),)),
    "clutter": ScenarioConfig(n_objects=0),
}


def load_scenario(name_or_path: str) -> ScenarioConfig:
    """Resolve a preset name or read a JSON/YAML scenario file."""
    if name_or_path in SCENARIOS:
        return SCENARIOS[name_or_path]
    path = Path(name_or_path)
    if not path.exists():
        raise ValueError(f"unknown scenario {name_or_path!r}; presets: {sorted(SCENARIOS)}")
    text = path.read_text(encoding="utf-8")
    if path.suffix in (".yaml", ".yml"):
        import yaml

        return ScenarioConfig.from_dict(yaml.safe_load(text))
    return ScenarioConfig.from_dict(json.loads(text))


def _inside(region: RegionConfig, x, y) -> bool:
    return region.x_min <= x <= region.x_max and region.y_min <= y <= region.y_max


def simulate(cfg: ScenarioConfig, seed: int = 0) -> Tuple[List[List[TrackRecord]], List[FrameBundle]]:
    """Generate ground truth and detections for one scene.

    Random draws happen in a fixed order from one generator: object births
    and initial states first, then per frame the measurement noise of every
    visible object, the misdetection draws, the true-detection scores, the
    clutter count and finally the clutter attributes.
    """
    rng = np.random.default_rng(seed)
    reg = cfg.region
    length, width, height = cfg.extent

    births = []
    states = []
    for i in range(cfg.n_objects):
        if cfg.schedule is not None:
            births.append(tuple(cfg.schedule[i]))
        else:
            b = int(rng.integers(0, max(1, int(cfg.birth_window * cfg.n_frames))))
            births.append((b, None))
        if cfg.initial_states is not None:
            states.append(np.array(cfg.initial_states[i], dtype=float))
        else:
            x = rng.uniform(reg.x_min + 0.2 * (reg.x_max - reg.x_min), reg.x_max - 0.2 * (reg.x_max - reg.x_min))
            y = rng.uniform(reg.y_min + 0.2 * (reg.y_max - reg.y_min), reg.y_max - 0.2 * (reg.y_max - reg.y_min))
            states.append(np.array([x, y, rng.uniform(*cfg.speed), rng.uniform(-math.pi, math.pi),
                                    rng.uniform(*cfg.turn_rate), rng.uniform(*cfg.accel)]))

    R = np.diag(np.square(cfg.noise_std))
    gone = [False] * cfg.n_objects
    gt_frames: List[List[TrackRecord]] = []
    det_frames: List[FrameBundle] = []
    for k in range(cfg.n_frames):
        t = k * cfg.dt
        if k > 0:
            for i in range(cfg.n_objects):
                if births[i][0] < k:
                    states[i] = ctra_transition(states[i], cfg.dt)
                    states[i][2] = max(states[i][2], 0.0)
        visible = []
        for i in range(cfg.n_objects):
            birth, death = births[i]
            if gone[i] or k < birth or (death is not None and k >= death):
                continue
            if not _inside(reg, states[i][0], states[i][1]):
                gone[i] = True
                continue
            visible.append(i)

        gt = []
        for i in visible:
            x, y, v, phi = states[i][:4]
            gt.append(TrackRecord((0, i), cfg.label, k, t, float(x), float(y), 0.5 * height,
                                  float(v * math.cos(phi)), float(v * math.sin(phi)), float(phi),
                                  length, width, height, 1.0))
        gt_frames.append(gt)

        noise = rng.multivariate_normal(np.zeros(5), R, size=len(visible)) if visible else np.zeros((0, 5))
        hit = rng.random(len(visible)) < cfg.p_detect
        scores = rng.uniform(*cfg.true_score, size=len(visible))
        dets = []
        for row, i in enumerate(visible):
            if not hit[row]:
                continue
            z = measurement_fn(states[i]) + noise[row]
            dets.append(Detection(z[:2], z[2:4], float(z[4]), AuxState(length, width, height, 0.5 * height),
                                  cfg.label, float(scores[row])))
        n_clutter = int(rng.poisson(cfg.clutter_rate))
        if n_clutter:
            xs = rng.uniform(reg.x_min, reg.x_max, n_clutter)
            ys = rng.uniform(reg.y_min, reg.y_max, n_clutter)
            vel = rng.normal(0.0, 1.0, (n_clutter, 2))
            yaw = rng.uniform(-math.pi, math.pi, n_clutter)
            cs = rng.uniform(*cfg.clutter_score, n_clutter)
            for j in range(n_clutter):
                dets.append(Detection(np.array([xs[j], ys[j]]), vel[j], float(yaw[j]),
                                      AuxState(length, width, height, 0.5 * height),
                                      cfg.label, float(cs[j])))
        det_frames.append(FrameBundle(k, t, dets))
    return gt_frames, det_frames
