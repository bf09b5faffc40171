"""Per-class tuning records, observation region and run configuration.

Config documents are JSON or YAML keyed by class name. Each class entry
uses the symbol names below (``eta_sf``, ``p_s``, ...). ``P0``, ``Q`` and
``R`` accept either a full matrix or a list of diagonal entries. Reserved
top-level keys: ``region``, ``ut``, ``seed``, ``dt_fallback``,
``existence_floor``.

``Q`` is a process-noise density per second and is multiplied by the
frame interval during prediction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, Mapping, Optional

import numpy as np

from .motion import NoiseConfig, UTParams

# config symbol -> ClassParams attribute
SYMBOLS = {
    "eta_sf": "score_filter",
    "eta_iou": "nms_iou",
    "p_s": "survival",
    "eta_dist": "gate_dist",
    "p_d0": "base_pd",
    "PTS_0": "expected_pts",
    "s_d": "min_scale",
    "eta_score": "habm_score",
    "mu_ab": "adaptive_birth_rate",
    "mu_b0": "undetected_birth_rate",
    "mu_c": "clutter_rate",
    "eta_step": "ppp_max_age",
    "eta_ext1": "extract1",
    "eta_ext2": "extract2",
    "eta_cnt": "miss_limit",
}
RESERVED = {"region", "ut", "seed", "dt_fallback", "existence_floor"}

DEFAULT_Q = np.diag([0.1, 0.1, 2.0, 0.05, 0.5, 2.0])
DEFAULT_R = np.diag([0.25, 0.25, 0.5, 0.5, 0.05])
DEFAULT_P0 = np.diag([1.0, 1.0, 4.0, 0.25, 0.25, 4.0])


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ClassParams:
    score_filter: float
    nms_iou: float
    survival: float
    gate_dist: float
    base_pd: float
    expected_pts: float
    min_scale: float
    habm_score: float
    adaptive_birth_rate: float
    undetected_birth_rate: float
    clutter_rate: float
    ppp_max_age: int
    extract1: float
    extract2: float
    miss_limit: int
    newborn_cov: np.ndarray = field(default_factory=lambda: DEFAULT_P0.copy(), repr=False)
    noise: NoiseConfig = field(default_factory=lambda: NoiseConfig(DEFAULT_Q, DEFAULT_R), repr=False)

    def __post_init__(self):
        for name in ("survival", "base_pd", "min_scale"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ConfigError(f"{name} must lie in (0, 1], got {v}")
        for name in ("adaptive_birth_rate", "undetected_birth_rate", "clutter_rate", "gate_dist"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.extract1 > self.extract2:
            raise ConfigError("extraction thresholds must satisfy eta_ext1 <= eta_ext2")
        if self.ppp_max_age < 1 or self.miss_limit < 1:
            raise ConfigError("eta_step and eta_cnt must be >= 1")
        if self.expected_pts <= 0:
            raise ConfigError("PTS_0 must be positive")
        P0 = np.array(self.newborn_cov, dtype=float)
        if P0.shape != (6, 6) or not np.allclose(P0, P0.T) or np.linalg.eigvalsh(P0).min() <= 0:
            raise ConfigError("P0 must be a symmetric positive-definite 6x6 matrix")
        object.__setattr__(self, "newborn_cov", P0)

    def to_dict(self) -> dict:
        out = {sym: getattr(self, attr) for sym, attr in SYMBOLS.items()}
        out["P0"] = self.newborn_cov.tolist()
        out["Q"] = self.noise.Q.tolist()
        out["R"] = self.noise.R.tolist()
        return out

    @classmethod
    def from_dict(cls, d: Mapping) -> "ClassParams":
        unknown = set(d) - set(SYMBOLS) - {"P0", "Q", "R"}
        if unknown:
            raise ConfigError(f"unknown class parameter(s): {sorted(unknown)}")
        missing = set(SYMBOLS) - set(d)
        if missing:
            raise ConfigError(f"missing class parameter(s): {sorted(missing)}")
        kw = {attr: d[sym] for sym, attr in SYMBOLS.items()}
        kw["ppp_max_age"] = int(kw["ppp_max_age"])
        kw["miss_limit"] = int(kw["miss_limit"])
        if "P0" in d:
            kw["newborn_cov"] = _matrix(d["P0"], 6)
        kw["noise"] = NoiseConfig(_matrix(d.get("Q", DEFAULT_Q), 6), _matrix(d.get("R", DEFAULT_R), 5))
        return cls(**kw)


def _matrix(v, n):
    a = np.array(v, dtype=float)
    if a.ndim == 1:
        if a.shape != (n,):
            raise ConfigError(f"expected {n} diagonal entries, got {a.shape[0]}")
        return np.diag(a)
    if a.shape != (n, n):
        raise ConfigError(f"expected a {n}x{n} matrix, got {a.shape}")
    return a


def _table(col: int) -> Dict[str, float]:
    # rows in the order of SYMBOLS; columns: bicycle bus car motorcycle
    # pedestrian trailer truck kitti-car
    rows = [
        (0.15, 0, 0.1, 0.16, 0.2, 0.1, 0, 0.3),
        (0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1),
        (0.99, 0.99, 0.99, 0.99, 0.99, 0.99, 0.99, 1),
        (3, 10, 10, 4, 3, 10, 10, 4),
        (0.8, 0.9, 0.9, 0.8, 0.8, 0.9, 0.9, 0.9),
        (10, 10, 10, 10, 10, 10, 10, 10),
        (0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.7),
        (0.17, 0.3, 0.25, 0.18, 0.2, 0.15, 0.15, 0.65),
        (2, 2, 2, 2, 2, 2, 2, 0.2),
        (1, 5, 2, 1, 1, 2, 2, 0.5),
        (0.5, 0.2, 1, 0.5, 0.5, 0.5, 1, 10),
        (3, 3, 3, 2, 2, 2, 2, 1),
        (0.7, 0.7, 0.7, 0.7, 0.7, 0.7, 0.5, 0.85),
        (0.95, 0.7, 0.8, 0.95, 0.8, 0.8, 0.9, 0.9),
        (3, 2, 2, 2, 2, 2, 2, 5),
    ]
    return {sym: row[col] for sym, row in zip(SYMBOLS, rows)}


NUSCENES_CLASSES = ("bicycle", "bus", "car", "motorcycle", "pedestrian", "trailer", "truck")


def nuscenes_params() -> Dict[str, ClassParams]:
    """Finetuned nuScenes parameters for all seven categories."""
    return {c: ClassParams.from_dict(_table(i)) for i, c in enumerate(NUSCENES_CLASSES)}


def kitti_params() -> Dict[str, ClassParams]:
    return {"car": ClassParams.from_dict(_table(7))}


@dataclass(frozen=True)
class RegionConfig:
    x_min: float = -50.0
    x_max: float = 50.0
    y_min: float = -50.0
    y_max: float = 50.0

    def __post_init__(self):
        if self.area <= 0:
            raise ConfigError("observation region must have positive area")

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)


@dataclass(frozen=True)
class RunConfig:
    classes: Mapping[str, ClassParams] = field(default_factory=nuscenes_params)
    region: RegionConfig = field(default_factory=RegionConfig)
    ut: UTParams = field(default_factory=UTParams)
    seed: int = 0
    dt_fallback: float = 0.5
    existence_floor: float = 1e-4

    def params_for(self, label: str) -> ClassParams:
        try:
            return self.classes[label]
        except KeyError:
            raise ConfigError(f"no parameters configured for class {label!r}") from None

    def with_class(self, label: str, **changes) -> "RunConfig":
        classes = dict(self.classes)
        classes[label] = replace(classes[label], **changes)
        return replace(self, classes=classes)

    def to_dict(self) -> dict:
        out = {c: p.to_dict() for c, p in self.classes.items()}
        out["region"] = {f.name: getattr(self.region, f.name) for f in fields(RegionConfig)}
        out["ut"] = {"alpha": self.ut.alpha, "beta": self.ut.beta, "kappa": self.ut.kappa}
        out["seed"] = self.seed
        out["dt_fallback"] = self.dt_fallback
        out["existence_floor"] = self.existence_floor
        return out

    @classmethod
    def from_dict(cls, d: Mapping) -> "RunConfig":
        classes = {k: ClassParams.from_dict(v) for k, v in d.items() if k not in RESERVED}
        if not classes:
            raise ConfigError("config defines no classes")
        kw = {"classes": classes}
        if "region" in d:
            kw["region"] = RegionConfig(**d["region"])
        if "ut" in d:
            kw["ut"] = UTParams(**d["ut"])
        for key in ("seed", "dt_fallback", "existence_floor"):
            if key in d:
                kw[key] = d[key]
        return cls(**kw)


def load_config(path) -> RunConfig:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix in (".yaml", ".yml"):
        import yaml

        data = yaml.safe_load(text)
    else:
        data = json.loads(text)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return RunConfig.from_dict(data)


def save_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n", encoding="utf-8")


def car_only(region: Optional[RegionConfig] = None, **kw) -> RunConfig:
    """Run configuration holding just the nuScenes car parameters."""
    return RunConfig(classes={"car": nuscenes_params()["car"]},
                     region=region or RegionConfig(), **kw)
