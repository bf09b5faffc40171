"""Poisson multi-Bernoulli 3D multi-object tracker with adaptive birth and detection models."""

from .density import AuxState, BernoulliComponent, PmbPosterior, PoissonComponent
from .detection import Detection, FrameBundle, bev_iou, preprocess
from .metrics import amota, clear_metrics, match_frame, similarity
from .motion import MotionState, NoiseConfig, NumericalError, UTParams
from .params import ClassParams, RegionConfig, RunConfig, kitti_params, load_config, nuscenes_params
from .sim import ScenarioConfig, simulate
from .tracker import OptiPMBTracker, run_tracker
from .tracks import TrackRecord

__version__ = "0.1.0"

__all__ = [
    "AuxState", "BernoulliComponent", "ClassParams", "Detection", "FrameBundle", "MotionState",
    "NoiseConfig", "NumericalError", "OptiPMBTracker", "PmbPosterior", "PoissonComponent",
    "RegionConfig", "RunConfig", "ScenarioConfig", "TrackRecord", "UTParams", "amota",
    "bev_iou", "clear_metrics", "kitti_params", "load_config", "match_frame",
    "nuscenes_params", "preprocess", "run_tracker", "similarity", "simulate",
]
