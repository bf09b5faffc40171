import numpy as np
import pytest

from optipmb.density import AuxState, BernoulliComponent, PoissonComponent
from optipmb.detection import Detection
from optipmb.motion import MotionState
from optipmb.params import nuscenes_params

ACCEPTANCE_LINES = []


@pytest.fixture
def car():
    return nuscenes_params()["car"]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_det(x=0.0, y=0.0, vx=1.0, vy=0.0, yaw=0.0, score=0.9, label="car", pts=None,
             l=4.5, w=1.9, h=1.6):
    return Detection(np.array([x, y]), np.array([vx, vy]), yaw, AuxState(l, w, h, 0.8),
                     label, score, pts)


def make_state(x=0.0, y=0.0, v=1.0, phi=0.0, cov=None):
    P = np.eye(6) if cov is None else np.asarray(cov, dtype=float)
    return MotionState(np.array([x, y, v, phi, 0.0, 0.0]), P)


def make_bern(r=0.5, x=0.0, y=0.0, label="car", track_id=(0, 0), cov=None, **kw):
    return BernoulliComponent(r, make_state(x, y, cov=cov), AuxState(4.5, 1.9, 1.6, 0.8),
                              label, track_id, **kw)


def make_ppp(weight=1.0, x=0.0, y=0.0, label="car", age=0, marked=False, cov=None):
    return PoissonComponent(weight, make_state(x, y, cov=cov), label, age, marked)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
