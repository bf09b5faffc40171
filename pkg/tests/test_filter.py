import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from optipmb.density import PmbPosterior, gaussian_position_likelihood
from optipmb.filter import (CLUTTER, DETECTION, FIRST_DETECTION, MISDETECTION, adaptive_pd,
                            association_probability, clutter_intensity, detection_cost,
                            habm_birth_intensity, habm_unused, hyp_detection,
                            hyp_first_detection_ppp, hyp_misdetection, ppp_update, predict)
from optipmb.motion import NoiseConfig, predict_position_measurement, ukf_update
from optipmb.params import RegionConfig, nuscenes_params

from conftest import make_bern, make_det, make_ppp

REGION = RegionConfig(-50, 50, -50, 50)
CAR = nuscenes_params()["car"]
prob = st.floats(0.0, 1.0, allow_nan=False)


def test_clutter_intensity(car):
    assert clutter_intensity("car", car, REGION) == pytest.approx(1e-4)
    assert clutter_intensity("car", replace(car, clutter_rate=0.0), REGION) == 0.0
    big = RegionConfig(-100, 100, -50, 50)
    assert clutter_intensity("car", car, big) == pytest.approx(0.5e-4)


def test_adaptive_pd_examples(car):
    assert adaptive_pd(car, 0) == pytest.approx(0.45)
    assert adaptive_pd(car, 20) == pytest.approx(0.9)
    assert adaptive_pd(car, 5) == pytest.approx(0.675, abs=1e-12)
    assert adaptive_pd(car, None) == 0.9


@given(st.integers(0, 10_000))
def test_adaptive_pd_bounds(pts):
    from optipmb.params import nuscenes_params
    for p in nuscenes_params().values():
        v = adaptive_pd(p, pts)
        assert p.base_pd * p.min_scale - 1e-15 <= v <= p.base_pd + 1e-15


def test_predict_examples(car):
    pmb = PmbPosterior([make_ppp(2.0)], [make_bern(0.8)], {(0, 0)})
    same = predict(pmb, 0.0, {"car": replace(car, survival=1.0)})
    assert same.poisson[0].weight == 2.0 and same.bernoulli[0].existence == 0.8
    out = predict(pmb, 0.5, {"car": car})
    assert out.bernoulli[0].existence == pytest.approx(0.792)
    assert out.poisson[0].weight == pytest.approx(1.98)
    assert out.poisson[0].age == 1
    assert len(out.poisson) == 1 and len(out.bernoulli) == 1
    assert out.bernoulli[0].aux == pmb.bernoulli[0].aux
    assert out.extracted_ids == {(0, 0)}


def test_misdetection_examples():
    assert hyp_misdetection(make_bern(0.5), 0.9).component.existence == pytest.approx(0.05 / 0.55, abs=1e-12)
    assert hyp_misdetection(make_bern(0.37), 0.0).component.existence == pytest.approx(0.37, abs=1e-15)
    assert hyp_misdetection(make_bern(1.0), 0.6).component.existence == 1.0
    h = hyp_misdetection(make_bern(0.5), 0.9)
    assert h.kind == MISDETECTION and h.measurement_index is None


@given(prob, prob)
def test_misdetection_never_increases(r, pd):
    b = make_bern(r)
    h = hyp_misdetection(b, pd)
    assert 0.0 <= h.component.existence <= r
    assert h.component.density is b.density


def test_detection_cost_example():
    assert detection_cost(1.0, 0.9, math.log(0.1)) == pytest.approx(-math.log(0.9), abs=1e-12)


def test_detection_cost_monotone_in_likelihood():
    ws = [detection_cost(0.7, 0.8, math.log(n)) for n in np.linspace(0.01, 5, 50)]
    assert all(a > b for a, b in zip(ws, ws[1:]))


def test_hyp_detection_uses_ukf_and_position_likelihood(car):
    b = make_bern(0.6, cov=np.eye(6) * 0.5)
    d = make_det(1.0, -0.5, vx=2.0, vy=0.3, yaw=0.1)
    h = hyp_detection(b, d, 0.9, car, measurement_index=2, object_index=1)
    z_hat, S = predict_position_measurement(b.density, car.noise)
    N = gaussian_position_likelihood(d.z_xy, z_hat, S)
    assert h.kind == DETECTION and h.component.existence == 1.0
    assert h.cost == pytest.approx(-math.log(0.6 * 0.9 * N / (1 - 0.6 * 0.9)), abs=1e-12)
    ref = ukf_update(b.density, d.z_motion, car.noise)
    np.testing.assert_array_equal(h.component.density.mean, ref.mean)
    assert (h.measurement_index, h.object_index) == (2, 1)


def test_first_detection_example(car):
    # choose P so that S = s I and N(z; z, S) = 0.05 exactly at the mode
    s = 1.0 / (2 * math.pi * 0.05)
    noise = NoiseConfig(car.noise.Q, np.diag([s / 2, s / 2, 0.5, 0.5, 0.05]))
    params = replace(car, noise=noise)
    cov = np.diag([s / 2, s / 2, 1, 1, 1, 1])
    comp = make_ppp(2.0, cov=cov)
    d = make_det(0.0, 0.0)
    h = hyp_first_detection_ppp([(4, comp)], d, [0.9], 1e-4, params, measurement_index=0, frame=3)
    assert h.kind == FIRST_DETECTION
    assert h.component.existence == pytest.approx(0.09 / 0.0901, abs=1e-12)
    assert h.component.existence == pytest.approx(0.998890, abs=1e-6)
    assert h.cost == pytest.approx(-math.log(0.0901), abs=1e-12)
    assert h.cost == pytest.approx(2.4068, abs=1e-4)
    assert h.marks == (4,)
    assert h.component.track_id == (3, 0)
    ref = ukf_update(comp.density, d.z_motion, params.noise)
    np.testing.assert_allclose(h.component.density.mean, ref.mean, atol=1e-12)


def test_first_detection_clutter_limit(car):
    comp = make_ppp(2.0)
    d = make_det()
    rs = [hyp_first_detection_ppp([(0, comp)], d, [0.9], lc, car).component.existence
          for lc in (1e-4, 1.0, 1e4, 1e12)]
    assert all(a > b for a, b in zip(rs, rs[1:]))
    assert rs[-1] < 1e-10


def test_first_detection_monotone_in_weight(car):
    d = make_det(0.5, 0.2)
    rs = [hyp_first_detection_ppp([(0, make_ppp(w)), (1, make_ppp(1.0, x=1.0))], d, [0.9, 0.9], 1e-3, car)
          .component.existence for w in (0.1, 0.5, 1.0, 4.0)]
    assert all(a < b for a, b in zip(rs, rs[1:]))


def test_first_detection_needs_gate(car):
    with pytest.raises(ValueError):
        hyp_first_detection_ppp([], make_det(), [], 1e-4, car)


def test_association_probability(car):
    d = make_det(0.0, 0.0)
    assert association_probability(d, [], {"car": car}) == 0.0
    # objects whose position likelihood is 0.3 at the detection
    s = 1.0 / (2 * math.pi * 0.3)
    noise = NoiseConfig(car.noise.Q, np.diag([s / 2, s / 2, 0.5, 0.5, 0.05]))
    p = replace(car, noise=noise)
    cov = np.diag([s / 2, s / 2, 1, 1, 1, 1])
    objs = [make_bern(0.9, cov=cov), make_bern(0.9, cov=cov, track_id=(0, 1))]
    assert association_probability(d, objs, {"car": p}) == pytest.approx(0.6, abs=1e-12)
    assert association_probability(d, objs * 3, {"car": p}) == 1.0


def test_habm_clutter_branch(car):
    h = habm_unused(make_det(score=0.2), 0.0, 1e-4, car, REGION)
    assert h.kind == CLUTTER and h.component is None
    assert h.cost == pytest.approx(-math.log(1e-4), abs=1e-12)
    assert h.cost == pytest.approx(9.2103, abs=1e-4)


def test_habm_newborn_branch(car):
    d = make_det(3.0, 4.0, vx=0.0, vy=-2.0, score=0.9)
    h = habm_unused(d, 0.0, 1e-4, car, REGION, measurement_index=5, frame=7)
    assert h.kind == FIRST_DETECTION
    assert h.cost == pytest.approx(-math.log(3e-4), abs=1e-12)
    assert h.cost == pytest.approx(8.1117, abs=1e-4)
    assert h.component.existence == 1.0
    np.testing.assert_allclose(h.component.density.mean, [3, 4, 2, -math.pi / 2, 0, 0], atol=1e-15)
    np.testing.assert_array_equal(h.component.density.cov, car.newborn_cov)
    assert h.component.track_id == (7, 5)
    sat = habm_unused(d, 1.0, 1e-4, car, REGION)
    assert sat.cost == pytest.approx(-math.log(1e-4), abs=1e-12)


def test_habm_birth_intensity(car):
    assert habm_birth_intensity([], {"car": car}) == []
    out = habm_birth_intensity([(make_det(score=0.1), 0.0), (make_det(score=0.1), 0.75)], {"car": car})
    assert [c.weight for c in out] == [2.0, 0.5]
    assert all(c.age == 0 and not c.marked for c in out)


def test_ppp_update():
    comps = [make_ppp(2.0), make_ppp(2.0), make_ppp(2.0)]
    out = ppp_update(comps, [0.0, 1.0, 0.6], [make_ppp(0.3)])
    assert [c.weight for c in out[:3]] == [2.0, 0.0, pytest.approx(0.8)]
    assert out[3].weight == 0.3
    assert out[0].density is comps[0].density


@settings(max_examples=300, deadline=None)
@given(r=prob, pd=st.floats(0.01, 1.0), dx=st.floats(-8, 8), dy=st.floats(-8, 8),
       lc=st.floats(1e-8, 1.0), w=st.floats(0.0, 5.0))
def test_generated_costs_finite_and_existence_bounded(r, pd, dx, dy, lc, w):
    car = CAR
    b = make_bern(r)
    d = make_det(dx, dy)
    if r > 0:
        h = hyp_detection(b, d, pd, car)
        assert math.isfinite(h.cost) and h.component.existence == 1.0
    m = hyp_misdetection(b, pd)
    assert math.isfinite(m.cost) and 0.0 <= m.component.existence <= 1.0
    f = hyp_first_detection_ppp([(0, make_ppp(w))], d, [pd], lc, car)
    assert math.isfinite(f.cost) and 0.0 <= f.component.existence <= 1.0


def test_map_choice_matches_two_hypothesis_bayes(car, rng):
    """One object, one gated measurement: cost comparison picks the Bayes MAP event."""
    for _ in range(300):
        r = rng.uniform(0.05, 1.0)
        pd = rng.uniform(0.1, 0.99)
        lc = 10 ** rng.uniform(-6, -1)
        b = make_bern(r)
        d = make_det(*rng.normal(0, 2, 2))
        det_h = hyp_detection(b, d, pd, car)
        # alternative event: object missed, measurement is clutter
        alt_cost = -math.log(lc)
        z_hat, S = predict_position_measurement(b.density, car.noise)
        N = gaussian_position_likelihood(d.z_xy, z_hat, S)
        # unnormalised posterior masses of both events
        p_assoc = r * pd * N
        p_miss = (1 - r + r * (1 - pd)) * lc
        if abs(p_assoc - p_miss) < 1e-9 * max(p_assoc, p_miss):
            continue
        assert (det_h.cost < alt_cost) == (p_assoc > p_miss)
