import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hybrid_mbc import gp as gpr
from hybrid_mbc.errors import ConfigError
from hybrid_mbc.models import CV, GP, CvModel, HybridModel, fit_cv, fit_gp, fit_hybrid, \
    model_from_dict, model_to_dict, predict, pte, select_sub_model
from hybrid_mbc.synth import HardBrake, ScenarioSpec, generate

finite = st.floats(-1e4, 1e4)


def test_cv_two_point_difference():
    m = fit_cv([0.0, 0.1], [0.0, 1.0], [0.0, 0.0])
    assert m.anchor_t == 0.1
    assert m.anchor_pos == (1.0, 0.0)
    assert m.velocity == pytest.approx((10.0, 0.0))


def test_cv_stationary():
    m = fit_cv(np.arange(5) * 0.1, np.full(5, 3.0), np.full(5, -2.0))
    assert m.velocity == (0.0, 0.0)


def test_cv_speed_on_circular_arc():
    radius, speed = 50.0, 10.0
    t = np.arange(10) * 0.1
    ang = speed * t / radius
    m = fit_cv(t, radius * np.sin(ang), radius * (1 - np.cos(ang)))
    assert 9.9 <= math.hypot(*m.velocity) <= 10.1


def test_cv_needs_two_samples():
    with pytest.raises(ConfigError):
        fit_cv([0.0], [0.0], [0.0])


def test_cv_linear_extrapolation():
    assert predict(CvModel(0.0, (0.0, 0.0), (10.0, 0.0)), 0.5) == (5.0, 0.0)


def test_cv_at_anchor_is_anchor():
    m = CvModel(1.3, (2.5, -7.25), (3.1, 0.7))
    assert predict(m, 1.3) == (2.5, -7.25)


@given(finite, finite, st.floats(-50, 50), st.floats(-50, 50), st.floats(0, 10), st.floats(0, 10))
def test_cv_is_affine(x, y, vx, vy, h1, h2):
    m = CvModel(0.0, (x, y), (vx, vy))
    a, c = predict(m, h1), predict(m, h1 + 2 * h2)
    b = predict(m, h1 + h2)
    assert a[0] + c[0] == pytest.approx(2 * b[0], abs=1e-6)
    assert a[1] + c[1] == pytest.approx(2 * b[1], abs=1e-6)


def test_gp_beats_cv_on_parabola():
    t = np.arange(10) * 0.1
    hybrid = fit_hybrid(t, t ** 2, np.zeros(10), noise_var=1e-8)
    actual = (1.0, 0.0)
    assert pte(predict(hybrid.gp, 1.0), actual) < pte(predict(hybrid.cv, 1.0), actual)


def test_gp_reproduces_last_sample_when_noise_free():
    t = np.arange(10) * 0.1
    xs, ys = np.sin(t) * 4, t ** 3
    g = fit_gp(t, xs, ys, noise_var=1e-10)
    got = predict(g, g.window_end_t)
    assert pte(got, (xs[-1], ys[-1])) < 1e-4


def test_pte_345():
    assert pte((0, 0), (3, 4)) == 5.0


def test_pte_identity():
    assert pte((1.5, -2.0), (1.5, -2.0)) == 0.0


@given(finite, finite, finite, finite)
def test_pte_symmetric(a, b, c, d):
    assert pte((a, b), (c, d)) == pte((c, d), (a, b))
    assert pte((a, b), (c, d)) >= 0


def _line_window(n=10, speed=10.0):
    t = np.arange(n) * 0.1
    return t, speed * t, np.zeros(n)


def test_select_on_cv_line_picks_cv():
    t, x, y = _line_window()
    h = fit_hybrid(t, x, y)
    sel = select_sub_model(h, 1.0, (10.0, 0.0))
    assert sel.pte_cv == 0.0
    assert sel.active == CV


def test_select_tie_goes_to_cv():
    # a one-sample GP centred on its own sample predicts that sample everywhere,
    # exactly like a stationary CV model anchored there
    g = fit_gp([0.0], [4.0], [-1.0])
    h = HybridModel(CvModel(0.0, (4.0, -1.0), (0.0, 0.0)), g, GP)
    sel = select_sub_model(h, 0.7, (7.0, 3.0))
    assert sel.pte_cv == sel.pte_gp == 5.0
    assert sel.active == CV


def test_select_hard_brake_prefers_gp():
    traj = generate(ScenarioSpec(HardBrake(20.0, 5.0)), 4.0)
    end = 9  # window [0, 0.9] s, entirely inside the deceleration
    # the trace is noise-free, so assume 1 cm noise rather than the 10 cm default
    h = fit_hybrid(traj.t[:end + 1], traj.x[:end + 1], traj.y[:end + 1], noise_var=1e-4)
    k = end + 5
    sel = select_sub_model(h, traj.t[k], traj.pos(k))
    assert sel.active == GP
    assert sel.pte_gp < sel.pte_cv


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.95, 2.0))
def test_selection_min_is_min(dx, dy, t):
    tt, x, y = _line_window()
    h = HybridModel(fit_cv(tt, x, y), fit_gp(tt, x + 0.1 * tt ** 2, y, optimize=False))
    sel = select_sub_model(h, t, (10 * t + dx, dy))
    assert sel.pte_min <= sel.pte_cv and sel.pte_min <= sel.pte_gp


def test_linear_window_cv_one_step_exact():
    t, x, y = _line_window()
    h = fit_hybrid(t, x, y)
    assert pte(predict(h.cv, 1.0), (10.0, 0.0)) == 0.0


def test_hybrid_predict_uses_active():
    t = np.arange(10) * 0.1
    h = fit_hybrid(t, t ** 2, np.zeros(10))
    assert predict(h, 1.2) == predict(h.cv, 1.2)
    assert predict(h.with_active(GP), 1.2) == predict(h.gp, 1.2)


def test_hybrid_rejects_unknown_active():
    t, x, y = _line_window()
    with pytest.raises(ConfigError):
        HybridModel(fit_cv(t, x, y), fit_gp(t, x, y, optimize=False), "KF")


def test_model_json_round_trip():
    t = np.arange(10) * 0.1 + 3.0
    h = fit_hybrid(t, np.sin(t), np.cos(t)).with_active(GP)
    back = model_from_dict(model_to_dict(h))
    assert back.active == GP
    assert back.cv == h.cv
    for q in (4.0, 4.3):
        assert predict(back.gp, q) == pytest.approx(predict(h.gp, q), abs=1e-12)


def test_fit_gp_frozen_uses_template():
    t, x, y = _line_window()
    spec = gpr.Sum(gpr.Linear(2.0, 0.45), gpr.Rbf(0.5, 0.7))
    g = fit_gp(t, x, y, template=spec, optimize=False)
    assert g.gp_x.kernel == spec
