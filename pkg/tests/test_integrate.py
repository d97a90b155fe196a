"""Integrator unit tests: step control, dense output, event location."""

import numpy as np
import pytest

from hybridsim import IntegratorConfig, integrate, locate_event
from hybridsim.errors import NoSignChange


def test_rk45_matches_exp():
    path = integrate(lambda t, x: -x, np.array([1.0]), (0.0, 5.0),
                     IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12))
    for t in np.linspace(0.0, 5.0, 57):
        assert abs(path(t)[0] - np.exp(-t)) < 1e-9


def test_rk45_fixed_step_order():
    # force fixed steps with a permissive tolerance; global error ~ h^5
    errs = []
    hs_ = [0.2, 0.1, 0.05, 0.025]
    for h in hs_:
        cfg = IntegratorConfig(rel_tol=10.0, abs_tol=10.0, max_step=h,
                               first_step=h)
        path = integrate(lambda t, x: np.array([np.cos(t) * x[0]]),
                         np.array([1.0]), (0.0, 2.0), cfg)
        errs.append(abs(path(2.0)[0] - np.exp(np.sin(2.0))))
    order = np.polyfit(np.log(hs_), np.log(errs), 1)[0]
    assert order >= 4.5


def test_backward_euler_order_one():
    errs = []
    hs_ = [0.02, 0.01, 0.005]
    for h in hs_:
        cfg = IntegratorConfig(method="be", rel_tol=10.0, abs_tol=10.0,
                               max_step=h, first_step=h)
        path = integrate(lambda t, x: -x, np.array([1.0]), (0.0, 1.0), cfg)
        errs.append(abs(path(1.0)[0] - np.exp(-1.0)))
    order = np.polyfit(np.log(hs_), np.log(errs), 1)[0]
    assert 0.8 <= order <= 1.3


def test_backward_euler_stiff_stable():
    # lambda = -1e4 with steps far beyond the explicit stability limit
    cfg = IntegratorConfig(method="be", rel_tol=1e-6, abs_tol=1e-9)
    path = integrate(lambda t, x: -1e4 * (x - np.cos(t)), np.array([0.0]),
                     (0.0, 2.0), cfg)
    assert abs(path(2.0)[0] - np.cos(2.0)) < 1e-3


def test_dense_output_between_nodes():
    path = integrate(lambda t, x: np.array([x[1], -x[0]]),
                     np.array([1.0, 0.0]), (0.0, 6.0),
                     IntegratorConfig(rel_tol=1e-9, abs_tol=1e-12))
    ts = np.random.default_rng(3).uniform(0.0, 6.0, 200)
    for t in ts:
        x = path(t)
        assert abs(x[0] - np.cos(t)) < 1e-6
        assert abs(x[1] + np.sin(t)) < 1e-6


def test_truncate_preserves_interpolation():
    # clipped segments must keep the anchor of the original step
    path = integrate(lambda t, x: np.array([1.0, x[0]]),
                     np.array([0.0, 0.0]), (0.0, 1.0))
    cut = path.truncate(0.49, path(0.49))
    for t in [0.1, 0.3, 0.45, 0.4899]:
        assert np.allclose(cut(t), [t, t * t / 2.0], atol=1e-12)
    assert cut.t1 == 0.49


def test_locate_event_accuracy():
    path = integrate(lambda t, x: np.array([1.0]), np.array([-1.0]),
                     (0.0, 2.0))
    t_star, x_star = locate_event(path, lambda t, x: x[0], (0.0, 2.0))
    assert abs(t_star - 1.0) < 1e-12
    assert abs(x_star[0]) < 1e-12


def test_locate_event_requires_sign_change():
    path = integrate(lambda t, x: np.array([1.0]), np.array([1.0]),
                     (0.0, 1.0))
    with pytest.raises(NoSignChange):
        locate_event(path, lambda t, x: x[0], (0.0, 1.0))


def test_initial_step_survives_tiny_state():
    # near a Zeno accumulation the state is ~1e-12 while the field is O(10);
    # the starting-step heuristic must not underflow
    g = 9.81
    path = integrate(lambda t, x: np.array([x[1], -g]),
                     np.array([3.6e-12, 0.0]), (1.3545, 2.0))
    assert path.t1 == 2.0


def test_event_tolerance_near_roundoff():
    path = integrate(lambda t, x: np.array([x[1], -2.0]),
                     np.array([1.0, 0.0]), (0.0, 2.0),
                     IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14))
    t_star, _ = locate_event(path, lambda t, x: x[0], (0.5, 1.5))
    assert abs(t_star - 1.0) < 1e-12
