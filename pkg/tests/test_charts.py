"""Chart algebra: attach maps, inverses, Jacobians, relaxed variants.

Property-style tests drawing 1000 samples per scenario edge; the whole
module is budgeted to run in a few seconds.
"""

import numpy as np
import pytest

from hybridsim import (bouncing_ball, build_chart, build_relaxed_chart,
                       chart_transition, crossing_affine, figure8,
                       sampled_roundtrip_error)

SCENARIOS = [crossing_affine(), bouncing_ball(),
             figure8(with_reverse_edge=True)]
EDGES = [(sc, e) for sc in SCENARIOS for e in sc.system.edges]


def _samples(rng, n=1000, scale=3.0, dim=2):
    return rng.uniform(-scale, scale, size=(n, dim))


@pytest.mark.parametrize("sc,e", EDGES, ids=lambda v: getattr(v, "name", None)
                         or str(getattr(v, "key", lambda: v)()))
def test_projection_idempotent_and_on_plane(sc, e):
    chart = build_chart(sc.system, e)
    rng = np.random.default_rng(7)
    for x in _samples(rng):
        p = chart.project(x)
        assert abs(chart.guard_value(p)) <= 1e-12 * (1 + np.linalg.norm(x))
        assert np.allclose(chart.project(p), p, atol=1e-12)


@pytest.mark.parametrize("sc,e", EDGES, ids=lambda v: getattr(v, "name", None)
                         or str(getattr(v, "key", lambda: v)()))
def test_attach_roundtrip(sc, e):
    chart = build_chart(sc.system, e)
    rng = np.random.default_rng(13)
    for x in _samples(rng):
        y = chart.attach(x)
        back = chart.attach_inverse(y)
        assert np.linalg.norm(back - x) <= 1e-9 * (1.0 + np.linalg.norm(x))


@pytest.mark.parametrize("sc,e", EDGES, ids=lambda v: getattr(v, "name", None)
                         or str(getattr(v, "key", lambda: v)()))
def test_attach_transports_guard_to_image_depth(sc, e):
    # r(attach(x)) == g(x): depth below the guard becomes depth above the image
    chart = build_chart(sc.system, e)
    hp = e.hyperplanes
    rng = np.random.default_rng(29)
    for x in _samples(rng, n=300):
        y = chart.attach(x)
        assert abs(hp.image_value(y) - chart.guard_value(x)) \
            <= 1e-9 * (1.0 + np.linalg.norm(x))


@pytest.mark.parametrize("sc,e", EDGES, ids=lambda v: getattr(v, "name", None)
                         or str(getattr(v, "key", lambda: v)()))
def test_attach_jacobian_matches_finite_differences(sc, e):
    chart = build_chart(sc.system, e)
    rng = np.random.default_rng(41)
    h = 1e-6
    for x in _samples(rng, n=50):
        J = chart.attach_jac(x)
        for i in range(x.size):
            d = np.zeros_like(x)
            d[i] = h
            col = (chart.attach(x + d) - chart.attach(x - d)) / (2 * h)
            assert np.allclose(J[:, i], col, atol=1e-6)


@pytest.mark.parametrize("eps", [1e-1, 1e-2, 1e-3])
def test_relaxed_attach_is_shifted_composition(eps):
    # the relaxed attach map must satisfy both derived forms:
    #   attach_eps(x) == attach(x - g_hat * eps) == attach(x) - r_hat * eps
    sc = crossing_affine()
    e = sc.system.edges[0]
    chart = build_chart(sc.system, e)
    rchart = build_relaxed_chart(chart, eps)
    hp = e.hyperplanes
    rng = np.random.default_rng(53)
    for x in _samples(rng, n=300):
        ye = rchart.attach(x)
        assert np.allclose(ye, chart.attach(x - hp.g_normal * eps), atol=1e-12)
        assert np.allclose(ye, chart.attach(x) - hp.r_normal * eps, atol=1e-12)
        assert np.linalg.norm(rchart.attach_inverse(ye) - x) <= 1e-9


def test_relaxed_strip_membership():
    sc = crossing_affine()
    chart = build_chart(sc.system, sc.system.edges[0])
    rchart = build_relaxed_chart(chart, 0.1)
    hp = sc.system.edges[0].hyperplanes
    inside = np.array([0.2, 0.05])
    below = np.array([0.2, -0.05])
    above = np.array([0.2, 0.15])
    assert hp.guard_value(inside) == pytest.approx(0.05)
    assert rchart.strip_membership(inside)
    assert not rchart.strip_membership(below)
    assert not rchart.strip_membership(above)


def test_chart_transition_between_reverse_edges():
    from hybridsim import global_representative
    sc = figure8(with_reverse_edge=True)
    fwd = build_chart(sc.system, sc.system.edge((1, 2)))
    rev = build_chart(sc.system, sc.system.edge((2, 1)))
    rng = np.random.default_rng(61)
    for _ in range(100):
        x = rng.uniform(-1.0, 1.0, size=2)
        z = chart_transition(fwd, rev, x)
        m1, p1 = global_representative(fwd, x)
        m2, p2 = global_representative(rev, z)
        assert m1 == m2
        assert np.allclose(p1, p2, atol=1e-9)


def test_sampled_roundtrip_error_is_tiny():
    rng = np.random.default_rng(3)
    for sc, e in EDGES:
        err = sampled_roundtrip_error(build_chart(sc.system, e), rng)
        assert err < 1e-10
