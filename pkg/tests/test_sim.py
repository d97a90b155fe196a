"""Trajectory engines against closed-form oracles."""

import math

import numpy as np
import pytest

from hybridsim import (IntegratorConfig, NonUniqueContinuation, QuotientPoint,
                       bouncing_ball, canonical_point, crossing_affine,
                       crossing_linear, figure8, quotient_distance,
                       repelling_relay, simulate_execution, simulate_filippov,
                       simulate_relaxed, sliding_relay, sup_distance)

TIGHT = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12)


# ---------------------------------------------------------------------------
# crossing scenarios

def test_crossing_linear_matches_piecewise_solution():
    sc = crossing_linear()
    tr = simulate_filippov(sc.system, sc.default_x0, T=sc.default_T)
    oracle = sc.oracles["trajectory"]
    for t in np.linspace(0.0, sc.default_T, 101):
        want = oracle(t)
        p = tr.sample(t)
        assert p.mode == want.mode
        assert np.allclose(p.coords, want.coords, atol=1e-10)
    assert tr.transition_count() == 1
    assert tr.event_times(("Crossing",)) == pytest.approx([0.5], abs=1e-12)


def test_crossing_affine_reset_applied():
    sc = crossing_affine()
    tr = simulate_filippov(sc.system, sc.default_x0, T=sc.default_T)
    oracle = sc.oracles["trajectory"]
    for t in np.linspace(0.0, sc.default_T, 101):
        want = oracle(t)
        p = tr.sample(t)
        assert p.mode == want.mode
        assert np.allclose(p.coords, want.coords, atol=1e-10)


def test_execution_agrees_with_filippov_on_crossings():
    for sc in (crossing_linear(), crossing_affine()):
        a = simulate_execution(sc.system, sc.default_x0, T=sc.default_T)
        b = simulate_filippov(sc.system, sc.default_x0, T=sc.default_T)
        assert a.transition_count() == b.transition_count()
        assert sup_distance(sc.system, a, b, sc.default_T, 200) < 1e-9


# ---------------------------------------------------------------------------
# sliding

def test_sliding_relay_slides_after_hit():
    sc = sliding_relay()
    tr = simulate_filippov(sc.system, sc.default_x0, T=sc.default_T)
    starts = tr.event_times(("SlideStart",))
    assert starts == pytest.approx([0.5], abs=1e-10)
    e = sc.system.edges[0]
    for t in np.linspace(0.55, sc.default_T, 40):
        x = np.asarray(tr.sample(t).coords)
        assert abs(e.hyperplanes.guard_value(x)) <= 1e-9
        # sliding velocity equals the convex combination with alpha = 1/2
        assert np.allclose(x, [t, 0.0], atol=1e-9)


def test_repelling_relay_exit_matches_oracle():
    sc = repelling_relay()
    tr = simulate_filippov(sc.system, sc.default_x0, T=sc.default_T)
    oracle = sc.oracles["trajectory"]
    for t in np.linspace(0.0, sc.default_T, 101):
        want = oracle(t)
        p = tr.sample(t)
        assert np.allclose(p.coords, want.coords, atol=1e-8), (t, p, want)


def test_repelling_start_is_nonunique():
    sc = repelling_relay()
    x0 = QuotientPoint(1, sc.oracles["repelling_x0"])
    with pytest.raises(NonUniqueContinuation):
        simulate_filippov(sc.system, x0, T=0.5)
    a = simulate_filippov(sc.system, x0, T=0.5, branch_policy="prefer-f1")
    b = simulate_filippov(sc.system, x0, T=0.5, branch_policy="prefer-f2")
    assert a.sample(0.5).mode == 1
    assert b.sample(0.5).mode == 2
    # both are genuine solutions leaving the same surface point
    assert a.sample(0.0).coords == pytest.approx(b.sample(0.0).coords)


# ---------------------------------------------------------------------------
# bouncing ball: Zeno execution, corner-pinned exact solution

def test_ball_execution_zeno_truncation():
    sc = bouncing_ball()
    tr = simulate_execution(sc.system, sc.default_x0, T=sc.default_T)
    zeno = [ev for ev in tr.events if ev.kind == "ZenoTruncation"]
    assert len(zeno) == 1
    t_inf = sc.oracles["t_inf"]
    assert zeno[0].meta["t_accumulation"] == pytest.approx(t_inf, abs=1e-6)
    # after truncation the state is parked at the accumulation point
    assert np.linalg.norm(tr.sample(sc.default_T).coords) < 1e-9


def test_ball_execution_impact_speeds_geometric():
    sc = bouncing_ball()
    tr = simulate_execution(sc.system, sc.default_x0, T=sc.default_T)
    impacts = [ev for ev in tr.events
               if ev.kind == "ResetJump" and ev.edge in ((2, 3), (4, 1))]
    assert len(impacts) >= 20
    for k, ev in enumerate(impacts):
        v = abs(ev.meta["pre"][1][1])
        v_oracle = sc.oracles["impact_speed"](k + 1)
        assert abs(v - v_oracle) / v_oracle < 1e-6
        assert ev.time == pytest.approx(sc.oracles["impact_time"](k + 1),
                                        abs=1e-9)


def test_ball_filippov_pins_at_origin():
    sc = bouncing_ball()
    tr = simulate_filippov(sc.system, sc.default_x0, T=sc.default_T)
    pin = tr.meta.get("corner_pin")
    assert pin is not None
    assert pin["t_accumulation"] == pytest.approx(sc.oracles["t_inf"],
                                                  abs=1e-6)
    t_inf = sc.oracles["t_inf"]
    for t in np.linspace(t_inf + 0.05, sc.default_T, 25):
        assert np.linalg.norm(tr.sample(t).coords) <= 1e-6


# ---------------------------------------------------------------------------
# spiral with scaling reset

def test_figure8_gap_ratio_is_exponential():
    sc = figure8()
    tr = simulate_filippov(sc.system, sc.default_x0, T=sc.default_T,
                           config=TIGHT)
    times = tr.event_times(("Crossing",))
    assert len(times) >= 5
    gaps = np.diff(times)
    want = sc.oracles["two_step_gap_ratio"]  # exp(-2*pi*a/b)
    for r in gaps[2::2] / gaps[:-2:2]:
        assert r == pytest.approx(want, rel=1e-6)


def test_figure8_reverse_edge_is_equivalent():
    base = figure8()
    twin = figure8(with_reverse_edge=True)
    a = simulate_filippov(base.system, base.default_x0, T=base.default_T,
                          config=TIGHT)
    b = simulate_filippov(twin.system, twin.default_x0, T=twin.default_T,
                          config=TIGHT)
    assert sup_distance(base.system, a, b, base.default_T, 400) <= 1e-6


def test_figure8_execution_needs_reverse_edge_and_agrees():
    twin = figure8(with_reverse_edge=True)
    base = figure8()
    a = simulate_execution(twin.system, twin.default_x0, T=twin.default_T,
                           config=TIGHT)
    b = simulate_filippov(base.system, base.default_x0, T=base.default_T,
                          config=TIGHT)
    assert a.transition_count() == b.transition_count()
    assert sup_distance(base.system, a, b, base.default_T, 400) <= 1e-6


# ---------------------------------------------------------------------------
# relaxed runs

def test_relaxed_rejects_strip_start():
    sc = crossing_linear()
    with pytest.raises(ValueError):
        simulate_relaxed(sc.system, 0.1, QuotientPoint(1, (0.0, 0.05)))


def test_relaxed_crossing_events_carry_layer_depth():
    sc = crossing_linear()
    tr = simulate_relaxed(sc.system, 0.05, sc.default_x0, T=sc.default_T)
    kinds = [(ev.meta.get("entry"), ev.meta.get("exit")) for ev in tr.events]
    assert ("bottom", None) in kinds       # entered through g = 0
    assert (None, "top") in kinds          # left through g = eps
    inside = tr.sample(0.52)
    assert inside.epsilon_layer is not None
    assert 0.0 < inside.epsilon_layer < 0.05


def test_relaxed_sliding_settles_at_half_depth():
    sc = sliding_relay()
    eps = 1e-3
    tr = simulate_relaxed(sc.system, eps, sc.default_x0, T=sc.default_T)
    p = tr.sample(0.9)
    # symmetric normal rates: equilibrium at phi = 1/2, i.e. depth eps/2
    assert p.epsilon_layer == pytest.approx(eps / 2.0, abs=5 * eps)
    assert abs(p.coords[1] - eps / 2.0) < 5 * eps


# ---------------------------------------------------------------------------
# quotient geometry

def test_canonical_point_moves_image_points_to_source():
    sc = crossing_affine()
    e = sc.system.edges[0]
    x = np.array([0.25, 0.0])          # on the guard plane, mode 1
    y = e.reset(x)                     # its image in mode 2
    p = canonical_point(sc.system, 2, y)
    assert p.mode == 1
    assert np.allclose(p.coords, x, atol=1e-9)


def test_quotient_distance_identifies_glued_points():
    sc = crossing_affine()
    e = sc.system.edges[0]
    x = np.array([0.25, 0.0])
    a = QuotientPoint(1, x)
    b = QuotientPoint(2, e.reset(x))
    assert quotient_distance(sc.system, a, b) < 1e-12
    assert quotient_distance(sc.system, a, a) == 0.0


def test_quotient_distance_symmetric():
    sc = crossing_affine()
    a = QuotientPoint(1, (0.2, -0.3))
    b = QuotientPoint(2, (1.5, 0.4))
    d1 = quotient_distance(sc.system, a, b)
    d2 = quotient_distance(sc.system, b, a)
    assert d1 == pytest.approx(d2, rel=1e-12)
    assert np.isfinite(d1)


def test_sample_is_right_continuous_at_events():
    sc = crossing_affine()
    tr = simulate_execution(sc.system, sc.default_x0, T=sc.default_T)
    t_ev = tr.event_times(("ResetJump",))[0]
    post = tr.sample(t_ev)
    assert post.mode == 2
