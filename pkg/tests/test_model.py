"""System construction, reset maps, and assumption validation."""

import numpy as np
import pytest

from hybridsim import (ControlSignal, ValidationConfig, affine_reset,
                       bouncing_ball, crossing_linear, identity_reset,
                       sliding_relay, validate_system)


def test_identity_reset_roundtrip():
    r = identity_reset(3)
    x = np.array([1.0, -2.0, 0.5])
    assert np.array_equal(r(x), x)
    assert np.array_equal(r.inv(x), x)
    assert np.array_equal(r.jac(x), np.eye(3))


def test_affine_reset_inverse_and_jacobian():
    M = np.array([[2.0, 1.0], [0.0, -0.5]])
    b = np.array([1.0, 3.0])
    r = affine_reset(M, b)
    rng = np.random.default_rng(11)
    for _ in range(50):
        x = rng.normal(size=2)
        y = r(x)
        assert np.allclose(y, M @ x + b)
        assert np.allclose(r.inv(y), x, atol=1e-12)
        assert np.allclose(r.jac(x), M)
        assert np.allclose(r.inv_jac(y), np.linalg.inv(M))


def test_hyperplane_values_signs():
    sc = crossing_linear()
    e = sc.system.edges[0]
    # g < 0 inside the source domain, r > 0 inside the target domain
    assert e.hyperplanes.guard_value(np.array([0.0, -0.3])) < 0
    assert e.hyperplanes.image_value(np.array([0.0, 0.3])) > 0
    assert e.hyperplanes.guard_value(np.array([0.7, 0.0])) == 0.0


def test_constant_control_signal():
    u = ControlSignal.constant(np.array([2.5]), horizon=4.0)
    assert np.array_equal(u(0.0), [2.5])
    assert np.array_equal(u(3.9), [2.5])


def test_edge_lookup_and_adjacency():
    H = bouncing_ball().system
    assert {e.key() for e in H.outgoing(2)} == {(2, 3)}
    assert {e.key() for e in H.incoming(1)} == {(4, 1)}
    assert H.edge((3, 4)).target == 4


@pytest.mark.parametrize("factory", [crossing_linear, sliding_relay,
                                     bouncing_ball])
def test_scenarios_validate_clean(factory):
    rep = validate_system(factory().system, ValidationConfig())
    assert not rep.hard_failures
    assert rep.entries  # base assumptions were actually sampled
    assert not rep.violations()


def test_validation_report_serializable():
    rep = validate_system(crossing_linear().system)
    d = rep.to_dict()
    assert d["schema_version"] == 1
    assert all({"assumption", "status"} <= set(e) for e in d["entries"])
