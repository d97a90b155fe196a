"""Epsilon-sweep harness: spec validation, slopes, degenerate handling."""

import numpy as np
import pytest

from hybridsim import (SweepSpec, TransversalityViolation, get_scenario,
                       load_scenario, repelling_relay, run_sweep)


def test_spec_rejects_bad_epsilon_lists():
    with pytest.raises(ValueError):
        SweepSpec(epsilons=(1e-1, 1e-2))            # too few
    with pytest.raises(ValueError):
        SweepSpec(epsilons=(1e-2, 1e-1, 1e-3))      # not decreasing
    with pytest.raises(ValueError):
        SweepSpec(epsilons=(1e-1, 1e-2, -1e-3))     # negative
    with pytest.raises(ValueError):
        SweepSpec(reference="other")


def test_crossing_sweep_slope_near_one():
    rep = run_sweep(get_scenario("crossing_linear"),
                    SweepSpec(epsilons=(1e-1, 3e-2, 1e-2), sample_count=400))
    assert rep.slope >= 0.9
    assert all(b < a for a, b in zip(rep.errors, rep.errors[1:]))
    assert len(rep.cauchy) == 2


def test_filippov_reference_requires_transversality():
    with pytest.raises(TransversalityViolation):
        run_sweep(repelling_relay(), SweepSpec(epsilons=(1e-1, 3e-2, 1e-2)))


def test_finest_eps_reference_is_cauchy():
    rep = run_sweep(repelling_relay(),
                    SweepSpec(epsilons=(1e-1, 3e-2, 1e-2, 3e-3),
                              reference="finest-eps", sample_count=400))
    assert rep.reference == "finest-eps"
    assert all(b < a for a, b in zip(rep.errors, rep.errors[1:]))
    assert all(b < a for a, b in zip(rep.cauchy, rep.cauchy[1:]))


DEGENERATE = {
    "schema_version": 1, "name": "degenerate_equal", "dim": 2,
    "modes": [1, 2],
    "domains": {"1": {"box_lo": [-5, -5], "box_hi": [5, 0],
                      "halfspaces": [{"normal": [0, 1], "offset": 0.0}]},
                "2": {"box_lo": [-5, 0], "box_hi": [5, 5],
                      "halfspaces": [{"normal": [0, -1], "offset": 0.0}]}},
    "fields": {"1": {"kind": "constant", "value": [1.0, 1.0]},
               "2": {"kind": "constant", "value": [1.0, 1.0]}},
    "edges": [{"source": 1, "target": 2, "g_normal": [0, 1], "g_offset": 0.0,
               "r_normal": [0, 1], "r_offset": 0.0,
               "reset": {"kind": "identity"}}],
    "x0": {"mode": 1, "coords": [0.0, -0.5]}, "T": 1.0,
}


def test_equal_fields_hit_noise_floor_and_skip_fit():
    rep = run_sweep(load_scenario(DEGENERATE),
                    SweepSpec(epsilons=(1e-1, 1e-2, 1e-3), sample_count=400))
    assert max(rep.errors) <= 1e-12
    assert rep.slope is None
    assert any("skip" in n for n in rep.notes)


def test_report_dict_schema():
    rep = run_sweep(get_scenario("crossing_linear"),
                    SweepSpec(epsilons=(1e-1, 3e-2, 1e-2), sample_count=200))
    d = rep.to_dict()
    assert set(d) >= {"scenario", "epsilons", "errors", "cauchy", "slope",
                      "reference", "notes"}
    assert len(d["errors"]) == len(d["epsilons"])


def test_sweep_deterministic():
    spec = SweepSpec(epsilons=(1e-1, 3e-2, 1e-2), sample_count=300)
    a = run_sweep(get_scenario("crossing_affine"), spec)
    b = run_sweep(get_scenario("crossing_affine"), spec)
    assert a.errors == b.errors
    assert a.slope == b.slope
