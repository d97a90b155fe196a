"""Epsilon-convergence sweeps.

A sweep runs the relaxed simulator at a decreasing sequence of layer widths
and measures the sup-distance (in the quotient metric, on a dense time grid
augmented with event times) against a reference trajectory.  The reference
is either the exact switched solution (``filippov``) or the finest-epsilon
run (``finest-eps``), the latter serving as a reference-free Cauchy check
for systems without a unique sliding solution.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import TransversalityViolation
from .filippov import check_transversality
from .model import ValidationConfig
from .scenarios import Scenario
from .sim import Trajectory, quotient_distance, simulate_filippov, simulate_relaxed

__all__ = ["SweepSpec", "SweepReport", "run_sweep", "sup_distance"]

# Errors below this are indistinguishable from integrator noise; slope
# fitting on them would measure roundoff, not the layer width.
_DEGENERATE_FLOOR = 1e-12


@dataclass(frozen=True)
class SweepSpec:
    """Parameters of an epsilon-convergence sweep.

    epsilons must be strictly decreasing and hold at least three values so
    a log-log slope can be fitted.  reference selects the trajectory the
    relaxed runs are compared against.
    """

    epsilons: tuple = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
    reference: str = "filippov"
    sample_count: int = 2000

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        object.__setattr__(self, "epsilons", eps)
        if len(eps) < 3:
            raise ValueError("need at least 3 epsilon values for a slope fit")
        if any(e <= 0 for e in eps):
            raise ValueError("epsilons must be positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("epsilons must be strictly decreasing")
        if self.reference not in ("filippov", "finest-eps"):
            raise ValueError("reference must be 'filippov' or 'finest-eps'")
        if self.sample_count < 2:
            raise ValueError("sample_count must be at least 2")


@dataclass
class SweepReport:
    scenario: str
    epsilons: list
    errors: list            # sup-distance to the reference, one per epsilon
    cauchy: list            # sup-distance between consecutive-epsilon runs
    slope: float | None     # least-squares slope of log(err) vs log(eps)
    intercept: float | None
    reference: str
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "epsilons": list(self.epsilons),
            "errors": list(self.errors),
            "cauchy": list(self.cauchy),
            "slope": self.slope,
            "intercept": self.intercept,
            "reference": self.reference,
            "notes": list(self.notes),
        }


def sup_distance(H, a: Trajectory, b: Trajectory, T: float,
                 sample_count: int = 2000, eps: float = 0.0) -> float:
    """Sup of the quotient distance over a uniform grid plus event times."""
    ts = set(np.linspace(0.0, T, sample_count))
    for tr in (a, b):
        ts.update(t for t in tr.event_times() if 0.0 <= t <= T)
    worst = 0.0
    for t in sorted(ts):
        d = quotient_distance(H, a.sample(t), b.sample(t), eps=eps)
        if d > worst:
            worst = d
    return worst


def run_sweep(scenario: Scenario, spec: SweepSpec, config=None,
              u=None, T=None, transition=None, parallel: bool = True) -> SweepReport:
    """Run the epsilon sweep described by `spec` on `scenario`.

    When the reference is the exact switched solution the guard-crossing
    transversality check is run first and a violation aborts the sweep;
    the finest-eps reference makes no such demand.
    """
    H = scenario.system
    if T is None:
        T = scenario.default_T
    x0 = scenario.default_x0
    if u is None:
        u = scenario.default_u
    notes: list[str] = []

    if spec.reference == "filippov":
        rep = check_transversality(H, ValidationConfig())
        if not rep.ok:
            raise TransversalityViolation(
                f"scenario '{scenario.name}' fails the transversality check; "
                "rerun the sweep with reference='finest-eps'")
        reference = simulate_filippov(H, x0, u=u, T=T, config=config)

    def one(eps):
        return simulate_relaxed(H, eps, x0, u=u, T=T, config=config,
                                transition=transition)

    if parallel:
        with ThreadPoolExecutor(max_workers=min(8, len(spec.epsilons))) as ex:
            runs = list(ex.map(one, spec.epsilons))
    else:
        runs = [one(e) for e in spec.epsilons]

    if spec.reference == "finest-eps":
        reference = runs[-1]
        compare = list(zip(spec.epsilons[:-1], runs[:-1]))
    else:
        compare = list(zip(spec.epsilons, runs))

    errors = [sup_distance(H, reference, tr, T, spec.sample_count, eps=e)
              for e, tr in compare]
    cauchy = [sup_distance(H, a, b, T, spec.sample_count, eps=eb)
              for (_, a), (eb, b) in zip(zip(spec.epsilons, runs),
                                         list(zip(spec.epsilons, runs))[1:])]

    eps_used = [e for e, _ in compare]
    if max(errors) <= _DEGENERATE_FLOOR:
        slope = intercept = None
        notes.append("errors at integrator noise floor; slope fit skipped")
    else:
        A = np.vstack([np.log(eps_used), np.ones(len(eps_used))]).T
        coef, *_ = np.linalg.lstsq(A, np.log(np.maximum(errors, 1e-300)),
                                   rcond=None)
        slope, intercept = float(coef[0]), float(coef[1])

    return SweepReport(scenario=scenario.name, epsilons=eps_used,
                       errors=errors, cauchy=cauchy, slope=slope,
                       intercept=intercept, reference=spec.reference,
                       notes=notes)
