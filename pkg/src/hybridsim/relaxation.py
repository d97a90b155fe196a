"""Transition functions and epsilon-relaxed vector fields.

The bimodal relaxation blends two mode fields across the band
-eps <= g(x) <= eps using a symmetric transition function; the hybrid
relaxation blends a source field with the relaxed pullback across the strip
0 <= g(x) <= eps using a hybrid transition function. Outside the band/strip
the blend weight is exactly 0 or 1, so the relaxed field equals the smooth
branch bit-for-bit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .charts import RelaxedEdgeChart
from .errors import OutsideChart

Array = np.ndarray


class TransitionKind(enum.Enum):
    SMOOTH_EXP = "smooth-exp"
    POLY_C2 = "poly-c2"
    POLY_C4 = "poly-c4"


class TransitionVariant(enum.Enum):
    SYMMETRIC = "symmetric"  # ramps over (-1, 1)
    HYBRID = "hybrid"        # ramps over (0, 1)


def _bump_quotient(s: float) -> float:
    # C-infinity ramp on (0, 1): B(s) / (B(s) + B(1-s)), B(t) = exp(-1/t)
    if s <= 0.0:
        return 0.0
    if s >= 1.0:
        return 1.0
    a = math.exp(-1.0 / s)
    b = math.exp(-1.0 / (1.0 - s))
    return a / (a + b)


def _smoothstep_c2(s: float) -> float:
    # quintic smoothstep: C^2 at the endpoints only
    if s <= 0.0:
        return 0.0
    if s >= 1.0:
        return 1.0
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s))


def _smoothstep_c4(s: float) -> float:
    # ninth-order smoothstep: C^4 at the endpoints
    if s <= 0.0:
        return 0.0
    if s >= 1.0:
        return 1.0
    return s ** 5 * (126.0 + s * (-420.0 + s * (540.0 + s * (-315.0 + 70.0 * s))))


_RAMPS = {
    TransitionKind.SMOOTH_EXP: _bump_quotient,
    TransitionKind.POLY_C2: _smoothstep_c2,
    TransitionKind.POLY_C4: _smoothstep_c4,
}


@dataclass(frozen=True)
class TransitionFunction:
    """Monotone ramp from 0 to 1 over the transition interval.

    The symmetric variant ramps over (-1, 1), the hybrid variant over (0, 1).
    Only the smooth-exp kind meets the C-infinity requirement; the polynomial
    kinds trade smoothness at the endpoints for evaluation speed.
    """

    kind: TransitionKind
    variant: TransitionVariant
    eval: Callable[[float], float]

    def __call__(self, a: float) -> float:
        return self.eval(a)


def make_transition(kind: TransitionKind | str = TransitionKind.SMOOTH_EXP,
                    variant: TransitionVariant | str = TransitionVariant.SYMMETRIC) -> TransitionFunction:
    kind = TransitionKind(kind)
    variant = TransitionVariant(variant)
    ramp = _RAMPS[kind]
    if variant is TransitionVariant.SYMMETRIC:
        def ev(a: float, _ramp=ramp) -> float:
            return _ramp((float(a) + 1.0) * 0.5)
    else:
        def ev(a: float, _ramp=ramp) -> float:
            return _ramp(float(a))
    return TransitionFunction(kind=kind, variant=variant, eval=ev)


def relaxed_bimodal_field(f1: Callable[[Array, Array], Array],
                          f2: Callable[[Array, Array], Array],
                          g_normal: Array, g_offset: float,
                          phi: TransitionFunction, eps: float,
                          x: Array, u: Array) -> Array:
    """Epsilon-relaxation of a bimodal piecewise-smooth field.

    Returns f1 exactly for g(x) <= -eps, f2 exactly for g(x) >= eps, and the
    convex combination (1 - phi(g/eps)) f1 + phi(g/eps) f2 inside the band.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if phi.variant is not TransitionVariant.SYMMETRIC:
        raise ValueError("bimodal relaxation uses the symmetric variant")
    x = np.asarray(x, dtype=float)
    g = float(np.asarray(g_normal, float) @ x - g_offset)
    if g <= -eps:
        return np.asarray(f1(x, u), dtype=float)
    if g >= eps:
        return np.asarray(f2(x, u), dtype=float)
    w = phi(g / eps)
    if w == 0.0:
        return np.asarray(f1(x, u), dtype=float)
    if w == 1.0:
        return np.asarray(f2(x, u), dtype=float)
    return (1.0 - w) * np.asarray(f1(x, u), float) + w * np.asarray(f2(x, u), float)


def relaxed_local_field(chart: RelaxedEdgeChart, phi: TransitionFunction,
                        x: Array, u: Array, check_domain: bool = False) -> Array:
    """Hybrid epsilon-relaxed field of one edge chart.

    Equals the source field exactly for g <= 0, the relaxed pullback exactly
    for g >= eps, and blends with weight phi(g/eps) on the strip.
    """
    if phi.variant is not TransitionVariant.HYBRID:
        raise ValueError("hybrid relaxation uses the hybrid variant")
    x = np.asarray(x, dtype=float)
    if check_domain and not chart.local_domain_membership(x):
        raise OutsideChart(f"x outside relaxed local domain of edge {chart.edge.key()}")
    g = chart.guard_value(x)
    eps = chart.epsilon
    if g <= 0.0:
        return chart.source_field(x, u)
    if g >= eps:
        return chart.pullback(x, u)
    w = phi(g / eps)
    if w == 0.0:
        return chart.source_field(x, u)
    if w == 1.0:
        return chart.pullback(x, u)
    return (1.0 - w) * chart.source_field(x, u) + w * chart.pullback(x, u)
