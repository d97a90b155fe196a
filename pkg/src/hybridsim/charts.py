"""Per-edge coordinate charts for the hybrid quotient space.

Each edge (j, j') gets a chart whose coordinates extend mode j's copy of
R^n across the guard plane: the target domain is pulled back through the
attach map

    attach(x) = R(p(x)) + r_hat * g(x),      p(x) = x - g_hat * g(x),

which splits x into its projection onto the guard plane (mapped by the
reset) and its signed distance to the plane (transferred to the image
plane's normal direction). The closed-form inverse is

    attach_inv(y) = R^{-1}(y - r_hat * r(y)) + g_hat * r(y).

Relaxed charts insert an epsilon-thick strip behind the guard plane; the
relaxed attach map equals the unrelaxed one evaluated at x - g_hat*eps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ChartSingular, NotInOverlap, OnDiscontinuity, OutsideChart
from .model import Edge, HybridSystem, _fd_jacobian

Array = np.ndarray

SURFACE_TOL = 1e-9  # relative band treated as "on the discontinuity"
_SINGULAR_TOL = 1e-10


def surface_band(x: Array, tol: float = SURFACE_TOL) -> float:
    return tol * (1.0 + float(np.linalg.norm(x)))


def project_guard(e: Edge, x: Array) -> Array:
    """Euclidean projection onto the guard plane of e."""
    x = np.asarray(x, dtype=float)
    hp = e.hyperplanes
    return x - hp.g_normal * hp.guard_value(x)


def attach_map(e: Edge, x: Array) -> Array:
    """Glue map taking chart coordinates to target-mode coordinates."""
    x = np.asarray(x, dtype=float)
    hp = e.hyperplanes
    g = hp.guard_value(x)
    return e.reset(x - hp.g_normal * g) + hp.r_normal * g


def attach_map_inverse(e: Edge, y: Array) -> Array:
    """Closed-form inverse of the attach map."""
    y = np.asarray(y, dtype=float)
    hp = e.hyperplanes
    r = hp.image_value(y)
    return e.reset.inv(y - hp.r_normal * r) + hp.g_normal * r


def attach_jacobian(e: Edge, x: Array) -> Array:
    """Jacobian of the attach map: DR(p(x)) (I - g g^T) + r g^T."""
    hp = e.hyperplanes
    p = project_guard(e, x)
    n = p.size
    G = np.outer(hp.g_normal, hp.g_normal)
    J = e.reset.jac(p) @ (np.eye(n) - G) + np.outer(hp.r_normal, hp.g_normal)
    return J


def _solve_attach(J: Array, rhs: Array, where: str) -> Array:
    # LU with partial pivoting; reject near-singular charts
    sv = np.linalg.svd(J, compute_uv=False)
    if sv[-1] < _SINGULAR_TOL * max(1.0, sv[0]):
        raise ChartSingular(f"attach Jacobian singular at {where}")
    return np.linalg.solve(J, rhs)


def pullback_field(H: HybridSystem, e: Edge, x: Array, u: Array) -> Array:
    """Target-mode field expressed in chart coordinates (Jacobian pullback)."""
    y = attach_map(e, x)
    fy = H.fields[e.target](y, u)
    J = attach_jacobian(e, x)
    return _solve_attach(J, fy, f"edge {e.key()}, x={x}")


def source_field(H: HybridSystem, e: Edge, x: Array, u: Array) -> Array:
    return H.fields[e.source](x, u)


def local_field(H: HybridSystem, e: Edge, x: Array, u: Array,
                surface_tol: float = SURFACE_TOL) -> Array:
    """Chart representation of the hybrid vector field, off the glued surface."""
    x = np.asarray(x, dtype=float)
    g = e.hyperplanes.guard_value(x)
    if abs(g) < surface_band(x, surface_tol):
        raise OnDiscontinuity(f"x on the glued surface of edge {e.key()} (g={g:.3g})")
    if g < 0:
        if not H.domains[e.source].contains(x):
            raise OutsideChart(f"x not in the local domain of edge {e.key()}")
        return source_field(H, e, x, u)
    if not H.domains[e.target].contains(attach_map(e, x)):
        raise OutsideChart(f"x not in the local domain of edge {e.key()}")
    return pullback_field(H, e, x, u)


@dataclass(frozen=True)
class EdgeChart:
    """Bundled chart callables for one edge. Immutable and reentrant."""

    system: HybridSystem
    edge: Edge

    def guard_value(self, x: Array) -> float:
        return self.edge.hyperplanes.guard_value(x)

    def project(self, x: Array) -> Array:
        return project_guard(self.edge, x)

    def attach(self, x: Array) -> Array:
        return attach_map(self.edge, x)

    def attach_inverse(self, y: Array) -> Array:
        return attach_map_inverse(self.edge, y)

    def attach_jac(self, x: Array) -> Array:
        return attach_jacobian(self.edge, x)

    def source_field(self, x: Array, u: Array) -> Array:
        return source_field(self.system, self.edge, x, u)

    def pullback(self, x: Array, u: Array) -> Array:
        return pullback_field(self.system, self.edge, x, u)

    def local_field(self, x: Array, u: Array) -> Array:
        return local_field(self.system, self.edge, x, u)

    def local_domain_membership(self, x: Array) -> bool:
        g = self.guard_value(x)
        band = surface_band(x)
        if g < -band:
            return self.system.domains[self.edge.source].contains(x)
        if g > band:
            return self.system.domains[self.edge.target].contains(self.attach(x))
        return self.edge.guard_membership(self.project(x))


@dataclass(frozen=True)
class RelaxedEdgeChart:
    """Chart for the relaxed quotient space with an epsilon-thick strip."""

    system: HybridSystem
    edge: Edge
    epsilon: float

    def guard_value(self, x: Array) -> float:
        return self.edge.hyperplanes.guard_value(x)

    def relaxed_guard_value(self, x: Array) -> float:
        return self.guard_value(x) - self.epsilon

    def project(self, x: Array) -> Array:
        hp = self.edge.hyperplanes
        return np.asarray(x, float) - hp.g_normal * self.relaxed_guard_value(x)

    def attach(self, x: Array) -> Array:
        hp = self.edge.hyperplanes
        return attach_map(self.edge, np.asarray(x, float) - hp.g_normal * self.epsilon)

    def attach_inverse(self, y: Array) -> Array:
        hp = self.edge.hyperplanes
        return attach_map_inverse(self.edge, y) + hp.g_normal * self.epsilon

    def attach_jac(self, x: Array) -> Array:
        hp = self.edge.hyperplanes
        return attach_jacobian(self.edge, np.asarray(x, float) - hp.g_normal * self.epsilon)

    def pullback(self, x: Array, u: Array) -> Array:
        """Relaxed pullback of the target field into chart coordinates."""
        y = self.attach(x)
        fy = self.system.fields[self.edge.target](y, u)
        return _solve_attach(self.attach_jac(x), fy, f"relaxed edge {self.edge.key()}")

    def source_field(self, x: Array, u: Array) -> Array:
        return self.system.fields[self.edge.source](x, u)

    def strip_membership(self, x: Array) -> bool:
        g = self.guard_value(x)
        if g < -1e-12 or g > self.epsilon + 1e-12:
            return False
        return self.edge.guard_membership(project_guard(self.edge, x))

    def local_domain_membership(self, x: Array) -> bool:
        g = self.guard_value(x)
        if g <= 0:
            return self.system.domains[self.edge.source].contains(x)
        if g <= self.epsilon:
            return self.strip_membership(x)
        return self.system.domains[self.edge.target].contains(self.attach(x))


def build_chart(H: HybridSystem, e: Edge) -> EdgeChart:
    return EdgeChart(system=H, edge=e)


def build_relaxed_chart(e_or_chart, epsilon: float, H: Optional[HybridSystem] = None) -> RelaxedEdgeChart:
    """Relaxed variant of an edge chart for a given epsilon > 0."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if isinstance(e_or_chart, EdgeChart):
        return RelaxedEdgeChart(system=e_or_chart.system, edge=e_or_chart.edge, epsilon=float(epsilon))
    if H is None:
        raise ValueError("pass the hybrid system when building from a bare edge")
    return RelaxedEdgeChart(system=H, edge=e_or_chart, epsilon=float(epsilon))


def global_representative(chart: EdgeChart, x: Array):
    """Canonical (mode, point) pair of a chart coordinate.

    Points on the glued surface are canonicalized to the source mode.
    """
    g = chart.guard_value(x)
    if g <= surface_band(x):
        return chart.edge.source, np.asarray(x, float)
    return chart.edge.target, chart.attach(x)


def chart_transition(from_chart: EdgeChart, to_chart: EdgeChart, x: Array) -> Array:
    """Coordinates of the same quotient point in the destination chart."""
    mode, y = global_representative(from_chart, x)
    dst = to_chart.edge
    if mode == dst.source:
        return y
    if mode == dst.target:
        return to_chart.attach_inverse(y)
    # a surface point also represents the target mode through the reset
    if abs(from_chart.guard_value(x)) <= surface_band(x):
        y2 = from_chart.attach(x)
        if from_chart.edge.target == dst.source:
            return y2
        if from_chart.edge.target == dst.target:
            return to_chart.attach_inverse(y2)
    raise NotInOverlap(
        f"point of mode {mode!r} is not covered by chart {dst.key()}"
    )


def sampled_roundtrip_error(chart: EdgeChart, rng: np.random.Generator, count: int = 100) -> float:
    """Worst relative attach round-trip error over box samples (debug aid)."""
    lo = chart.system.domains[chart.edge.source].box_lo
    hi = chart.system.domains[chart.edge.source].box_hi
    worst = 0.0
    for _ in range(count):
        x = rng.uniform(lo, hi)
        back = chart.attach_inverse(chart.attach(x))
        worst = max(worst, float(np.linalg.norm(back - x) / (1.0 + np.linalg.norm(x))))
    return worst
