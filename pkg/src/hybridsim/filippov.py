"""Filippov's solution concept for bimodal piecewise-smooth fields:
set-valued regularization, classification of surface points, the sliding
vector field, and the transversality audit for hybrid systems.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .charts import attach_jacobian, attach_map, pullback_field, surface_band
from .model import Edge, HybridSystem, ValidationConfig, _sample_guard_points

Array = np.ndarray

RATE_ZERO_TOL = 1e-9  # relative to |f1| + |f2|


class CellKind(enum.Enum):
    INTERIOR = "Interior"
    CROSSING_FORWARD = "CrossingForward"
    CROSSING_BACKWARD = "CrossingBackward"
    ATTRACTING_SLIDING = "AttractingSliding"
    REPELLING_SLIDING = "RepellingSliding"
    TANGENT_DEGENERATE = "TangentDegenerate"


@dataclass(frozen=True)
class FilippovCell:
    kind: CellKind
    normal_rates: tuple[float, float]
    sliding_alpha: Optional[float] = None


@dataclass(frozen=True)
class SetDescriptor:
    """Filippov set at a point: a singleton or the segment between f1 and f2."""

    vertices: tuple

    @property
    def is_singleton(self) -> bool:
        return len(self.vertices) == 1

    def distance(self, v: Array) -> float:
        """Euclidean distance from v to the segment (or point)."""
        a = np.asarray(self.vertices[0], float)
        v = np.asarray(v, float)
        if self.is_singleton:
            return float(np.linalg.norm(v - a))
        b = np.asarray(self.vertices[1], float)
        ab = b - a
        denom = float(ab @ ab)
        if denom < 1e-300:
            return float(np.linalg.norm(v - a))
        s = float(np.clip((v - a) @ ab / denom, 0.0, 1.0))
        return float(np.linalg.norm(v - (a + s * ab)))

    def contains(self, v: Array, tol: float = 1e-9) -> bool:
        return self.distance(v) <= tol


def filippov_set(f1: Array, f2: Array, on_surface: bool) -> SetDescriptor:
    """Filippov regularization of a bimodal field at a point.

    Off the surface this is the singleton of the active branch (pass it as
    f1); on the surface it is the closed segment between the two limits.
    """
    f1 = np.asarray(f1, dtype=float)
    if not on_surface:
        return SetDescriptor(vertices=(f1,))
    f2 = np.asarray(f2, dtype=float)
    return SetDescriptor(vertices=(f1, f2))


def classify_rates(r1: float, r2: float, scale: float) -> FilippovCell:
    """Classification from the two normal rates grad(g).f_i with a zero band
    of RATE_ZERO_TOL*scale."""
    tol = RATE_ZERO_TOL * max(scale, 1e-300)
    s1 = 0 if abs(r1) <= tol else (1 if r1 > 0 else -1)
    s2 = 0 if abs(r2) <= tol else (1 if r2 > 0 else -1)
    rates = (float(r1), float(r2))
    if s1 == 0 and s2 == 0:
        return FilippovCell(kind=CellKind.TANGENT_DEGENERATE, normal_rates=rates)
    if s1 >= 0 and s2 >= 0:
        return FilippovCell(kind=CellKind.CROSSING_FORWARD, normal_rates=rates)
    if s1 <= 0 and s2 <= 0:
        return FilippovCell(kind=CellKind.CROSSING_BACKWARD, normal_rates=rates)
    if s1 > 0 and s2 < 0:
        alpha = r1 / (r1 - r2)
        return FilippovCell(kind=CellKind.ATTRACTING_SLIDING, normal_rates=rates,
                            sliding_alpha=float(alpha))
    # s1 < 0 and s2 > 0
    alpha = r1 / (r1 - r2)
    return FilippovCell(kind=CellKind.REPELLING_SLIDING, normal_rates=rates,
                        sliding_alpha=float(alpha))


def classify(H: HybridSystem, e: Edge, x: Array, u: Array,
             surface_tol: float = None) -> FilippovCell:
    """Classify a chart point of edge e.

    Off the surface the point is Interior; on it, the sign table of the two
    normal rates decides between crossing, sliding and degeneracy.
    """
    x = np.asarray(x, dtype=float)
    g = e.hyperplanes.guard_value(x)
    band = surface_band(x) if surface_tol is None else surface_tol * (1.0 + np.linalg.norm(x))
    if abs(g) > band:
        return FilippovCell(kind=CellKind.INTERIOR, normal_rates=(np.nan, np.nan))
    xs = x - e.hyperplanes.g_normal * g  # snap to the plane
    f1 = H.fields[e.source](xs, u)
    f2 = pullback_field(H, e, xs, u)
    r1 = float(e.hyperplanes.g_normal @ f1)
    r2 = float(e.hyperplanes.g_normal @ f2)
    scale = float(np.linalg.norm(f1) + np.linalg.norm(f2))
    return classify_rates(r1, r2, scale)


def sliding_field(f1: Array, f2: Array, grad_g: Array) -> tuple[Array, float]:
    """Filippov sliding field on an attracting segment.

    alpha = grad(g).f1 / grad(g).(f1 - f2); the returned convex combination
    is tangent to the surface.
    """
    from .errors import DivisionDegenerate

    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    grad_g = np.asarray(grad_g, dtype=float)
    r1 = float(grad_g @ f1)
    r2 = float(grad_g @ f2)
    denom = r1 - r2
    if abs(denom) < 1e-14:
        raise DivisionDegenerate("normal rates are equal; sliding coefficient undefined")
    alpha = r1 / denom
    fs = (1.0 - alpha) * f1 + alpha * f2
    return fs, float(alpha)


@dataclass
class TransversalityEntry:
    edge: tuple
    samples: int
    violations: int
    margin: float
    witnesses: list


@dataclass
class TransversalityReport:
    entries: list

    @property
    def ok(self) -> bool:
        return all(e.violations == 0 for e in self.entries)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "ok": self.ok,
            "entries": [
                {
                    "edge": list(e.edge),
                    "samples": e.samples,
                    "violations": e.violations,
                    "margin": e.margin,
                    "witnesses": e.witnesses[:10],
                }
                for e in self.entries
            ],
        }


def check_transversality(H: HybridSystem, config: ValidationConfig | None = None) -> TransversalityReport:
    """Sample each guard and report violations of the hybrid transversality
    disjunction: g_hat.f_source(x,u) > 0 or r_hat.f_target(R(x),u) < 0."""
    cfg = config or ValidationConfig()
    rng = np.random.default_rng(cfg.seed)
    entries = []
    for e in H.edges:
        pts = _sample_guard_points(e, H.domains[e.source], rng, cfg.samples)
        us = H.input_set.sample(rng, max(1, min(cfg.samples, 16)))
        violations = 0
        margin = np.inf
        witnesses = []
        count = 0
        for x in pts:
            for u in us:
                count += 1
                a = float(e.hyperplanes.g_normal @ H.fields[e.source](x, u))
                b = float(e.hyperplanes.r_normal @ H.fields[e.target](e.reset(x), u))
                m = max(a, -b)  # disjunction margin: need a > 0 or b < 0
                margin = min(margin, m)
                if m <= 0:
                    violations += 1
                    if len(witnesses) < 10:
                        witnesses.append({"x": np.asarray(x).tolist(),
                                          "u": np.asarray(u).tolist(),
                                          "rates": [a, b]})
        entries.append(TransversalityEntry(
            edge=e.key(), samples=count, violations=violations,
            margin=float(margin) if count else np.nan, witnesses=witnesses))
    return TransversalityReport(entries=entries)
