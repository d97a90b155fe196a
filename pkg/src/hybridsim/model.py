"""Hybrid dynamical systems: the seven-tuple of modes, edges, domains,
inputs, vector fields, guards and reset maps, plus sample-based checks of
the standing regularity assumptions.

Guards and reset images are subsets of hyperplanes given by unit normals
and offsets, with the sign convention that the guard function is negative
inside the source domain and the image function is positive inside the
target domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import StructuralError

Array = np.ndarray

# central-difference step used wherever an analytic Jacobian is absent
_FD_SCALE = 1e-6


def _fd_jacobian(fn: Callable[[Array], Array], x: Array) -> Array:
    """Central finite-difference Jacobian with step 1e-6*(1+|x_i|)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    f0 = np.asarray(fn(x), dtype=float)
    J = np.empty((f0.size, n))
    for i in range(n):
        h = _FD_SCALE * (1.0 + abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        J[:, i] = (np.asarray(fn(xp)) - np.asarray(fn(xm))) / (2.0 * h)
    return J


@dataclass(frozen=True)
class ModeField:
    """Smooth vector field of one discrete mode, globally defined on R^n."""

    dim: int
    eval: Callable[[Array, Array], Array]
    jacobian_x: Optional[Callable[[Array, Array], Array]] = None

    def __post_init__(self):
        if self.dim <= 0:
            raise StructuralError("mode field dimension must be positive")

    def __call__(self, x: Array, u: Array) -> Array:
        return np.asarray(self.eval(np.asarray(x, float), u), dtype=float)

    def jac(self, x: Array, u: Array) -> Array:
        if self.jacobian_x is not None:
            return np.asarray(self.jacobian_x(x, u), dtype=float)
        return _fd_jacobian(lambda z: self.eval(z, u), x)


@dataclass(frozen=True)
class HyperplaneData:
    """Guard plane (normal, offset) and reset-image plane (normal, offset).

    Normals are normalized on construction; near-zero normals are rejected.
    """

    g_normal: Array
    g_offset: float
    r_normal: Array
    r_offset: float

    def __post_init__(self):
        for name in ("g_normal", "r_normal"):
            v = np.asarray(getattr(self, name), dtype=float)
            norm = float(np.linalg.norm(v))
            if norm < 1e-8:
                raise StructuralError(f"{name} is numerically zero")
            object.__setattr__(self, name, v / norm)
        object.__setattr__(self, "g_offset", float(self.g_offset))
        object.__setattr__(self, "r_offset", float(self.r_offset))

    def guard_value(self, x: Array) -> float:
        return float(self.g_normal @ np.asarray(x, float) - self.g_offset)

    def image_value(self, y: Array) -> float:
        return float(self.r_normal @ np.asarray(y, float) - self.r_offset)


@dataclass(frozen=True)
class ResetMap:
    """Diffeomorphism applied at an edge transition, with its inverse."""

    forward: Callable[[Array], Array]
    inverse: Callable[[Array], Array]
    jacobian: Optional[Callable[[Array], Array]] = None
    inverse_jacobian: Optional[Callable[[Array], Array]] = None

    def __call__(self, x: Array) -> Array:
        return np.asarray(self.forward(np.asarray(x, float)), dtype=float)

    def inv(self, y: Array) -> Array:
        return np.asarray(self.inverse(np.asarray(y, float)), dtype=float)

    def jac(self, x: Array) -> Array:
        if self.jacobian is not None:
            return np.asarray(self.jacobian(x), dtype=float)
        return _fd_jacobian(self.forward, x)

    def inv_jac(self, y: Array) -> Array:
        if self.inverse_jacobian is not None:
            return np.asarray(self.inverse_jacobian(y), dtype=float)
        return _fd_jacobian(self.inverse, y)


def identity_reset(n: int) -> ResetMap:
    eye = np.eye(n)
    return ResetMap(
        forward=lambda x: np.asarray(x, float).copy(),
        inverse=lambda y: np.asarray(y, float).copy(),
        jacobian=lambda x: eye,
        inverse_jacobian=lambda y: eye,
    )


def affine_reset(M: Array, b: Array) -> ResetMap:
    M = np.asarray(M, dtype=float)
    b = np.asarray(b, dtype=float)
    Minv = np.linalg.inv(M)
    return ResetMap(
        forward=lambda x: M @ x + b,
        inverse=lambda y: Minv @ (y - b),
        jacobian=lambda x: M,
        inverse_jacobian=lambda y: Minv,
    )


@dataclass(frozen=True)
class Edge:
    """Directed edge (j, j') with its hyperplane data, reset and guard set."""

    source: object
    target: object
    hyperplanes: HyperplaneData
    reset: ResetMap
    guard_membership: Callable[[Array], bool] = field(default=lambda x: True)

    def key(self):
        return (self.source, self.target)


@dataclass(frozen=True)
class Domain:
    """Mode domain: membership predicate plus a bounding box for sampling."""

    contains: Callable[[Array], bool]
    box_lo: Array
    box_hi: Array

    def __post_init__(self):
        object.__setattr__(self, "box_lo", np.asarray(self.box_lo, dtype=float))
        object.__setattr__(self, "box_hi", np.asarray(self.box_hi, dtype=float))

    def sample(self, rng: np.random.Generator, count: int) -> list[Array]:
        """Rejection-sample up to `count` member points from the box."""
        out = []
        for _ in range(20 * count):
            x = rng.uniform(self.box_lo, self.box_hi)
            if self.contains(x):
                out.append(x)
                if len(out) == count:
                    break
        return out


@dataclass(frozen=True)
class InputBox:
    """Compact input set, a box in R^m (m may be zero)."""

    lo: Array
    hi: Array

    def __post_init__(self):
        object.__setattr__(self, "lo", np.atleast_1d(np.asarray(self.lo, dtype=float)))
        object.__setattr__(self, "hi", np.atleast_1d(np.asarray(self.hi, dtype=float)))

    @property
    def dim(self) -> int:
        return self.lo.size

    def contains(self, u: Array, tol: float = 1e-12) -> bool:
        u = np.atleast_1d(np.asarray(u, float))
        return bool(np.all(u >= self.lo - tol) and np.all(u <= self.hi + tol))

    def sample(self, rng: np.random.Generator, count: int) -> list[Array]:
        if self.dim == 0:
            return [np.zeros(0) for _ in range(count)]
        return [rng.uniform(self.lo, self.hi) for _ in range(count)]


EMPTY_INPUT = InputBox(lo=np.zeros(0), hi=np.zeros(0))


@dataclass(frozen=True)
class HybridSystem:
    """The seven-tuple (modes, edges, domains, inputs, fields, guards, resets).

    Guards and resets live on the edges. Immutable and safe to share across
    threads; evaluation is reentrant.
    """

    modes: tuple
    edges: tuple[Edge, ...]
    domains: dict
    fields: dict
    input_set: InputBox
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "edges", tuple(self.edges))
        mode_set = set(self.modes)
        for e in self.edges:
            if e.source not in mode_set or e.target not in mode_set:
                raise StructuralError(f"edge {e.key()} references unknown mode")
        for j in self.modes:
            if j not in self.domains or j not in self.fields:
                raise StructuralError(f"mode {j!r} lacks a domain or field")
            if self.fields[j].dim != self.dim:
                raise StructuralError(f"field of mode {j!r} has wrong dimension")
        for e in self.edges:
            if e.hyperplanes.g_normal.size != self.dim:
                raise StructuralError(f"edge {e.key()} normal has wrong dimension")

    def outgoing(self, j) -> list[Edge]:
        return [e for e in self.edges if e.source == j]

    def incoming(self, j) -> list[Edge]:
        return [e for e in self.edges if e.target == j]

    def edge(self, key) -> Edge:
        for e in self.edges:
            if e.key() == tuple(key):
                return e
        raise StructuralError(f"no edge {key}")


@dataclass(frozen=True)
class ControlSignal:
    """Piecewise-continuous input u(t) on [0, T], right-continuous at breakpoints."""

    horizon: float
    breakpoints: tuple[float, ...]
    segments: tuple[Callable[[float], Array], ...]

    def __post_init__(self):
        T = float(self.horizon)
        if T <= 0:
            raise StructuralError("control horizon must be positive")
        bps = tuple(float(b) for b in self.breakpoints)
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise StructuralError("breakpoints must be strictly increasing")
        if any(b < 0 or b > T for b in bps):
            raise StructuralError("breakpoints must lie in [0, T]")
        if len(self.segments) != len(bps) + 1:
            raise StructuralError("need exactly len(breakpoints)+1 segments")
        object.__setattr__(self, "horizon", T)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "segments", tuple(self.segments))

    @classmethod
    def constant(cls, value: Array, horizon: float) -> "ControlSignal":
        v = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(horizon=horizon, breakpoints=(), segments=(lambda t: v,))

    def __call__(self, t: float) -> Array:
        return eval_control(self, t)


def eval_control(u: ControlSignal, t: float) -> Array:
    """Evaluate the active segment, right-continuous at breakpoints."""
    t = float(t)
    if t < -1e-12 or t > u.horizon + 1e-12:
        raise ValueError(f"t={t} outside control horizon [0, {u.horizon}]")
    idx = int(np.searchsorted(np.asarray(u.breakpoints), t, side="right"))
    return np.atleast_1d(np.asarray(u.segments[idx](t), dtype=float))


def guard_value(e: Edge, x: Array) -> float:
    """Affine guard function of edge e at x."""
    return e.hyperplanes.guard_value(x)


def eval_field(H: HybridSystem, j, x: Array, u: Array) -> Array:
    """Vector field of mode j at (x, u)."""
    if j not in H.fields:
        raise StructuralError(f"unknown mode {j!r}")
    return H.fields[j](x, u)


# ---------------------------------------------------------------------------
# assumption audit


@dataclass
class ValidationConfig:
    samples: int = 256
    seed: int = 0


@dataclass
class ReportEntry:
    assumption: str
    status: str  # "pass" | "violated" | "info"
    detail: str
    worst: Optional[dict] = None


@dataclass
class ValidationReport:
    entries: list

    def by_assumption(self, name: str) -> list:
        return [e for e in self.entries if e.assumption == name]

    @property
    def hard_failures(self) -> list:
        # structural errors raise before a report exists; kept for symmetry
        return []

    def violations(self) -> list:
        return [e for e in self.entries if e.status == "violated"]

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "entries": [
                {
                    "assumption": e.assumption,
                    "status": e.status,
                    "detail": e.detail,
                    "worst": e.worst,
                }
                for e in self.entries
            ],
        }


def _sample_guard_points(e: Edge, dom: Domain, rng, count: int) -> list[Array]:
    """Points on the guard plane obtained by projecting box samples."""
    hp = e.hyperplanes
    pts = []
    for _ in range(20 * count):
        x = rng.uniform(dom.box_lo, dom.box_hi)
        x = x - hp.g_normal * hp.guard_value(x)
        if e.guard_membership(x):
            pts.append(x)
            if len(pts) == count:
                break
    return pts


def validate_system(H: HybridSystem, config: ValidationConfig | None = None) -> ValidationReport:
    """Audit the standing assumptions by sampling.

    Assumption violations become report entries; only structural problems
    raise (and those are caught at construction time already).
    """
    cfg = config or ValidationConfig()
    rng = np.random.default_rng(cfg.seed)
    entries: list[ReportEntry] = []

    # Lipschitz estimates (smoothness assumption): reported, never pass/fail
    for j in H.modes:
        dom = H.domains[j]
        f = H.fields[j]
        us = H.input_set.sample(rng, 8) or [np.zeros(0)]
        best = 0.0
        prev = 0.0
        growing = False
        xs = dom.sample(rng, cfg.samples)
        for half in (xs[: len(xs) // 2], xs):
            est = 0.0
            for x in half:
                dx = rng.standard_normal(H.dim)
                dx *= 1e-4 / (np.linalg.norm(dx) + 1e-300)
                for u in us[:2]:
                    df = f(x + dx, u) - f(x, u)
                    est = max(est, float(np.linalg.norm(df) / np.linalg.norm(dx)))
            prev, best = best, est
        growing = best > 1.5 * prev and prev > 0
        entries.append(
            ReportEntry(
                assumption="lipschitz",
                status="info",
                detail=f"mode {j!r}: Lipschitz estimate {best:.6g}"
                + (" (still growing with sample count)" if growing else ""),
                worst={"mode": j, "estimate": best, "growing": growing},
            )
        )

    # guard / reset-image sign conventions
    for e in H.edges:
        hp = e.hyperplanes
        worst_g = -np.inf
        witness = None
        for x in H.domains[e.source].sample(rng, cfg.samples):
            g = hp.guard_value(x)
            if abs(g) <= 1e-10:
                continue
            if g > worst_g:
                worst_g, witness = g, x
        ok_g = worst_g <= 1e-10
        worst_r = np.inf
        witness_r = None
        for y in H.domains[e.target].sample(rng, cfg.samples):
            r = hp.image_value(y)
            if abs(r) <= 1e-10:
                continue
            if r < worst_r:
                worst_r, witness_r = r, y
        ok_r = worst_r >= -1e-10
        entries.append(
            ReportEntry(
                assumption="sign_convention",
                status="pass" if (ok_g and ok_r) else "violated",
                detail=f"edge {e.key()}: max g over D_source = {worst_g:.3g}, "
                f"min r over D_target = {worst_r:.3g}",
                worst={
                    "edge": e.key(),
                    "guard_witness": None if witness is None else witness.tolist(),
                    "image_witness": None if witness_r is None else witness_r.tolist(),
                },
            )
        )

    # reset invertibility and Jacobian conditioning
    for e in H.edges:
        pts = _sample_guard_points(e, H.domains[e.source], rng, min(cfg.samples, 100))
        worst_rt = 0.0
        worst_sv = np.inf
        for x in pts:
            y = e.reset(x)
            back = e.reset.inv(y)
            rt = float(np.linalg.norm(back - x) / (1.0 + np.linalg.norm(x)))
            worst_rt = max(worst_rt, rt)
            sv = float(np.linalg.svd(e.reset.jac(x), compute_uv=False)[-1])
            worst_sv = min(worst_sv, sv)
        ok = worst_rt <= 1e-9 and worst_sv > 1e-8
        entries.append(
            ReportEntry(
                assumption="reset_diffeomorphism",
                status="pass" if ok else "violated",
                detail=f"edge {e.key()}: worst round-trip {worst_rt:.3g}, "
                f"min singular value {worst_sv:.3g} over {len(pts)} guard samples",
                worst={"edge": e.key(), "round_trip": worst_rt, "min_sv": worst_sv},
            )
        )

    # pairwise disjointness of guards and reset images within each mode.
    # (a guard of one mode and an image plane of another never meet on the
    # quotient even if their coordinates coincide)
    surfaces = []
    for e in H.edges:
        pts = _sample_guard_points(e, H.domains[e.source], rng, min(cfg.samples, 64))
        surfaces.append((f"G{e.key()}", e.source,
                         e.hyperplanes.g_normal, e.hyperplanes.g_offset, pts))
        surfaces.append((f"R{e.key()}", e.target,
                         e.hyperplanes.r_normal, e.hyperplanes.r_offset,
                         [e.reset(x) for x in pts]))
    for i in range(len(surfaces)):
        for k in range(i + 1, len(surfaces)):
            na, ma, nna, ca, pa = surfaces[i]
            nb, mb, nnb, cb, pb = surfaces[k]
            if ma != mb or not pa or not pb:
                continue
            coincident = (np.allclose(nna, nnb, atol=1e-12)
                          and abs(ca - cb) <= 1e-12) or \
                         (np.allclose(nna, -nnb, atol=1e-12)
                          and abs(ca + cb) <= 1e-12)
            if coincident:
                # a reverse-edge pair describing the same glued surface
                entries.append(
                    ReportEntry(
                        assumption="disjoint_surfaces",
                        status="warn",
                        detail=f"{na} and {nb} are the same plane of mode "
                        f"{ma} (glued surface seen from both sides)",
                        worst={"pair": (na, nb), "min_distance": 0.0},
                    )
                )
                continue
            A = np.asarray(pa)
            B = np.asarray(pb)
            d2 = ((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=2)
            dmin = float(np.sqrt(d2.min()))
            if dmin < 1e-9:
                entries.append(
                    ReportEntry(
                        assumption="disjoint_surfaces",
                        status="violated",
                        detail=f"{na} and {nb} intersect in mode {ma} "
                        f"(sampled min distance {dmin:.3g})",
                        worst={"pair": (na, nb), "min_distance": dmin},
                    )
                )
    if not any(x.assumption == "disjoint_surfaces" for x in entries):
        entries.append(
            ReportEntry(
                assumption="disjoint_surfaces",
                status="pass",
                detail="all sampled guard/reset-image pairs are disjoint",
            )
        )

    # boundary coverage: not checkable from predicates
    pieces = [f"G{e.key()}" for e in H.edges] + [f"R{e.key()}" for e in H.edges]
    entries.append(
        ReportEntry(
            assumption="boundary_coverage",
            status="info",
            detail="not checkable from membership predicates; declared boundary "
            "pieces: " + (", ".join(pieces) if pieces else "(none)"),
        )
    )
    return ValidationReport(entries=entries)
