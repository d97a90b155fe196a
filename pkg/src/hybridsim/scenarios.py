"""Built-in hybrid systems covering every qualitative regime.

Each scenario packs a HybridSystem with a default initial condition, horizon,
and (where available) closed-form reference data used by the test suite:

* crossing_linear   -- transversal crossing, identity reset, piecewise-linear
  closed form;
* crossing_affine   -- like crossing_linear but with a non-identity affine
  reset;
* sliding_relay     -- attracting sliding along x2 = 0;
* repelling_relay   -- the surface is attracting for x1 < 0.5, crossed for
  0.5 < x1 < 1 and repelling for x1 > 1 (non-uniqueness exercises);
* figure8           -- two spiral modes glued along one edge; the solution
  crosses the surface infinitely often with geometrically accumulating
  crossing times (an optional redundant reverse edge can be added);
* bouncing_ball     -- four airborne modes with apex and ground guards,
  velocity reset x2 -> -c*x2, Zeno accumulation at the origin.

A JSON loader builds systems from a small registry of parameterized fields
and resets; the schema is documented in `load_scenario`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from .model import (ControlSignal, Domain, Edge, HybridSystem, HyperplaneData,
                    InputBox, ModeField, ResetMap, EMPTY_INPUT, affine_reset,
                    identity_reset)
from .sim import QuotientPoint

DOMAIN_SLACK = 1e-8   # membership slack absorbing event-localization roundoff


@dataclass
class Scenario:
    name: str
    system: HybridSystem
    default_x0: QuotientPoint
    default_T: float
    default_u: Optional[ControlSignal] = None
    oracles: dict = dc_field(default_factory=dict)
    params: dict = dc_field(default_factory=dict)
    notes: str = ""


def _halfplane_domain(normal, offset, lo, hi, slack=DOMAIN_SLACK) -> Domain:
    """Domain {normal.x <= offset + slack} intersected with a bounding box."""
    n = np.asarray(normal, float)

    def contains(x, _n=n, _o=offset + slack):
        return bool(_n @ x <= _o)

    return Domain(contains=contains, box_lo=lo, box_hi=hi)


def _quadrant_domain(signs, lo, hi, slack=DOMAIN_SLACK) -> Domain:
    s = np.asarray(signs, float)

    def contains(x, _s=s, _k=slack):
        return bool(np.all(_s * x >= -_k))

    return Domain(contains=contains, box_lo=lo, box_hi=hi)


def _const_field(v) -> ModeField:
    v = np.asarray(v, float)
    n = v.size
    return ModeField(dim=n,
                     eval=lambda x, u, _v=v: _v.copy(),
                     jacobian_x=lambda x, u, _n=n: np.zeros((_n, _n)))


# ---------------------------------------------------------------------------
# crossing scenarios


def crossing_linear() -> Scenario:
    """Constant fields (1,1) / (1,2) crossing x2 = 0 with identity reset."""
    hp = HyperplaneData(g_normal=(0, 1), g_offset=0.0,
                        r_normal=(0, 1), r_offset=0.0)
    e = Edge(source=1, target=2, hyperplanes=hp, reset=identity_reset(2))
    lo, hi = (-10, -10), (10, 10)
    H = HybridSystem(
        modes=(1, 2),
        edges=(e,),
        domains={1: _halfplane_domain((0, 1), 0.0, lo, hi),
                 2: _halfplane_domain((0, -1), 0.0, lo, hi)},
        fields={1: _const_field((1, 1)), 2: _const_field((1, 2))},
        input_set=EMPTY_INPUT, dim=2)

    t_cross = 0.5

    def oracle(t):
        if t <= t_cross:
            return QuotientPoint(1, (t, -0.5 + t))
        return QuotientPoint(2, (t, 2 * (t - t_cross)))

    return Scenario(
        name="crossing_linear", system=H,
        default_x0=QuotientPoint(1, (0.0, -0.5)), default_T=1.0,
        oracles={"trajectory": oracle, "cross_time": t_cross,
                 "transition_count": 1})


def crossing_affine() -> Scenario:
    """Transversal crossing with the non-identity reset R(x) = (2 x1 + 1, x2)."""
    hp = HyperplaneData(g_normal=(0, 1), g_offset=0.0,
                        r_normal=(0, 1), r_offset=0.0)
    M = np.array([[2.0, 0.0], [0.0, 1.0]])
    b = np.array([1.0, 0.0])
    e = Edge(source=1, target=2, hyperplanes=hp, reset=affine_reset(M, b))
    lo, hi = (-10, -10), (10, 10)
    H = HybridSystem(
        modes=(1, 2),
        edges=(e,),
        domains={1: _halfplane_domain((0, 1), 0.0, lo, hi),
                 2: _halfplane_domain((0, -1), 0.0, lo, hi)},
        fields={1: _const_field((1, 1)), 2: _const_field((1, 2))},
        input_set=EMPTY_INPUT, dim=2)

    t_cross = 0.5

    def oracle(t):
        if t <= t_cross:
            return QuotientPoint(1, (t, -0.5 + t))
        return QuotientPoint(2, (2.0 + (t - t_cross), 2 * (t - t_cross)))

    return Scenario(
        name="crossing_affine", system=H,
        default_x0=QuotientPoint(1, (0.0, -0.5)), default_T=1.0,
        oracles={"trajectory": oracle, "cross_time": t_cross,
                 "transition_count": 1})


# ---------------------------------------------------------------------------
# relay scenarios


def sliding_relay() -> Scenario:
    """Attracting relay: fields (1,1) / (1,-1) both point at x2 = 0; the
    solution reaches the surface and slides with velocity (1,0)."""
    hp = HyperplaneData(g_normal=(0, 1), g_offset=0.0,
                        r_normal=(0, 1), r_offset=0.0)
    e = Edge(source=1, target=2, hyperplanes=hp, reset=identity_reset(2))
    lo, hi = (-10, -10), (10, 10)
    H = HybridSystem(
        modes=(1, 2),
        edges=(e,),
        domains={1: _halfplane_domain((0, 1), 0.0, lo, hi),
                 2: _halfplane_domain((0, -1), 0.0, lo, hi)},
        fields={1: _const_field((1, 1)), 2: _const_field((1, -1))},
        input_set=EMPTY_INPUT, dim=2)

    t_hit = 0.5

    def oracle(t):
        if t <= t_hit:
            return QuotientPoint(1, (t, -0.5 + t))
        return QuotientPoint(1, (t, 0.0))

    return Scenario(
        name="sliding_relay", system=H,
        default_x0=QuotientPoint(1, (0.0, -0.5)), default_T=2.0,
        oracles={"trajectory": oracle, "hit_time": t_hit,
                 "sliding_velocity": np.array([1.0, 0.0]),
                 "sliding_alpha": 0.5})


def repelling_relay() -> Scenario:
    """Relay whose surface changes character along x1: attracting for
    x1 < 0.5, crossed for 0.5 < x1 < 1, repelling for x1 > 1.  The default
    initial condition yields a unique solution (slide, then depart upward);
    starting on the surface at x1 > 1 exercises the non-uniqueness paths."""
    hp = HyperplaneData(g_normal=(0, 1), g_offset=0.0,
                        r_normal=(0, 1), r_offset=0.0)
    e = Edge(source=1, target=2, hyperplanes=hp, reset=identity_reset(2))
    lo, hi = (-5, -5), (5, 5)
    f1 = ModeField(dim=2, eval=lambda x, u: np.array([1.0, 1.0 - x[0]]),
                   jacobian_x=lambda x, u: np.array([[0.0, 0.0], [-1.0, 0.0]]))
    f2 = ModeField(dim=2, eval=lambda x, u: np.array([1.0, x[0] - 0.5]),
                   jacobian_x=lambda x, u: np.array([[0.0, 0.0], [1.0, 0.0]]))
    H = HybridSystem(
        modes=(1, 2),
        edges=(e,),
        domains={1: _halfplane_domain((0, 1), 0.0, lo, hi),
                 2: _halfplane_domain((0, -1), 0.0, lo, hi)},
        fields={1: f1, 2: f2},
        input_set=EMPTY_INPUT, dim=2)

    # from (-1,-0.5): x1 = -1 + t, dx2/dt = 2 - t, so x2 = -0.5 + 2t - t^2/2
    t_hit = 2.0 - math.sqrt(3.0)
    x1_hit = -1.0 + t_hit
    t_leave = t_hit + (0.5 - x1_hit)   # slide with unit speed until x1 = 0.5

    def oracle(t):
        if t <= t_hit:
            return QuotientPoint(1, (-1 + t, -0.5 + 2 * t - t * t / 2))
        if t <= t_leave:
            return QuotientPoint(1, (-1 + t, 0.0))
        s = t - t_leave
        return QuotientPoint(2, (0.5 + s, s * s / 2))

    return Scenario(
        name="repelling_relay", system=H,
        default_x0=QuotientPoint(1, (-1.0, -0.5)), default_T=3.0,
        oracles={"trajectory": oracle, "hit_time": t_hit,
                 "leave_time": t_leave, "repelling_x0": np.array([1.5, 0.0])})


# ---------------------------------------------------------------------------
# figure-8


def _spiral_field(a: float, b: float) -> ModeField:
    """Planar field with radial speed -a and tangential speed b: winds
    infinitely often while reaching the origin in finite time r0/a."""

    def ev(x, u, _a=a, _b=b):
        r = max(float(np.hypot(x[0], x[1])), 1e-12)
        return np.array([(-_a * x[0] - _b * x[1]) / r,
                         (-_a * x[1] + _b * x[0]) / r])

    return ModeField(dim=2, eval=ev)


def figure8(a: float = 1.0, b: float = 8.0, mu: float = 0.5,
            with_reverse_edge: bool = False) -> Scenario:
    """Two spiral modes glued along x2 = 0 with reset (mu*x1, x2).

    The solution alternates forward and backward crossings through the single
    edge; crossing radii contract by exp(-a*pi/b) per half turn, so crossing
    times accumulate geometrically.  With `with_reverse_edge` a redundant
    edge (2,1) carrying the inverse reset is added; it identifies the same
    point pairs and must not change the quotient trajectory.
    """
    hp = HyperplaneData(g_normal=(0, 1), g_offset=0.0,
                        r_normal=(0, 1), r_offset=0.0)
    M = np.array([[mu, 0.0], [0.0, 1.0]])
    edges = [Edge(source=1, target=2, hyperplanes=hp,
                  reset=affine_reset(M, np.zeros(2)))]
    if with_reverse_edge:
        hp_rev = HyperplaneData(g_normal=(0, -1), g_offset=0.0,
                                r_normal=(0, -1), r_offset=0.0)
        Minv = np.array([[1.0 / mu, 0.0], [0.0, 1.0]])
        edges.append(Edge(source=2, target=1, hyperplanes=hp_rev,
                          reset=affine_reset(Minv, np.zeros(2))))
    lo, hi = (-3, -3), (3, 3)
    H = HybridSystem(
        modes=(1, 2),
        edges=tuple(edges),
        domains={1: _halfplane_domain((0, 1), 0.0, lo, hi),
                 2: _halfplane_domain((0, -1), 0.0, lo, hi)},
        fields={1: _spiral_field(a, b), 2: _spiral_field(a, b)},
        input_set=EMPTY_INPUT, dim=2)
    rho_half_turn = math.exp(-a * math.pi / b)
    return Scenario(
        name="figure8", system=H,
        default_x0=QuotientPoint(1, (0.0, -1.0)), default_T=0.7,
        params={"a": a, "b": b, "mu": mu,
                "with_reverse_edge": with_reverse_edge},
        oracles={"half_turn_ratio": rho_half_turn,
                 # gaps between crossings contract by rho^2 every two events
                 "two_step_gap_ratio": rho_half_turn ** 2},
        notes="crossing times accumulate; keep T below the accumulation time")


# ---------------------------------------------------------------------------
# bouncing ball


def bouncing_ball(c: float = 0.5, g_grav: float = 9.81,
                  h0: float = 1.0) -> Scenario:
    """Four-mode bouncing ball: state (height, velocity), apex guards
    x2 = 0 with identity reset, ground guards x1 = 0 with reset
    (x1, -c*x2).  Zeno for c < 1; guards of the two ground edges coincide
    (overlapping discontinuity surfaces at the origin)."""
    if not (0.0 < c <= 1.0):
        raise ValueError("restitution coefficient must lie in (0, 1]")
    if g_grav <= 0 or h0 <= 0:
        raise ValueError("g_grav and h0 must be positive")

    grav = ModeField(dim=2,
                     eval=lambda x, u, _g=g_grav: np.array([x[1], -_g]),
                     jacobian_x=lambda x, u: np.array([[0.0, 1.0], [0.0, 0.0]]))
    apex_hp = HyperplaneData(g_normal=(0, -1), g_offset=0.0,
                             r_normal=(0, -1), r_offset=0.0)
    ground_hp = HyperplaneData(g_normal=(-1, 0), g_offset=0.0,
                               r_normal=(1, 0), r_offset=0.0)
    ball_reset = affine_reset(np.array([[1.0, 0.0], [0.0, -c]]), np.zeros(2))
    nonneg_h = lambda x: x[0] >= -DOMAIN_SLACK
    nonpos_v = lambda x: x[1] <= DOMAIN_SLACK
    edges = (
        Edge(1, 2, apex_hp, identity_reset(2), guard_membership=nonneg_h),
        Edge(2, 3, ground_hp, ball_reset, guard_membership=nonpos_v),
        Edge(3, 4, apex_hp, identity_reset(2), guard_membership=nonneg_h),
        Edge(4, 1, ground_hp, ball_reset, guard_membership=nonpos_v),
    )
    lo, hi = (0, -10), (2 * h0, 10)
    rising = _quadrant_domain((1, 1), lo, hi)
    falling = _quadrant_domain((1, -1), lo, hi)
    H = HybridSystem(
        modes=(1, 2, 3, 4),
        edges=edges,
        domains={1: rising, 2: falling, 3: rising, 4: falling},
        fields={1: grav, 2: grav, 3: grav, 4: grav},
        input_set=EMPTY_INPUT, dim=2)

    v1 = math.sqrt(2.0 * g_grav * h0)
    t1 = math.sqrt(2.0 * h0 / g_grav)

    def impact_time(k: int) -> float:
        # k-th ground impact, k = 1, 2, ...
        if c == 1.0:
            return t1 + (k - 1) * 2.0 * v1 / g_grav
        return t1 + (2.0 * v1 / g_grav) * c * (1.0 - c ** (k - 1)) / (1.0 - c)

    def impact_speed(k: int) -> float:
        return v1 * c ** (k - 1)

    t_inf = math.inf if c == 1.0 else t1 * (1.0 + 2.0 * c / (1.0 - c))

    def energy(x) -> float:
        return g_grav * x[0] + 0.5 * x[1] ** 2

    return Scenario(
        name="bouncing_ball", system=H,
        default_x0=QuotientPoint(2, (h0, 0.0)), default_T=2.0,
        params={"c": c, "g_grav": g_grav, "h0": h0},
        oracles={"impact_time": impact_time, "impact_speed": impact_speed,
                 "t_inf": t_inf, "energy": energy, "v1": v1, "t1": t1},
        notes="guards of edges (2,3) and (4,1) coincide; the reported "
              "guard-disjointness violation is expected")


# ---------------------------------------------------------------------------
# registry


SCENARIOS: dict[str, Callable[..., Scenario]] = {
    "crossing_linear": crossing_linear,
    "crossing_affine": crossing_affine,
    "sliding_relay": sliding_relay,
    "repelling_relay": repelling_relay,
    "figure8": figure8,
    "bouncing_ball": bouncing_ball,
}


def get_scenario(name: str, **params) -> Scenario:
    try:
        builder = SCENARIOS[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; "
                       f"available: {sorted(SCENARIOS)}") from None
    return builder(**params)


# ---------------------------------------------------------------------------
# JSON scenario files


FIELD_BUILTINS = {
    # {"kind": "constant", "value": [..]}
    "constant": lambda spec, dim: _const_field(spec["value"]),
    # {"kind": "affine", "A": [[..]], "b": [..], "B": [[..]] (optional)}
    "affine": lambda spec, dim: _affine_field(spec, dim),
    # {"kind": "gravity", "g": 9.81} -> f(x) = (x2, -g)
    "gravity": lambda spec, dim: ModeField(
        dim=2, eval=lambda x, u, _g=float(spec.get("g", 9.81)):
        np.array([x[1], -_g])),
    # {"kind": "spiral", "a": .., "b": ..}
    "spiral": lambda spec, dim: _spiral_field(float(spec["a"]),
                                              float(spec["b"])),
}


def _affine_field(spec, dim) -> ModeField:
    A = np.asarray(spec["A"], float)
    b = np.asarray(spec["b"], float)
    B = np.asarray(spec["B"], float) if "B" in spec else None

    def ev(x, u, _A=A, _b=b, _B=B):
        out = _A @ x + _b
        if _B is not None and u.size:
            out = out + _B @ u
        return out

    return ModeField(dim=A.shape[0], eval=ev,
                     jacobian_x=lambda x, u, _A=A: _A.copy())


RESET_BUILTINS = {
    "identity": lambda spec, dim: identity_reset(dim),
    # {"kind": "affine", "M": [[..]], "b": [..]}
    "affine": lambda spec, dim: affine_reset(
        np.asarray(spec["M"], float),
        np.asarray(spec.get("b", np.zeros(dim)), float)),
    # {"kind": "bouncing_ball", "c": 0.5} -> (x1, -c x2)
    "bouncing_ball": lambda spec, dim: affine_reset(
        np.array([[1.0, 0.0], [0.0, -float(spec["c"])]]), np.zeros(2)),
}

SCENARIO_SCHEMA_VERSION = 1


def _domain_from_spec(spec) -> Domain:
    lo = np.asarray(spec["box_lo"], float)
    hi = np.asarray(spec["box_hi"], float)
    halfspaces = [(np.asarray(h["normal"], float), float(h["offset"]))
                  for h in spec.get("halfspaces", [])]

    def contains(x, _hs=halfspaces, _lo=lo, _hi=hi):
        if not all(n @ x <= o + DOMAIN_SLACK for n, o in _hs):
            return False
        return bool(np.all(x >= _lo - DOMAIN_SLACK)
                    and np.all(x <= _hi + DOMAIN_SLACK))

    return Domain(contains=contains, box_lo=lo, box_hi=hi)


def load_scenario(source) -> Scenario:
    """Build a Scenario from a JSON file path, JSON string, or dict.

    Schema (schema_version 1); all floats are IEEE-754 doubles::

        {
          "schema_version": 1,
          "name": "my_system",
          "dim": 2,
          "modes": [1, 2],
          "domains": {"1": {"box_lo": [..], "box_hi": [..],
                            "halfspaces": [{"normal": [..], "offset": 0.0}]}},
          "fields":  {"1": {"kind": "constant" | "affine" | "gravity"
                                    | "spiral", ...}},
          "edges": [{"source": 1, "target": 2,
                     "g_normal": [..], "g_offset": 0.0,
                     "r_normal": [..], "r_offset": 0.0,
                     "reset": {"kind": "identity" | "affine"
                                       | "bouncing_ball", ...},
                     "guard_halfspaces": [{"normal": [..], "offset": 0.0}]}],
          "input": {"lo": [..], "hi": [..]},       # optional, default empty
          "x0": {"mode": 1, "coords": [..]},
          "T": 1.0
        }
    """
    if isinstance(source, dict):
        spec = source
    else:
        text = str(source)
        if text.lstrip().startswith("{"):
            spec = json.loads(text)
        else:
            with open(text) as fh:
                spec = json.load(fh)
    version = spec.get("schema_version")
    if version != SCENARIO_SCHEMA_VERSION:
        raise ValueError(f"unsupported scenario schema_version {version!r}")
    dim = int(spec["dim"])
    modes = [m for m in spec["modes"]]
    domains = {m: _domain_from_spec(spec["domains"][str(m)]) for m in modes}
    fields = {}
    for m in modes:
        fspec = spec["fields"][str(m)]
        kind = fspec["kind"]
        if kind not in FIELD_BUILTINS:
            raise ValueError(f"unknown field kind {kind!r}")
        fields[m] = FIELD_BUILTINS[kind](fspec, dim)
    edges = []
    for espec in spec["edges"]:
        rspec = espec.get("reset", {"kind": "identity"})
        if rspec["kind"] not in RESET_BUILTINS:
            raise ValueError(f"unknown reset kind {rspec['kind']!r}")
        reset = RESET_BUILTINS[rspec["kind"]](rspec, dim)
        hp = HyperplaneData(g_normal=espec["g_normal"],
                            g_offset=float(espec["g_offset"]),
                            r_normal=espec["r_normal"],
                            r_offset=float(espec["r_offset"]))
        membership = lambda x: True
        if "guard_halfspaces" in espec:
            hs = [(np.asarray(h["normal"], float), float(h["offset"]))
                  for h in espec["guard_halfspaces"]]
            membership = lambda x, _hs=hs: all(
                n @ x <= o + DOMAIN_SLACK for n, o in _hs)
        edges.append(Edge(source=espec["source"], target=espec["target"],
                          hyperplanes=hp, reset=reset,
                          guard_membership=membership))
    if "input" in spec:
        input_set = InputBox(lo=np.asarray(spec["input"]["lo"], float),
                             hi=np.asarray(spec["input"]["hi"], float))
    else:
        input_set = EMPTY_INPUT
    H = HybridSystem(modes=tuple(modes), edges=tuple(edges), domains=domains,
                     fields=fields, input_set=input_set, dim=dim)
    x0 = QuotientPoint(spec["x0"]["mode"], spec["x0"]["coords"])
    return Scenario(name=spec.get("name", "scenario"), system=H,
                    default_x0=x0, default_T=float(spec.get("T", 1.0)))
