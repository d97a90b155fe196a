"""Simulation engines on the hybrid quotient space.

Three solution concepts over the same HybridSystem:

* simulate_execution -- classical event-driven executions with explicit reset
  jumps and Zeno truncation;
* simulate_filippov  -- Filippov solutions computed in per-edge charts, where
  a guard crossing is a plain continuation of the piecewise-smooth local
  field (crossings, sliding segments, chart switches);
* simulate_relaxed   -- classical ODE solutions of the eps-blended smooth
  field on the relaxed quotient space.

All three return Trajectory objects whose samples are QuotientPoints
(canonical mode + coordinates), plus an event log.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from .charts import (EdgeChart, RelaxedEdgeChart, attach_map,
                     attach_map_inverse, build_chart, build_relaxed_chart)
from .errors import (LeftAllDomains, NonUniqueContinuation, TangentDegenerate)
from .filippov import CellKind, classify_rates, sliding_field
from .integrate import DensePath, IntegratorConfig, integrate, locate_event
from .model import ControlSignal, Edge, HybridSystem

Array = np.ndarray

# Watches arm on a strictly negative pre-side value rather than a finite
# band: near a Zeno point the apex height of a bounce shrinks like v^2 and
# any absolute band would eventually swallow the guard approach.  Surface
# snaps keep the start-of-leg values at exactly 0.0, so strictness suffices
# to avoid refiring.
_BAND = 0.0
_PLANE_TOL = 1e-9      # "on the surface" tolerance for canonicalization


# ---------------------------------------------------------------------------
# points, events, trajectories


@dataclass(frozen=True)
class QuotientPoint:
    """Canonical representative of a point of the quotient space."""

    mode: object
    coords: Array
    epsilon_layer: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "coords", np.asarray(self.coords, dtype=float))


@dataclass
class Event:
    time: float
    kind: str               # Crossing | ResetJump | SlideStart | SlideEnd
                            # | ZenoTruncation | ChartSwitch
    edge: Optional[tuple]   # (source, target) or None
    meta: dict = dc_field(default_factory=dict)


class _Piece:
    """One smooth leg: a dense path in some chart plus the map to the quotient."""

    __slots__ = ("t0", "t1", "path", "rep")

    def __init__(self, t0, t1, path, rep):
        self.t0 = t0
        self.t1 = t1
        self.path = path      # callable t -> chart coords
        self.rep = rep        # callable coords -> QuotientPoint

    def sample(self, t: float) -> QuotientPoint:
        return self.rep(self.path(min(max(t, self.t0), self.t1)))


def _const_piece(t0, t1, point: QuotientPoint) -> _Piece:
    x = point.coords.copy()
    return _Piece(t0, t1, lambda t: x, lambda _: point)


@dataclass
class Trajectory:
    """Timestamped quotient-space samples with the event log."""

    times: list
    points: list
    events: list
    meta: dict
    pieces: list = dc_field(default_factory=list)

    @property
    def t_final(self) -> float:
        return self.pieces[-1].t1 if self.pieces else self.times[-1]

    def sample(self, t: float) -> QuotientPoint:
        """Quotient point at time t (right-continuous at event times)."""
        starts = [p.t0 for p in self.pieces]
        i = bisect.bisect_right(starts, t) - 1
        i = min(max(i, 0), len(self.pieces) - 1)
        return self.pieces[i].sample(t)

    def event_times(self, kinds=None) -> list:
        return [ev.time for ev in self.events
                if kinds is None or ev.kind in kinds]

    def transition_count(self) -> int:
        return sum(1 for ev in self.events if ev.kind in ("Crossing", "ResetJump"))


# ---------------------------------------------------------------------------
# canonicalization and the surrogate quotient metric


def canonical_point(H: HybridSystem, mode, coords,
                    epsilon_layer: Optional[float] = None) -> QuotientPoint:
    """Canonical representative: guard/image points are stored with the
    source mode of their edge."""
    x = np.asarray(coords, dtype=float)
    scale = 1.0 + float(np.linalg.norm(x))
    for e in H.incoming(mode):
        r = e.hyperplanes.image_value(x)
        if abs(r) <= _PLANE_TOL * scale:
            y = x - e.hyperplanes.r_normal * r
            xs = e.reset.inv(y)
            if e.guard_membership(xs):
                return QuotientPoint(e.source, xs, epsilon_layer)
    return QuotientPoint(mode, x, epsilon_layer)


def quotient_distance(H: HybridSystem, a: QuotientPoint, b: QuotientPoint,
                      eps: float = 0.0) -> float:
    """Surrogate metric: Euclidean distance between representatives in the
    best shared chart; infinity when the points share no chart."""
    a = canonical_point(H, a.mode, a.coords)
    b = canonical_point(H, b.mode, b.coords)
    best = math.inf
    if a.mode == b.mode:
        best = float(np.linalg.norm(a.coords - b.coords))
    for e in H.edges:
        if e.source == a.mode and e.target == b.mode:
            xb = attach_map_inverse(e, b.coords)
            best = min(best, float(np.linalg.norm(a.coords - xb)))
        if e.source == b.mode and e.target == a.mode:
            xa = attach_map_inverse(e, a.coords)
            best = min(best, float(np.linalg.norm(b.coords - xa)))
    return best


# ---------------------------------------------------------------------------
# event watches


class _Watch:
    """Sign-change detector for a scalar surface function along a leg.

    direction +1 fires on an upward crossing of zero, -1 downward.  A watch
    arms only after the value has been seen strictly on the "pre" side of the
    band, so legs that start exactly on a surface do not immediately refire.
    """

    __slots__ = ("fn", "direction", "tag", "armed", "prev")

    def __init__(self, fn, direction, tag):
        self.fn = fn
        self.direction = direction
        self.tag = tag
        self.armed = False
        self.prev = None

    def start(self, x):
        self.prev = float(self.fn(x))
        self.armed = self.direction * self.prev < -_BAND

    def scan(self, tv_pairs):
        """Feed (t, value) samples in order; return (ta, tb) bracket on fire."""
        bracket = None
        t_prev = None
        for t, v in tv_pairs:
            if bracket is None:
                if self.armed and self.direction * v >= 0.0:
                    bracket = (t_prev, t)
                elif self.direction * v < -_BAND:
                    self.armed = True
            self.prev = v
            t_prev = t
        return bracket


def _planes_coincide(n1, c1, n2, c2) -> bool:
    return (np.linalg.norm(n1 - n2) < 1e-12 and abs(c1 - c2) < 1e-12) or \
           (np.linalg.norm(n1 + n2) < 1e-12 and abs(c1 + c2) < 1e-12)


def _mode_watches(H: HybridSystem, m, image_shift: float = 0.0) -> list:
    """Surface watches visible from the interior of mode m: outgoing guard
    planes (upward) and incoming reset-image planes (downward).  An incoming
    plane coinciding with a reverse edge's guard plane is dropped -- both
    describe the same glued surface.  image_shift moves the incoming
    surfaces to {r = shift}; the relaxed engine glues the top of each strip
    to that offset plane so the embedding stays in the original frame."""
    watches = []
    out_planes = []
    for e in H.outgoing(m):
        hp = e.hyperplanes
        watches.append(_Watch(hp.guard_value, +1, ("out", e)))
        out_planes.append((hp.g_normal, hp.g_offset))
    for e in H.incoming(m):
        hp = e.hyperplanes
        if any(_planes_coincide(hp.r_normal, hp.r_offset, n, c)
               for n, c in out_planes):
            continue
        watches.append(_Watch(
            lambda xx, _hp=hp, _s=image_shift: _hp.image_value(xx) - _s,
            -1, ("in", e)))
    return watches


# ---------------------------------------------------------------------------
# one smooth leg


class _Trigger:
    __slots__ = ("t", "x", "tag")

    def __init__(self, t, x, tag):
        self.t = t
        self.x = np.asarray(x, float)
        self.tag = tag


def _run_leg(field, x0, t0, t_end, cfg: IntegratorConfig, watches,
             membership=None, step_cap=None, event_tol=1e-12):
    """Integrate one smooth leg until the first watch fires, the domain
    membership fails, or t_end.  Returns (path, trigger | None)."""
    if t_end - t0 <= 0:
        raise ValueError("empty leg")
    for w in watches:
        w.start(np.asarray(x0, float))
    hit = {"seg": None, "watches": None, "domain": None}

    def stop_fn(seg):
        tm = 0.5 * (seg.t0 + seg.t1)
        xm = seg(tm)
        fired = []
        for w in watches:
            samples = [(tm, float(w.fn(xm))), (seg.t1, float(w.fn(seg.x1)))]
            br = w.scan(samples)
            if br is not None:
                ta = br[0] if br[0] is not None else seg.t0
                fired.append((w, (ta, br[1])))
        if fired:
            hit["seg"], hit["watches"] = seg, fired
            return True
        if membership is not None and not membership(seg.x1):
            hit["domain"] = (seg.t1, seg.x1)
            return True
        return False

    path = integrate(field, x0, (t0, t_end), cfg,
                     step_observer=step_cap, stop_fn=stop_fn)
    if hit["watches"] is not None:
        best = None
        for w, bracket in hit["watches"]:
            t_star, x_star = locate_event(
                path, lambda t, x, _w=w: _w.fn(x), bracket, event_tol)
            if best is None or t_star < best.t:
                best = _Trigger(t_star, x_star, w.tag)
        path = path.truncate(best.t, best.x)
        return path, best
    if hit["domain"] is not None:
        t_bad, x_bad = hit["domain"]
        raise LeftAllDomains(
            f"state left its domain at t={t_bad:.9g} without a guard hit",
            time=t_bad, point=x_bad)
    return path, None


def _ctrl(u: Optional[ControlSignal], T: float) -> tuple[Callable, list]:
    if u is None:
        z = np.zeros(0)
        return (lambda t: z), []
    bps = [b for b in getattr(u, "breakpoints", []) if 0.0 < b < T]
    return (lambda t: u(t)), sorted(bps)


def _leg_end(t, T, breakpoints):
    for b in breakpoints:
        if b > t + 1e-15:
            return min(b, T)
    return T


# ---------------------------------------------------------------------------
# classical executions (reset jumps, Zeno truncation)


def _geometric_tail(ts, period=2):
    """Accumulation-time estimate from a geometric event-time sequence."""
    if len(ts) < 3 * period:
        return ts[-1], None
    d1 = ts[-1] - ts[-1 - period]
    d0 = ts[-1 - period] - ts[-1 - 2 * period]
    if d0 <= 0 or d1 <= 0 or d1 >= d0:
        return ts[-1], None
    rho = d1 / d0
    return ts[-1] + d1 * rho / (1.0 - rho), rho


def simulate_execution(H: HybridSystem, x0: QuotientPoint,
                       u: Optional[ControlSignal] = None, T: float = 1.0,
                       config: Optional[IntegratorConfig] = None,
                       zeno_window: int = 50, zeno_tol: float = 1e-9,
                       stagnation_gap: float = 3e-8,
                       max_events: int = 100000) -> Trajectory:
    """Event-driven hybrid execution with explicit reset jumps.

    Zeno truncation fires when `zeno_window` consecutive events span less
    than zeno_tol*T, or when event gaps stagnate below the floating-point
    scale at which post-impact states stay meaningful (stagnation_gap,
    relative to max(T,1)); the accumulation time is estimated by geometric
    extrapolation of the event times.
    """
    cfg = config or IntegratorConfig()
    u_fn, bps = _ctrl(u, T)
    traj = Trajectory(times=[], points=[], events=[], meta={"nfev": 0})
    mode, x = x0.mode, np.asarray(x0.coords, float)
    t = 0.0
    ev_times: list[float] = []
    stagnant = 0
    while t < T:
        dom = H.domains[mode]
        fld = H.fields[mode]
        field = lambda tt, xx, _f=fld: _f(xx, u_fn(tt))
        watches = [
            _Watch(e.hyperplanes.guard_value, +1, ("out", e))
            for e in H.outgoing(mode)
        ]
        t_leg = _leg_end(t, T, bps)
        path, trig = _run_leg(field, x, t, t_leg, cfg, watches,
                              membership=dom.contains,
                              event_tol=cfg.event_tol)
        traj.meta["nfev"] += path.nfev
        m_now = mode
        _append_piece(traj, path, lambda xx, _m=m_now: QuotientPoint(_m, xx))
        t, x = path.t1, path(path.t1)
        if trig is None:
            if t >= T - 1e-15 or not bps:
                break
            continue
        e: Edge = trig.tag[1]
        xs = trig.x - e.hyperplanes.g_normal * e.hyperplanes.guard_value(trig.x)
        if not e.guard_membership(xs):
            x = trig.x
            continue
        y = e.reset(xs)
        traj.events.append(Event(t, "ResetJump", e.key(), {
            "pre": (mode, xs.copy()), "post": (e.target, y.copy()),
        }))
        # pre/post samples at the same instant
        traj.times.append(t)
        traj.points.append(QuotientPoint(e.target, y))
        mode, x = e.target, y
        ev_times.append(t)
        if len(ev_times) > max_events:
            raise RuntimeError("event cap exceeded without Zeno truncation")
        gap = ev_times[-1] - ev_times[-2] if len(ev_times) > 1 else math.inf
        stagnant = stagnant + 1 if gap < stagnation_gap * max(T, 1.0) else 0
        window_hit = (len(ev_times) >= zeno_window and
                      ev_times[-1] - ev_times[-zeno_window] < zeno_tol * T)
        if window_hit or stagnant >= 4:
            t_inf, rho = _geometric_tail(ev_times)
            x_inf = _extrapolate_state(traj, rho)
            frozen = QuotientPoint(mode, x_inf)
            traj.events.append(Event(t, "ZenoTruncation", None, {
                "t_accumulation": t_inf,
                "events_seen": len(ev_times),
                "ratio": rho,
            }))
            traj.pieces.append(_const_piece(t, T, frozen))
            traj.times.append(T)
            traj.points.append(frozen)
            traj.meta["zeno"] = {"t_accumulation": t_inf, "truncated_at": t}
            break
    return traj


def _extrapolate_state(traj: Trajectory, rho) -> Array:
    posts = [ev.meta["post"][1] for ev in traj.events if ev.kind == "ResetJump"]
    if rho is None or len(posts) < 3:
        return posts[-1]
    d = posts[-1] - posts[-3]
    return posts[-1] + d * rho / (1.0 - rho)


def _append_piece(traj: Trajectory, path: DensePath, rep):
    piece = _Piece(path.t0, path.t1, path, rep)
    traj.pieces.append(piece)
    for tt, xx in zip(path.ts, path.xs):
        traj.times.append(tt)
        traj.points.append(rep(xx))


# ---------------------------------------------------------------------------
# corner bookkeeping for Filippov solutions


def _corner_candidates(H: HybridSystem) -> dict:
    """Pairwise intersection points of the surface planes seen by each mode
    (planar systems only)."""
    corners: dict = {j: [] for j in H.modes}
    if H.dim != 2:
        return corners
    for j in H.modes:
        planes = []
        for e in H.outgoing(j):
            planes.append((e.hyperplanes.g_normal, e.hyperplanes.g_offset))
        for e in H.incoming(j):
            planes.append((e.hyperplanes.r_normal, e.hyperplanes.r_offset))
        for a in range(len(planes)):
            for b in range(a + 1, len(planes)):
                A = np.vstack([planes[a][0], planes[b][0]])
                rhs = np.array([planes[a][1], planes[b][1]])
                if abs(np.linalg.det(A)) < 1e-10:
                    continue
                c = np.linalg.solve(A, rhs)
                if not any(np.linalg.norm(c - c2) < 1e-12 for c2 in corners[j]):
                    corners[j].append(c)
    return corners


class _CornerMonitor:
    """Detects geometric accumulation of transition events at a surface
    intersection and decides when to pin the state there."""

    def __init__(self, corners, corner_tol=1e-8, detect_radius=1e-3):
        self.corners = corners
        self.corner_tol = corner_tol
        self.detect_radius = detect_radius
        self.history = []     # (t, dist, corner, mode)

    def observe(self, t, mode, coords):
        best, bd = None, math.inf
        for c in self.corners.get(mode, []):
            d = float(np.linalg.norm(coords - c))
            if d < bd:
                best, bd = c, d
        if best is None or bd > self.detect_radius:
            self.history.clear()
            return None
        self.history.append((t, bd, best, mode))
        if len(self.history) < 7 or bd > self.corner_tol:
            return None
        dists = [h[1] for h in self.history[-7:]]
        if not all(dists[k + 4] < dists[k] + 1e-15 for k in range(3)):
            return None
        ts = [h[0] for h in self.history]
        t_inf, rho = _geometric_tail(ts)
        if rho is None or rho >= 1.0:
            t_inf = t
        return {"time": t, "t_accumulation": t_inf, "mode": mode,
                "point": best, "ratio": rho}


# ---------------------------------------------------------------------------
# Filippov solutions in charts


class _FilippovEngine:
    def __init__(self, H, u_fn, bps, T, cfg, branch_policy, corner_tol,
                 max_events):
        self.H = H
        self.u = u_fn
        self.bps = bps
        self.T = T
        self.cfg = cfg
        self.branch_policy = branch_policy
        self.max_events = max_events
        self.charts = {e.key(): build_chart(H, e) for e in H.edges}
        self.monitor = _CornerMonitor(_corner_candidates(H), corner_tol)
        self.traj = Trajectory(times=[], points=[], events=[], meta={"nfev": 0})
        self.pin = None

    # -- classification helpers ------------------------------------------

    def _rates(self, chart: EdgeChart, xs: Array, t: float):
        uu = self.u(t)
        f1 = chart.source_field(xs, uu)
        f2 = chart.pullback(xs, uu)
        g = chart.edge.hyperplanes.g_normal
        return f1, f2, float(g @ f1), float(g @ f2)

    def _dispatch(self, t, mode, kind, e: Edge, point):
        """Handle arrival at the surface of edge e; returns the next state
        tuple or None when the run is finished (pinned)."""
        chart = self.charts[e.key()]
        hp = e.hyperplanes
        if kind == "in":
            y = point - hp.r_normal * hp.image_value(point)
            xs = e.reset.inv(y)
        else:
            xs = point - hp.g_normal * hp.guard_value(point)
        if not e.guard_membership(xs):
            # hit the hyperplane outside the guard set: plain continuation
            return ("interior", mode, point)
        f1, f2, r1, r2 = self._rates(chart, xs, t)
        cell = classify_rates(r1, r2, float(np.linalg.norm(f1) + np.linalg.norm(f2)))
        if cell.kind == CellKind.TANGENT_DEGENERATE:
            raise TangentDegenerate(
                f"degenerate tangency on edge {e.key()} at t={t:.9g}",
                point=xs, rates=(r1, r2))
        if cell.kind == CellKind.ATTRACTING_SLIDING:
            self.traj.events.append(Event(t, "SlideStart", e.key(),
                                          {"alpha": cell.sliding_alpha}))
            return ("sliding", e, xs)
        if cell.kind == CellKind.REPELLING_SLIDING:
            if self.branch_policy == "prefer-f1":
                return ("interior", e.source, xs)
            if self.branch_policy == "prefer-f2":
                return ("attached", e, xs)
            raise NonUniqueContinuation(
                f"repelling surface of edge {e.key()} at t={t:.9g}; "
                f"rates ({r1:.3g}, {r2:.3g}) admit multiple solutions")
        # transversal crossing
        self.traj.events.append(Event(t, "Crossing", e.key(),
                                      {"rates": (r1, r2), "point": xs.copy()}))
        pin = self.monitor.observe(t, e.source, xs)
        if pin is not None:
            self._apply_pin(t, pin)
            return None
        if cell.kind == CellKind.CROSSING_FORWARD:
            return ("attached", e, xs)
        return ("interior", e.source, xs)   # crossing backward

    def _apply_pin(self, t, pin):
        point = canonical_point(self.H, pin["mode"], pin["point"])
        self.traj.pieces.append(_const_piece(t, self.T, point))
        self.traj.times.append(self.T)
        self.traj.points.append(point)
        self.traj.meta["corner_pin"] = pin
        self.pin = pin

    # -- phases ------------------------------------------------------------

    def run(self, mode0, x0):
        start = canonical_point(self.H, mode0, x0)
        state = self._initial_state(start.mode, start.coords)
        t, n_events = 0.0, 0
        while state is not None and t < self.T - 1e-12:
            if len(self.traj.events) - n_events > self.max_events:
                raise RuntimeError("event cap exceeded")
            phase = state[0]
            if phase == "interior":
                t, state = self._leg_interior(t, state[1], state[2])
            elif phase == "attached":
                t, state = self._leg_attached(t, state[1], state[2])
            else:
                t, state = self._leg_sliding(t, state[1], state[2])
        return self.traj

    def _initial_state(self, mode, x):
        scale = 1.0 + float(np.linalg.norm(x))
        for e in self.H.outgoing(mode):
            if abs(e.hyperplanes.guard_value(x)) <= _PLANE_TOL * scale \
                    and e.guard_membership(x):
                nxt = self._dispatch(0.0, mode, "out", e, x)
                return nxt
        return ("interior", mode, x)

    def _leg_interior(self, t, mode, x):
        dom = self.H.domains[mode]
        fld = self.H.fields[mode]
        field = lambda tt, xx: fld(xx, self.u(tt))
        watches = _mode_watches(self.H, mode)
        path, trig = _run_leg(field, x, t, _leg_end(t, self.T, self.bps),
                              self.cfg, watches, membership=dom.contains,
                              event_tol=self.cfg.event_tol)
        self._record(path, lambda xx, _m=mode: canonical_point(self.H, _m, xx))
        if trig is None:
            if path.t1 < self.T - 1e-12:
                return path.t1, ("interior", mode, path(path.t1))
            return path.t1, None
        kind, e = trig.tag
        return trig.t, self._dispatch(trig.t, mode, kind, e, trig.x)

    def _leg_attached(self, t, e: Edge, x):
        """Continuation on the attached side of chart e (source coordinates,
        g_e >= 0), flowing with the pulled-back target field."""
        chart = self.charts[e.key()]
        jp = e.target
        field = lambda tt, xx: chart.pullback(xx, self.u(tt))
        hp = e.hyperplanes
        watches = [_Watch(hp.guard_value, -1, ("back", e))]
        far_planes = [(hp.r_normal, hp.r_offset)]
        for e2 in self.H.outgoing(jp):
            h2 = e2.hyperplanes
            if _planes_coincide(h2.g_normal, h2.g_offset, *far_planes[0]):
                continue
            watches.append(_Watch(
                lambda xx, _h=h2, _c=chart: _h.guard_value(_c.attach(xx)),
                +1, ("far-out", e2)))
        for e2 in self.H.incoming(jp):
            if e2.key() == e.key():
                continue
            h2 = e2.hyperplanes
            if _planes_coincide(h2.r_normal, h2.r_offset, *far_planes[0]):
                continue
            watches.append(_Watch(
                lambda xx, _h=h2, _c=chart: _h.image_value(_c.attach(xx)),
                -1, ("far-in", e2)))
        dom = self.H.domains[jp]
        membership = lambda xx: (chart.guard_value(xx) <= 1e-12
                                 or dom.contains(chart.attach(xx)))

        def rep(xx, _c=chart, _e=e):
            if _c.guard_value(xx) > 0.0:
                return QuotientPoint(_e.target, _c.attach(xx))
            return canonical_point(self.H, _e.source, xx)

        path, trig = _run_leg(field, x, t, _leg_end(t, self.T, self.bps),
                              self.cfg, watches, membership=membership,
                              event_tol=self.cfg.event_tol)
        self._record(path, rep)
        if trig is None:
            if path.t1 < self.T - 1e-12:
                return path.t1, ("attached", e, path(path.t1))
            return path.t1, None
        kind = trig.tag[0]
        if kind == "back":
            return trig.t, self._dispatch(trig.t, e.source, "out", e, trig.x)
        # leaving the chart: re-express in the target mode, then handle the
        # far surface in its own chart
        e2 = trig.tag[1]
        y = chart.attach(trig.x)
        self.traj.events.append(Event(trig.t, "ChartSwitch", e.key(), {
            "to_mode": jp, "pre": (e.source, trig.x.copy()),
            "post": (jp, y.copy()),
        }))
        far_kind = "out" if kind == "far-out" else "in"
        return trig.t, self._dispatch(trig.t, jp, far_kind, e2, y)

    def _leg_sliding(self, t, e: Edge, x):
        chart = self.charts[e.key()]
        hp = e.hyperplanes
        g_hat = hp.g_normal

        def field(tt, xx):
            xs = xx - g_hat * hp.guard_value(xx)
            uu = self.u(tt)
            fs, _ = sliding_field(chart.source_field(xs, uu),
                                  chart.pullback(xs, uu), g_hat)
            return fs

        def rate1(xx):
            xs = xx - g_hat * hp.guard_value(xx)
            return float(g_hat @ chart.source_field(xs, self.u(0.0)))

        def rate2(xx):
            xs = xx - g_hat * hp.guard_value(xx)
            return float(g_hat @ chart.pullback(xs, self.u(0.0)))

        watches = [_Watch(rate1, -1, ("exit-1",)), _Watch(rate2, +1, ("exit-2",))]
        for e2 in self.H.outgoing(e.source):
            if e2.key() == e.key():
                continue
            watches.append(_Watch(e2.hyperplanes.guard_value, +1, ("out", e2)))
        for e2 in self.H.incoming(e.source):
            h2 = e2.hyperplanes
            if _planes_coincide(h2.r_normal, h2.r_offset,
                                hp.g_normal, hp.g_offset):
                continue
            watches.append(_Watch(h2.image_value, -1, ("in", e2)))
        x = x - g_hat * hp.guard_value(x)
        rep = lambda xx, _e=e: QuotientPoint(
            _e.source, xx - g_hat * hp.guard_value(xx))
        path, trig = _run_leg(field, x, t, _leg_end(t, self.T, self.bps),
                              self.cfg, watches,
                              membership=lambda xx: e.guard_membership(
                                  xx - g_hat * hp.guard_value(xx)),
                              event_tol=self.cfg.event_tol)
        self._record(path, rep)
        if trig is None:
            if path.t1 < self.T - 1e-12:
                return path.t1, ("sliding", e, path(path.t1))
            return path.t1, None
        xs = trig.x - g_hat * hp.guard_value(trig.x)
        tag = trig.tag[0]
        if tag == "exit-1":
            self.traj.events.append(Event(trig.t, "SlideEnd", e.key(),
                                          {"exit": "source"}))
            return trig.t, ("interior", e.source, xs)
        if tag == "exit-2":
            self.traj.events.append(Event(trig.t, "SlideEnd", e.key(),
                                          {"exit": "attached"}))
            return trig.t, ("attached", e, xs)
        # reached another surface while sliding (corner)
        self.traj.events.append(Event(trig.t, "SlideEnd", e.key(),
                                      {"exit": "corner"}))
        return trig.t, self._dispatch(trig.t, e.source, trig.tag[0], trig.tag[1], xs)

    def _record(self, path, rep):
        self.traj.meta["nfev"] += path.nfev
        _append_piece(self.traj, path, rep)


def simulate_filippov(H: HybridSystem, x0: QuotientPoint,
                      u: Optional[ControlSignal] = None, T: float = 1.0,
                      config: Optional[IntegratorConfig] = None,
                      branch_policy: str = "fail",
                      corner_tol: float = 1e-8,
                      max_events: int = 100000) -> Trajectory:
    """Hybrid Filippov solution computed in per-edge charts.

    Guard crossings are plain continuations of the piecewise-smooth local
    field; attracting surfaces produce sliding segments; a repelling surface
    raises NonUniqueContinuation unless branch_policy is "prefer-f1" or
    "prefer-f2".  Accumulating crossings at a surface intersection are pinned
    to the intersection point (Zeno continuation).
    """
    if branch_policy not in ("fail", "prefer-f1", "prefer-f2"):
        raise ValueError(f"unknown branch policy {branch_policy!r}")
    cfg = config or IntegratorConfig()
    u_fn, bps = _ctrl(u, T)
    eng = _FilippovEngine(H, u_fn, bps, T, cfg, branch_policy, corner_tol,
                          max_events)
    return eng.run(x0.mode, x0.coords)


# ---------------------------------------------------------------------------
# relaxed trajectories


def simulate_relaxed(H: HybridSystem, epsilon: float, x0: QuotientPoint,
                     u: Optional[ControlSignal] = None, T: float = 1.0,
                     config: Optional[IntegratorConfig] = None,
                     transition=None) -> Trajectory:
    """Classical solution of the eps-blended smooth field on the relaxed
    quotient space.  Initial conditions must lie on the unrelaxed space (not
    inside a strip).  Strip entries and exits are logged as Crossing events
    with the layer depth in the event meta.
    """
    from .relaxation import make_transition, relaxed_local_field

    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    phi = transition or make_transition("smooth-exp", "hybrid")
    cfg = config or IntegratorConfig()
    u_fn, bps = _ctrl(u, T)
    charts = {e.key(): build_relaxed_chart(e, epsilon, H) for e in H.edges}
    traj = Trajectory(times=[], points=[], events=[],
                      meta={"nfev": 0, "epsilon": epsilon})
    mode, x = x0.mode, np.asarray(x0.coords, float)
    for e in H.outgoing(mode):
        g = e.hyperplanes.guard_value(x)
        if 0.0 < g < epsilon and e.guard_membership(x - e.hyperplanes.g_normal * g):
            raise ValueError("relaxed trajectories may not start inside a strip")
    t = 0.0
    state = ("interior", mode, x)

    def strip_cap(m):
        planes = [(e.hyperplanes, "g") for e in H.outgoing(m)] + \
                 [(e.hyperplanes, "r") for e in H.incoming(m)]

        def cap(tt, xx):
            for hp, which in planes:
                v = hp.guard_value(xx) if which == "g" else hp.image_value(xx)
                if -epsilon <= v <= 2.0 * epsilon:
                    return epsilon / 4.0
            return None
        return cap

    while state is not None and t < T:
        phase = state[0]
        if phase == "interior":
            m, x = state[1], state[2]
            fld = H.fields[m]
            field = lambda tt, xx, _f=fld: _f(xx, u_fn(tt))
            watches = _mode_watches(H, m, image_shift=epsilon)
            path, trig = _run_leg(field, x, t, _leg_end(t, T, bps), cfg,
                                  watches, membership=H.domains[m].contains,
                                  step_cap=strip_cap(m),
                                  event_tol=cfg.event_tol)
            traj.meta["nfev"] += path.nfev
            _append_piece(traj, path, lambda xx, _m=m: QuotientPoint(_m, xx))
            t = path.t1
            if trig is None:
                state = ("interior", m, path(path.t1)) if t < T - 1e-15 else None
                continue
            kind, e = trig.tag
            hp = e.hyperplanes
            if kind == "out":
                xs = trig.x - hp.g_normal * hp.guard_value(trig.x)
                if not e.guard_membership(xs):
                    state = ("interior", m, trig.x)
                    continue
                traj.events.append(Event(t, "Crossing", e.key(),
                                         {"layer_depth": 0.0, "entry": "bottom"}))
                state = ("strip", e, xs)
            else:
                # entry through the strip top: the relaxed space glues
                # {g = eps} to {r = eps} via the unrelaxed attach map, so
                # the embedding never drifts from the original frame.
                ys = trig.x - hp.r_normal * (hp.image_value(trig.x) - epsilon)
                xs = attach_map_inverse(e, ys)
                if not e.guard_membership(
                        xs - hp.g_normal * hp.guard_value(xs)):
                    state = ("interior", m, trig.x)
                    continue
                traj.events.append(Event(t, "Crossing", e.key(),
                                         {"layer_depth": epsilon, "entry": "top"}))
                state = ("strip", e, xs)
        else:
            e, x = state[1], state[2]
            rchart = charts[e.key()]
            hp = e.hyperplanes
            field = lambda tt, xx: relaxed_local_field(rchart, phi, xx, u_fn(tt))
            watches = [
                _Watch(lambda xx: hp.guard_value(xx) - epsilon, +1, ("top",)),
                _Watch(hp.guard_value, -1, ("bottom",)),
            ]

            def rep(xx, _e=e, _hp=hp):
                g = _hp.guard_value(xx)
                layer = g if 0.0 < g < epsilon else None
                return QuotientPoint(_e.source, xx, epsilon_layer=layer)

            path, trig = _run_leg(field, x, t, _leg_end(t, T, bps), cfg,
                                  watches,
                                  membership=rchart.local_domain_membership,
                                  step_cap=lambda tt, xx: epsilon / 4.0,
                                  event_tol=cfg.event_tol)
            traj.meta["nfev"] += path.nfev
            _append_piece(traj, path, rep)
            t = path.t1
            if trig is None:
                state = ("strip", e, path(path.t1)) if t < T - 1e-15 else None
                continue
            if trig.tag[0] == "top":
                g = hp.guard_value(trig.x)
                xs = trig.x - hp.g_normal * (g - epsilon)
                y = attach_map(e, xs)
                traj.events.append(Event(t, "Crossing", e.key(),
                                         {"layer_depth": epsilon, "exit": "top"}))
                state = ("interior", e.target, y)
            else:
                xs = trig.x - hp.g_normal * hp.guard_value(trig.x)
                traj.events.append(Event(t, "Crossing", e.key(),
                                         {"layer_depth": 0.0, "exit": "bottom"}))
                state = ("interior", e.source, xs)
    return traj
