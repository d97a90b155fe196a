"""ODE integration with dense output and bracketed event localization.

Two engines: an adaptive Dormand-Prince 5(4) pair with the standard quartic
continuous extension, and an L-stable backward Euler with damped Newton and
a step-halving error estimate, for the stiff boundary layers of small-eps
relaxed fields.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import NewtonDivergence, NoSignChange, StepSizeUnderflow
from .model import _fd_jacobian

Array = np.ndarray

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                -92097 / 339200, 187 / 2100, 1 / 40])
# quartic dense-output coefficients (interpolant in theta over one step)
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


@dataclass
class IntegratorConfig:
    method: str = "rk45"  # "rk45" | "backward_euler"
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = np.inf
    event_tol: float = 1e-12
    newton_tol: float = 1e-10
    newton_max_iter: int = 30
    first_step: Optional[float] = None

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_step <= 0:
            raise ValueError("max_step must be positive")


class _Segment:
    """One accepted step with its interpolant.

    `h_anchor` is the step length the dense coefficients were built for; a
    truncated segment keeps the original anchor so the interpolant is not
    rescaled.
    """

    __slots__ = ("t0", "t1", "x0", "x1", "Q", "h_anchor", "x_anchor")

    def __init__(self, t0, t1, x0, x1, Q, h_anchor=None, x_anchor=None):
        self.t0 = t0
        self.t1 = t1
        self.x0 = x0
        self.x1 = x1
        self.Q = Q  # (n, 4) dense coefficients scaled by h, or None (linear)
        self.h_anchor = h_anchor if h_anchor is not None else (t1 - t0)
        self.x_anchor = x_anchor if x_anchor is not None else x1

    def clipped(self, t: float, x: Array) -> "_Segment":
        return _Segment(self.t0, t, self.x0, np.asarray(x, float), self.Q,
                        h_anchor=self.h_anchor, x_anchor=self.x_anchor)

    def __call__(self, t: float) -> Array:
        if t <= self.t0:
            return self.x0
        if t >= self.t1:
            return self.x1
        theta = (t - self.t0) / self.h_anchor
        if self.Q is None:
            return self.x0 + theta * (self.x_anchor - self.x0)
        tv = np.array([theta, theta ** 2, theta ** 3, theta ** 4])
        return self.x0 + self.Q @ tv


@dataclass
class DensePath:
    """Piecewise interpolated solution over accepted steps."""

    ts: list = dc_field(default_factory=list)       # accepted nodes
    xs: list = dc_field(default_factory=list)       # states at nodes
    segments: list = dc_field(default_factory=list)
    nfev: int = 0

    @property
    def t0(self) -> float:
        return self.ts[0]

    @property
    def t1(self) -> float:
        return self.ts[-1]

    def __call__(self, t: float) -> Array:
        if not self.segments:
            return self.xs[0]
        i = bisect.bisect_right([s.t0 for s in self.segments], t) - 1
        i = min(max(i, 0), len(self.segments) - 1)
        return self.segments[i](t)

    def truncate(self, t: float, x: Array) -> "DensePath":
        """Path cut at time t (used after event localization)."""
        out = DensePath(nfev=self.nfev)
        for i, s in enumerate(self.segments):
            if s.t1 <= t:
                out.segments.append(s)
            else:
                if s.t0 < t:
                    out.segments.append(s.clipped(t, x))
                break
        out.ts = [self.ts[0]] + [s.t1 for s in out.segments]
        out.xs = [self.xs[0]] + [s.x1 for s in out.segments]
        if not out.segments:
            out.ts = [self.ts[0], t]
            out.xs = [self.xs[0], np.asarray(x, float)]
            out.segments = [_Segment(self.ts[0], t, self.xs[0], np.asarray(x, float), None)]
        return out


def _err_norm(err: Array, x0: Array, x1: Array, cfg: IntegratorConfig) -> float:
    scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(x0), np.abs(x1))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _initial_step(f, t0, x0, cfg, span) -> float:
    if cfg.first_step is not None:
        return min(cfg.first_step, cfg.max_step, span)
    f0 = np.asarray(f(t0, x0), float)
    scale = cfg.abs_tol + cfg.rel_tol * np.abs(x0)
    d0 = float(np.sqrt(np.mean((x0 / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((f0 / scale) ** 2)))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, span)
    x1 = x0 + h0 * f0
    f1 = np.asarray(f(t0 + h0, x1), float)
    d2 = float(np.sqrt(np.mean(((f1 - f0) / scale) ** 2))) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return float(min(100.0 * h0, h1, cfg.max_step, span))


def _rk45_path(f, x0, t_span, cfg: IntegratorConfig,
               step_observer=None, stop_fn=None) -> DensePath:
    t0, t1 = float(t_span[0]), float(t_span[1])
    span = t1 - t0
    if span <= 0:
        raise ValueError("t_span must be increasing")
    x = np.asarray(x0, dtype=float).copy()
    t = t0
    path = DensePath(ts=[t0], xs=[x.copy()])
    h = _initial_step(f, t0, x, cfg, span)
    path.nfev += 1
    k = np.empty((7, x.size))
    fcur = np.asarray(f(t, x), float)
    path.nfev += 1
    while t < t1:
        h = min(h, cfg.max_step, t1 - t)
        if step_observer is not None:
            cap = step_observer(t, x)
            if cap is not None:
                h = min(h, cap)
        if t + h == t:
            raise StepSizeUnderflow(f"step {h:.3g} underflowed at t={t:.6g}")
        k[0] = fcur
        for i in range(1, 7):
            xi = x + h * (k[:i].T @ _A[i])
            k[i] = f(t + _C[i] * h, xi)
        path.nfev += 6
        x_new = x + h * (_B5 @ k)
        err = h * ((_B5 - _B4) @ k)
        en = _err_norm(err, x, x_new, cfg)
        if en <= 1.0:
            Q = h * (k.T @ _P)
            seg = _Segment(t, t + h, x.copy(), x_new.copy(), Q)
            path.segments.append(seg)
            t = t + h
            x = x_new
            fcur = k[6]  # FSAL
            path.ts.append(t)
            path.xs.append(x.copy())
            factor = 5.0 if en == 0.0 else min(5.0, max(0.2, 0.9 * en ** -0.2))
            if stop_fn is not None and stop_fn(seg):
                break
        else:
            factor = max(0.2, 0.9 * en ** -0.2)
        h *= factor
    return path


def _be_path(f, x0, t_span, cfg: IntegratorConfig, jac=None,
             step_observer=None, stop_fn=None) -> DensePath:
    t0, t1 = float(t_span[0]), float(t_span[1])
    span = t1 - t0
    if span <= 0:
        raise ValueError("t_span must be increasing")
    x = np.asarray(x0, dtype=float).copy()
    t = t0
    path = DensePath(ts=[t0], xs=[x.copy()])
    h = cfg.first_step if cfg.first_step is not None else min(span / 100.0, cfg.max_step)

    def newton(tn, xn, hn, guess):
        z = guess.copy()
        for _ in range(cfg.newton_max_iter):
            fz = np.asarray(f(tn, z), float)
            path.nfev += 1
            res = z - xn - hn * fz
            rn = float(np.linalg.norm(res))
            if rn <= cfg.newton_tol * (1.0 + np.linalg.norm(z)):
                return z
            J = jac(tn, z) if jac is not None else _fd_jacobian(lambda w: f(tn, w), z)
            A = np.eye(z.size) - hn * np.asarray(J, float)
            dz = np.linalg.solve(A, res)
            lam = 1.0
            for _ in range(8):  # damping
                z_try = z - lam * dz
                r_try = z_try - xn - hn * np.asarray(f(tn, z_try), float)
                path.nfev += 1
                if np.linalg.norm(r_try) < rn:
                    z = z_try
                    break
                lam *= 0.5
            else:
                z = z - dz
        raise NewtonDivergence(f"Newton stalled at t={tn:.6g}")

    while t < t1:
        h = min(h, cfg.max_step, t1 - t)
        if step_observer is not None:
            cap = step_observer(t, x)
            if cap is not None:
                h = min(h, cap)
        if t + h == t:
            raise StepSizeUnderflow(f"step {h:.3g} underflowed at t={t:.6g}")
        x_full = newton(t + h, x, h, x)
        x_half = newton(t + h / 2, x, h / 2, x)
        x_half2 = newton(t + h, x_half, h / 2, x_half)
        en = _err_norm(x_full - x_half2, x, x_half2, cfg)
        if en <= 1.0:
            seg = _Segment(t, t + h, x.copy(), x_half2.copy(), None)
            path.segments.append(seg)
            t = t + h
            x = x_half2
            path.ts.append(t)
            path.xs.append(x.copy())
            factor = 2.0 if en < 0.25 else 1.0
            if stop_fn is not None and stop_fn(seg):
                break
        else:
            factor = max(0.25, 0.9 / en)
        h *= factor
    return path


def integrate(field: Callable[[float, Array], Array], x0: Array,
              t_span: Sequence[float], config: IntegratorConfig | None = None,
              jac=None, step_observer=None, stop_fn=None) -> DensePath:
    """Adaptive solve of x' = field(t, x) over t_span with dense output.

    `step_observer(t, x)` may return a step cap (used to resolve relaxation
    strips); return None for no cap.  `stop_fn(segment)` is called after each
    accepted step; returning True ends the integration early (the segment is
    kept, so a caller can localize an event inside it).
    """
    cfg = config or IntegratorConfig()
    if cfg.method == "rk45":
        return _rk45_path(field, x0, t_span, cfg, step_observer=step_observer,
                          stop_fn=stop_fn)
    if cfg.method in ("be", "backward_euler"):
        return _be_path(field, x0, t_span, cfg, jac=jac,
                        step_observer=step_observer, stop_fn=stop_fn)
    raise ValueError(f"unknown method {cfg.method!r}")


def locate_event(path: DensePath, event_fn: Callable[[float, Array], float],
                 bracket: Sequence[float], event_tol: float = 1e-12) -> tuple[float, Array]:
    """Root of event_fn(t, x(t)) on the dense path inside a sign-change bracket.

    Bisection with secant acceleration, refined to the bracket's floating
    point resolution; the |event_fn| <= event_tol post-condition is reported
    best-effort when the event function's scale allows it.
    """
    ta, tb = float(bracket[0]), float(bracket[1])
    fa = float(event_fn(ta, path(ta)))
    fb = float(event_fn(tb, path(tb)))
    if fa == 0.0:
        return ta, path(ta)
    if fb == 0.0:
        return tb, path(tb)
    if np.sign(fa) == np.sign(fb):
        raise NoSignChange(f"no sign change on [{ta}, {tb}] ({fa:.3g}, {fb:.3g})")
    t_res = max(1e-15, 4.0 * np.spacing(max(abs(ta), abs(tb))))
    for _ in range(200):
        if tb - ta <= t_res:
            break
        # secant proposal, safeguarded by bisection
        tm = ta - fa * (tb - ta) / (fb - fa)
        lo = ta + 0.1 * (tb - ta)
        hi = tb - 0.1 * (tb - ta)
        if not (lo <= tm <= hi):
            tm = 0.5 * (ta + tb)
        fm = float(event_fn(tm, path(tm)))
        if fm == 0.0:
            ta = tb = tm
            fa = fb = fm
            break
        if np.sign(fm) == np.sign(fa):
            ta, fa = tm, fm
        else:
            tb, fb = tm, fm
    t_star = tb if abs(fb) < abs(fa) else ta
    return t_star, path(t_star)
