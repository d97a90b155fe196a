"""Static figure rendering for hybridsim CLI outputs.

Reads the trajectory CSV (``t,mode,x_1,...,x_n,event``) and sweep JSON
files written by the ``hybridsim`` command line tool and renders them as
PNG/SVG figures.  This package never recomputes dynamics: the simulation
output files are the single source of truth.

Three figure kinds are supported:

``phase``
    Phase portrait (x_i vs x_j, default the first two coordinates).
    Continuous legs are drawn solid per mode; reset jumps appear as
    dashed connectors between the pre- and post-jump states.
``timeseries``
    Every coordinate against time, one solid line per coordinate, with
    event times marked.
``convergence``
    log-log plot of sweep errors against epsilon with the fitted line
    and a reference slope-1 guide, annotated with the fitted order.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = [
    "PlotJob",
    "SchemaError",
    "Trajectory",
    "SweepData",
    "load_trajectory_csv",
    "load_sweep_json",
    "render",
]

TRAJECTORY_SCHEMA_VERSION = 1
SWEEP_SCHEMA_VERSION = 1

# Fixed style so identical inputs always produce identical bytes.
_RC = {
    "figure.figsize": (6.0, 4.5),
    "figure.dpi": 100,
    "savefig.dpi": 100,
    "svg.hashsalt": "hybridsim-plots",
    "path.simplify": False,
}

_MODE_COLORS = ("tab:blue", "tab:orange", "tab:green", "tab:red",
                "tab:purple", "tab:brown", "tab:pink", "tab:gray")


class SchemaError(ValueError):
    """Input file does not conform to the documented CLI schema."""


@dataclass(frozen=True)
class PlotJob:
    """One rendering request.

    ``axes`` selects coordinate indices (1-based, matching the CSV
    column names ``x_1, x_2, ...``) for the phase portrait.
    """

    input_path: str
    kind: str
    output_path: str
    axes: tuple = (1, 2)
    title: Optional[str] = None

    _KINDS = ("phase", "timeseries", "convergence")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise SchemaError(
                f"unknown plot kind {self.kind!r}; expected one of {self._KINDS}")
        if len(self.axes) != 2 or any(int(a) < 1 for a in self.axes):
            raise SchemaError("axes must be two 1-based coordinate indices")

    @classmethod
    def from_dict(cls, d: dict) -> "PlotJob":
        if not isinstance(d, dict):
            raise SchemaError("job must be a JSON object")
        try:
            input_path = d["input_path"]
            kind = d["kind"]
            output_path = d["output_path"]
        except KeyError as exc:
            raise SchemaError(f"job is missing required field {exc.args[0]!r}")
        axes = tuple(int(a) for a in d.get("axes", (1, 2)))
        return cls(input_path=str(input_path), kind=str(kind),
                   output_path=str(output_path), axes=axes,
                   title=d.get("title"))


@dataclass
class Trajectory:
    """Parsed trajectory CSV: times, mode labels, states, event names."""

    t: np.ndarray
    mode: np.ndarray
    x: np.ndarray          # shape (len(t), dim)
    event: list            # event name per row, "" for plain samples
    dim: int = field(init=False)

    def __post_init__(self):
        self.dim = self.x.shape[1]


@dataclass
class SweepData:
    """Parsed sweep JSON: epsilon grid, errors, and the fitted slope."""

    epsilons: np.ndarray
    errors: np.ndarray
    slope: Optional[float]
    intercept: Optional[float]
    scenario: str
    reference: str
    notes: list


def load_trajectory_csv(path) -> Trajectory:
    """Parse a trajectory CSV written by ``hybridsim simulate``."""
    path = Path(path)
    try:
        raw = path.read_text()
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}")
    rows = list(csv.reader(raw.splitlines()))
    if not rows:
        raise SchemaError(f"{path}: empty file, expected a trajectory CSV")
    header = rows[0]
    if (len(header) < 4 or header[0] != "t" or header[1] != "mode"
            or header[-1] != "event"
            or any(h != f"x_{i + 1}" for i, h in enumerate(header[2:-1]))):
        raise SchemaError(
            f"{path}: header {header!r} does not match the trajectory CSV "
            "schema 't,mode,x_1,...,x_n,event'")
    dim = len(header) - 3
    body = rows[1:]
    if not body:
        raise SchemaError(f"{path}: trajectory contains no sample rows")
    t = np.empty(len(body))
    mode = np.empty(len(body), dtype=int)
    x = np.empty((len(body), dim))
    event = []
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise SchemaError(f"{path}: row {i + 2} has {len(row)} fields, "
                              f"expected {len(header)}")
        try:
            t[i] = float(row[0])
            mode[i] = int(row[1])
            x[i] = [float(v) for v in row[2:-1]]
        except ValueError as exc:
            raise SchemaError(f"{path}: row {i + 2}: {exc}")
        event.append(row[-1])
    return Trajectory(t=t, mode=mode, x=x, event=event)


def load_sweep_json(path) -> SweepData:
    """Parse a sweep JSON report written by ``hybridsim sweep``."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})")
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: expected a JSON object")
    version = doc.get("schema_version")
    if version != SWEEP_SCHEMA_VERSION:
        raise SchemaError(f"{path}: schema_version {version!r}, "
                          f"expected {SWEEP_SCHEMA_VERSION}")
    for key in ("epsilons", "errors"):
        if key not in doc or not isinstance(doc[key], list):
            raise SchemaError(f"{path}: missing or malformed field {key!r}")
    eps = np.asarray(doc["epsilons"], dtype=float)
    err = np.asarray(doc["errors"], dtype=float)
    if eps.size == 0 or eps.size != err.size:
        raise SchemaError(f"{path}: epsilons/errors must be equal-length and "
                          "non-empty")
    return SweepData(epsilons=eps, errors=err,
                     slope=doc.get("slope"), intercept=doc.get("intercept"),
                     scenario=str(doc.get("scenario", "")),
                     reference=str(doc.get("reference", "")),
                     notes=list(doc.get("notes", [])))


def _legs(traj: Trajectory):
    """Split row indices into maximal same-mode legs."""
    breaks = np.flatnonzero(traj.mode[1:] != traj.mode[:-1]) + 1
    edges = [0, *breaks.tolist(), len(traj.t)]
    return [(edges[i], edges[i + 1]) for i in range(len(edges) - 1)]


def _mode_color(mode: int) -> str:
    return _MODE_COLORS[mode % len(_MODE_COLORS)]


def _phase_figure(traj: Trajectory, axes: Sequence[int], title):
    i, j = int(axes[0]) - 1, int(axes[1]) - 1
    if max(i, j) >= traj.dim:
        raise SchemaError(f"axes {tuple(axes)} out of range for a "
                          f"{traj.dim}-dimensional trajectory")
    fig, ax = plt.subplots()
    seen_modes = set()
    legs = _legs(traj)
    for (a, b) in legs:
        m = int(traj.mode[a])
        label = f"mode {m}" if m not in seen_modes else None
        seen_modes.add(m)
        ax.plot(traj.x[a:b, i], traj.x[a:b, j], "-",
                color=_mode_color(m), label=label)
    # Reset jumps: dashed connector from the last pre-jump state to the
    # first post-jump state.
    for (a, _), (p, _) in zip(legs[1:], legs[:-1]):
        pre = traj.x[a - 1] if a > 0 else None
        if pre is None:
            continue
        ax.plot([pre[i], traj.x[a, i]], [pre[j], traj.x[a, j]], "--",
                color="0.4", linewidth=1.0)
        ax.plot([traj.x[a, i]], [traj.x[a, j]], "o", color=_mode_color(
            int(traj.mode[a])), markersize=3.5)
    ax.set_xlabel(f"x_{i + 1}")
    ax.set_ylabel(f"x_{j + 1}")
    ax.set_title(title or "phase portrait")
    if seen_modes:
        ax.legend(loc="best")
    ax.grid(True, alpha=0.3)
    return fig


def _timeseries_figure(traj: Trajectory, title):
    fig, ax = plt.subplots()
    for k in range(traj.dim):
        ax.plot(traj.t, traj.x[:, k], "-", label=f"x_{k + 1}")
    for idx, name in enumerate(traj.event):
        if name:
            ax.axvline(traj.t[idx], color="0.6", linewidth=0.7,
                       linestyle=":")
    ax.set_xlabel("t")
    ax.set_ylabel("state")
    ax.set_title(title or "time series")
    ax.legend(loc="best")
    ax.grid(True, alpha=0.3)
    return fig


def _convergence_figure(sweep: SweepData, title):
    fig, ax = plt.subplots()
    ax.loglog(sweep.epsilons, sweep.errors, "o", color="tab:blue",
              label="sup distance")
    if sweep.slope is not None and sweep.intercept is not None:
        fit = 10.0 ** (sweep.intercept + sweep.slope
                       * np.log10(sweep.epsilons))
        ax.loglog(sweep.epsilons, fit, "-", color="tab:blue",
                  label=f"fit, order ≈ {sweep.slope:.2f}")
    # Slope-1 guide anchored at the coarsest data point.
    guide = sweep.errors[0] * sweep.epsilons / sweep.epsilons[0]
    ax.loglog(sweep.epsilons, guide, "--", color="0.5", label="slope 1 guide")
    if sweep.slope is not None:
        ax.annotate(f"order ≈ {sweep.slope:.2f}",
                    xy=(0.05, 0.9), xycoords="axes fraction")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("sup distance to reference")
    ax.set_title(title or (f"convergence: {sweep.scenario}"
                           if sweep.scenario else "convergence"))
    ax.legend(loc="lower right")
    ax.grid(True, which="both", alpha=0.3)
    return fig


def render(job: PlotJob) -> str:
    """Render one job to its output image file; returns the output path."""
    with plt.rc_context(_RC):
        if job.kind == "phase":
            fig = _phase_figure(load_trajectory_csv(job.input_path),
                                job.axes, job.title)
        elif job.kind == "timeseries":
            fig = _timeseries_figure(load_trajectory_csv(job.input_path),
                                     job.title)
        else:
            fig = _convergence_figure(load_sweep_json(job.input_path),
                                      job.title)
        try:
            # Strip the library-version metadata chunk so output bytes
            # depend only on the input data and the pinned style.
            meta = ({"Software": None}
                    if str(job.output_path).lower().endswith(".png")
                    else None)
            fig.savefig(job.output_path, metadata=meta)
        finally:
            plt.close(fig)
    return job.output_path
