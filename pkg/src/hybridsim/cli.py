"""Command-line entry point.

Subcommands: validate, check-transversality, simulate, sweep,
list-scenarios, dump-charts.  All structured outputs carry a
schema_version field; trajectory CSV uses the column layout
``t, mode, x_1..x_n, event`` with 17 significant digits.

Exit codes: 0 success, 2 validation hard failure, 3 numerical failure,
4 bad usage.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import errors
from .filippov import check_transversality
from .integrate import IntegratorConfig
from .model import ValidationConfig, validate_system
from .charts import build_chart, build_relaxed_chart, sampled_roundtrip_error
from .relaxation import make_transition
from .scenarios import SCENARIOS, get_scenario, load_scenario
from .sim import (QuotientPoint, Trajectory, simulate_execution,
                  simulate_filippov, simulate_relaxed)
from .sweep import SweepSpec, run_sweep

TRAJECTORY_SCHEMA_VERSION = 1
SWEEP_SCHEMA_VERSION = 1
REPORT_SCHEMA_VERSION = 1
CHARTS_SCHEMA_VERSION = 1

_NUMERICAL = (errors.StepSizeUnderflow, errors.NewtonDivergence,
              errors.TangentDegenerate, errors.NonUniqueContinuation,
              errors.LeftAllDomains, errors.NoSignChange,
              errors.ChartSingular, errors.DivisionDegenerate)
_VALIDATION = (errors.StructuralError, errors.TransversalityViolation)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract reserves 4 for that."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(4)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _jsonify(obj):
    if isinstance(obj, np.ndarray):
        return [float(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    return obj


def _parse_params(pairs):
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise SystemExit(4)
        k, v = item.split("=", 1)
        try:
            out[k] = float(v)
        except ValueError:
            out[k] = v
    return out


def _scenario(args):
    name = args.scenario
    if name.endswith(".json") or "/" in name:
        return load_scenario(name)
    return get_scenario(name, **_parse_params(getattr(args, "param", None)))


def _config(args) -> IntegratorConfig:
    kw = {}
    if getattr(args, "method", None):
        kw["method"] = args.method
    if getattr(args, "rtol", None) is not None:
        kw["rel_tol"] = args.rtol
    if getattr(args, "atol", None) is not None:
        kw["abs_tol"] = args.atol
    if getattr(args, "max_step", None) is not None:
        kw["max_step"] = args.max_step
    return IntegratorConfig(**kw)


def _write(text: str, path):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def trajectory_csv(tr: Trajectory, T: float, samples: int = 1000) -> str:
    """Rows on a uniform grid, with one extra row per event (the state
    sampled just after the event; the kind goes in the event column)."""
    n = len(tr.points[0].coords) if tr.points else 0
    header = ",".join(["t", "mode"] + [f"x_{i+1}" for i in range(n)] + ["event"])
    if not tr.points:
        return header + "\n"
    rows = [(float(t), "") for t in np.linspace(0.0, T, samples)]
    rows += [(float(ev.time), ev.kind) for ev in tr.events]
    rows.sort(key=lambda r: (r[0], r[1]))
    lines = [header]
    for t, kind in rows:
        p = tr.sample(t)
        xs = ",".join(_fmt(v) for v in p.coords)
        lines.append(f"{_fmt(t)},{p.mode},{xs},{kind}")
    return "\n".join(lines) + "\n"


def trajectory_json(tr: Trajectory, scenario: str, engine: str, T: float,
                    samples: int = 1000) -> dict:
    grid = np.linspace(0.0, T, samples)
    pts = [tr.sample(t) for t in grid]
    return {
        "schema_version": TRAJECTORY_SCHEMA_VERSION,
        "scenario": scenario,
        "engine": engine,
        "T": float(T),
        "t": [float(t) for t in grid],
        "mode": [p.mode for p in pts],
        "x": [[float(v) for v in p.coords] for p in pts],
        "events": [{"time": float(ev.time), "kind": ev.kind,
                    "edge": _jsonify(ev.edge), "meta": _jsonify(ev.meta)}
                   for ev in tr.events],
        "meta": _jsonify(tr.meta),
    }


def _dump(payload: dict, path):
    _write(json.dumps(payload, indent=2, sort_keys=True) + "\n", path)


def _cmd_list_scenarios(args):
    payload = {"schema_version": REPORT_SCHEMA_VERSION,
               "scenarios": sorted(SCENARIOS)}
    _dump(payload, args.output)
    return 0


def _cmd_validate(args):
    sc = _scenario(args)
    rep = validate_system(sc.system, ValidationConfig())
    payload = {"schema_version": REPORT_SCHEMA_VERSION,
               "scenario": sc.name, "report": _jsonify(rep.to_dict())}
    _dump(payload, args.output)
    return 2 if rep.hard_failures else 0


def _cmd_check_transversality(args):
    sc = _scenario(args)
    rep = check_transversality(sc.system, ValidationConfig())
    payload = {"schema_version": REPORT_SCHEMA_VERSION,
               "scenario": sc.name, "report": _jsonify(rep.to_dict())}
    _dump(payload, args.output)
    return 0 if rep.ok else 2


def _cmd_simulate(args):
    sc = _scenario(args)
    T = args.T if args.T is not None else sc.default_T
    cfg = _config(args)
    x0 = sc.default_x0
    if args.x0 is not None:
        coords = tuple(float(v) for v in args.x0.split(","))
        mode = args.mode if args.mode is not None else sc.default_x0.mode
        x0 = QuotientPoint(mode, coords)
    if args.engine == "relaxed":
        if args.eps is None:
            raise SystemExit(4)
        phi = make_transition(args.transition, "hybrid")
        tr = simulate_relaxed(sc.system, args.eps, x0, u=sc.default_u, T=T,
                              config=cfg, transition=phi)
    elif args.engine == "execution":
        tr = simulate_execution(sc.system, x0, u=sc.default_u, T=T, config=cfg)
    else:
        tr = simulate_filippov(sc.system, x0, u=sc.default_u, T=T, config=cfg)
    if args.format == "csv":
        _write(trajectory_csv(tr, T, args.samples), args.output)
    else:
        _dump(trajectory_json(tr, sc.name, args.engine, T, args.samples),
              args.output)
    return 0


def _cmd_sweep(args):
    sc = _scenario(args)
    spec = SweepSpec(epsilons=tuple(args.eps) if args.eps else
                     (1e-1, 3e-2, 1e-2, 3e-3, 1e-3),
                     reference=args.reference, sample_count=args.samples)
    phi = make_transition(args.transition, "hybrid")
    rep = run_sweep(sc, spec, config=_config(args), T=args.T,
                    transition=phi)
    payload = {"schema_version": SWEEP_SCHEMA_VERSION}
    payload.update(_jsonify(rep.to_dict()))
    _dump(payload, args.output)
    return 0


def _cmd_dump_charts(args):
    sc = _scenario(args)
    rng = np.random.default_rng(0)
    entries = []
    for e in sc.system.edges:
        chart = build_chart(sc.system, e)
        entry = {
            "edge": _jsonify(e.key()),
            "guard_normal": _jsonify(e.hyperplanes.g_normal),
            "guard_offset": float(e.hyperplanes.g_offset),
            "image_normal": _jsonify(e.hyperplanes.r_normal),
            "image_offset": float(e.hyperplanes.r_offset),
            "roundtrip_error": float(sampled_roundtrip_error(chart, rng)),
        }
        if args.eps is not None:
            rchart = build_relaxed_chart(chart, args.eps)
            entry["relaxed_roundtrip_error"] = float(
                sampled_roundtrip_error(rchart, rng))
        entries.append(entry)
    payload = {"schema_version": CHARTS_SCHEMA_VERSION,
               "scenario": sc.name, "charts": entries}
    _dump(payload, args.output)
    return 0


def _add_common(p, scenario=True):
    if scenario:
        p.add_argument("scenario",
                       help="registry name or path to a scenario JSON file")
        p.add_argument("--param", action="append", metavar="K=V",
                       help="scenario parameter override")
    p.add_argument("--output", "-o", default=None,
                   help="output path (default stdout)")


def _add_numerics(p):
    p.add_argument("--method", choices=["rk45", "be"], default=None)
    p.add_argument("--rtol", type=float, default=None)
    p.add_argument("--atol", type=float, default=None)
    p.add_argument("--max-step", dest="max_step", type=float, default=None)
    p.add_argument("--transition", choices=["smooth-exp", "poly-c2"],
                   default="smooth-exp")
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--samples", type=int, default=1000)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="hybridsim",
                 description="Hybrid systems on the quotient space: exact "
                             "switched solutions, relaxations, sweeps.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list-scenarios", help="list registered scenarios")
    _add_common(p, scenario=False)
    p.set_defaults(fn=_cmd_list_scenarios)

    p = sub.add_parser("validate", help="structural and assumption checks")
    _add_common(p)
    p.set_defaults(fn=_cmd_validate)

    p = sub.add_parser("check-transversality",
                       help="sampled guard-transversality report")
    _add_common(p)
    p.set_defaults(fn=_cmd_check_transversality)

    p = sub.add_parser("simulate", help="run one trajectory")
    _add_common(p)
    _add_numerics(p)
    p.add_argument("--engine", choices=["filippov", "execution", "relaxed"],
                   default="filippov")
    p.add_argument("--eps", type=float, default=None,
                   help="layer width (relaxed engine)")
    p.add_argument("--x0", default=None, help="comma-separated coordinates")
    p.add_argument("--mode", type=int, default=None)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("sweep", help="epsilon-convergence sweep")
    _add_common(p)
    _add_numerics(p)
    p.add_argument("--eps", type=float, action="append", default=None,
                   help="epsilon value (repeatable, strictly decreasing)")
    p.add_argument("--reference", choices=["filippov", "finest-eps"],
                   default="filippov")
    p.set_defaults(fn=_cmd_sweep, samples=2000)

    p = sub.add_parser("dump-charts", help="chart data and round-trip errors")
    _add_common(p)
    p.add_argument("--eps", type=float, default=None,
                   help="also dump relaxed charts at this layer width")
    p.set_defaults(fn=_cmd_dump_charts)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as ex:
        return 4 if ex.code not in (0,) else 0
    try:
        return args.fn(args)
    except SystemExit as ex:
        return ex.code if isinstance(ex.code, int) else 4
    except _VALIDATION as ex:
        sys.stderr.write(f"validation failure: {ex}\n")
        return 2
    except _NUMERICAL as ex:
        sys.stderr.write(f"numerical failure: {type(ex).__name__}: {ex}\n")
        return 3
    except (ValueError, KeyError, FileNotFoundError, json.JSONDecodeError) as ex:
        # bad scenario files, unknown names, schema mismatches
        sys.stderr.write(f"error: {ex}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
