"""Tests for the batch figure renderer.

These tests exercise the renderer against hand-written files that follow
the hybridsim CLI schemas, so they run without the simulation package
installed.
"""

import json
import subprocess
import sys

import pytest

from plots import (PlotJob, SchemaError, load_sweep_json,
                   load_trajectory_csv, render)
from plots.__main__ import main

TRAJ_CSV = """t,mode,x_1,x_2,event
0,1,1,0,
0.25,1,0.7,-1.2,
0.5,1,0.1,-2.4,
0.52,2,0,1.1,ResetJump
0.75,2,0.2,0.6,
1,2,0.3,0.1,
"""

SWEEP_JSON = {
    "schema_version": 1,
    "scenario": "crossing_linear",
    "reference": "filippov",
    "epsilons": [1e-1, 3e-2, 1e-2],
    "errors": [4.3e-2, 1.3e-2, 4.3e-3],
    "cauchy": [3.0e-2, 8.7e-3],
    "slope": 0.97,
    "intercept": -0.83,
    "notes": [],
}


@pytest.fixture
def traj_path(tmp_path):
    p = tmp_path / "traj.csv"
    p.write_text(TRAJ_CSV)
    return p


@pytest.fixture
def sweep_path(tmp_path):
    p = tmp_path / "sweep.json"
    p.write_text(json.dumps(SWEEP_JSON))
    return p


def test_load_trajectory_csv(traj_path):
    traj = load_trajectory_csv(traj_path)
    assert traj.dim == 2
    assert len(traj.t) == 6
    assert list(traj.mode) == [1, 1, 1, 2, 2, 2]
    assert traj.event[3] == "ResetJump"
    assert traj.event[0] == ""


def test_load_trajectory_rejects_bad_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("time,x,y\n0,1,2\n")
    with pytest.raises(SchemaError):
        load_trajectory_csv(p)


def test_load_trajectory_rejects_header_only(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text("t,mode,x_1,x_2,event\n")
    with pytest.raises(SchemaError):
        load_trajectory_csv(p)


def test_load_trajectory_rejects_json_file(sweep_path):
    with pytest.raises(SchemaError):
        load_trajectory_csv(sweep_path)


def test_load_sweep_json(sweep_path):
    sweep = load_sweep_json(sweep_path)
    assert sweep.slope == pytest.approx(0.97)
    assert len(sweep.epsilons) == 3


def test_load_sweep_rejects_wrong_schema_version(tmp_path):
    p = tmp_path / "sweep.json"
    p.write_text(json.dumps({**SWEEP_JSON, "schema_version": 99}))
    with pytest.raises(SchemaError):
        load_sweep_json(p)


def test_load_sweep_rejects_csv_file(traj_path):
    with pytest.raises(SchemaError):
        load_sweep_json(traj_path)


@pytest.mark.parametrize("kind", ["phase", "timeseries"])
def test_render_trajectory_kinds(traj_path, tmp_path, kind):
    out = tmp_path / f"{kind}.png"
    render(PlotJob(input_path=str(traj_path), kind=kind,
                   output_path=str(out)))
    assert out.stat().st_size > 0


def test_render_convergence(sweep_path, tmp_path):
    out = tmp_path / "conv.png"
    render(PlotJob(input_path=str(sweep_path), kind="convergence",
                   output_path=str(out)))
    assert out.stat().st_size > 0


def test_render_is_deterministic(traj_path, tmp_path):
    blobs = []
    for i in (1, 2):
        out = tmp_path / f"phase{i}.png"
        render(PlotJob(input_path=str(traj_path), kind="phase",
                       output_path=str(out)))
        blobs.append(out.read_bytes())
    assert blobs[0] == blobs[1]


def test_render_rejects_bad_axes(traj_path, tmp_path):
    with pytest.raises(SchemaError):
        render(PlotJob(input_path=str(traj_path), kind="phase",
                       output_path=str(tmp_path / "o.png"), axes=(1, 7)))


def test_job_rejects_unknown_kind():
    with pytest.raises(SchemaError):
        PlotJob(input_path="a", kind="surface", output_path="b")


def test_main_inline_json(traj_path, tmp_path, capsys):
    out = tmp_path / "cli.png"
    job = {"input_path": str(traj_path), "kind": "phase",
           "output_path": str(out)}
    assert main([json.dumps(job)]) == 0
    assert out.stat().st_size > 0


def test_main_flags(traj_path, tmp_path):
    out = tmp_path / "flags.png"
    assert main(["--input", str(traj_path), "--kind", "timeseries",
                 "--output", str(out)]) == 0
    assert out.stat().st_size > 0


def test_main_schema_mismatch_exit_code(sweep_path, tmp_path):
    job = {"input_path": str(sweep_path), "kind": "phase",
           "output_path": str(tmp_path / "bad.png")}
    assert main([json.dumps(job)]) == 2


def test_main_missing_args_exit_code():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 4


def test_module_invocation(traj_path, tmp_path):
    out = tmp_path / "mod.png"
    job = {"input_path": str(traj_path), "kind": "phase",
           "output_path": str(out)}
    r = subprocess.run([sys.executable, "-m", "plots", json.dumps(job)],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert out.stat().st_size > 0
