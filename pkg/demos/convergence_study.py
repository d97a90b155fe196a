"""End-to-end O(epsilon) convergence study through the command line tools.

Runs `hybridsim sweep` on two scenarios, prints the fitted log-log
slopes (expected ~ 1.0), and renders the convergence figures with the
`plots` package — exercising exactly the CSV/JSON interfaces a user
would script against, with no library imports of the simulator.

Run:  python demos/convergence_study.py
"""

import json
import subprocess
import sys
from pathlib import Path

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

EPS = ["1e-1", "3e-2", "1e-2", "3e-3", "1e-3"]


def run(*argv):
    r = subprocess.run([sys.executable, "-m", *argv],
                       capture_output=True, text=True)
    if r.returncode != 0:
        sys.exit(f"command {' '.join(argv)} failed:\n{r.stderr}")
    return r.stdout


for scenario, reference in (("crossing_linear", "filippov"),
                            ("crossing_affine", "filippov"),
                            ("repelling_relay", "finest-eps")):
    out = OUT / f"sweep_{scenario}.json"
    args = ["hybridsim.cli", "sweep", scenario, "--reference", reference,
            "-o", str(out)]
    for e in EPS:
        args += ["--eps", e]
    run(*args)
    doc = json.loads(out.read_text())
    slope = doc["slope"]
    print(f"{scenario:>18} (reference={reference}): "
          f"slope = {slope:.4f}" if slope is not None else
          f"{scenario:>18}: no slope ({'; '.join(doc['notes'])})")
    if reference == "finest-eps":
        print(f"{'':>18}  cauchy gaps: "
              + ", ".join(f"{c:.3e}" for c in doc["cauchy"]))
    try:
        import plots  # noqa: F401
    except ImportError:
        continue
    img = OUT / f"sweep_{scenario}.png"
    run("plots", json.dumps({"input_path": str(out), "kind": "convergence",
                             "output_path": str(img)}))
    print(f"{'':>18}  wrote {img}")
