"""Command line entry point: ``python -m plots <job>``.

The job is either an inline JSON object, a path to a job JSON file, or
flags mirroring the PlotJob fields (``--input``, ``--kind``,
``--output``, ``--axes i j``).

Exit codes: 0 success, 2 schema/data error, 4 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import PlotJob, SchemaError, render


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(4)


def _build_parser() -> _Parser:
    p = _Parser(prog="plots",
                description="Render hybridsim CSV/JSON outputs as figures.")
    p.add_argument("job", nargs="?",
                   help="inline JSON job object or path to a job JSON file")
    p.add_argument("--input", dest="input_path", help="input CSV/JSON file")
    p.add_argument("--kind", choices=("phase", "timeseries", "convergence"))
    p.add_argument("--output", dest="output_path", help="output image file")
    p.add_argument("--axes", nargs=2, type=int, metavar=("I", "J"),
                   help="1-based coordinate indices for phase portraits")
    p.add_argument("--title", help="figure title")
    return p


def _job_from_args(args) -> PlotJob:
    if args.job is not None:
        if any((args.input_path, args.kind, args.output_path)):
            raise SystemExit(4)
        text = args.job
        if not text.lstrip().startswith("{"):
            text = Path(text).read_text()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"job is not valid JSON: {exc}")
        return PlotJob.from_dict(doc)
    if not (args.input_path and args.kind and args.output_path):
        print("error: provide a JSON job or all of --input/--kind/--output",
              file=sys.stderr)
        raise SystemExit(4)
    return PlotJob(input_path=args.input_path, kind=args.kind,
                   output_path=args.output_path,
                   axes=tuple(args.axes) if args.axes else (1, 2),
                   title=args.title)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        out = render(_job_from_args(args))
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
