"""Command line entry point: ``relweyl <experiment> [--config FILE] ...``.

Exit codes: 0 success, 2 configuration error, 3 admissibility or domain
error, 4 numeric or output failure.
"""

from __future__ import annotations

import argparse
import sys

from relweyl.errors import RelWeylError
from relweyl.lab import config as cfgmod
from relweyl.lab.experiments import run
from relweyl.lab.report import Report, emit
from relweyl.unbounded import is_unbounded

COMMANDS = {
    "exponents": "exponents",
    "trace-neg": "trace-neg",
    "classical": "classical",
    "weyl": "weyl",
    "relative": "relative-weyl",
    "gse-scaling": "gse-scaling",
    "ims-check": "ims-check",
    "mollify-slopes": "mollify-slopes",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relweyl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, kind in COMMANDS.items():
        p = sub.add_parser(name, help=f"run the {kind} experiment")
        p.add_argument("--config", help="YAML or JSON experiment file (defaults are used without one)")
        p.add_argument("--out", help="directory for the report files")
        p.add_argument("--format", choices=("csv", "json"), default="json")
        p.add_argument("--threads", type=int, default=1, help="worker threads for channel solves")
        p.add_argument("--seed", type=int, help="seed for sampled checks (overrides the config)")
    return parser


def _fmt(x) -> str:
    if is_unbounded(x):
        return "inf"
    if isinstance(x, float):
        return f"{x:.6g}"
    return "" if x is None else str(x)


def render(report: Report) -> str:
    lines = [f"# {report.kind}"]
    widths = {c: max(len(c), *(len(_fmt(r.get(c))) for r in report.rows)) if report.rows else len(c)
              for c in report.columns}
    lines.append("  ".join(c.rjust(widths[c]) for c in report.columns))
    for r in report.rows:
        lines.append("  ".join(_fmt(r.get(c)).rjust(widths[c]) for c in report.columns))
    for key in sorted(report.summary):
        val = report.summary[key]
        if isinstance(val, dict):
            inner = ", ".join(f"{k}={_fmt(v)}" for k, v in sorted(val.items())
                              if not isinstance(v, (list, dict)))
            lines.append(f"{key}: {inner}")
        elif isinstance(val, list):
            if val:
                lines.append(f"{key}: " + "; ".join(_fmt(v) for v in val))
        else:
            lines.append(f"{key}: {_fmt(val)}")
    return "\n".join(lines)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    kind = COMMANDS[args.command]
    try:
        if args.config:
            cfg = cfgmod.load_config(args.config, kind)
        else:
            cfg = cfgmod.normalize({}, kind)
        if args.seed is not None:
            cfg["seed"] = args.seed
        report = run(cfg, threads=max(1, args.threads))
        print(render(report))
        if args.out:
            path = emit(report, args.format, args.out)
            print(f"wrote {path}")
    except RelWeylError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
