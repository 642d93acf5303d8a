"""Command-line driver.

    restrictlab <subcommand> [--config PATH] [--out DIR] [--seed N]
                             [--threads N|auto] [--budget small|default|large]
                             [--surface NAME]

Exit status: 0 on success, 2 on invalid input, 3 when a resource budget is
exceeded. Every run writes its result files plus ``manifest.json`` into the
output directory, each one atomically.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

from . import __version__, kernels
from ._util import atomic_write_text
from .builtins import list_builtins
from .config import BUDGETS, KINDS, load_config
from .errors import ResourceBudgetError, RestrictLabError
from .experiments import dumps, run_experiment

EXIT_OK, EXIT_INVALID, EXIT_BUDGET = 0, 2, 3


def _threads(text):
    if text == "auto":
        return os.cpu_count() or 1
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("threads must be a positive integer or 'auto'") from None
    if n < 1:
        raise argparse.ArgumentTypeError("threads must be a positive integer or 'auto'")
    return n


def _seed(text):
    try:
        s = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("seed must be an integer") from None
    if not 0 <= s < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return s


def _add_globals(p, suppress):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--config", type=Path, default=d(None), help="JSON experiment config")
    p.add_argument("--out", type=Path, default=d(None),
                   help="output directory (default results/<subcommand>)")
    p.add_argument("--seed", type=_seed, default=d(None), help="RNG seed (overrides the config)")
    p.add_argument("--threads", type=_threads, default=d(1), help="worker threads, or 'auto'")
    p.add_argument("--budget", choices=sorted(BUDGETS), default=d("default"),
                   help="resource cap preset")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="restrictlab",
                                 description="Numerical experiments on restriction, decay and "
                                             "sublevel growth for mixed homogeneous surfaces.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _add_globals(ap, suppress=False)
    sub = ap.add_subparsers(dest="command", required=True, metavar="subcommand")
    helps = {
        "volume-growth": "sublevel volumes and growth exponent",
        "knapp": "Knapp family scaling exponents",
        "polytope-norm": "L^p norm of a polygon Fourier transform",
        "decay": "surface-measure Fourier decay along one direction",
        "scan": "decay probe over a hemisphere of directions",
        "hyperbola-demo": "staircase cover of the hyperbola region",
        "triangle-report": "volume, decay and Knapp exponents side by side",
    }
    for kind in KINDS:
        sp = sub.add_parser(kind, help=helps[kind])
        _add_globals(sp, suppress=True)
        if kind not in ("polytope-norm", "hyperbola-demo"):
            sp.add_argument("--surface", help="builtin surface name (overrides the config)")
    lb = sub.add_parser("list-builtins", help="print the builtin surfaces")
    lb.add_argument("--json", action="store_true", help="print JSON instead of a table")
    return ap


def format_builtins(rows) -> str:
    head = f"{'name':<16}{'n':>3}  {'weights':<10}{'formula':<14}{'r=(n-1)/m':<11}flag"
    lines = [head]
    for r in rows:
        w = "-" if r["weights"] is None else "(" + ",".join(map(str, r["weights"])) + ")"
        lines.append(f"{r['name']:<16}{r['n']:>3}  {w:<10}{r['formula']:<14}{str(r['r']):<11}"
                     f"{r['flag']}")
    return "\n".join(lines)


def write_outputs(out_dir: Path, files: dict, cfg, wall: float) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    listing = []
    for name in sorted(files):
        atomic_write_text(out_dir / name, files[name])
        listing.append({"name": name, "sha256": hashlib.sha256(files[name].encode()).hexdigest()})
    manifest = {
        "tool": "restrictlab",
        "version": __version__,
        "experiment": cfg.kind,
        "config_source": cfg.source,
        "config_sha256": cfg.digest(),
        "seeds": [cfg.seed],
        "budget": cfg.budget,
        "backend": kernels.BACKEND,
        "files": listing,
        "wall_time_s": round(wall, 3),
    }
    atomic_write_text(out_dir / "manifest.json", dumps(manifest))
    return manifest


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-builtins":
        rows = list_builtins()
        if args.json:
            print(json.dumps(rows, indent=2, default=str))
        else:
            print(format_builtins(rows))
        return EXIT_OK
    try:
        cfg = load_config(args.command, args.config, seed=args.seed, threads=args.threads,
                          budget=args.budget, surface=getattr(args, "surface", None))
        t0 = time.perf_counter()
        files, summary = run_experiment(cfg)
        wall = time.perf_counter() - t0
        out = args.out if args.out is not None else Path("results") / args.command
        write_outputs(out, files, cfg, wall)
    except ResourceBudgetError as exc:
        print(f"restrictlab: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (RestrictLabError, OSError) as exc:
        print(f"restrictlab: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(json.dumps(summary, indent=2, sort_keys=True, default=str))
    print(f"wrote {len(files) + 1} files to {out}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
