"""Command-line entry point.

``bench <experiment> [--config PATH] [--seed N] [--trials N]
[--paper-scale] [--out DIR]`` runs one experiment and writes
``results.csv``, ``results.json`` and ``resolved-config.txt`` to the
output directory.  ``bench complexity --algorithm NAME --dims I1xI2x...``
prints a per-iteration multiplication count.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, replace

from .complexity import ALGORITHMS, complexity_estimate
from .config import EXPERIMENTS, default_config, load, resolve, to_text
from .experiments import run_experiment
from .io import write_outputs


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bench",
        description="Tensor decomposition benchmark experiments (CSV/JSON output).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--trials", type=int, help="trials per cell override")
        p.add_argument("--paper-scale", action="store_true",
                       help="restore the full published trial counts")
        p.add_argument("--out", help="output directory (default bench-results/<experiment>)")

    c = sub.add_parser("complexity", help="evaluate a per-iteration multiplication count")
    c.add_argument("--algorithm", required=True, choices=ALGORITHMS)
    c.add_argument("--dims", required=True, help="tensor size, e.g. 10x10x10")
    c.add_argument("-R", "--rank", type=int, default=None)
    c.add_argument("-k", "--svd-iterations", type=int, default=None, dest="k")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "complexity":
        dims = tuple(int(d) for d in args.dims.split("x"))
        est = complexity_estimate(args.algorithm, dims, rank=args.rank, k=args.k)
        print(json.dumps(asdict(est)))
        return 0

    if args.config:
        config = load(args.config)
        if config.experiment != args.command:
            print(
                f"config names experiment {config.experiment!r} but the "
                f"command line asked for {args.command!r}",
                file=sys.stderr,
            )
            return 2
    else:
        config = default_config(args.command)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.paper_scale:
        overrides["paper_scale"] = True
    if args.out:
        overrides["out"] = args.out
    if overrides:
        config = replace(config, **overrides)

    resolved = resolve(config)
    rows = run_experiment(resolved)
    outdir = resolved.out or f"bench-results/{resolved.experiment}"
    paths = write_outputs(rows, to_text(resolved), outdir)
    summary = [r for r in rows if not r.trial and not r.iteration]
    for row in summary:
        labels = ":".join(filter(None, (row.shape, row.rank, row.snr_db, row.algorithm)))
        print(f"{row.experiment} {labels} {row.statistic} = {row.value:.6g}")
    print(f"wrote {paths['csv']}, {paths['json']}, {paths['config']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
