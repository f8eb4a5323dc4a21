"""Command line driver.

    dirac-isp run --config problem.json --out results/
    dirac-isp example scalar > scalar.json

Exit codes: 0 all enabled checks pass, 1 some check failed,
2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import CHECKS, load_config
from .driver import numerical_failure_names, run_problem
from .errors import NumericalError, ValidationError
from .examples import DEFAULT_SEED, KINDS, generate_example
from .policy import default_policy
from .recover import PotentialGrid

log = logging.getLogger("dirac_isp")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2, 3


def csv_header(p: int) -> str:
    cols = ["x"]
    for i in range(1, p + 1):
        for j in range(1, p + 1):
            cols += [f"Re v_{i}{j}", f"Im v_{i}{j}"]
    return ", ".join(cols)


def write_potential_csv(path: Path, grid: PotentialGrid) -> None:
    p = grid.p
    lines = [csv_header(p)]
    for x, v in zip(grid.xs, grid.v_closed):
        vals = [x]
        for z in v.reshape(-1):
            vals += [z.real, z.imag]
        lines.append(",".join(format(float(a), ".17g") for a in vals))
    path.write_text("\n".join(lines) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not serialisable: {type(o).__name__}")


def cmd_run(args) -> int:
    try:
        default_policy()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        cfg = load_config(args.config)
        if args.check:
            cfg.set_checks(args.check)
        if args.nystrom_n is not None:
            if args.nystrom_n < 16:
                raise ValidationError(f"--nystrom-n must be >= 16, got {args.nystrom_n}")
            cfg.nystrom_N = args.nystrom_n
        report, grid = run_problem(cfg, seed=args.seed)
    except ValidationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report["config"] = str(args.config)
    write_potential_csv(out / "potential.csv", grid)
    (out / "report.json").write_text(
        json.dumps(report, indent=2, default=_json_default) + "\n")
    for name, c in report["checks"].items():
        log.info("%-16s %s", name, c["status"])
    print(f"{report['status']}: wrote {out / 'potential.csv'} and {out / 'report.json'}")
    if report["numerical_failure"]:
        print("numerical failure: " + ", ".join(numerical_failure_names(report)),
              file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK if report["status"] == "PASS" else EXIT_CHECK_FAILED


def cmd_example(args) -> int:
    cfg = generate_example(args.kind, seed=args.seed, n=args.n, p=args.p)
    text = cfg.dumps()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dirac-isp",
        description="Recover the potential of a skew-self-adjoint Dirac system "
                    "from a generalized Weyl function and verify it.")
    ap.add_argument("--verbose", "-v", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="recover v and run the configured checks")
    r.add_argument("--config", required=True, help="problem description (JSON)")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--check", nargs="+", choices=CHECKS, metavar="NAME",
                   help=f"run exactly these checks ({', '.join(CHECKS)})")
    r.add_argument("--nystrom-n", type=int, default=None, help="Nystrom node count")
    r.add_argument("--seed", type=int, default=0,
                   help="seed for the random J-unitarity sample points")
    r.add_argument("--verbose", "-v", action="store_true", default=argparse.SUPPRESS)
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("example", help="print a ready-to-run config")
    e.add_argument("kind", choices=KINDS)
    e.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed for random-pe")
    e.add_argument("--n", type=int, default=2, help="state dimension for random-pe")
    e.add_argument("--p", type=int, default=1, help="block size for random-pe")
    e.add_argument("--out", default=None, help="write to a file instead of stdout")
    e.set_defaults(func=cmd_example)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
