"""``admissibility-lab <experiment> [--config FILE] [--N N] [--n-list a,b,c] [--out DIR]``.

Exit status: 0 when the experiment ran (whatever the verdict), 1 when a
check that must hold failed or the numerics broke down, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .experiments import EXPERIMENTS, ConfigError, RunConfig, run

log = logging.getLogger("admissibility_lab")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="admissibility-lab",
                                description="Admissibility and feedback experiments on diagonal systems.")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", help="JSON run configuration; flags override its entries")
    p.add_argument("--N", type=int, dest="N", help="truncation size")
    p.add_argument("--n-list", type=_int_list, dest="n_list", help="witness indices, e.g. 16,256")
    p.add_argument("--out", help="output directory (default: results)")
    p.add_argument("--seed", type=int)
    p.add_argument("--family", help="criterion-scan family: example1-A0, example2-A, example2-Aprime")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = RunConfig.from_sources(args.experiment, args.config, N=args.N, n_list=args.n_list,
                                     out=args.out, seed=args.seed, family=args.family)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"admissibility-lab: error: {exc}", file=sys.stderr)
        return 2
    try:
        result = run(cfg)
    except (ArithmeticError, OSError, ValueError) as exc:
        print(f"admissibility-lab: {cfg.experiment} failed: {exc}", file=sys.stderr)
        return 1
    for name, verdict in result.verdicts.items():
        print(f"{name}: {verdict}")
    for c in result.checks:
        print(f"  [{'ok' if c['passed'] else 'FAIL'}] {c['name']}: {c['value']}")
    print(f"wrote {cfg.out}/result.json ({result.wall_time:.2f} s)")
    if result.failures:
        print(f"failed checks: {', '.join(result.failures)}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
