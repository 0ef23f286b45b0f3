"""Command-line entry point: ``oamturb run`` and ``oamturb validate``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import time
from pathlib import Path

from oamturb.ao import KINDS
from oamturb.experiment import LinkConfig, emit_csv, load_config, run_sweep, simulate_sweep
from oamturb.quantum import write_amplitudes_csv

log = logging.getLogger("oamturb")


def _int_list(s: str) -> tuple[int, ...]:
    return tuple(int(t) for t in s.split(",") if t.strip())


def _scenarios(s: str) -> tuple[str, ...]:
    out = tuple(t.strip() for t in s.split(",") if t.strip())
    bad = [t for t in out if t not in KINDS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown scenario(s) {bad}; choose from {KINDS}")
    return out


def build_config(args) -> LinkConfig:
    cfg = LinkConfig.desk() if args.profile == "desk" else LinkConfig.full()
    if args.config:
        cfg = load_config(args.config, base=cfg)
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.realizations is not None:
        overrides["realizations"] = args.realizations
    if args.scenarios is not None:
        overrides["scenarios"] = args.scenarios
    if args.l0 is not None:
        overrides["l0_list"] = args.l0
    return dataclasses.replace(cfg, **overrides)


def cmd_run(args) -> int:
    cfg = build_config(args)
    log.info("running %d cn2 x %d l0 x %d scenarios, %d realizations, grid %d",
             len(cfg.cn2_list), len(cfg.l0_list), len(cfg.scenarios), cfg.realizations, cfg.grid_n)
    t0 = time.perf_counter()
    cells = simulate_sweep(cfg, workers=args.workers)
    rows = run_sweep(cfg, cells=cells)
    emit_csv(rows, args.output)
    if args.amplitudes:
        out = Path(args.amplitudes)
        out.mkdir(parents=True, exist_ok=True)
        for c in cells:
            write_amplitudes_csv(out / f"amplitudes_cn2-{c.cn2_index:02d}_l0-{c.l0}_{c.scenario}.csv", c.amplitudes)
    log.info("wrote %d rows to %s in %.1f s", len(rows), args.output, time.perf_counter() - t0)
    return 0


def cmd_validate(args) -> int:
    from oamturb.validation import screen_checks, vacuum_checks

    cfg = LinkConfig.desk() if args.profile == "desk" else LinkConfig.full()
    if args.config:
        cfg = load_config(args.config, base=cfg)
    checks = vacuum_checks(cfg) + screen_checks(n_screens=args.screens, grid_n=cfg.grid_n, width=cfg.grid_width)
    for c in checks:
        print(c.line())
    return 0 if all(c.passed for c in checks) else 1


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="oamturb", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the Monte-Carlo sweep and write the result CSV")
    run.add_argument("--config", help="key = value configuration file")
    run.add_argument("-o", "--output", default="sweep.csv", help="result CSV path")
    run.add_argument("--seed", type=int, help="master seed")
    run.add_argument("--realizations", type=int, help="realizations per cell")
    run.add_argument("--scenarios", type=_scenarios, help=f"comma-separated subset of {','.join(KINDS)}")
    run.add_argument("--l0", type=_int_list, help="comma-separated OAM orders")
    run.add_argument("--profile", choices=("desk", "full"), default="desk")
    run.add_argument("--workers", type=int, default=1, help="worker processes")
    run.add_argument("--amplitudes", help="directory for per-realization amplitude CSVs")
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate", help="screen-statistics and vacuum-propagation checks")
    val.add_argument("--config")
    val.add_argument("--profile", choices=("desk", "full"), default="desk")
    val.add_argument("--screens", type=int, default=1000, help="screens in the statistics ensemble")
    val.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
