"""Command-line front end.

    kavg <experiment-name> [--config cfg.ini] [--out DIR] [--seeds 1,2,3]
    kavg verify [--suite DIR] [--out DIR]
    kavg density apply-t --in rho.csv --out out.csv --k K --sigma S [--steps N]
    kavg density evolve  --in rho.csv --out out.csv --k K --sigma S \
                         --lambda RATE --t-end T --dt DT

KAVG_THREADS caps the experiment worker pool.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .acceptance import verify
from .density import evolve_continuous, iterate_mean_field
from .experiments import EXPERIMENTS, default_config, load_config, run_experiment
from .grid import density_from_csv, density_to_csv


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kavg", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    for name in EXPERIMENTS:
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        sp.add_argument("--config", type=Path, default=None, help="INI config file")
        sp.add_argument("--out", type=Path, default=None, help="output directory")
        sp.add_argument("--seeds", type=str, default=None, help="comma-separated seeds")

    vp = sub.add_parser("verify", help="run the full acceptance suite")
    vp.add_argument("--suite", type=Path, default=None, help="directory of INI configs")
    vp.add_argument("--out", type=Path, default=Path("out/verify"))

    dp = sub.add_parser("density", help="ad-hoc density operations")
    dsub = dp.add_subparsers(dest="density_command", required=True)

    ap = dsub.add_parser("apply-t", help="apply discrete mean-field steps to a density CSV")
    ap.add_argument("--in", dest="infile", type=Path, required=True)
    ap.add_argument("--out", dest="outfile", type=Path, required=True)
    ap.add_argument("--k", type=int, required=True)
    ap.add_argument("--sigma", type=float, required=True)
    ap.add_argument("--steps", type=int, default=1)

    ep = dsub.add_parser("evolve", help="continuous-time density evolution")
    ep.add_argument("--in", dest="infile", type=Path, required=True)
    ep.add_argument("--out", dest="outfile", type=Path, required=True)
    ep.add_argument("--k", type=int, required=True)
    ep.add_argument("--sigma", type=float, required=True)
    ep.add_argument("--lambda", dest="lam", type=float, required=True)
    ep.add_argument("--t-end", dest="t_end", type=float, required=True)
    ep.add_argument("--dt", type=float, required=True)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "verify":
        return verify(args.out, suite_dir=args.suite)

    if args.command == "density":
        rho = density_from_csv(args.infile)
        if args.density_command == "apply-t":
            out = iterate_mean_field(rho, args.k, args.sigma, args.steps)[-1]
            density_to_csv(out, args.outfile, params={"K": args.k, "sigma": args.sigma,
                                                      "steps": args.steps})
        else:
            traj = evolve_continuous(rho, args.k, args.sigma, args.lam, args.t_end, args.dt)
            density_to_csv(traj[-1][1], args.outfile,
                           params={"K": args.k, "sigma": args.sigma, "lambda": args.lam,
                                   "t_end": args.t_end, "dt": args.dt})
        print(f"wrote {args.outfile}")
        return 0

    # experiment subcommands
    if args.config is not None:
        cfg = load_config(args.config, output_dir=args.out)
        if cfg.experiment != args.command:
            raise SystemExit(f"config is for {cfg.experiment!r}, not {args.command!r}")
    else:
        cfg = default_config(args.command, args.out or Path("out") / args.command)
    if args.out is not None:
        cfg.output_dir = Path(args.out)
    if args.seeds:
        cfg.seeds = [int(s) for s in args.seeds.split(",") if s]
    summary = run_experiment(cfg)
    for c in summary.checks:
        print(f"{'pass' if c.passed else 'FAIL'}  {c.name}: {c.observed!r}  ({c.requirement})")
    print(f"{cfg.experiment}: {'pass' if summary.passed else 'FAIL'} "
          f"-> {cfg.output_dir}")
    return 0 if summary.passed else 1


if __name__ == "__main__":
    sys.exit(main())
