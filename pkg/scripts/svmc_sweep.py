"""SVMC / SVMC-TF reverse annealing over the s_inv grid.

Usage: python scripts/svmc_sweep.py --variant svmc_tf --sweeps 1000 --samples 10000 --threads 4
"""
from __future__ import annotations

import argparse
import csv
import sys

from annealsim.analysis import inversion_grid
from annealsim.model import ProblemSpec, parse_state
from annealsim.schedule import AnnealProtocol, bundled_schedule
from annealsim.svmc import SvmcConfig, level_populations, partial_stats, run_svmc


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--state", default="0001")
    ap.add_argument("--variant", default="svmc_tf", choices=("svmc", "svmc_tf"))
    ap.add_argument("--sweeps", type=int, default=1000)
    ap.add_argument("--samples", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--t-mk", type=float, default=12.1)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--output", default=None)
    args = ap.parse_args(argv)
    sched = bundled_schedule()
    spec = ProblemSpec(args.n)
    z = parse_state(args.state, args.n)
    cfg = SvmcConfig.at_temperature(args.t_mk, variant=args.variant, sweeps_tau=args.sweeps,
                                    samples=args.samples, seed=args.seed)
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["s_inv", "total", "p_up", "p_down", "stderr"] + [f"level{k}" for k in range(args.n + 1)])
    for s in inversion_grid():
        finals = run_svmc(spec, sched, AnnealProtocol(1.0, float(s)), z, cfg, threads=args.threads)
        stats = partial_stats(finals, args.n)
        w.writerow([f"{s:.2f}"] + [f"{v:.6g}" for v in (*stats, *level_populations(finals, args.n))])
        out.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
