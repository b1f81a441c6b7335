"""Open-system reverse annealing: AME (independent or collective) or PTRE over the s_inv grid.

Usage:
    python scripts/open_sweep.py ame --coupling independent --tau 1000
    python scripts/open_sweep.py ptre --tau 5000 --w-mk 8 --t-mk 25 --eta-g2 2.5e-3
"""
from __future__ import annotations

import argparse
import csv
import sys

from annealsim.ame import OhmicBath, density_from_state, evolve_ame, success_from_density
from annealsim.analysis import excited_bin, inversion_grid
from annealsim.model import ProblemSpec, parse_state
from annealsim.ptre import HybridSpectrum, evolve_ptre, population_from_state
from annealsim.schedule import TWO_PI, AnnealProtocol, bundled_schedule


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("model", choices=("ame", "ptre"))
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--state", default="0001")
    ap.add_argument("--tau", type=float, default=1000.0)
    ap.add_argument("--pause", type=float, default=0.0)
    ap.add_argument("--cycles", type=int, default=1)
    ap.add_argument("--coupling", default="independent", choices=("independent", "collective"))
    ap.add_argument("--eta-g2", type=float, default=None)
    ap.add_argument("--t-mk", type=float, default=None)
    ap.add_argument("--w-mk", type=float, default=8.0)
    ap.add_argument("--cutoff-thz", type=float, default=1.0)
    ap.add_argument("--output", default=None)
    args = ap.parse_args(argv)
    sched = bundled_schedule()
    spec = ProblemSpec(args.n)
    z = parse_state(args.state, args.n)
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["s_inv", "total", "p_up", "p_down", "up_level1", "down_level1"])
    if args.model == "ame":
        bath = OhmicBath(args.eta_g2 if args.eta_g2 is not None else 1e-3, TWO_PI * 1e3 * args.cutoff_thz,
                         args.t_mk if args.t_mk is not None else 12.1)
        rho0 = density_from_state(args.n, z)
    else:
        spectrum = HybridSpectrum.from_lab_units(args.w_mk, args.t_mk if args.t_mk is not None else 25.0,
                                                 args.eta_g2 if args.eta_g2 is not None else 2.5e-3,
                                                 args.cutoff_thz)
        p0 = population_from_state(args.n, z)
    for s in inversion_grid():
        proto = AnnealProtocol(args.tau, float(s), args.pause, args.cycles)
        if args.model == "ame":
            rho = evolve_ame(spec, sched, proto, rho0, bath, args.coupling)
            pops = rho.populations()
            total, up, down = success_from_density(rho)
        else:
            pops = evolve_ptre(spec, sched, proto, p0, spectrum).probs
            up, down = pops[0], pops[-1]
            total = up + down
        up1, down1 = excited_bin(pops, args.n, 1)
        w.writerow([f"{s:.2f}"] + [f"{v:.9g}" for v in (total, up, down, up1, down1)])
        out.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
