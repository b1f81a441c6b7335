"""Command-line front end: parameter sweeps, spectra, bounds and calibrations.

    annealsim run cfg.toml [--threads N] [--dry-run] [--output PATH] [--schedule CSV]
    annealsim spectrum --n 20
    annealsim bound --n 4 --state 0001
    annealsim calibrate --reference refs.toml --grid default
    annealsim optimize-sweeps --reference refs.toml --candidates 150,300,450,600

Exit codes: 0 success, 2 invalid configuration or arguments, 3 solver failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from .analysis import CalibrationGrid, Observable, SweepCurve, calibrate_ptre, check_bound, optimize_sweeps
from .errors import AnnealSimError, DomainError, FormatError, SchedulingError
from .model import ProblemSpec, max_spin_overlap, parse_state
from .schedule import AnnealProtocol, Schedule, bundled_schedule, read_schedule

RESULT_HEADER = ["model", "n", "s_inv", "tau_ns", "t_pause_ns", "r", "seed",
                 "total", "p_up", "p_down", "stderr"]
MODELS = ("closed", "ame", "ptre", "svmc")
EXIT_CONFIG = 2
EXIT_SOLVER = 3

MODEL_DEFAULTS = {
    "closed": {"rel_tol": 1e-8, "abs_tol": 1e-10},
    "ame": {"coupling": "independent", "eta_g2": 1e-3, "cutoff_thz": 1.0, "temperature_mk": 12.1,
            "n_levels": 0, "lamb_shift": False, "rel_tol": 1e-6, "abs_tol": 1e-9},
    "ptre": {"temperature_mk": 25.0, "w_mk": 8.0, "eta_g2": 2.5e-3, "cutoff_thz": 1.0},
    "svmc": {"variant": "svmc_tf", "sweeps_tau": 1000, "samples": 10_000, "seed": 0,
             "temperature_mk": 12.1},
}


class ConfigError(FormatError):
    """The run configuration is malformed or inconsistent."""


@dataclass
class RunConfig:
    model: str
    n: int
    p: int
    initial: int
    s_inv: list[float]
    tau_ns: list[float]
    t_pause_ns: list[float]
    r: list[int]
    seeds: list[int]
    params: dict
    output: Path
    threads: int = 1
    schedule: str | None = None
    raw: dict = field(default_factory=dict, repr=False)


@dataclass(frozen=True)
class SweepPoint:
    s_inv: float
    tau_ns: float
    t_pause_ns: float
    r: int
    seed: int


@dataclass
class RunRow:
    point: SweepPoint
    total: float
    p_up: float
    p_down: float
    stderr: float
    wall_time: float


# ---------------------------------------------------------------- configuration

def _as_list(value, name: str, kind=float) -> list:
    if isinstance(value, dict):
        try:
            start, stop, step = (float(value[k]) for k in ("start", "stop", "step"))
        except KeyError as exc:
            raise ConfigError(f"{name}: range tables need start, stop and step") from exc
        if step <= 0:
            raise ConfigError(f"{name}: step must be positive")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        value = [round(start + k * step, 10) for k in range(count)]
    elif not isinstance(value, list):
        value = [value]
    if not value:
        raise ConfigError(f"{name}: sweep list is empty")
    try:
        out = [kind(v) for v in value]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from None
    if kind is int and any(o != v for o, v in zip(out, value)):
        raise ConfigError(f"{name}: expected integers")
    return out


def _check_keys(table: dict, allowed, where: str) -> None:
    extra = set(table) - set(allowed)
    if extra:
        raise ConfigError(f"unknown keys in {where}: {sorted(extra)}")


def parse_config(data: dict, base: Path | None = None) -> RunConfig:
    """Validate a configuration mapping (the parsed TOML document)."""
    _check_keys(data, {"model", "seed", "threads", "output", "schedule", "problem", "protocol", *MODELS},
                "top level")
    model = data.get("model")
    if model not in MODELS:
        raise ConfigError(f"model must be one of {MODELS}, got {model!r}")
    prob = data.get("problem", {})
    _check_keys(prob, {"n", "p", "initial"}, "[problem]")
    try:
        spec = ProblemSpec(int(prob.get("n", 4)), int(prob.get("p", 2)))
        initial = parse_state(prob.get("initial", "0" * (spec.n_qubits - 1) + "1"), spec.n_qubits)
    except (AnnealSimError, TypeError, ValueError) as exc:
        raise ConfigError(f"[problem]: {exc}") from None
    proto = data.get("protocol", {})
    _check_keys(proto, {"s_inv", "tau_ns", "t_pause_ns", "r"}, "[protocol]")
    if "s_inv" not in proto:
        raise ConfigError("[protocol] needs s_inv")
    s_inv = _as_list(proto["s_inv"], "s_inv")
    if any(not 0.0 < s < 1.0 for s in s_inv):
        raise ConfigError("s_inv values must lie in (0, 1)")
    tau = _as_list(proto.get("tau_ns", 1000.0), "tau_ns")
    pause = _as_list(proto.get("t_pause_ns", 0.0), "t_pause_ns")
    r = _as_list(proto.get("r", 1), "r", int)
    if any(t <= 0 for t in tau) or any(t < 0 for t in pause) or any(c < 1 for c in r):
        raise ConfigError("tau_ns must be positive, t_pause_ns nonnegative and r >= 1")
    block = data.get(model, {})
    _check_keys(block, MODEL_DEFAULTS[model], f"[{model}]")
    params = {**MODEL_DEFAULTS[model], **block}
    if model == "svmc":
        seeds = _as_list(params.pop("seed"), "svmc.seed", int)
    else:
        seeds = [_as_list(data.get("seed", 0), "seed", int)[0]]
    threads = data.get("threads", 1)
    if not isinstance(threads, int) or threads < 1:
        raise ConfigError("threads must be a positive integer")
    out = Path(data.get("output", "results.csv"))
    sched = data.get("schedule")
    if base is not None:
        out = out if out.is_absolute() else base / out
        if sched is not None and not Path(sched).is_absolute():
            sched = str(base / sched)
    cfg = RunConfig(model, spec.n_qubits, spec.exponent, initial, s_inv, tau, pause, r, seeds,
                    params, out, threads, sched, data)
    make_runner(cfg, bundled_schedule())   # validates the parameter block
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(data, path.parent)


def sweep_points(cfg: RunConfig) -> list[SweepPoint]:
    """Cartesian sweep in column order (s_inv, tau, t_pause, r, seed)."""
    return [SweepPoint(*pt) for pt in itertools.product(cfg.s_inv, cfg.tau_ns, cfg.t_pause_ns,
                                                        cfg.r, cfg.seeds)]


# ---------------------------------------------------------------- solvers

def make_runner(cfg: RunConfig, sched: Schedule):
    """point -> (total, p_up, p_down, stderr) for the configured model."""
    spec = ProblemSpec(cfg.n, cfg.p)
    prm = cfg.params
    z0 = cfg.initial
    try:
        if cfg.model == "closed":
            from .closed import basis_state, propagate_iterated, success_probability
            from .dynamics import IntegratorConfig
            icfg = IntegratorConfig(float(prm["rel_tol"]), float(prm["abs_tol"]))

            def run(pt: SweepPoint):
                proto = AnnealProtocol(pt.tau_ns, pt.s_inv, pt.t_pause_ns, pt.r)
                psi = propagate_iterated(spec, sched, proto, basis_state(spec.n_qubits, z0), icfg)
                return (*success_probability(psi), 0.0)
        elif cfg.model == "ame":
            from .ame import (CouplingModel, OhmicBath, Truncation, density_from_state, evolve_ame,
                              success_from_density)
            from .dynamics import IntegratorConfig
            bath = OhmicBath(float(prm["eta_g2"]), 2 * np.pi * 1e3 * float(prm["cutoff_thz"]),
                             float(prm["temperature_mk"]))
            coupling = CouplingModel(prm["coupling"])
            trunc = Truncation(int(prm["n_levels"]) or None)
            icfg = IntegratorConfig(float(prm["rel_tol"]), float(prm["abs_tol"]))
            lamb = bool(prm["lamb_shift"])

            def run(pt: SweepPoint):
                proto = AnnealProtocol(pt.tau_ns, pt.s_inv, pt.t_pause_ns, pt.r)
                rho = evolve_ame(spec, sched, proto, density_from_state(spec.n_qubits, z0), bath,
                                 coupling, trunc, icfg, lamb)
                return (*success_from_density(rho), 0.0)
        elif cfg.model == "ptre":
            from .ptre import HybridSpectrum, evolve_ptre, population_from_state, success_from_populations
            spectrum = HybridSpectrum.from_lab_units(float(prm["w_mk"]), float(prm["temperature_mk"]),
                                                     float(prm["eta_g2"]), float(prm["cutoff_thz"]))

            def run(pt: SweepPoint):
                proto = AnnealProtocol(pt.tau_ns, pt.s_inv, pt.t_pause_ns, pt.r)
                p = evolve_ptre(spec, sched, proto, population_from_state(spec.n_qubits, z0), spectrum)
                return (*success_from_populations(p), 0.0)
        else:
            from .svmc import SvmcConfig, partial_stats, run_svmc
            base = SvmcConfig.at_temperature(float(prm["temperature_mk"]), variant=prm["variant"],
                                             sweeps_tau=int(prm["sweeps_tau"]), samples=int(prm["samples"]))

            def run(pt: SweepPoint):
                scfg = SvmcConfig(base.variant, base.sweeps_tau, base.beta, base.samples, pt.seed)
                proto = AnnealProtocol(pt.tau_ns, pt.s_inv, pt.t_pause_ns, pt.r)
                return partial_stats(run_svmc(spec, sched, proto, z0, scfg), spec.n_qubits)
    except (AnnealSimError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"[{cfg.model}]: {exc}") from None
    return run


# ---------------------------------------------------------------- output

def _fmt(x: float) -> str:
    return f"{x:.12g}"


def format_row(model: str, n: int, row: RunRow) -> str:
    pt = row.point
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow(
        [model, n, _fmt(pt.s_inv), _fmt(pt.tau_ns), _fmt(pt.t_pause_ns), pt.r, pt.seed,
         _fmt(row.total), _fmt(row.p_up), _fmt(row.p_down), _fmt(row.stderr)])
    return buf.getvalue()


def manifest_path(output: Path) -> Path:
    return output.with_name(output.stem + ".manifest.json")


def _versions() -> dict:
    return {"annealsim": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def execute(cfg: RunConfig, sched: Schedule, threads: int) -> tuple[int, list[RunRow]]:
    """Run the sweep; rows are appended to the CSV in grid order as they complete."""
    points = sweep_points(cfg)
    runner = make_runner(cfg, sched)
    cfg.output.parent.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat()
    t_start = time.perf_counter()
    rows: list[RunRow] = []
    status, error = "ok", None

    def task(pt: SweepPoint) -> RunRow:
        t0 = time.perf_counter()
        total, up, down, err = runner(pt)
        return RunRow(pt, total, up, down, err, time.perf_counter() - t0)

    with cfg.output.open("w", newline="") as fh:
        fh.write(",".join(RESULT_HEADER) + "\n")
        pool = ThreadPoolExecutor(max_workers=threads)
        try:
            for row in pool.map(task, points):
                fh.write(format_row(cfg.model, cfg.n, row))
                fh.flush()
                rows.append(row)
        except AnnealSimError as exc:
            status, error = "failed", f"{type(exc).__name__}: {exc}"
        finally:
            pool.shutdown(wait=True, cancel_futures=True)
    manifest = {
        "status": status, "error": error, "config": cfg.raw, "versions": _versions(),
        "schedule": sched.name, "seeds": cfg.seeds, "threads": threads,
        "points": len(points), "rows_written": len(rows),
        "started": started, "wall_time_s": time.perf_counter() - t_start,
        "row_wall_time_s": [r.wall_time for r in rows],
    }
    manifest_path(cfg.output).write_text(json.dumps(manifest, indent=2, default=str) + "\n")
    if error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_SOLVER, rows
    return 0, rows


# ---------------------------------------------------------------- subcommands

def _schedule(path: str | None) -> Schedule:
    if not path:
        return bundled_schedule()
    try:
        return read_schedule(path)
    except (OSError, FormatError, SchedulingError) as exc:
        raise ConfigError(f"schedule {path}: {exc}") from None


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.output:
        cfg.output = Path(args.output)
    sched = _schedule(args.schedule or cfg.schedule)
    threads = args.threads or cfg.threads
    points = sweep_points(cfg)
    if args.dry_run:
        print(f"model={cfg.model} n={cfg.n} points={len(points)} output={cfg.output}")
        return 0
    code, rows = execute(cfg, sched, threads)
    if code == 0:
        print(f"wrote {len(rows)} rows to {cfg.output}")
    return code


def cmd_spectrum(args) -> int:
    from .spectrum import gap_profile
    report = gap_profile(ProblemSpec(args.n, args.p), _schedule(args.schedule))
    if args.output:
        Path(args.output).write_text(report.to_csv())
    if args.json:
        print(report.to_json())
    else:
        print(f"s_delta {report.s_delta:.6f}")
        print(f"delta_radns {report.delta:.9g}")
    return 0


def _state(label, n: int) -> int:
    try:
        return parse_state(label, n)
    except AnnealSimError as exc:
        raise ConfigError(str(exc)) from None


def cmd_bound(args) -> int:
    z = _state(args.state, args.n)
    if args.total is None:
        print(f"{max_spin_overlap(z, args.n):.12g}")
        return 0
    res = check_bound(args.total, z, args.n, args.tol)
    print(f"{'pass' if res.passed else 'fail'} bound={res.bound:.12g} margin={res.margin:.12g}")
    return 0 if res.passed else 1


def load_references(path: str | Path) -> tuple[int, list[SweepCurve]]:
    """Reference manifest: `n = 4` plus [[curve]] tables with file, initial, branch, level."""
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    n = int(data.get("n", 4))
    curves = []
    for entry in data.get("curve", []):
        _check_keys(entry, {"file", "initial", "branch", "level"}, "[[curve]]")
        try:
            obs = Observable(_state(entry["initial"], n), entry.get("branch", "up"),
                             int(entry.get("level", 0)))
            text = (path.parent / entry["file"]).read_text(encoding="utf-8")
        except (KeyError, OSError, DomainError) as exc:
            raise ConfigError(f"[[curve]]: {exc}") from None
        curves.append(SweepCurve.from_csv(text, obs))
    if not curves:
        raise ConfigError(f"{path}: no [[curve]] entries")
    return n, curves


def _calibration_grid(spec: str) -> CalibrationGrid:
    if spec == "default":
        return CalibrationGrid.default()
    try:
        data = tomllib.loads(Path(spec).read_text(encoding="utf-8"))
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{spec}: {exc}") from None
    _check_keys(data, {"W_mk", "T_mk", "eta_g2"}, "calibration grid")
    return CalibrationGrid(*(tuple(_as_list(data.get(k, []), k)) for k in ("W_mk", "T_mk", "eta_g2")))


def cmd_calibrate(args) -> int:
    n, refs = load_references(args.reference)
    grid = _calibration_grid(args.grid)
    if args.dry_run:
        print(f"cells={grid.size} curves={len(refs)}")
        return 0
    res = calibrate_ptre(refs, grid, args.tau, args.cutoff_thz, n, _schedule(args.schedule),
                         args.threads, args.table)
    w, t, eta = res.best
    print(f"best W_mk={w:g} T_mk={t:g} eta_g2={eta:g} loss={res.loss:.9g}")
    print(f"loss table: {args.table}")
    return 0


def cmd_optimize(args) -> int:
    n, refs = load_references(args.reference)
    try:
        cands = [int(c) for c in args.candidates.split(",") if c.strip()]
    except ValueError:
        raise ConfigError("--candidates must be a comma-separated list of integers") from None
    res = optimize_sweeps(refs, cands, n, _schedule(args.schedule), args.samples, args.seed,
                          args.temperature_mk, args.threads)
    for c, loss in res.losses.items():
        print(f"sweeps={c} loss={loss:.9g}")
    print(f"best sweeps={res.best}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="annealsim", description="p-spin reverse-annealing simulations")
    ap.add_argument("--version", action="version", version=f"annealsim {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a parameter sweep from a TOML config")
    p.add_argument("config")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--dry-run", action="store_true")
    p.add_argument("--output", default=None)
    p.add_argument("--schedule", default=None, help="schedule CSV (s,A_GHz,B_GHz)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("spectrum", help="minimum gap of the maximum-spin sector")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--schedule", default=None)
    p.add_argument("--output", default=None, help="write the gap profile CSV here")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("bound", help="maximum-spin success bound of a basis state")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--state", required=True)
    p.add_argument("--total", type=float, default=None, help="check this success probability")
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("calibrate", help="grid search for PTRE noise parameters")
    p.add_argument("--reference", required=True, help="TOML manifest of reference curves")
    p.add_argument("--grid", default="default", help="'default' or a TOML file with W_mk, T_mk, eta_g2")
    p.add_argument("--tau", type=float, default=5000.0)
    p.add_argument("--cutoff-thz", type=float, default=1.0)
    p.add_argument("--table", default="calibration_loss.csv")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--schedule", default=None)
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("optimize-sweeps", help="select the SVMC-TF sweep count")
    p.add_argument("--reference", required=True)
    p.add_argument("--candidates", default="150,300,450,600")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--temperature-mk", type=float, default=12.1)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--schedule", default=None)
    p.set_defaults(func=cmd_optimize)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FormatError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AnnealSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
