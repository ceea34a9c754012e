"""Command-line orchestration.

Subcommands:
  simulate       run the solver from a config file, write series + manifest
  riemann-table  emit the mixing-prefactor table as CSV
  interp-check   stress the interpolation inequality on random profiles
  verify-bounds  evaluate the envelope/trend report on a series CSV
  replay-profile feed an analytic comparison solution through diagnostics

Exit codes: 0 success, 1 check failure, 2 configuration/usage error.
Outputs land under --out with a manifest recording the config hash, the
output hashes, and library versions.  RTMIX_THREADS caps the worker pool
used for batch profile evaluation.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .diagnostics import DiagnosticsRecord, compute_record, series_to_csv, write_series
from .fields import Grid, ScalarField, write_snapshot
from .harness import bound_report_csv, bound_report_summary, check_theorem_main, compare_with_riemann
from .interp import inequality_check, random_profile, sharp_constant
from .riemann import (
    FluidParams,
    TABLE_ATWOOD,
    alpha_table,
    g0_entropy_profile,
    g0_flux,
    mixing_flux,
    rarefaction_profile,
    two_shock_profile,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2

ALPHA_CSV_HEADER = "A,alpha_plus,alpha_tilde_plus,alpha_minus_abs,alpha_tilde_minus_abs"

_REPLAY_KINDS = {
    "rarefaction": rarefaction_profile,
    "two_shock": two_shock_profile,
    "g0_entropy": g0_entropy_profile,
}

_FLUX_BUILDERS = {
    "immiscible": mixing_flux,
    "g0": g0_flux,
}


def _worker_cap() -> int:
    raw = os.environ.get("RTMIX_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return max(1, os.cpu_count() or 1)


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _write_manifest(out_dir: Path, config_hash: str, files: list[Path]) -> None:
    lines = [
        f"config_hash = {config_hash}",
        f"rtmix_version = {__version__}",
        f"numpy_version = {np.__version__}",
    ]
    import scipy

    lines.append(f"scipy_version = {scipy.__version__}")
    for f in sorted(files):
        lines.append(f"sha256 {f.name} = {_sha256_file(f)}")
    (out_dir / "manifest.txt").write_text("\n".join(lines) + "\n")


def _series_gnuplot_script(csv_name: str) -> str:
    return "\n".join(
        [
            "# gnuplot script for the diagnostics series",
            "set datafile separator ','",
            "set key autotitle columnhead",
            "set xlabel 't'",
            "set terminal pngcairo size 900,600",
            "set output 'energies.png'",
            f"plot '{csv_name}' using 1:2 with lines title 'E_p', \\",
            f"     '{csv_name}' using 1:3 with lines title 'E_k'",
            "set output 'entropies.png'",
            f"plot '{csv_name}' using 1:4 with lines title 'H', \\",
            f"     '{csv_name}' using 1:5 with lines title 'S', \\",
            f"     '{csv_name}' using 1:6 with lines title 'P'",
            "set output 'edges.png'",
            f"plot '{csv_name}' using 1:7 with lines title 'a_-', \\",
            f"     '{csv_name}' using 1:8 with lines title 'a_+'",
        ]
    ) + "\n"


def replay_profile(kind: str, p: FluidParams, t_list, nz: int = 4096, ny: int = 4,
                   pace: str = "similarity"):
    """Sample an analytic comparison solution as a y-independent density
    field at each time and run it through the diagnostics pipeline.

    pace "similarity" stretches with the conservation law (tau = g t^2/2,
    edges land on alpha A g t^2); pace "saturating" stretches with the
    energy-balance-limited rate (tau = g t^2/4), at which the rarefaction
    attains the scale-free energy level 1/(24 (1 - A^2)).

    The velocity is zero by construction, so E_k = 0 and the energy-balance
    drift column records E_p - g t - E_p(0) (the replay is not a solution
    of the evolution system, so that drift is informative, not zero).
    Returns (records, solution).
    """
    if kind not in _REPLAY_KINDS:
        raise ValueError(f"kind must be one of {sorted(_REPLAY_KINDS)}")
    sol = _REPLAY_KINDS[kind](p)
    t_list = list(t_list)
    if not t_list or any(t <= 0 for t in t_list):
        raise ValueError("replay times must be positive")
    # size the box so the widest profile sits well inside the walls
    t_max = max(t_list)
    zl, zr = sol.edges_at_time(t_max, pace)
    H = 1.5 * max(abs(zl), abs(zr))
    grid = Grid(L=1.0, H=H, ny=ny, nz=nz)
    records = []
    balance_const = None
    for t in sorted(t_list):
        s = np.asarray(sol.at_time(grid.z, t, pace))
        rho_1d = p.rho_minus * s + p.rho_plus * (1.0 - s)
        rho = ScalarField(grid, np.tile(rho_1d, (ny, 1)))
        if balance_const is None:
            # drift reported relative to the first sample (zero there)
            balance_const = compute_record(t, rho, None, p).E_p - p.g * t
        records.append(
            compute_record(t, rho, None, p, balance_const=balance_const)
        )
    return records, sol


def _cmd_riemann_table(args) -> int:
    try:
        atwoods = [float(x) for x in args.atwood.split(",") if x.strip()]
        rows = alpha_table(atwoods)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    lines = [ALPHA_CSV_HEADER]
    for r in rows:
        lines.append(
            f"{r.atwood:g},{r.alpha_plus:.2f},{r.alpha_tilde_plus:.2f},"
            f"{r.alpha_minus_abs:.2f},{r.alpha_tilde_minus_abs:.2f}"
        )
    text = "\n".join(lines) + "\n"
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "riemann_table.csv").write_text(text)
        _write_manifest(out_dir, hashlib.sha256(args.atwood.encode()).hexdigest(),
                        [out_dir / "riemann_table.csv"])
    sys.stdout.write(text)
    return EXIT_OK


def _cmd_interp_check(args) -> int:
    try:
        if args.flux in _FLUX_BUILDERS:
            p = FluidParams(rho_plus=args.rho_plus, rho_minus=args.rho_minus)
            flux = _FLUX_BUILDERS[args.flux](p)
        elif args.flux == "quadratic":
            from .interp import quadratic_flux

            flux = quadratic_flux()
        elif args.flux == "entropy":
            from .interp import entropy_flux

            flux = entropy_flux()
        else:
            print(f"error: unknown flux {args.flux!r}", file=sys.stderr)
            return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    C = sharp_constant(flux)
    rng = np.random.default_rng(args.seed)
    profiles = [random_profile(rng) for _ in range(args.n_random)]

    def evaluate(prof):
        res = inequality_check(prof, flux, constant=C, use_closure=False)
        return res.lhs, res.rhs, res.ratio

    workers = min(_worker_cap(), 8)
    if workers > 1 and args.n_random >= 64:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(evaluate, profiles))
    else:
        results = [evaluate(prof) for prof in profiles]

    lines = ["index,lhs,rhs,ratio"]
    worst = 0.0
    for i, (lhs, rhs, ratio) in enumerate(results):
        worst = max(worst, ratio)
        lines.append(f"{i},{lhs:.12g},{rhs:.12g},{ratio:.12g}")
    sys.stdout.write("\n".join(lines) + "\n")
    print(f"# worst ratio {worst:.12g} over {args.n_random} profiles", file=sys.stderr)
    return EXIT_OK if worst <= 1.0 + 1e-6 else EXIT_CHECK_FAILED


def _cmd_simulate(args) -> int:
    from .solver import SolverError, run

    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        result = run(config, keep_snapshots=config.snapshot_every > 0.0)
    except SolverError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED

    files = []
    series_path = out_dir / "series.csv"
    write_series(series_path, result.records)
    files.append(series_path)
    (out_dir / "config.echo").write_text(config.to_text())
    files.append(out_dir / "config.echo")
    (out_dir / "plot_series.gp").write_text(_series_gnuplot_script("series.csv"))
    files.append(out_dir / "plot_series.gp")
    for i, (t, rho) in enumerate(result.snapshots):
        snap = out_dir / f"rho_{i:05d}.rtm"
        write_snapshot(snap, rho, t)
        files.append(snap)
    _write_manifest(out_dir, config.config_hash(), files)
    print(f"run complete: {len(result.records)} samples, stop={result.stop_reason}")
    return EXIT_OK


def _cmd_verify_bounds(args) -> int:
    from .diagnostics import read_series

    try:
        config = load_config(args.config)
        records = read_series(args.series)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if config.orientation != "unstable":
        print("error: bound verification applies to unstable-orientation runs", file=sys.stderr)
        return EXIT_CONFIG
    p = FluidParams(rho_plus=config.rho_plus, rho_minus=config.rho_minus, g=config.g)
    report = check_theorem_main(records, p, config_hash=config.config_hash())
    comparison = compare_with_riemann(records, p)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "bound_report.csv").write_text(bound_report_csv(report))
    summary = bound_report_summary(report, p)
    summary += (
        f"  edge-ratio overlay (soft): final a_+/(Agt^2) = {comparison.upper_ratio[-1]:.4g}"
        f" vs alpha_+ = {comparison.alpha_plus:.4g}, ~alpha_+ = {comparison.alpha_tilde_plus:.4g}\n"
        f"                          final -a_-/(Agt^2) = {comparison.lower_ratio[-1]:.4g}"
        f" vs -alpha_- = {comparison.alpha_minus_abs:.4g}, -~alpha_- = {comparison.alpha_tilde_minus_abs:.4g}\n"
    )
    (out_dir / "summary.txt").write_text(summary)
    _write_manifest(out_dir, config.config_hash(), [out_dir / "bound_report.csv", out_dir / "summary.txt"])
    sys.stdout.write(summary)
    return EXIT_OK if report.passed() else EXIT_CHECK_FAILED


def _cmd_replay_profile(args) -> int:
    try:
        p = FluidParams(rho_plus=args.rho_plus, rho_minus=args.rho_minus, g=args.g)
        t_list = [float(x) for x in args.times.split(",") if x.strip()]
        records, _ = replay_profile(args.kind, p, t_list, nz=args.nz, pace=args.pace)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = series_to_csv(records)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "replay_series.csv").write_text(text)
        _write_manifest(out_dir, hashlib.sha256(text.encode()).hexdigest(),
                        [out_dir / "replay_series.csv"])
    sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rtmix", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the solver from a config file")
    sim.add_argument("--config", required=True)
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=_cmd_simulate)

    table = sub.add_parser("riemann-table", help="emit the prefactor table CSV")
    table.add_argument("--atwood", required=True, help="comma-separated Atwood numbers")
    table.add_argument("--out", default="")
    table.set_defaults(func=_cmd_riemann_table)

    interp = sub.add_parser("interp-check", help="random-profile inequality stress test")
    interp.add_argument("--flux", default="immiscible",
                        choices=["immiscible", "g0", "quadratic", "entropy"])
    interp.add_argument("--rho-plus", type=float, default=2.0, dest="rho_plus")
    interp.add_argument("--rho-minus", type=float, default=1.0, dest="rho_minus")
    interp.add_argument("--n-random", type=int, default=100, dest="n_random")
    interp.add_argument("--seed", type=int, default=0)
    interp.set_defaults(func=_cmd_interp_check)

    verify = sub.add_parser("verify-bounds", help="envelope and trend report for a series")
    verify.add_argument("--series", required=True)
    verify.add_argument("--config", required=True)
    verify.add_argument("--out", required=True)
    verify.set_defaults(func=_cmd_verify_bounds)

    replay = sub.add_parser("replay-profile", help="diagnostics series of an analytic solution")
    replay.add_argument("--kind", required=True, choices=sorted(_REPLAY_KINDS))
    replay.add_argument("--rho-plus", type=float, default=3.0, dest="rho_plus")
    replay.add_argument("--rho-minus", type=float, default=2.0, dest="rho_minus")
    replay.add_argument("--g", type=float, default=1.0)
    replay.add_argument("--times", default="1.0")
    replay.add_argument("--nz", type=int, default=4096)
    replay.add_argument("--pace", default="similarity", choices=["similarity", "saturating"])
    replay.add_argument("--out", default="")
    replay.set_defaults(func=_cmd_replay_profile)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, matching our config-error code
        return int(exc.code) if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
