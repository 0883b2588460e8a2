"""Command-line driver.

Subcommands: trajectory | ensemble | sweep | validate | analytic.
Each takes --config <yaml> plus flag overrides (flags win).  Exit codes:
0 success, 2 configuration error, 3 validation failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .analytic import (
    PROTON_MASS_G,
    SpaceCollapseConstants,
    amplification_rate,
    classify_damping,
    integrate_density_reference,
    solve_density_series,
    spread_characteristic_time,
)
from .config import RunConfig, load_config_file
from .engine import EngineOptions, dense_sample_stride, simulate_trajectory
from .ensemble import (
    EnsembleConfig,
    martingale_check,
    reduction_time_curve,
    run_ensemble,
    weak_convergence_check,
)
from .errors import ConfigError, SpinCollapseError
from .events import Eigenstate
from .noise import NoiseStream, derive_seed
from .report import ensure_out_dir, write_csv, write_json
from .spin import ModelParams, to_density_params

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VALIDATION = 3
EXIT_IO = 4

# Fixed parameter sets (omega, gamma) exercising each damping regime in the
# analytic-vs-ODE oracle check, plus the near-critical continuity probe.
_ORACLE_REGIMES = ((1.0, 5.0), (1.0, 2.0), (1.0, 0.05))
_ORACLE_TOL = 1e-8
_NEAR_CRITICAL_TOL = 1e-4
_WEAK_CONV_GAMMAS = (5.0, 100.0)
_MARTINGALE_GAMMAS = (5.0, 100.0)
_MARTINGALE_T_END = 0.5


def _ensemble_config(config: RunConfig, gamma: float | None = None, seed: int | None = None,
                     horizon: float | None = None) -> EnsembleConfig:
    return EnsembleConfig(
        params=ModelParams(config.omega, config.gamma if gamma is None else gamma),
        init=config.init,
        n_trajectories=config.n_trajectories,
        master_seed=config.master_seed if seed is None else seed,
        schedule=config.schedule,
        horizon=config.horizon if horizon is None else horizon,
        detector=config.detector,
        sample_stride=config.sample_stride,
    )


def cmd_trajectory(config: RunConfig) -> list[str]:
    """Simulate one trajectory and write its time series (and optional figures).

    Defaults to dense storage (inspection grid); the ensemble commands use
    the coarser event-analysis grid.
    """
    out_dir = ensure_out_dir(config.out_dir)
    stream = NoiseStream(config.master_seed, config.stream_index)
    stride = config.sample_stride
    if stride is None:
        stride = dense_sample_stride(config.schedule)
    record = simulate_trajectory(
        config.params, config.init, config.schedule, config.horizon,
        stream, sample_stride=stride,
    )
    config = replace(config, sample_stride=stride)  # embed the resolved grid
    files = []
    t = record.sample_times
    a = record.samples[:, 0]
    b = record.samples[:, 1]
    pop = record.population_plus()
    coh = record.coherence_series()
    sx, sy, sz = record.bloch_series()
    if config.emit_csv:
        path = os.path.join(out_dir, "trajectory.csv")
        rows = zip(t, a.real, a.imag, b.real, b.imag, pop, coh.real, coh.imag, sx, sy, sz)
        write_csv(
            path, config,
            ["t", "re_alpha", "im_alpha", "re_beta", "im_beta",
             "pop_plus", "coh_re", "coh_im", "sx", "sy", "sz"],
            rows,
        )
        files.append(path)
    if config.emit_svg:
        from . import plots

        bloch_path = os.path.join(out_dir, "bloch.svg")
        plots.bloch_plot(bloch_path, sx, sy, sz)
        files.append(bloch_path)
        pop_path = os.path.join(out_dir, "population.svg")
        plots.population_plot(pop_path, t, pop)
        files.append(pop_path)
    return files


def _event_rows(events):
    for idx, evs in enumerate(events):
        for ev in evs:
            if hasattr(ev, "t_r"):
                kind, state, t = "reduction", ev.eigenstate, ev.t_r
            else:
                kind, state, t = "delocalization", ev.from_eigenstate, ev.t_d
            yield idx, kind, "plus" if state is Eigenstate.PLUS else "minus", t


def cmd_ensemble(config: RunConfig) -> list[str]:
    """Run one ensemble; write stats JSON, events CSV, and the mean series."""
    out_dir = ensure_out_dir(config.out_dir)
    result = run_ensemble(_ensemble_config(config), workers=config.workers)
    files = []
    if config.emit_json:
        path = os.path.join(out_dir, "ensemble_stats.json")
        write_json(path, {
            "config": config.to_json_dict(),
            "master_seed": config.master_seed,
            "stats": result.stats.to_json_dict(),
        })
        files.append(path)
    if config.emit_csv:
        path = os.path.join(out_dir, "events.csv")
        write_csv(path, config,
                  ["trajectory_index", "kind", "eigenstate", "time"],
                  _event_rows(result.events))
        files.append(path)

        mean_path = os.path.join(out_dir, "mean_population.csv")
        times = result.sample_times
        if config.omega > 0:
            x, _y, _z = solve_density_series(
                config.params, to_density_params(config.init), times)
        else:
            x = np.full_like(times, np.nan)
        write_csv(
            mean_path, config,
            ["t", "mean_pop_plus", "analytic_x", "mean_coh_re", "mean_coh_im", "mean_coh_abs"],
            zip(times, result.mean_pop_plus, x, result.coherence.mean_re,
                result.coherence.mean_im, result.coherence.mean_abs),
        )
        files.append(mean_path)
    if config.emit_svg:
        from . import plots

        path = os.path.join(out_dir, "ensemble.svg")
        analytic = None
        if config.omega > 0:
            analytic, _y, _z = solve_density_series(
                config.params, to_density_params(config.init), result.sample_times)
        plots.population_plot(path, result.sample_times, result.mean_pop_plus,
                              analytic=analytic, label="ensemble mean")
        files.append(path)
    return files


def cmd_sweep(config: RunConfig) -> list[str]:
    """Run the gamma sweep and write per-gamma statistics (and the bar chart)."""
    out_dir = ensure_out_dir(config.out_dir)
    summaries = reduction_time_curve(
        _ensemble_config(config), config.gammas, workers=config.workers
    )
    files = []
    if config.emit_csv:
        path = os.path.join(out_dir, "sweep.csv")
        rows = []
        for s in summaries:
            st = s.stats
            rows.append((
                s.gamma, s.seed, st.n_total, st.n_reduced_plus, st.n_reduced_minus,
                st.n_reduced_total, st.reduced_fraction, st.prob_plus_given_reduced,
                st.prob_minus_given_reduced, st.mean_t_r, st.std_t_r,
                st.n_delocalized, st.delocalized_fraction,
            ))
        write_csv(path, config,
                  ["gamma", "seed", "n_total", "n_reduced_plus", "n_reduced_minus",
                   "n_reduced_total", "reduced_fraction", "prob_plus_given_reduced",
                   "prob_minus_given_reduced", "mean_t_r", "std_t_r",
                   "n_delocalized", "delocalized_fraction"], rows)
        files.append(path)
    if config.emit_json:
        path = os.path.join(out_dir, "sweep_stats.json")
        write_json(path, {
            "config": config.to_json_dict(),
            "master_seed": config.master_seed,
            "per_gamma": [
                {"gamma": s.gamma, "seed": s.seed, "stats": s.stats.to_json_dict()}
                for s in summaries
            ],
        })
        files.append(path)
    if config.emit_svg:
        from . import plots

        path = os.path.join(out_dir, "sweep.svg")
        plots.sweep_bar_chart(
            path,
            [s.gamma for s in summaries],
            [s.stats.mean_t_r for s in summaries],
            [s.stats.std_t_r for s in summaries],
            [s.stats.reduced_fraction for s in summaries],
        )
        files.append(path)
    return files


def _check_oracle(config: RunConfig) -> list[dict]:
    checks = []
    init = to_density_params(config.init)
    horizon = 2.0 * math.pi
    for omega, gamma in _ORACLE_REGIMES:
        params = ModelParams(omega, gamma)
        ref = integrate_density_reference(params, init, horizon, 1e-4)
        x, y, z = solve_density_series(params, init, ref.times)
        diff = max(
            float(np.max(np.abs(x - ref.x))),
            float(np.max(np.abs(y - ref.y))),
            float(np.max(np.abs(z - ref.z))),
        )
        checks.append({
            "name": f"analytic_oracle[{classify_damping(params).value}]",
            "value": diff,
            "threshold": _ORACLE_TOL,
            "passed": bool(diff <= _ORACLE_TOL),
        })
    # continuity across the critically damped boundary
    omega = 1.0
    diffs = []
    base_x, base_y, base_z = solve_density_series(ModelParams(omega, 2.0 * omega), init, [1.0])
    for sign in (-1.0, 1.0):
        gamma = 2.0 * omega * (1.0 + sign * 1e-6)
        x, y, z = solve_density_series(ModelParams(omega, gamma), init, [1.0])
        diffs.append(max(abs(float(x[0] - base_x[0])), abs(float(y[0] - base_y[0])),
                         abs(float(z[0] - base_z[0]))))
    checks.append({
        "name": "analytic_oracle[near_critical_continuity]",
        "value": max(diffs),
        "threshold": _NEAR_CRITICAL_TOL,
        "passed": bool(max(diffs) <= _NEAR_CRITICAL_TOL),
    })
    return checks


def cmd_validate(config: RunConfig, corrupt_drift: bool = False) -> tuple[list[str], bool]:
    """Self-validation: oracle agreement, weak convergence, martingale.

    corrupt_drift flips the deterministic drift sign in the SDE runs; it is
    a negative control that must make the weak-convergence check fail.
    """
    out_dir = ensure_out_dir(config.out_dir)
    options = EngineOptions(drift_sign=-1.0 if corrupt_drift else 1.0)
    checks = _check_oracle(config)

    n = config.n_trajectories
    weak_tol = 2.0 / math.sqrt(n)  # 4 binomial standard errors at p = 1/2
    for gamma in _WEAK_CONV_GAMMAS:
        seed = derive_seed(config.master_seed, "validate-weak", gamma)
        gap = weak_convergence_check(
            _ensemble_config(config, gamma=gamma, seed=seed),
            workers=config.workers, options=options,
        )
        checks.append({
            "name": f"weak_convergence[gamma={gamma:g}]",
            "value": gap,
            "threshold": weak_tol,
            "passed": bool(gap <= weak_tol),
        })

    target = config.init.population_plus
    for gamma in _MARTINGALE_GAMMAS:
        seed = derive_seed(config.master_seed, "validate-martingale", gamma)
        mean, se = martingale_check(
            gamma, config.init, n, _MARTINGALE_T_END, seed,
            schedule=config.schedule, workers=config.workers, options=options,
        )
        err = abs(mean - target)
        tol = 4.0 * se
        checks.append({
            "name": f"martingale[gamma={gamma:g}]",
            "value": err,
            "threshold": tol,
            "passed": bool(err <= tol),
        })

    passed = all(c["passed"] for c in checks)
    files = []
    if config.emit_json:
        path = os.path.join(out_dir, "validation.json")
        write_json(path, {
            "config": config.to_json_dict(),
            "master_seed": config.master_seed,
            "corrupt_drift": corrupt_drift,
            "checks": checks,
            "passed": passed,
        })
        files.append(path)
    for c in checks:
        status = "PASS" if c["passed"] else "FAIL"
        print(f"{status} {c['name']}: value={c['value']:.3e} threshold={c['threshold']:.3e}")
    return files, passed


def cmd_analytic(config: RunConfig, dt_out: float = 1e-3,
                 mass: float | None = None, delta_x0: float | None = None,
                 n_constituents: float | None = None) -> list[str]:
    """Write the closed-form (x, y, z)(t) series; print the scalar estimates."""
    out_dir = ensure_out_dir(config.out_dir)
    files = []
    if config.emit_csv:
        n = int(math.floor(config.horizon / dt_out)) + 1
        times = np.arange(n) * dt_out
        if times[-1] < config.horizon - 1e-12:
            times = np.concatenate([times, [config.horizon]])
        init = to_density_params(config.init)
        x, y, z = solve_density_series(config.params, init, times)
        path = os.path.join(out_dir, "analytic.csv")
        write_csv(path, config, ["t", "x", "y", "z"], zip(times, x, y, z))
        files.append(path)
    if mass is not None or delta_x0 is not None:
        m = PROTON_MASS_G if mass is None else mass
        dx = 1e-5 if delta_x0 is None else delta_x0
        t_spread = spread_characteristic_time(m, dx)
        print(f"spread_characteristic_time(mass={m:g} g, delta_x0={dx:g} cm) = {t_spread:.6g} s")
    if n_constituents is not None:
        lam = amplification_rate(int(n_constituents), SpaceCollapseConstants())
        print(f"amplification_rate(N={int(n_constituents)}) = {lam:.6g} 1/s")
    return files


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="YAML config file")
    parser.add_argument("--gamma", type=float, help="collapse coupling (1/s)")
    parser.add_argument("--omega", type=float, help="Hamiltonian frequency (1/s)")
    parser.add_argument("--n", type=int, dest="n_trajectories", help="trajectory count")
    parser.add_argument("--seed", type=int, dest="master_seed", help="master seed")
    parser.add_argument("--horizon", type=float, help="simulated horizon (s)")
    parser.add_argument("--preset", choices=["desk", "paper"], help="schedule preset")
    parser.add_argument("--stride", type=int, dest="sample_stride",
                        help="integrator steps per stored sample")
    parser.add_argument("--workers", type=int, help="worker thread count")
    parser.add_argument("--out", dest="out_dir", help="output directory")
    parser.add_argument("--svg", action="store_true", default=None, dest="emit_svg",
                        help="also write SVG figures")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spincollapse",
        description="Quantum-trajectory Monte Carlo for a two-level collapse equation",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trajectory", help="simulate and export one trajectory")
    _add_common(p)
    p.add_argument("--stream-index", type=int, dest="stream_index",
                   help="noise stream ordinal (default 0)")

    p = sub.add_parser("ensemble", help="run one ensemble and export statistics")
    _add_common(p)

    p = sub.add_parser("sweep", help="run the gamma sweep")
    _add_common(p)
    p.add_argument("--gammas", help="comma-separated gamma values")

    p = sub.add_parser("validate", help="run self-validation checks")
    _add_common(p)
    p.add_argument("--corrupt-drift", action="store_true",
                   help="negative control: flip the drift sign (must fail)")

    p = sub.add_parser("analytic", help="closed-form curves and scalar estimates")
    _add_common(p)
    p.add_argument("--dt-out", type=float, default=1e-3, help="output grid spacing (s)")
    p.add_argument("--mass", type=float, help="mass in grams for the spread time")
    p.add_argument("--delta-x0", type=float, help="initial spread in cm")
    p.add_argument("--n-constituents", type=float,
                   help="constituent count for the amplification rate")

    return parser


_OVERRIDE_KEYS = (
    "omega", "gamma", "n_trajectories", "master_seed", "horizon", "preset",
    "sample_stride", "workers", "out_dir", "emit_svg", "stream_index",
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: getattr(args, k) for k in _OVERRIDE_KEYS if hasattr(args, k)}
    if getattr(args, "gammas", None):
        try:
            overrides["gammas"] = tuple(float(g) for g in args.gammas.split(","))
        except ValueError:
            print(f"error: gammas: cannot parse {args.gammas!r}", file=sys.stderr)
            return EXIT_CONFIG
    try:
        config = load_config_file(args.config, args.command, overrides)
        if args.command == "trajectory":
            files = cmd_trajectory(config)
        elif args.command == "ensemble":
            files = cmd_ensemble(config)
        elif args.command == "sweep":
            files = cmd_sweep(config)
        elif args.command == "validate":
            files, passed = cmd_validate(config, corrupt_drift=args.corrupt_drift)
            for f in files:
                print(f"wrote {f}")
            return EXIT_OK if passed else EXIT_VALIDATION
        else:
            files = cmd_analytic(config, dt_out=args.dt_out, mass=args.mass,
                                 delta_x0=args.delta_x0,
                                 n_constituents=args.n_constituents)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SpinCollapseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for f in files:
        print(f"wrote {f}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
