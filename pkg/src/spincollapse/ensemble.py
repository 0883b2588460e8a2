"""Parallel Monte Carlo runner and ensemble statistics.

Trajectories are embarrassingly parallel: each owns its Philox noise
stream (master_seed, trajectory_index), batches of trajectories run on a
thread pool (the compiled kernel releases the GIL), and aggregation is a
fixed-order combine over fixed-size batches, so results are bit-identical
for any worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .analytic import solve_density_series
from .engine import (
    DEFAULT_OPTIONS,
    DESK_SCHEDULE,
    EngineOptions,
    StepSchedule,
    _run_batch,
    default_sample_stride,
    plan_segments,
    sample_layout,
)
from .events import (
    DetectorConfig,
    Eigenstate,
    _check_resolution,
    _detect_delocalization_series,
    _detect_reduction_series,
)
from .noise import derive_seed, make_generator
from .spin import ModelParams, SpinState, to_density_params

# Bound on the per-batch sample buffer (B x n_samples x 4 doubles).
_TARGET_BATCH_BYTES = 64 << 20

_trapezoid = getattr(np, "trapezoid", None) or np.trapz  # numpy < 2.0

_ENV_WORKER_CAP = "SPINCOLLAPSE_MAX_WORKERS"


def default_workers() -> int:
    w = min(4, os.cpu_count() or 1)
    cap = os.environ.get(_ENV_WORKER_CAP)
    if cap:
        w = max(1, min(w, int(cap)))
    return w


@dataclass(frozen=True)
class EnsembleConfig:
    """Everything that identifies an ensemble run (results are a pure function of it)."""

    params: ModelParams
    init: SpinState
    n_trajectories: int
    master_seed: int
    schedule: StepSchedule = DESK_SCHEDULE
    horizon: float = 2.0 * math.pi
    detector: DetectorConfig = DetectorConfig()
    sample_stride: int | None = None

    def __post_init__(self):
        if self.n_trajectories < 1:
            raise ValueError(f"n_trajectories must be >= 1, got {self.n_trajectories}")
        if self.horizon < self.detector.tau:
            raise ValueError(
                f"horizon ({self.horizon}) must be >= detector tau ({self.detector.tau})"
            )

    @property
    def stride(self) -> int:
        if self.sample_stride is not None:
            return self.sample_stride
        return default_sample_stride(self.schedule)


@dataclass(frozen=True)
class EnsembleStats:
    """Reduction/delocalization counts and timing statistics."""

    n_total: int
    n_reduced_plus: int
    n_reduced_minus: int
    n_reduced_total: int
    mean_t_r: float | None
    std_t_r: float | None
    n_delocalized: int
    reduced_fraction: float
    prob_plus_given_reduced: float | None
    prob_minus_given_reduced: float | None

    @property
    def delocalized_fraction(self) -> float | None:
        """Fraction of reduced trajectories later delocalized (within the horizon)."""
        if self.n_reduced_total == 0:
            return None
        return self.n_delocalized / self.n_reduced_total

    def to_json_dict(self) -> dict:
        return {
            "n_total": self.n_total,
            "n_reduced_plus": self.n_reduced_plus,
            "n_reduced_minus": self.n_reduced_minus,
            "n_reduced_total": self.n_reduced_total,
            "mean_t_r": self.mean_t_r,
            "std_t_r": self.std_t_r,
            "n_delocalized": self.n_delocalized,
            "reduced_fraction": self.reduced_fraction,
            "prob_plus_given_reduced": self.prob_plus_given_reduced,
            "prob_minus_given_reduced": self.prob_minus_given_reduced,
            "delocalized_fraction": self.delocalized_fraction,
        }


@dataclass(frozen=True)
class CoherenceSeries:
    """Ensemble means of the coherence's real part, imaginary part, and modulus."""

    sample_times: np.ndarray
    mean_re: np.ndarray
    mean_im: np.ndarray
    mean_abs: np.ndarray


@dataclass(frozen=True)
class EnsembleResult:
    stats: EnsembleStats
    events: list[tuple]
    sample_times: np.ndarray
    mean_pop_plus: np.ndarray
    coherence: CoherenceSeries
    final_pop: np.ndarray


@dataclass
class _Partial:
    sum_pop: np.ndarray
    sum_re: np.ndarray
    sum_im: np.ndarray
    sum_abs: np.ndarray
    final_pop: np.ndarray
    im_tail_max: np.ndarray
    events: list[tuple]


def _batch_size(n_samples: int) -> int:
    b = _TARGET_BATCH_BYTES // (n_samples * 32)
    return int(max(8, min(512, b)))


def _detect_events(times, pop, detector):
    red = _detect_reduction_series(times, pop, detector.epsilon, detector.tau, 0.0)
    if red is None:
        return ()
    deloc = _detect_delocalization_series(times, pop, detector.epsilon, detector.tau, red)
    if deloc is None:
        return (red,)
    return (red, deloc)


def _process_batch(config, segments, times, idx0, size, detect, tail_index, options):
    n_samples = len(times)
    gens = [make_generator(config.master_seed, idx0 + j) for j in range(size)]
    out = np.empty((size, n_samples, 4))
    _run_batch(
        config.params, config.init, segments, config.stride, gens, options, out,
        index_offset=idx0,
    )
    ar, ai, br, bi = out[:, :, 0], out[:, :, 1], out[:, :, 2], out[:, :, 3]
    pop = ar * ar + ai * ai
    coh_re = ar * br + ai * bi
    coh_im = ai * br - ar * bi
    coh_abs = np.hypot(coh_re, coh_im)
    events: list[tuple] = []
    if detect:
        for j in range(size):
            events.append(_detect_events(times, pop[j], config.detector))
    return _Partial(
        sum_pop=pop.sum(axis=0),
        sum_re=coh_re.sum(axis=0),
        sum_im=coh_im.sum(axis=0),
        sum_abs=coh_abs.sum(axis=0),
        final_pop=pop[:, -1].copy(),
        im_tail_max=np.max(np.abs(coh_im[:, tail_index:]), axis=1),
        events=events,
    )


def _run(config: EnsembleConfig, workers: int | None, detect: bool,
         tail_start: float = 0.0, options: EngineOptions = DEFAULT_OPTIONS):
    segments = plan_segments(config.schedule, config.horizon)
    _total, n_samples, times = sample_layout(segments, config.stride)
    if detect:
        _check_resolution(times, config.detector.tau)
    n = config.n_trajectories
    bs = _batch_size(n_samples)
    batches = [(i, min(bs, n - i)) for i in range(0, n, bs)]
    tail_index = int(np.searchsorted(times, tail_start - 1e-12, side="left"))

    def task(b):
        idx0, size = b
        return _process_batch(config, segments, times, idx0, size, detect, tail_index, options)

    w = default_workers() if workers is None else max(1, workers)
    if w == 1 or len(batches) == 1:
        partials = [task(b) for b in batches]
    else:
        with ThreadPoolExecutor(max_workers=w) as ex:
            partials = list(ex.map(task, batches))

    sum_pop = np.zeros(n_samples)
    sum_re = np.zeros(n_samples)
    sum_im = np.zeros(n_samples)
    sum_abs = np.zeros(n_samples)
    final_pop = np.empty(n)
    im_tail_max = np.empty(n)
    events: list[tuple] = []
    for (idx0, size), p in zip(batches, partials):
        sum_pop += p.sum_pop
        sum_re += p.sum_re
        sum_im += p.sum_im
        sum_abs += p.sum_abs
        final_pop[idx0 : idx0 + size] = p.final_pop
        im_tail_max[idx0 : idx0 + size] = p.im_tail_max
        events.extend(p.events)

    coherence = CoherenceSeries(
        sample_times=times,
        mean_re=sum_re / n,
        mean_im=sum_im / n,
        mean_abs=sum_abs / n,
    )
    return times, sum_pop / n, coherence, final_pop, im_tail_max, events


def _stats_from_events(n_total: int, events: list[tuple]) -> EnsembleStats:
    t_rs = []
    n_plus = 0
    n_minus = 0
    n_deloc = 0
    for evs in events:
        if not evs:
            continue
        red = evs[0]
        t_rs.append(red.t_r)
        if red.eigenstate is Eigenstate.PLUS:
            n_plus += 1
        else:
            n_minus += 1
        if len(evs) > 1:
            n_deloc += 1
    n_red = n_plus + n_minus
    t_arr = np.asarray(t_rs)
    return EnsembleStats(
        n_total=n_total,
        n_reduced_plus=n_plus,
        n_reduced_minus=n_minus,
        n_reduced_total=n_red,
        mean_t_r=float(t_arr.mean()) if n_red else None,
        std_t_r=float(t_arr.std(ddof=1)) if n_red > 1 else None,
        n_delocalized=n_deloc,
        reduced_fraction=n_red / n_total,
        prob_plus_given_reduced=n_plus / n_red if n_red else None,
        prob_minus_given_reduced=n_minus / n_red if n_red else None,
    )


def run_ensemble(
    config: EnsembleConfig,
    workers: int | None = None,
    options: EngineOptions = DEFAULT_OPTIONS,
) -> EnsembleResult:
    """Simulate the configured ensemble and aggregate reduction statistics.

    Each trajectory is scanned for its first reduction (from t = 0) and, if
    reduced, for a subsequent delocalization.  Deterministic for a fixed
    config, independent of worker count.
    """
    times, mean_pop, coherence, final_pop, _imx, events = _run(
        config, workers, detect=True, options=options
    )
    return EnsembleResult(
        stats=_stats_from_events(config.n_trajectories, events),
        events=events,
        sample_times=times,
        mean_pop_plus=mean_pop,
        coherence=coherence,
        final_pop=final_pop,
    )


@dataclass(frozen=True)
class GammaSummary:
    gamma: float
    seed: int
    stats: EnsembleStats
    result: EnsembleResult


def sweep_seed(master_seed: int, gamma_index: int) -> int:
    """Sub-seed for entry gamma_index of a sweep (stable across releases)."""
    return derive_seed(master_seed, "sweep", gamma_index)


def reduction_time_curve(
    base: EnsembleConfig,
    gammas,
    workers: int | None = None,
    options: EngineOptions = DEFAULT_OPTIONS,
) -> list[GammaSummary]:
    """Run one ensemble per gamma with derived sub-seeds."""
    summaries = []
    for i, gamma in enumerate(gammas):
        if gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {gamma}")
        seed = sweep_seed(base.master_seed, i)
        config = replace(
            base,
            params=ModelParams(base.params.omega, float(gamma)),
            master_seed=seed,
        )
        result = run_ensemble(config, workers=workers, options=options)
        summaries.append(
            GammaSummary(gamma=float(gamma), seed=seed, stats=result.stats, result=result)
        )
    return summaries


def coherence_statistics(
    config: EnsembleConfig,
    workers: int | None = None,
    options: EngineOptions = DEFAULT_OPTIONS,
) -> CoherenceSeries:
    """Ensemble means of the coherence on the sample grid (no detection)."""
    _t, _pop, coherence, _fp, _imx, _ev = _run(config, workers, detect=False, options=options)
    return coherence


@dataclass(frozen=True)
class DecoherenceDiagnostic:
    """Summary separating phase-averaging decoherence from per-trajectory collapse."""

    series: CoherenceSeries
    tail_start: float
    mean_im_tail_max: float        # max |ensemble-mean Im coherence| on the tail
    traj_im_tail_max: np.ndarray   # per-trajectory max |Im coherence| on the tail
    mean_abs_avg: float            # time average of mean |coherence|, full window
    mean_abs_tail_avg: float       # time average of mean |coherence|, tail only


def decoherence_diagnostic(
    config: EnsembleConfig,
    tail_start: float | None = None,
    workers: int | None = None,
    options: EngineOptions = DEFAULT_OPTIONS,
) -> DecoherenceDiagnostic:
    """Coherence statistics plus the tail metrics used by the collapse-vs-
    decoherence comparison (tail defaults to the second half of the window)."""
    if tail_start is None:
        tail_start = 0.5 * config.horizon
    times, _pop, coherence, _fp, im_tail_max, _ev = _run(
        config, workers, detect=False, tail_start=tail_start, options=options
    )
    tail = times >= tail_start - 1e-12
    t_tail = times[tail]

    def time_avg(y, t):
        if len(t) < 2:
            return float(y[-1])
        return float(_trapezoid(y, t) / (t[-1] - t[0]))

    return DecoherenceDiagnostic(
        series=coherence,
        tail_start=tail_start,
        mean_im_tail_max=float(np.max(np.abs(coherence.mean_im[tail]))),
        traj_im_tail_max=im_tail_max,
        mean_abs_avg=time_avg(coherence.mean_abs, times),
        mean_abs_tail_avg=time_avg(coherence.mean_abs[tail], t_tail),
    )


def martingale_check(
    gamma: float,
    init: SpinState,
    n: int,
    t_end: float,
    master_seed: int,
    schedule: StepSchedule = DESK_SCHEDULE,
    workers: int | None = None,
    options: EngineOptions = DEFAULT_OPTIONS,
) -> tuple[float, float]:
    """Ensemble mean of the final up population and its standard error at omega = 0.

    With no Hamiltonian the up population is a martingale, so the mean must
    stay at its initial value; this run needs no event detection and may use
    horizons shorter than the detector window.
    """
    params = ModelParams(0.0, gamma)
    config = EnsembleConfig(
        params=params,
        init=init,
        n_trajectories=n,
        master_seed=master_seed,
        schedule=schedule,
        horizon=t_end,
        # detection is skipped; tau only needs to satisfy the horizon bound
        detector=DetectorConfig(tau=t_end),
    )
    _t, _pop, _coh, final_pop, _imx, _ev = _run(config, workers, detect=False, options=options)
    mean = float(final_pop.mean())
    se = float(final_pop.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return mean, se


def weak_convergence_gap(result: EnsembleResult, config: EnsembleConfig) -> float:
    """Sup-norm gap between the ensemble-mean up population and the analytic x(t)."""
    x, _y, _z = solve_density_series(
        config.params, to_density_params(config.init), result.sample_times
    )
    return float(np.max(np.abs(result.mean_pop_plus - x)))


def weak_convergence_check(
    config: EnsembleConfig,
    workers: int | None = None,
    options: EngineOptions = DEFAULT_OPTIONS,
) -> float:
    """Run the ensemble (no detection) and return the sup-norm gap to x(t)."""
    if config.params.omega <= 0:
        raise ValueError("weak convergence check needs omega > 0 (analytic oracle)")
    times, mean_pop, _coh, _fp, _imx, _ev = _run(config, workers, detect=False, options=options)
    x, _y, _z = solve_density_series(
        config.params, to_density_params(config.init), times
    )
    return float(np.max(np.abs(mean_pop - x)))
