"""Reduction and delocalization detection on sampled trajectories.

A reduction happens at the earliest sample time t_r from which one fixed
eigenstate's population stays above 1 - epsilon at every stored sample in
the closed window [t_r, t_r + tau]; a delocalization is the mirror event
(population of the previously reduced eigenstate below 1 - epsilon for a
full window).  Detection runs on the stored sample grid, with no
interpolation: event times are sample times, and a window must fit entirely
before the horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .engine import TrajectoryRecord
from .errors import WindowResolutionError

# Absolute slack (s) for window-membership comparisons on the sample grid.
_TIME_TOL = 1e-9


def default_tau(epsilon: float) -> float:
    """Persistence window: 10x the time a bare Rabi peak stays within epsilon."""
    return 10.0 * (math.pi / 2.0 - math.asin(1.0 - epsilon))


@dataclass(frozen=True)
class DetectorConfig:
    """Closeness threshold epsilon and persistence window tau (seconds)."""

    epsilon: float = 0.01
    tau: float = default_tau(0.01)

    def __post_init__(self):
        if not (0.0 < self.epsilon < 0.5):
            raise ValueError(f"epsilon must lie in (0, 1/2), got {self.epsilon}")
        if not (self.tau > 0):
            raise ValueError(f"tau must be positive, got {self.tau}")


class Eigenstate(Enum):
    PLUS = "plus"
    MINUS = "minus"


@dataclass(frozen=True)
class ReductionEvent:
    eigenstate: Eigenstate
    t_r: float


@dataclass(frozen=True)
class DelocalizationEvent:
    from_eigenstate: Eigenstate
    t_d: float


def _check_resolution(times: np.ndarray, tau: float):
    if len(times) > 1 and float(np.max(np.diff(times))) > tau / 10.0 + _TIME_TOL:
        raise WindowResolutionError("window unresolvable at this sampling rate")


def _first_window_start(times, mask, tau, i_search):
    """Earliest index i >= i_search whose closed window [t_i, t_i + tau] is
    all-True on the sample grid and fits before the last sample; None if none.

    Within one run of True samples the window end grows with the start, so
    only the run's earliest admissible start can succeed.
    """
    n = len(times)
    if i_search >= n:
        return None
    m = mask.view(np.int8)
    d = np.diff(m)
    starts = np.flatnonzero(d == 1) + 1
    ends = np.flatnonzero(d == -1)
    if mask[0]:
        starts = np.concatenate([[0], starts])
    if mask[n - 1]:
        ends = np.concatenate([ends, [n - 1]])
    t_last = times[n - 1]
    for a, b in zip(starts, ends):
        if b < i_search:
            continue
        i0 = max(int(a), i_search)
        t0 = times[i0]
        end = t0 + tau
        if end > t_last + _TIME_TOL:
            continue
        if b + 1 < n and times[b + 1] <= end + _TIME_TOL:
            continue
        return i0
    return None


def _detect_reduction_series(times, pop_plus, epsilon, tau, search_start):
    """Series-level reduction scan; pop_plus is the up-state population."""
    i_search = int(np.searchsorted(times, search_start - _TIME_TOL, side="left"))
    hi = 1.0 - epsilon
    best = None
    i_plus = _first_window_start(times, pop_plus > hi, tau, i_search)
    if i_plus is not None:
        best = (i_plus, Eigenstate.PLUS)
    i_minus = _first_window_start(times, pop_plus < epsilon, tau, i_search)
    if i_minus is not None and (best is None or i_minus < best[0]):
        best = (i_minus, Eigenstate.MINUS)
    if best is None:
        return None
    return ReductionEvent(eigenstate=best[1], t_r=float(times[best[0]]))


def _detect_delocalization_series(times, pop_plus, epsilon, tau, reduction):
    pop_e = pop_plus if reduction.eigenstate is Eigenstate.PLUS else 1.0 - pop_plus
    i_search = int(np.searchsorted(times, reduction.t_r + _TIME_TOL, side="left"))
    i = _first_window_start(times, pop_e < 1.0 - epsilon, tau, i_search)
    if i is None:
        return None
    return DelocalizationEvent(from_eigenstate=reduction.eigenstate, t_d=float(times[i]))


def detect_reduction(
    record: TrajectoryRecord, config: DetectorConfig, search_start: float = 0.0
) -> ReductionEvent | None:
    """Earliest reduction event at or after search_start, if any."""
    times = record.sample_times
    _check_resolution(times, config.tau)
    return _detect_reduction_series(
        times, record.population_plus(), config.epsilon, config.tau, search_start
    )


def detect_delocalization(
    record: TrajectoryRecord, reduction: ReductionEvent, config: DetectorConfig
) -> DelocalizationEvent | None:
    """Earliest delocalization strictly after the given reduction, if any."""
    times = record.sample_times
    _check_resolution(times, config.tau)
    return _detect_delocalization_series(
        times, record.population_plus(), config.epsilon, config.tau, reduction
    )


def event_history(record: TrajectoryRecord, config: DetectorConfig):
    """Alternating reduction/delocalization events over the whole record.

    After a delocalization at t_d the next reduction search starts at t_d
    (the jump to the other eigenstate completes well inside the window).
    This alternating scan extends the single-event detectors; it backs the
    long-horizon equilibration analysis.
    """
    times = record.sample_times
    _check_resolution(times, config.tau)
    pop = record.population_plus()
    events: list[ReductionEvent | DelocalizationEvent] = []
    search = 0.0
    while True:
        red = _detect_reduction_series(times, pop, config.epsilon, config.tau, search)
        if red is None:
            break
        events.append(red)
        deloc = _detect_delocalization_series(times, pop, config.epsilon, config.tau, red)
        if deloc is None:
            break
        events.append(deloc)
        search = deloc.t_d
    return events
