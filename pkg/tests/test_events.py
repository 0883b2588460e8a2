import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spincollapse import (
    DESK_SCHEDULE,
    DelocalizationEvent,
    DetectorConfig,
    Eigenstate,
    ModelParams,
    NoiseStream,
    ReductionEvent,
    SpinState,
    WindowResolutionError,
    detect_delocalization,
    detect_reduction,
    event_history,
    simulate_trajectory,
)
from spincollapse.engine import StepSchedule, TrajectoryRecord
from spincollapse.events import default_tau


def make_record(times, pop):
    """Synthetic trajectory with the requested up-state population."""
    times = np.asarray(times, dtype=float)
    pop = np.asarray(pop, dtype=float)
    samples = np.empty((len(times), 2), dtype=np.complex128)
    samples[:, 0] = np.sqrt(pop)
    samples[:, 1] = np.sqrt(1.0 - pop)
    return TrajectoryRecord(
        params=ModelParams(1.0, 1.0),
        seed=0,
        stream_index=0,
        schedule=DESK_SCHEDULE,
        horizon=float(times[-1]),
        sample_stride=1,
        sample_times=times,
        samples=samples,
        norm_dev_max=0.0,
        norm_dev_rms=0.0,
    )


def grid_record(pop_of_t, horizon, dt=0.05):
    t = np.arange(0.0, horizon + dt / 2, dt)
    return make_record(t, pop_of_t(t))


CFG = DetectorConfig()


class TestDetectorConfig:
    def test_defaults(self):
        assert CFG.epsilon == 0.01
        assert CFG.tau == pytest.approx(1.4154, abs=1e-4)
        assert CFG.tau == pytest.approx(10 * (math.pi / 2 - math.asin(0.99)))

    def test_validation(self):
        with pytest.raises(ValueError):
            DetectorConfig(epsilon=0.5)
        with pytest.raises(ValueError):
            DetectorConfig(epsilon=0.0)
        with pytest.raises(ValueError):
            DetectorConfig(tau=0.0)


class TestDetectReduction:
    def test_constant_up_state(self):
        rec = grid_record(lambda t: np.full_like(t, 0.9999), 2 * math.pi)
        ev = detect_reduction(rec, CFG)
        assert ev == ReductionEvent(Eigenstate.PLUS, 0.0)

    def test_constructed_window(self):
        rec = grid_record(lambda t: np.where(t < 1.0, 0.5, 0.995), 3.0)
        ev = detect_reduction(rec, CFG)
        assert ev.eigenstate is Eigenstate.PLUS
        assert ev.t_r == pytest.approx(1.0)

    def test_minus_eigenstate(self):
        rec = grid_record(lambda t: np.where(t < 2.0, 0.5, 0.003), 4.0)
        ev = detect_reduction(rec, CFG)
        assert ev.eigenstate is Eigenstate.MINUS
        assert ev.t_r == pytest.approx(2.0)

    def test_window_must_fit_horizon(self):
        # plateau starts with less than tau left before the horizon
        rec = grid_record(lambda t: np.where(t < 2.0, 0.5, 0.995), 3.0)
        assert detect_reduction(rec, CFG) is None

    def test_brief_plateau_rejected(self):
        rec = grid_record(lambda t: np.where((t >= 1.0) & (t < 2.0), 0.995, 0.5), 6.0)
        assert detect_reduction(rec, CFG) is None

    def test_search_start(self):
        rec = grid_record(lambda t: np.full_like(t, 0.999), 6.0)
        ev = detect_reduction(rec, CFG, search_start=2.5)
        assert ev.t_r == pytest.approx(2.5)

    def test_rabi_oscillation_never_reduces(self):
        # bare rotation keeps the population above threshold only briefly
        rec = simulate_trajectory(ModelParams(1.0, 0.0), SpinState(1.0, 0.0),
                                  DESK_SCHEDULE, 2 * math.pi, NoiseStream(1, 0),
                                  sample_stride=10)
        assert detect_reduction(rec, CFG) is None

    def test_resolution_precondition(self):
        rec = grid_record(lambda t: np.full_like(t, 0.999), 6.0, dt=0.5)
        with pytest.raises(WindowResolutionError, match="unresolvable"):
            detect_reduction(rec, CFG)

    def test_minimality_by_rescan(self):
        rng = np.random.default_rng(5)
        t = np.arange(0.0, 6.0, 0.05)
        pop = np.clip(0.6 + 0.5 * np.cumsum(rng.normal(0, 0.05, len(t))), 0.0, 1.0)
        rec = make_record(t, pop)
        ev = detect_reduction(rec, CFG)
        if ev is not None:
            thr = 1.0 - CFG.epsilon
            series = pop if ev.eigenstate is Eigenstate.PLUS else 1.0 - pop
            for i, ti in enumerate(t):
                if ti >= ev.t_r:
                    break
                window = (t >= ti) & (t <= ti + CFG.tau + 1e-9)
                ok = np.all(series[window] > thr) and ti + CFG.tau <= t[-1] + 1e-9
                other = (1.0 - series)[window]
                ok_other = np.all(other > thr) and ti + CFG.tau <= t[-1] + 1e-9
                assert not (ok or ok_other)


class TestDetectDelocalization:
    def test_pinned_state_never_delocalizes(self):
        rec = grid_record(lambda t: np.full_like(t, 0.9999), 2 * math.pi)
        red = detect_reduction(rec, CFG)
        assert detect_delocalization(rec, red, CFG) is None

    def test_constructed_escape(self):
        rec = grid_record(lambda t: np.where(t < 2.0, 0.995, 0.3), 4.0)
        red = detect_reduction(rec, CFG)
        assert red.t_r == 0.0
        ev = detect_delocalization(rec, red, CFG)
        assert ev.from_eigenstate is Eigenstate.PLUS
        assert ev.t_d == pytest.approx(2.0)

    def test_escape_window_must_fit(self):
        rec = grid_record(lambda t: np.where(t < 5.5, 0.995, 0.3), 6.0)
        red = detect_reduction(rec, CFG)
        assert detect_delocalization(rec, red, CFG) is None


class TestEventHistory:
    def test_constant_state_single_reduction(self):
        rec = grid_record(lambda t: np.full_like(t, 0.9999), 2 * math.pi)
        hist = event_history(rec, CFG)
        assert hist == [ReductionEvent(Eigenstate.PLUS, 0.0)]

    def test_square_wave_alternation(self):
        def pop(t):
            return np.where((t // 2.0) % 2 == 0, 0.995, 0.005)

        rec = grid_record(pop, 8.0)
        hist = event_history(rec, CFG)
        kinds = [type(e) for e in hist]
        # each plateau boundary delocalizes the old eigenstate and
        # immediately reduces to the other one
        assert kinds == [ReductionEvent, DelocalizationEvent] * 3 + [ReductionEvent]
        assert hist[0] == ReductionEvent(Eigenstate.PLUS, 0.0)
        assert [e.t_d for e in hist[1::2]] == pytest.approx([2.0, 4.0, 6.0])
        assert [e.t_r for e in hist[0::2]] == pytest.approx([0.0, 2.0, 4.0, 6.0])
        assert [e.eigenstate for e in hist[0::2]] == [
            Eigenstate.PLUS, Eigenstate.MINUS, Eigenstate.PLUS, Eigenstate.MINUS]

    def test_alternation_is_strict(self):
        rng = np.random.default_rng(11)
        t = np.arange(0.0, 30.0, 0.05)
        pop = (np.sin(0.3 * t + rng.normal(0, 0.5)) > 0).astype(float) * 0.999
        rec = make_record(t, np.clip(pop + 0.0005, 0.0, 1.0))
        hist = event_history(rec, CFG)
        for a, b in zip(hist, hist[1:]):
            assert type(a) is not type(b)
        # each delocalization follows its reduction strictly in time
        for a, b in zip(hist, hist[1:]):
            if isinstance(b, DelocalizationEvent):
                assert b.t_d > a.t_r
                assert b.from_eigenstate is a.eigenstate


@settings(deadline=None, max_examples=25)
@given(st.lists(st.booleans(), min_size=40, max_size=120), st.integers(0, 1000))
def test_monotone_persistence_in_tau(mask_bits, seed_shift):
    """Raising tau never yields an earlier reduction and only removes events."""
    t = np.arange(len(mask_bits)) * 0.05
    pop = np.where(np.asarray(mask_bits), 0.999, 0.4)
    rec = make_record(t, pop)
    taus = [0.6, 1.2, 2.4]  # all resolvable on the 0.05 grid
    events = [detect_reduction(rec, DetectorConfig(epsilon=0.01, tau=tau)) for tau in taus]
    for small, big in zip(events, events[1:]):
        if big is not None:
            assert small is not None
            assert small.t_r <= big.t_r


@settings(deadline=None, max_examples=25)
@given(st.lists(st.floats(0.0, 1.0), min_size=40, max_size=120))
def test_exclusivity(pops):
    """At most one eigenstate can be within epsilon at any sample."""
    t = np.arange(len(pops)) * 0.05
    pop = np.asarray(pops)
    hi = pop > 0.99
    lo = pop < 0.01
    assert not np.any(hi & lo)
