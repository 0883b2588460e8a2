"""Quantum-trajectory Monte Carlo for a two-level spontaneous-collapse equation.

Core pieces: immutable spin-state types and observables (spin), the exact
density-matrix solution plus its RK4 cross-check oracle (analytic),
Euler-Maruyama trajectory integration with reproducible Philox noise
streams and a compiled hot kernel (engine / kernel), reduction and
delocalization detection (events), parallel ensemble statistics
(ensemble), and a CLI with CSV/JSON/SVG outputs (cli).
"""

__version__ = "0.1.0"

from .analytic import (
    DampingRegime,
    SpaceCollapseConstants,
    amplification_rate,
    classify_damping,
    density_ode_rhs,
    integrate_density_reference,
    solve_density,
    solve_density_series,
    spread_characteristic_time,
)
from .engine import (
    DESK_SCHEDULE,
    PAPER_SCHEDULE,
    EngineOptions,
    StepSchedule,
    TrajectoryRecord,
    euler_step,
    simulate_trajectory,
)
from .ensemble import (
    CoherenceSeries,
    EnsembleConfig,
    EnsembleResult,
    EnsembleStats,
    coherence_statistics,
    decoherence_diagnostic,
    martingale_check,
    reduction_time_curve,
    run_ensemble,
    weak_convergence_check,
)
from .errors import (
    ConfigError,
    DegenerateStateError,
    ReferenceDivergedError,
    SpinCollapseError,
    WindowResolutionError,
)
from .events import (
    DelocalizationEvent,
    DetectorConfig,
    Eigenstate,
    ReductionEvent,
    detect_delocalization,
    detect_reduction,
    event_history,
)
from .noise import NoiseStream, derive_seed
from .spin import (
    MINUS,
    PLUS,
    DensityParams,
    ModelParams,
    SpinState,
    bloch_coordinates,
    coherence,
    expect_sigma_z,
    to_density_params,
)

__all__ = [
    "__version__",
    "DampingRegime", "SpaceCollapseConstants", "amplification_rate",
    "classify_damping", "density_ode_rhs", "integrate_density_reference",
    "solve_density", "solve_density_series", "spread_characteristic_time",
    "DESK_SCHEDULE", "PAPER_SCHEDULE", "EngineOptions", "StepSchedule",
    "TrajectoryRecord", "euler_step", "simulate_trajectory",
    "CoherenceSeries", "EnsembleConfig", "EnsembleResult", "EnsembleStats",
    "coherence_statistics", "decoherence_diagnostic", "martingale_check",
    "reduction_time_curve", "run_ensemble", "weak_convergence_check",
    "ConfigError", "DegenerateStateError", "ReferenceDivergedError",
    "SpinCollapseError", "WindowResolutionError",
    "DelocalizationEvent", "DetectorConfig", "Eigenstate", "ReductionEvent",
    "detect_delocalization", "detect_reduction", "event_history",
    "NoiseStream", "derive_seed",
    "MINUS", "PLUS", "DensityParams", "ModelParams", "SpinState",
    "bloch_coordinates", "coherence", "expect_sigma_z", "to_density_params",
]
