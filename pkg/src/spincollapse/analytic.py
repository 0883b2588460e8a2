"""Closed-form density-matrix evolution and scalar estimates.

The ensemble-averaged density matrix obeys the linear system

    dx/dt = -2 omega z
    dy/dt = -2 gamma y
    dz/dt = -omega + 2 omega x - 2 gamma z

whose z component is a damped harmonic oscillator (zdd + 2 gamma zd +
4 omega^2 z = 0).  ``solve_density`` evaluates the exact solution in the
three damping regimes; ``integrate_density_reference`` is the deliberately
independent fixed-step RK4 oracle used to cross-check it.

The slow/fast mode coefficients of z(t) in the over-damped branch are
derived from the initial conditions dx/dt(0) = -2 omega z0 and
dz/dt(0) = -omega + 2 omega x0 - 2 gamma z0; a published form that pairs
them with the opposite exponentials fails those conditions (the RK4 oracle
test pins the correct pairing).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ReferenceDivergedError
from .spin import DensityParams, ModelParams

# Planck constant (not hbar) in CGS units, matching cm/g/s inputs.
PLANCK_ERG_S = 6.62607015e-27

AVOGADRO = 6.02214076e23
PROTON_MASS_G = 1.67262192369e-24

# Half-width of the relative band |gamma/(2 omega) - 1| routed to the
# critically damped branch; outside it the generic branches stay exact.
CRITICAL_BAND = 1e-9


class DampingRegime(Enum):
    OVER_DAMPED = "over_damped"
    CRITICALLY_DAMPED = "critically_damped"
    UNDER_DAMPED = "under_damped"


@dataclass(frozen=True)
class SpaceCollapseConstants:
    """Parameters of the spatial collapse model kept for the scalar formulas.

    alpha_loc is the inverse squared localization length (1/cm^2),
    lambda_rate the single-particle collapse rate (1/s).
    """

    alpha_loc: float = 1e10
    lambda_rate: float = 1e-17

    def __post_init__(self):
        if self.alpha_loc <= 0 or self.lambda_rate <= 0:
            raise ValueError("space-collapse constants must be positive")

    @property
    def localization_length(self) -> float:
        """1/sqrt(alpha_loc), in cm."""
        return self.alpha_loc**-0.5


def classify_damping(params: ModelParams) -> DampingRegime:
    """Classify gamma against 2*omega; omega = 0 has no analytic branch."""
    if params.omega == 0.0:
        raise ValueError("undamped oscillator undefined classification")
    ratio = params.gamma / (2.0 * params.omega)
    if abs(ratio - 1.0) <= CRITICAL_BAND:
        return DampingRegime.CRITICALLY_DAMPED
    if ratio > 1.0:
        return DampingRegime.OVER_DAMPED
    return DampingRegime.UNDER_DAMPED


def density_ode_rhs(params: ModelParams, p: DensityParams) -> tuple[float, float, float]:
    """Right-hand side (dx/dt, dy/dt, dz/dt) of the density-matrix system."""
    w, g = params.omega, params.gamma
    return (-2.0 * w * p.z, -2.0 * g * p.y, -w + 2.0 * w * p.x - 2.0 * g * p.z)


def solve_density_series(
    params: ModelParams, init: DensityParams, times
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized closed-form (x, y, z) at the given times (all >= 0)."""
    t = np.asarray(times, dtype=float)
    if np.any(t < 0):
        raise ValueError("times must be >= 0")
    regime = classify_damping(params)
    w, g = params.omega, params.gamma
    x0, y0, z0 = init.x, init.y, init.z
    u0 = x0 - 0.5

    y = y0 * np.exp(-2.0 * g * t)

    if regime is DampingRegime.OVER_DAMPED:
        mu = math.sqrt(1.0 - (2.0 * w / g) ** 2)
        # rate_slow = gamma*(1-mu) without cancellation for gamma >> omega
        rate_slow = 4.0 * w * w / (g * (1.0 + mu))
        rate_fast = g * (1.0 + mu)
        e_slow = np.exp(-rate_slow * t)
        e_fast = np.exp(-rate_fast * t)
        a_fast = -2.0 * w * w * u0 / (g * g * mu * (1.0 + mu)) + w * z0 / (g * mu)
        b_slow = u0 * (1.0 + mu) / (2.0 * mu) - w * z0 / (g * mu)
        c_slow = w * u0 / (g * mu) - z0 * (1.0 - mu) / (2.0 * mu)
        d_fast = -w * u0 / (g * mu) + z0 * (1.0 + mu) / (2.0 * mu)
        x = a_fast * e_fast + b_slow * e_slow + 0.5
        z = c_slow * e_slow + d_fast * e_fast
    elif regime is DampingRegime.CRITICALLY_DAMPED:
        e = np.exp(-g * t)
        b = 2.0 * w * u0 - g * z0
        x = (u0 + b * t) * e + 0.5
        z = (z0 + b * t) * e
    else:
        lam = math.sqrt(4.0 * w * w - g * g)
        e = np.exp(-g * t)
        cos = np.cos(lam * t)
        sin = np.sin(lam * t)
        b = (g * u0 - 2.0 * w * z0) / lam
        d = (2.0 * w * u0 - g * z0) / lam
        x = (u0 * cos + b * sin) * e + 0.5
        z = (z0 * cos + d * sin) * e

    return x, y, z


def solve_density(params: ModelParams, init: DensityParams, t: float) -> DensityParams:
    """Exact (x, y, z) at time t >= 0 for the regime selected by classify_damping."""
    x, y, z = solve_density_series(params, init, [t])
    return DensityParams(float(x[0]), float(y[0]), float(z[0]))


@dataclass(frozen=True)
class DensitySeries:
    """Time series of density parameters produced by the reference integrator."""

    times: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def at(self, i: int) -> DensityParams:
        return DensityParams(float(self.x[i]), float(self.y[i]), float(self.z[i]))


def integrate_density_reference(
    params: ModelParams, init: DensityParams, t_end: float, dt: float
) -> DensitySeries:
    """Classic fixed-step fourth-order integration of the density-matrix system.

    Used only as an independent cross-check for ``solve_density``; the final
    step is truncated so the series lands exactly on t_end.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if t_end < 0:
        raise ValueError(f"t_end must be >= 0, got {t_end}")
    w, g = params.omega, params.gamma

    n_full = int(math.floor(t_end / dt + 1e-12))
    rem = t_end - n_full * dt
    steps = [dt] * n_full
    if rem > 1e-12 * max(1.0, t_end):
        steps.append(rem)

    n = len(steps)
    times = np.empty(n + 1)
    xs = np.empty(n + 1)
    ys = np.empty(n + 1)
    zs = np.empty(n + 1)
    x, y, z = init.x, init.y, init.z
    t = 0.0
    times[0], xs[0], ys[0], zs[0] = t, x, y, z

    for i, h in enumerate(steps):
        k1x = -2.0 * w * z
        k1y = -2.0 * g * y
        k1z = -w + 2.0 * w * x - 2.0 * g * z
        x2, y2, z2 = x + 0.5 * h * k1x, y + 0.5 * h * k1y, z + 0.5 * h * k1z
        k2x = -2.0 * w * z2
        k2y = -2.0 * g * y2
        k2z = -w + 2.0 * w * x2 - 2.0 * g * z2
        x3, y3, z3 = x + 0.5 * h * k2x, y + 0.5 * h * k2y, z + 0.5 * h * k2z
        k3x = -2.0 * w * z3
        k3y = -2.0 * g * y3
        k3z = -w + 2.0 * w * x3 - 2.0 * g * z3
        x4, y4, z4 = x + h * k3x, y + h * k3y, z + h * k3z
        k4x = -2.0 * w * z4
        k4y = -2.0 * g * y4
        k4z = -w + 2.0 * w * x4 - 2.0 * g * z4
        x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        z += h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
        t += h
        times[i + 1], xs[i + 1], ys[i + 1], zs[i + 1] = t, x, y, z

    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys)) and np.all(np.isfinite(zs))):
        raise ReferenceDivergedError("reference integration diverged")
    return DensitySeries(times=times, x=xs, y=ys, z=zs)


def spread_characteristic_time(mass: float, delta_x0: float) -> float:
    """Time for a free wavepacket's position spread to double, sqrt(12) m dx0^2 / h.

    mass in grams, delta_x0 in cm, result in seconds.
    """
    if mass <= 0:
        raise ValueError(f"mass must be positive, got {mass}")
    if delta_x0 <= 0:
        raise ValueError(f"delta_x0 must be positive, got {delta_x0}")
    return math.sqrt(12.0) * mass * delta_x0**2 / PLANCK_ERG_S


def amplification_rate(
    n_constituents: int, constants: SpaceCollapseConstants = SpaceCollapseConstants()
) -> float:
    """Collective collapse rate of an N-constituent rigid body: N * lambda_rate."""
    if n_constituents < 1:
        raise ValueError(f"n_constituents must be >= 1, got {n_constituents}")
    return n_constituents * constants.lambda_rate
