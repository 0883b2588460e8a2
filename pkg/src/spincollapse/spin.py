"""Pure spin-1/2 states, model parameters, and elementary observables.

The two-level system lives in the eigenbasis of the reducing operator
(sigma_z): ``alpha`` is the amplitude on the up eigenstate, ``beta`` on the
down eigenstate.  All types are immutable values and safe to share between
workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

NORM_TOL = 1e-12
PURITY_TOL = 1e-10
POSITIVITY_TOL = 1e-12

# Skip renormalization when the norm is already this close to 1, so that
# states coming out of the integrator (renormalized every step) round-trip
# through the constructor bit-for-bit.
_RENORM_SKIP = 1e-14


@dataclass(frozen=True)
class SpinState:
    """Normalized two-component wavefunction (amplitudes on up/down)."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        a = complex(self.alpha)
        b = complex(self.beta)
        n2 = (a.real * a.real + a.imag * a.imag) + (b.real * b.real + b.imag * b.imag)
        if not math.isfinite(n2):
            raise ValueError("spin state amplitudes must be finite")
        if n2 == 0.0:
            raise ValueError("spin state cannot be the zero vector")
        if abs(n2 - 1.0) > _RENORM_SKIP:
            n = math.sqrt(n2)
            a /= n
            b /= n
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @property
    def population_plus(self) -> float:
        return self.alpha.real**2 + self.alpha.imag**2

    @property
    def population_minus(self) -> float:
        return self.beta.real**2 + self.beta.imag**2


PLUS = SpinState(1.0, 0.0)
MINUS = SpinState(0.0, 1.0)


@dataclass(frozen=True)
class ModelParams:
    """Hamiltonian frequency and collapse coupling strength, both in 1/s."""

    omega: float
    gamma: float

    def __post_init__(self):
        if not (math.isfinite(self.omega) and math.isfinite(self.gamma)):
            raise ValueError("omega and gamma must be finite")
        if self.omega < 0:
            raise ValueError(f"omega must be >= 0, got {self.omega}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")


@dataclass(frozen=True)
class DensityParams:
    """(x, y, z) parametrization of the 2x2 density matrix.

    x is the up-state population, y + iz the upper off-diagonal element.
    """

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ValueError("density parameters must be finite")
        if not (-POSITIVITY_TOL <= self.x <= 1.0 + POSITIVITY_TOL):
            raise ValueError(f"x must lie in [0, 1], got {self.x}")
        r2 = (self.x - 0.5) ** 2 + self.y**2 + self.z**2
        if r2 > 0.25 + POSITIVITY_TOL:
            raise ValueError(
                f"density matrix not positive semidefinite: (x-1/2)^2+y^2+z^2 = {r2}"
            )


def expect_sigma_z(state: SpinState) -> float:
    """Quantum average of sigma_z: up population minus down population."""
    return state.population_plus - state.population_minus


def coherence(state: SpinState) -> complex:
    """Off-diagonal element alpha * conj(beta) of the pure-state projector."""
    return state.alpha * state.beta.conjugate()


def to_density_params(state: SpinState) -> DensityParams:
    """Density-matrix parameters of the pure state (saturates positivity)."""
    c = coherence(state)
    return DensityParams(x=state.population_plus, y=c.real, z=c.imag)


def bloch_coordinates(state: SpinState) -> tuple[float, float, float]:
    """Unit Bloch vector (sx, sy, sz); sy sign convention is sy = -2 Im(alpha conj(beta))."""
    c = coherence(state)
    return 2.0 * c.real, -2.0 * c.imag, expect_sigma_z(state)
