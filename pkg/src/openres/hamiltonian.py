"""Parametric families of complex-symmetric effective Hamiltonians.

The model is an N-level open quantum system: level i carries a complex
energy eps_i(a) = e_i(a) + i*gh_i(a) whose real part is the level energy
and whose imaginary part gh_i = gamma_i/2 is half the (signed) decay
width, negative for decaying states.  Levels are coupled through the
common decay channel by a constant complex symmetric matrix omega.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Affine",
    "LevelSpec",
    "HamiltonianFamily",
    "ConcreteHamiltonian",
    "evaluate",
    "kato_family",
    "kato_level_family",
]


@dataclass(frozen=True)
class Affine:
    """Real affine function ``intercept + slope * a`` of the sweep parameter."""

    intercept: float
    slope: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.intercept) and math.isfinite(self.slope)):
            raise ValueError("affine coefficients must be finite")

    def __call__(self, a: float) -> float:
        return self.intercept + self.slope * a


def _as_affine(x) -> Affine:
    if isinstance(x, Affine):
        return x
    if isinstance(x, (int, float)):
        return Affine(float(x))
    return Affine(*x)


@dataclass(frozen=True)
class LevelSpec:
    """One unperturbed resonance level.

    ``energy`` is e_i(a) and ``gamma_half`` is gamma_i/2, both real affine
    functions of the sweep parameter (scalars are accepted and treated as
    constants).  gamma_half is negative for decaying states.
    """

    energy: Affine
    gamma_half: Affine

    def __post_init__(self):
        object.__setattr__(self, "energy", _as_affine(self.energy))
        object.__setattr__(self, "gamma_half", _as_affine(self.gamma_half))

    def complex_energy(self, a: float) -> complex:
        """eps_i(a) = e_i(a) + i*(gamma_i/2)(a)."""
        return complex(self.energy(a), self.gamma_half(a))


class HamiltonianFamily:
    """N levels plus a constant complex symmetric coupling matrix.

    The coupling has an exactly zero diagonal (self-energies are assumed
    absorbed into the level energies) and is stored symmetrized.  A scalar
    ``coupling`` means all off-diagonal elements are equal to it.
    """

    def __init__(self, levels, coupling):
        levels = tuple(levels)
        if len(levels) < 2:
            raise ValueError("need at least two levels")
        n = len(levels)
        if np.isscalar(coupling):
            w = np.full((n, n), complex(coupling))
        else:
            w = np.array(coupling, dtype=complex)
            if w.shape != (n, n):
                raise ValueError(f"coupling must be {n}x{n}, got {w.shape}")
            if not np.allclose(w, w.T):
                raise ValueError("coupling matrix must be symmetric")
            w = 0.5 * (w + w.T)  # store exactly symmetric
        if not np.all(np.isfinite(w.view(float))):
            raise ValueError("coupling entries must be finite")
        np.fill_diagonal(w, 0.0)
        w.flags.writeable = False
        self.levels = levels
        self.coupling = w

    @property
    def n(self) -> int:
        return len(self.levels)

    def decoupled(self) -> "HamiltonianFamily":
        """Same levels with the coupling forced to zero (no external mixing)."""
        return HamiltonianFamily(self.levels, np.zeros((self.n, self.n)))

    def scaled_coupling(self, s: float) -> "HamiltonianFamily":
        """Same levels with coupling s * omega (s real)."""
        return HamiltonianFamily(self.levels, s * self.coupling)

    def diagonal(self, a: float) -> np.ndarray:
        return np.array([lv.complex_energy(a) for lv in self.levels])

    def diagonal_slope(self) -> np.ndarray:
        """d eps_i / da, constant for affine levels."""
        return np.array(
            [complex(lv.energy.slope, lv.gamma_half.slope) for lv in self.levels]
        )

    def __repr__(self):
        return f"HamiltonianFamily(n={self.n})"


@dataclass(frozen=True)
class ConcreteHamiltonian:
    """A complex symmetric matrix evaluated at one parameter value."""

    matrix: np.ndarray
    param_value: float

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def scale(self) -> float:
        """Frobenius norm, used to make tolerances relative."""
        return float(np.linalg.norm(self.matrix))


def evaluate(family: HamiltonianFamily, a: float) -> ConcreteHamiltonian:
    """Evaluate the family at parameter value a.

    The diagonal holds eps_i(a); off-diagonal entries are the (constant)
    coupling.  Total on finite inputs.
    """
    m = family.coupling.copy()
    np.fill_diagonal(m, family.diagonal(a))
    return ConcreteHamiltonian(m, float(a))


def kato_family(kappa: complex) -> ConcreteHamiltonian:
    """The 2x2 test family [[1, kappa], [kappa, -1]].

    Coalesces at kappa = +/- i where both eigenvalues are 0; used as an
    exact oracle throughout the test suite.  The stored parameter value is
    not meaningful for this family (kappa is complex).
    """
    m = np.array([[1.0, kappa], [kappa, -1.0]], dtype=complex)
    return ConcreteHamiltonian(m, math.nan)


def kato_level_family(omega: complex = 1.0) -> HamiltonianFamily:
    """The kato_family diagonal as a (parameter-independent) level family."""
    return HamiltonianFamily(
        [LevelSpec(Affine(1.0), Affine(0.0)), LevelSpec(Affine(-1.0), Affine(0.0))],
        omega,
    )
