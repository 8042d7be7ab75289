import numpy as np
import pytest

from openres.hamiltonian import Affine, HamiltonianFamily, LevelSpec

# Two- and three-level families used throughout: energies cross linearly in
# the sweep parameter, widths are constant, coupling is constant complex.
OMEGA_WEAK = 0.01 * (1j + 0.1)
OMEGA_STRONG = 0.5 * (1j + 0.1)


def two_level_family(gamma2_half=-0.493, omega=OMEGA_WEAK):
    return HamiltonianFamily(
        [
            LevelSpec(Affine(1.0, -0.5), Affine(-0.495)),
            LevelSpec(Affine(0.0, 1.0), Affine(gamma2_half)),
        ],
        omega,
    )


def three_level_family(gammas=(-0.495, -0.493, -0.49), omega=OMEGA_WEAK):
    return HamiltonianFamily(
        [
            LevelSpec(Affine(1.0, -0.5), Affine(gammas[0])),
            LevelSpec(Affine(0.0, 1.0), Affine(gammas[1])),
            LevelSpec(Affine(-1.0 / 3.0, 1.5), Affine(gammas[2])),
        ],
        omega,
    )


@pytest.fixture
def fig1_left():
    return two_level_family()


@pytest.fixture
def fig1_right():
    return two_level_family(gamma2_half=-0.595, omega=OMEGA_STRONG)


@pytest.fixture
def fig2_left():
    return three_level_family()


def random_complex_symmetric(rng, n):
    """Random complex symmetric matrix with entries in the unit disc."""
    re = rng.uniform(-1, 1, (n, n))
    im = rng.uniform(-1, 1, (n, n))
    m = re + 1j * im
    m = 0.5 * (m + m.T)
    # rejection keeps entries inside the unit disc after symmetrization
    big = np.abs(m) > 1.0
    m[big] /= np.abs(m[big])
    return m


def min_gap(eigenvalues):
    lam = np.asarray(eigenvalues)
    n = len(lam)
    return min(
        abs(lam[i] - lam[j]) for i in range(n) for j in range(i + 1, n)
    )
