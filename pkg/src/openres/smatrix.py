"""Resonance S-matrix and cross section in the one-channel case.

The unitary resonance representation for poles E_k = Re(lam_k) with
(signed) widths Gamma_k = 2 Im(lam_k) is the product of per-pole factors

    S(E) = prod_k (E - lam_k) / (E - conj(lam_k)),

unimodular for real E whenever no pole is real, so the cross section
sigma = |1 - S|^2 (proportionality constant fixed to 1) lies in [0, 4].
At a second-order EP the two-pole factor reduces to the three-term
interference form s_matrix_ep, with an exact zero of sigma at the
coalesced energy.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .eigensolver import solve
from .hamiltonian import HamiltonianFamily, evaluate

__all__ = [
    "PoleOnRealAxis",
    "ResonanceSet",
    "XsecGrid",
    "s_matrix",
    "s_matrix_ep",
    "xsec_scan",
    "xsec_contour",
    "auto_energy_grid",
    "write_scan_csv",
    "write_grid_csv",
    "write_grid_matrix",
]


class PoleOnRealAxis(ZeroDivisionError):
    """A zero-width pole was evaluated exactly at its resonance energy."""


@dataclass(frozen=True)
class ResonanceSet:
    """Complex eigenvalue poles lam_k = E_k + (i/2) Gamma_k."""

    poles: np.ndarray

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.poles, dtype=complex))
        if not np.all(np.isfinite(p.view(float))):
            raise ValueError("poles must be finite")
        if np.any(p.imag > 0):
            warnings.warn(
                "pole with positive imaginary part: not a decaying state",
                stacklevel=2,
            )
        object.__setattr__(self, "poles", p)

    @classmethod
    def from_eigensystem(cls, system) -> "ResonanceSet":
        return cls(system.eigenvalues)

    @property
    def n(self) -> int:
        return len(self.poles)


def _as_poles(poles) -> np.ndarray:
    if isinstance(poles, ResonanceSet):
        return poles.poles
    if hasattr(poles, "eigenvalues"):
        return np.asarray(poles.eigenvalues, dtype=complex)
    return np.atleast_1d(np.asarray(poles, dtype=complex))


def s_matrix(poles, energy):
    """S(E) = prod_k (E - lam_k)/(E - conj(lam_k)); |S| = 1 for real E.

    ``energy`` may be a scalar or an array.  Raises PoleOnRealAxis when a
    zero-width pole coincides exactly with a requested energy.
    """
    p = _as_poles(poles)
    e = np.asarray(energy, dtype=float)
    scalar = e.ndim == 0
    e = np.atleast_1d(e)
    denom = e[:, None] - np.conj(p)[None, :]
    if np.any(denom == 0):
        raise PoleOnRealAxis("zero-width pole evaluated at its energy")
    s = np.prod((e[:, None] - p[None, :]) / denom, axis=1)
    if len(p) == 0:
        s = np.ones_like(e, dtype=complex)
    return complex(s[0]) if scalar else s


def s_matrix_ep(e_d: float, gamma_d: float, energy):
    """Coalesced two-pole form 1 - 2i G/(E-E_d+iG/2) - G^2/(E-E_d+iG/2)^2.

    Identical (pointwise, to rounding) to s_matrix with the doubled pole
    E_d + (i/2) Gamma_d; sigma has its interference zero exactly at E_d.
    """
    if gamma_d == 0:
        raise ValueError("coalesced pole needs a nonzero width")
    e = np.asarray(energy, dtype=float)
    scalar = e.ndim == 0
    e = np.atleast_1d(e)
    d = e - e_d + 0.5j * gamma_d
    s = 1.0 - 2j * gamma_d / d - gamma_d**2 / d**2
    return complex(s[0]) if scalar else s


def xsec_scan(poles, energies) -> np.ndarray:
    """sigma(E) = |1 - S(E)|^2, in [0, 4] for real energies."""
    s = s_matrix(poles, energies)
    return np.abs(1.0 - np.atleast_1d(s)) ** 2


def _degenerate_aware_sigma(system, energies) -> np.ndarray:
    """Cross section from a solved point; coalesced pairs use the EP form."""
    flags = np.asarray(system.degenerate)
    if flags.sum() == 2:
        pair = np.nonzero(flags)[0]
        lam = system.eigenvalues[pair[0]]
        s = s_matrix_ep(float(lam.real), float(2.0 * lam.imag), energies)
        rest = system.eigenvalues[~flags]
        if len(rest):
            s = s * s_matrix(rest, energies)
        return np.abs(1.0 - np.atleast_1d(s)) ** 2
    return xsec_scan(system.eigenvalues, energies)


def auto_energy_grid(pole_sets, steps: int = 2001) -> np.ndarray:
    """[min E_k - 5 max|Gamma_k|, max E_k + 5 max|Gamma_k|], uniform."""
    allp = np.concatenate([_as_poles(p) for p in pole_sets])
    gmax = float(np.max(np.abs(2.0 * allp.imag)))
    lo = float(allp.real.min()) - 5.0 * gmax
    hi = float(allp.real.max()) + 5.0 * gmax
    if lo == hi:
        lo, hi = lo - 1.0, hi + 1.0
    return np.linspace(lo, hi, steps)


@dataclass
class XsecGrid:
    """sigma over an (a, E) grid; sigma[i, j] = sigma(params[i], energies[j])."""

    energies: np.ndarray
    params: np.ndarray
    sigma: np.ndarray
    normalization: float = 1.0
    use_coupling: bool = True


def xsec_contour(
    family: HamiltonianFamily,
    params,
    energies=None,
    use_coupling: bool = True,
    energy_steps: int = 2001,
) -> XsecGrid:
    """Cross-section grid over parameter values x energies.

    With use_coupling=False the poles are the unperturbed level energies
    eps_i(a) (the no-external-mixing comparison); otherwise the solved
    eigenvalues.  energies=None picks the automatic grid from the pole
    extremes over the whole parameter range.
    """
    params = np.atleast_1d(np.asarray(params, dtype=float))
    systems = []
    pole_rows = []
    for a in params:
        if use_coupling:
            system = solve(evaluate(family, a))
            systems.append(system)
            pole_rows.append(system.eigenvalues)
        else:
            systems.append(None)
            pole_rows.append(family.diagonal(a))
    if energies is None:
        energies = auto_energy_grid(pole_rows, energy_steps)
    else:
        energies = np.asarray(energies, dtype=float)
    sigma = np.empty((len(params), len(energies)))
    for i, row in enumerate(pole_rows):
        if systems[i] is not None and np.any(systems[i].degenerate):
            sigma[i] = _degenerate_aware_sigma(systems[i], energies)
        else:
            sigma[i] = xsec_scan(row, energies)
    return XsecGrid(
        energies=energies,
        params=params,
        sigma=sigma,
        use_coupling=use_coupling,
    )


def _fmt(x) -> str:
    return repr(float(x))


def write_scan_csv(energies, sigma, fileobj) -> None:
    """Two columns: E, sigma."""
    fileobj.write("e,sigma\n")
    for e, s in zip(energies, sigma):
        fileobj.write(f"{_fmt(e)},{_fmt(s)}\n")


def write_grid_csv(grid: XsecGrid, fileobj) -> None:
    """Long format, one row per (a, E) cell: a, e, sigma."""
    fileobj.write("a,e,sigma\n")
    for i, a in enumerate(grid.params):
        for j, e in enumerate(grid.energies):
            fileobj.write(f"{_fmt(a)},{_fmt(e)},{_fmt(grid.sigma[i, j])}\n")


def write_grid_matrix(grid: XsecGrid, fileobj) -> None:
    """Compact matrix text: header row of energies, then one row per a
    (first column the a value)."""
    fileobj.write("a\\e," + ",".join(_fmt(e) for e in grid.energies) + "\n")
    for i, a in enumerate(grid.params):
        fileobj.write(
            _fmt(a) + "," + ",".join(_fmt(x) for x in grid.sigma[i]) + "\n"
        )
