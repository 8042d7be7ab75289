"""Biorthogonality observables of a solved eigensystem.

All quantities are built from the c-normalized right eigenvectors:

* A_k   = <v_k|v_k>        Hermitian self-overlap, >= 1
* r_k   = 1 / A_k          phase rigidity, 1 (Hermitian limit) .. 0 (EP)
* B_i^j = <v_i|v_j>        pairwise Hermitian overlaps, purely imaginary
* b_ij  = j-th component of v_i: mixing of state i over the unperturbed
          (standard) basis, with sum_j b_ij^2 = 1 and sum_j |b_ij|^2 >= 1
          (the external-mixing probability).

Degenerate (EP-flagged) states report r = 0 and NaN rows instead of
infinities so serialized output stays well-formed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eigensolver import EigenSystem
from .hamiltonian import HamiltonianFamily, evaluate

__all__ = [
    "OverlapAnomaly",
    "StateDiagnostics",
    "phase_rigidity",
    "pairwise_overlaps",
    "mixing_coefficients",
    "source_term_residual",
    "diagnose",
]

# tolerance for the purely-imaginary-overlap theorem check
_OVERLAP_TOL = 1e-8


class OverlapAnomaly(RuntimeError):
    """<v_i|v_j> failed its structural property: eigensolver defect upstream."""


@dataclass(frozen=True)
class StateDiagnostics:
    """Per-state biorthogonality observables at one parameter value."""

    a_norm: np.ndarray          # A_k, NaN for degenerate states
    rigidity: np.ndarray        # r_k = 1/A_k, 0 for degenerate states
    overlaps_abs: np.ndarray    # |B_i^j|, NaN rows/cols for degenerate states
    mixing: np.ndarray          # b_ij (complex), NaN rows for degenerate states
    mixing_abs: np.ndarray      # |b_ij|
    em_probability: np.ndarray  # sum_j |b_ij|^2, NaN for degenerate states
    degenerate: np.ndarray


def phase_rigidity(system: EigenSystem) -> np.ndarray:
    """r_k = |<v_k*|v_k>| / <v_k|v_k> = 1/A_k; degenerate states give 0."""
    r = np.zeros(system.n)
    for k in range(system.n):
        if system.degenerate[k]:
            continue
        r[k] = 1.0 / float(np.sum(np.abs(system.vectors[k]) ** 2))
    return r


def pairwise_overlaps(system: EigenSystem, tol: float = _OVERLAP_TOL):
    """Return (A_k, |B_i^j|) and, for two-level systems, check the overlap
    structure theorem.

    For a c-orthonormal pair of eigenvectors of a 2x2 complex symmetric
    matrix the off-diagonal Hermitian overlap is purely imaginary and
    antisymmetric; violations beyond tolerance raise OverlapAnomaly (an
    eigensolver defect upstream).  For three or more levels the property
    is not a theorem (c-orthonormal triples violate it at finite coupling)
    and is not enforced.  Degenerate states are excluded (NaN entries).
    """
    n = system.n
    ok = ~system.degenerate
    a_norm = np.full(n, np.nan)
    b_abs = np.full((n, n), np.nan)
    gram = np.conj(system.vectors) @ system.vectors.T  # gram[i, j] = <v_i|v_j>
    scale = max(float(np.max(np.abs(gram))), 1.0)
    for i in range(n):
        if not ok[i]:
            continue
        a_norm[i] = gram[i, i].real
        for j in range(n):
            if i == j or not ok[j]:
                continue
            g = gram[i, j]
            if n == 2:
                if abs(g.real) > tol * scale:
                    raise OverlapAnomaly(
                        f"Re<v_{i}|v_{j}> = {g.real:.3e} exceeds {tol:.1e} * {scale:.3g}"
                    )
                if abs(g + gram[j, i]) > tol * scale:
                    raise OverlapAnomaly(
                        f"<v_{i}|v_{j}> is not antisymmetric with <v_{j}|v_{i}>"
                    )
            b_abs[i, j] = abs(g)
        b_abs[i, i] = 0.0
    return a_norm, b_abs


def mixing_coefficients(system: EigenSystem):
    """Return (b, em) with b[i, j] = <e_j*|v_i> = j-th component of v_i.

    The unperturbed Hamiltonian is diagonal in the model, so its basis is
    the standard basis and the mixing coefficients are just vector
    components; sum_j b_ij^2 = 1 by c-normalization and
    em[i] = sum_j |b_ij|^2 is the external-mixing probability (>= 1).
    Degenerate states are reported as NaN rows.
    """
    b = np.array(system.vectors, dtype=complex)
    em = np.sum(np.abs(b) ** 2, axis=1)
    for k in range(system.n):
        if system.degenerate[k]:
            b[k] = np.nan
            em[k] = np.nan
    return b, em


def source_term_residual(family: HamiltonianFamily, a: float, system: EigenSystem):
    """Check the source-term identity and report the nonlinearity indicator.

    (H0 - E_i)|v_i> = -W|v_i| with W the off-diagonal coupling part is an
    algebraic identity for any solved system; the returned residual per
    state must vanish to rounding.  The second array is the dominant
    nonlinear-contribution size |<v_n|W|v_n>| * A_n^2, which grows near an
    EP (A_n -> inf) and vanishes for zero coupling.
    """
    h = evaluate(family, a)
    w = np.array(family.coupling)
    h0 = np.array(h.matrix) - w
    residual = np.empty(system.n)
    nonlin = np.empty(system.n)
    for k in range(system.n):
        v = system.vectors[k]
        lhs = (h0 - system.eigenvalues[k] * np.eye(system.n)) @ v
        rhs = -w @ v
        residual[k] = np.linalg.norm(lhs - rhs)
        if system.degenerate[k]:
            nonlin[k] = np.nan
            continue
        a_k = float(np.sum(np.abs(v) ** 2))
        nonlin[k] = abs(np.conj(v) @ (-w) @ v) * a_k**2
    return residual, nonlin


def diagnose(system: EigenSystem) -> StateDiagnostics:
    """Bundle all per-state observables for one solved point."""
    a_norm, overlaps_abs = pairwise_overlaps(system)
    b, em = mixing_coefficients(system)
    return StateDiagnostics(
        a_norm=a_norm,
        rigidity=phase_rigidity(system),
        overlaps_abs=overlaps_abs,
        mixing=b,
        mixing_abs=np.abs(b),
        em_probability=em,
        degenerate=np.array(system.degenerate),
    )
