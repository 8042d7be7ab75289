"""Eigenvalues and c-normalized eigenvectors of complex symmetric matrices.

For a complex symmetric H (H = H^T, not Hermitian) the left eigenvectors
are the complex conjugates of the right ones, so only right eigenvectors
are stored and the natural normalization is the bilinear c-product

    <u*|v> = sum_m u_m v_m        (no conjugation).

Eigenvectors are normalized to <v*|v> = 1.  At an exceptional point the
c-norm of the coalescing eigenvector vanishes (self-orthogonality) and
normalization is impossible; such states are flagged, kept with unit
Hermitian norm, and report zero phase rigidity downstream.

solve2/solve3 are closed forms; solve_generic is the LAPACK-backed
reference path used both as an oracle for the closed forms and for N > 3.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = [
    "SelfOrthogonal",
    "NoConvergence",
    "EigenSystem",
    "c_normalize",
    "solve2",
    "solve3",
    "solve_generic",
    "solve",
    "match_eigenvalues",
]

# relative c-norm below which a vector counts as self-orthogonal (at an EP)
SELF_ORTHOGONAL_TOL = 1e-12


class SelfOrthogonal(ValueError):
    """The bilinear norm of the vector vanishes: c-normalization impossible."""


class NoConvergence(RuntimeError):
    """The iterative eigensolver failed to converge."""


@dataclass(frozen=True)
class EigenSystem:
    """Eigen-decomposition of one complex symmetric matrix.

    ``vectors[k]`` is the right eigenvector of ``eigenvalues[k]``,
    c-normalized unless ``degenerate[k]`` is set (then it carries unit
    Hermitian norm instead).  ``c_norm_defect[k]`` is |<v*|v> - 1| of the
    Hermitian-normalized, phase-aligned vector before the final bilinear
    scaling; it approaches 1 at an EP and 0 in the Hermitian limit.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray
    c_norm_defect: np.ndarray
    degenerate: np.ndarray

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    def residuals(self, matrix: np.ndarray) -> np.ndarray:
        """Per-state ||H v - lambda v|| (2-norm)."""
        r = matrix @ self.vectors.T - self.eigenvalues[None, :] * self.vectors.T
        return np.linalg.norm(r, axis=0)


def _phase_align(v: np.ndarray) -> np.ndarray:
    """Rotate v so its largest-magnitude component is real positive."""
    k = int(np.argmax(np.abs(v)))
    z = v[k]
    if z == 0:
        return v
    return v * (abs(z) / z)


def _fix_sign(v: np.ndarray) -> np.ndarray:
    """Pick the sign so the largest component's argument lies in (-pi/2, pi/2]."""
    k = int(np.argmax(np.abs(v)))
    z = v[k]
    if z.real > 0.0 or (z.real == 0.0 and z.imag > 0.0):
        return v
    if z.real < 0.0 or (z.real == 0.0 and z.imag < 0.0):
        return -v
    return v


def c_normalize(v, tol: float = SELF_ORTHOGONAL_TOL):
    """c-normalize a vector: return (v / sqrt(sum v_m^2), ratio).

    ``ratio`` is |sum v_m^2| / sum |v_m|^2 of the input, the bilinear-to-
    Hermitian norm ratio in [0, 1]; 1 for real (Hermitian-like) directions,
    0 exactly at an EP.  Raises SelfOrthogonal when ratio < tol.  The
    square-root branch is fixed so the largest-magnitude component of the
    result has argument in (-pi/2, pi/2].
    """
    v = np.asarray(v, dtype=complex)
    h2 = float(np.sum(np.abs(v) ** 2))
    if h2 == 0.0:
        raise ValueError("cannot normalize the zero vector")
    s = complex(np.sum(v * v))
    ratio = abs(s) / h2
    if ratio < tol:
        raise SelfOrthogonal(f"c-norm ratio {ratio:.3e} below {tol:.1e}")
    w = v / np.sqrt(s)
    return _fix_sign(w), ratio


def _finalize(eigenvalues, raw_vectors, force_degenerate=None):
    """Normalize raw eigenvectors and assemble an EigenSystem.

    raw_vectors has one eigenvector per row, any scale.  Degenerate
    (self-orthogonal) states keep a unit-Hermitian-norm vector and are
    flagged instead of failing.
    """
    n = len(eigenvalues)
    vecs = np.empty((n, n), dtype=complex)
    defect = np.empty(n)
    degen = np.zeros(n, dtype=bool)
    for k in range(n):
        v = raw_vectors[k]
        vhat = _phase_align(v / np.linalg.norm(v))
        defect[k] = abs(complex(np.sum(vhat * vhat)) - 1.0)
        try:
            vecs[k], _ = c_normalize(vhat)
        except SelfOrthogonal:
            vecs[k] = _fix_sign(vhat)
            degen[k] = True
    if force_degenerate is not None:
        degen |= force_degenerate
    return EigenSystem(
        eigenvalues=np.asarray(eigenvalues, dtype=complex),
        vectors=vecs,
        c_norm_defect=defect,
        degenerate=degen,
    )


def solve2(ham) -> EigenSystem:
    """Closed form for N = 2: eigenvalues (eps1+eps2)/2 +/- Z with
    Z = sqrt(((eps1-eps2)/2)^2 + omega^2) (principal branch)."""
    m = ham.matrix
    if m.shape != (2, 2):
        raise ValueError("solve2 needs a 2x2 matrix")
    e1, e2, w = m[0, 0], m[1, 1], m[0, 1]
    mean = 0.5 * (e1 + e2)
    delta = 0.5 * (e1 - e2)
    z = cmath.sqrt(delta * delta + w * w)
    lam = np.array([mean + z, mean - z])

    if w == 0:
        # decoupled levels: eigenvectors are the basis vectors
        order = (0, 1) if abs(lam[0] - e1) <= abs(lam[0] - e2) else (1, 0)
        vecs = np.eye(2, dtype=complex)[list(order)]
        return _finalize(lam, vecs)

    # for each eigenvalue pick the better-conditioned null-space form
    raw = []
    for sgn in (+1.0, -1.0):
        u = np.array([delta + sgn * z, w])
        v = np.array([w, sgn * z - delta])
        raw.append(u if np.linalg.norm(u) >= np.linalg.norm(v) else v)
    scale = np.max(np.abs(m))
    force = np.repeat(abs(z) < 1e-12 * scale, 2)
    return _finalize(lam, raw, force_degenerate=force)


def _cubic_roots(b: complex, c: complex, d: complex):
    """Roots of lambda^3 + b lambda^2 + c lambda + d, Cardano with the
    cancellation-avoiding cube-root branch."""
    # depressed cubic t^3 + p t + q, lambda = t - b/3
    shift = -b / 3.0
    p = c - b * b / 3.0
    q = 2.0 * b**3 / 27.0 - b * c / 3.0 + d
    if p == 0 and q == 0:
        return [shift, shift, shift]
    disc = cmath.sqrt(q * q / 4.0 + p**3 / 27.0)
    # choose the branch maximizing |u^3| to avoid subtractive cancellation
    u3a = -q / 2.0 + disc
    u3b = -q / 2.0 - disc
    u3 = u3a if abs(u3a) >= abs(u3b) else u3b
    u = u3 ** (1.0 / 3.0)
    roots = []
    rot = complex(-0.5, 0.8660254037844386)  # exp(2 pi i / 3)
    for _ in range(3):
        t = u - p / (3.0 * u) if u != 0 else 0.0
        roots.append(t + shift)
        u *= rot
    return roots


def _newton_polish_root(lam: complex, b: complex, c: complex, d: complex) -> complex:
    """One guarded Newton step on the characteristic polynomial."""
    f = ((lam + b) * lam + c) * lam + d
    fp = (3.0 * lam + 2.0 * b) * lam + c
    if fp == 0:
        return lam
    new = lam - f / fp
    fn = ((new + b) * new + c) * new + d
    return new if abs(fn) <= abs(f) else lam


def _merge_root_clusters(lam: np.ndarray, tol: float) -> np.ndarray:
    """Replace root clusters tighter than tol by their mean.

    Closed-form roots of a polynomial with a multiple root split by
    ~sqrt(machine eps); the cluster mean recovers the multiple root to
    full precision (and preserves the root sum, i.e. the trace).
    """
    lam = np.array(lam)
    n = len(lam)
    used = np.zeros(n, dtype=bool)
    for i in range(n):
        if used[i]:
            continue
        cluster = [i]
        for j in range(i + 1, n):
            if not used[j] and abs(lam[j] - lam[i]) < tol:
                cluster.append(j)
        if len(cluster) > 1:
            mean = np.mean(lam[cluster])
            lam[cluster] = mean
            used[cluster] = True
    return lam


def _null_vector_3x3(m: np.ndarray, occurrence: int = 0) -> np.ndarray:
    """Null vector of a (numerically) rank-deficient 3x3 matrix.

    The adjugate columns of M are all proportional to the null vector when
    rank(M) = 2; pick the largest (column pivoting).  When the adjugate
    vanishes (rank <= 1, a semisimple double eigenvalue) the null space is
    two-dimensional and ``occurrence`` selects a basis vector, so repeated
    roots receive distinct eigenvectors.
    """
    # explicit bilinear cross products (np.cross overhead dominates here)
    a00, a01, a02 = m[0]
    a10, a11, a12 = m[1]
    a20, a21, a22 = m[2]
    cols = np.array(
        [
            [a11 * a22 - a12 * a21, a21 * a02 - a22 * a01, a01 * a12 - a02 * a11],
            [a12 * a20 - a10 * a22, a22 * a00 - a20 * a02, a02 * a10 - a00 * a12],
            [a10 * a21 - a11 * a20, a20 * a01 - a21 * a00, a00 * a11 - a01 * a10],
        ]
    )
    norms2 = np.abs(cols).sum(axis=0)
    k = int(np.argmax(norms2))
    if norms2[k] > 1e-8 * max(float(np.abs(m).sum()), np.finfo(float).tiny) ** 2:
        return cols[:, k]
    # rank <= 1: eliminate the single dominant row
    a = m.copy()
    i, j = np.unravel_index(int(np.argmax(np.abs(a))), a.shape)
    if abs(a[i, j]) == 0.0:
        return np.eye(3, dtype=complex)[occurrence % 3]
    piv = a[i] / a[i, j]
    basis = []
    for col in range(3):
        if col == j:
            continue
        v = np.zeros(3, dtype=complex)
        v[col] = 1.0
        v[j] = -piv[col]
        basis.append(v)
    return basis[occurrence % len(basis)]


def solve3(ham) -> EigenSystem:
    """Closed form for N = 3: Cardano roots of the characteristic cubic,
    one Newton polish per root, eigenvectors from the adjugate null space."""
    m = ham.matrix
    if m.shape != (3, 3):
        raise ValueError("solve3 needs a 3x3 matrix")
    # shift by the mean eigenvalue: kills the quadratic term's bulk and the
    # worst of the coefficient cancellation near clustered eigenvalues
    mu = (m[0, 0] + m[1, 1] + m[2, 2]) / 3.0
    ms = m - mu * np.eye(3)
    s00, s01, s02 = ms[0]
    s10, s11, s12 = ms[1]
    s20, s21, s22 = ms[2]
    b = -(s00 + s11 + s22)
    c = s00 * s11 - s01 * s10 + s00 * s22 - s02 * s20 + s11 * s22 - s12 * s21
    d = -(
        s00 * (s11 * s22 - s12 * s21)
        - s01 * (s10 * s22 - s12 * s20)
        + s02 * (s10 * s21 - s11 * s20)
    )
    roots = _cubic_roots(b, c, d)
    roots = [_newton_polish_root(r, b, c, d) for r in roots]
    lam = np.array(roots) + mu

    scale = max(float(np.max(np.abs(m))), np.finfo(float).tiny)
    lam = _merge_root_clusters(lam, 1e-8 * scale)
    raw = np.empty((3, 3), dtype=complex)
    for k in range(3):
        occurrence = sum(
            1 for j in range(k) if abs(lam[j] - lam[k]) < 1e-12 * scale
        )
        raw[k] = _null_vector_3x3(m - lam[k] * np.eye(3), occurrence)
    return _finalize(lam, raw)


def solve_generic(ham, max_iter_factor: int = 100) -> EigenSystem:
    """Reference solver for any N >= 2 (LAPACK shifted-QR via numpy).

    Raises NoConvergence when the QR iteration fails; the iteration cap is
    LAPACK's own (the factor argument is kept for interface stability).
    """
    m = ham.matrix
    try:
        lam, v = np.linalg.eig(m)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return _finalize(lam, np.ascontiguousarray(v.T))


def solve(ham) -> EigenSystem:
    """Dispatch to the closed form for N = 2, 3, else the generic solver."""
    n = ham.matrix.shape[0]
    if n == 2:
        return solve2(ham)
    if n == 3:
        return solve3(ham)
    return solve_generic(ham)


def match_eigenvalues(reference: np.ndarray, other: np.ndarray) -> np.ndarray:
    """Permutation p minimizing sum |reference_k - other_p(k)|.

    Eigenvalue order is meaningless for non-Hermitian solvers; comparisons
    use this minimum-total-distance perfect matching.
    """
    cost = np.abs(np.asarray(reference)[:, None] - np.asarray(other)[None, :])
    _, col = linear_sum_assignment(cost)
    return col
