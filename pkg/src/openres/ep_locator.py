"""Locating exceptional points of Hamiltonian families.

Two-level families admit a closed-form treatment: the eigenvalue splitting
vanishes exactly where D(a, s) = (eps1 - eps2)^2 + 4 (s omega)^2 does, so
EPs are roots of one complex equation.  Along the real parameter a alone,
roots are generically missed; the locator then reports best-approach
candidates (minima of |D|).  With a second real unknown (the coupling
scale s, or the complex coupling itself) exact roots exist and are solved
for directly.

For general N the characteristic-polynomial discriminant replaces D: it is
computed as the resultant of p and p' (Sylvester determinant) from
Faddeev-LeVerrier coefficients of the trace-shifted matrix, with analytic
parameter derivatives carried through the same recurrence.  Coarse minima
of the minimal eigenvalue gap seed a Newton iteration on Re/Im of the
discriminant; converged candidates are polished on the eigenvalue gap
itself (the discriminant's floating-point noise floor near clustered
spectra exceeds its value there) and certified by a Puiseux-exponent fit:
a second-order EP splits as |dE| ~ delta^(1/2) along any generic ray.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .diagnostics import phase_rigidity
from .eigensolver import match_eigenvalues, solve
from .hamiltonian import HamiltonianFamily, evaluate

__all__ = [
    "NoCandidate",
    "EpCandidate",
    "EpCluster",
    "LocateConfig",
    "locate_2x2",
    "locate_generic",
    "cluster_report",
    "discriminant",
    "candidates_to_json",
]


class NoCandidate(RuntimeError):
    """No residual below tolerance exists in the search box."""


@dataclass(frozen=True)
class LocateConfig:
    coarse_steps: int = 60
    gap_tolerance: float = 1e-8      # relative to matrix scale, certification
    merge_radius: float = 1e-4       # dedupe radius in search coordinates
    newton_steps: int = 60
    order_fit_offsets: tuple = tuple(np.logspace(-6, -3, 13))
    order_fit_residual_max: float = 0.2
    ray_direction: tuple = (1.0, 0.0)  # +a by default
    probe_distance: float = 1e-4     # rigidity/alignment probe offset


@dataclass(frozen=True)
class EpCandidate:
    """A located (or best-approach) exceptional point."""

    location: dict            # {"a": ...} | {"a": ..., "s": ...} | {"omega_re": ..., "omega_im": ...}
    branch_pair: tuple
    gap: float
    eigenvalue: complex       # coalesced (or midpoint) eigenvalue
    rigidity_min: float
    align_defect: float
    order_exponent: float
    order_fit_residual: float
    certified: bool
    flags: tuple = ()

    def order_certificate(self) -> dict:
        return {
            "exponent": self.order_exponent,
            "fit_residual": self.order_fit_residual,
        }


@dataclass(frozen=True)
class EpCluster:
    center: dict
    span: float
    size: int
    members: tuple
    exponents: tuple


# --------------------------------------------------------------- closed form

def _pair_poly(family: HamiltonianFamily):
    """Complex quadratic coefficients of D(a) = (eps1 - eps2)^2 + 4 omega^2."""
    l1, l2 = family.levels
    u = complex(
        l1.energy.intercept - l2.energy.intercept,
        l1.gamma_half.intercept - l2.gamma_half.intercept,
    )
    v = complex(
        l1.energy.slope - l2.energy.slope,
        l1.gamma_half.slope - l2.gamma_half.slope,
    )
    w = complex(family.coupling[0, 1])
    # D(a) = (u + v a)^2 + 4 w^2  =  v^2 a^2 + 2 u v a + (u^2 + 4 w^2)
    return v * v, 2.0 * u * v, u * u + 4.0 * w * w, u, v, w


def _candidate_2x2(family, a, s=None, omega=None, cfg=LocateConfig()):
    """Assemble an EpCandidate for a two-level family at the given point."""
    fam = family
    if omega is not None:
        fam = HamiltonianFamily(family.levels, omega)
        location = {"omega_re": float(omega.real), "omega_im": float(omega.imag)}
    elif s is not None:
        location = {"a": float(a), "s": float(s)}
    else:
        location = {"a": float(a)}
    # constant-level families split only along the coupling scale, so
    # certification rays run in s; parameter-dependent ones default to a
    direction = cfg.ray_direction if fam.diagonal_slope().any() else (0.0, 1.0)
    s_eff = 1.0 if s is None else float(s)
    system, _ = _solve_at(fam, a, s_eff)
    h = evaluate(fam if s is None else fam.scaled_coupling(s_eff), a)
    gap = abs(system.eigenvalues[0] - system.eigenvalues[1])
    lam = complex(np.mean(system.eigenvalues))
    exponent, residual = _order_exponent(fam, a, (0, 1), cfg, s=s_eff, direction=direction)
    rig, align = _probe_pair(fam, a, (0, 1), cfg.probe_distance, s=s_eff, direction=direction)
    certified = (
        gap <= cfg.gap_tolerance * max(h.scale, 1e-300)
        and 0.4 <= exponent <= 0.6
    )
    flags = []
    if residual > cfg.order_fit_residual_max:
        flags.append("certification_failed")
    return EpCandidate(
        location=location,
        branch_pair=(0, 1),
        gap=float(gap),
        eigenvalue=lam,
        rigidity_min=rig,
        align_defect=align,
        order_exponent=float(exponent),
        order_fit_residual=float(residual),
        certified=bool(certified),
        flags=tuple(flags),
    )


def locate_2x2(
    family: HamiltonianFamily,
    search_omega_scale: bool = False,
    *,
    search_coupling: bool = False,
    a: float = 0.0,
    a_range=(0.0, 1.0),
    s_range=(1e-3, 4.0),
    cfg: LocateConfig = LocateConfig(),
):
    """EPs of a two-level family from the closed-form splitting D(a, s).

    Modes:
      default            -- best-approach minima of |D(a)| over a_range,
      search_omega_scale -- exact roots of D(a, s) = 0 over (a, s), s > 0,
      search_coupling    -- exact complex couplings omega = +-(i/2)(eps1-eps2)
                            at the fixed parameter value ``a``.
    """
    if family.n != 2:
        raise ValueError("locate_2x2 needs a two-level family")
    c2, c1, c0, u, v, w = _pair_poly(family)

    if search_coupling:
        delta = u + v * a
        out = []
        for sign in (+1.0, -1.0):
            omega = sign * 0.5j * delta
            out.append(_candidate_2x2(family, a, omega=omega, cfg=cfg))
        return out

    if search_omega_scale:
        # Newton on the complex equation D(a, s) = (u+va)^2 + 4 s^2 w^2 = 0
        if w == 0:
            raise NoCandidate("zero coupling admits no EP")
        roots = []
        a_seeds = np.linspace(a_range[0], a_range[1], 24)
        s_seeds = np.linspace(s_range[0], s_range[1], 16)
        for a0, s0 in itertools.product(a_seeds, s_seeds):
            res = _newton_pair_scale(u, v, w, a0, s0, cfg.newton_steps)
            if res is None:
                continue
            ar, sr = res
            if not (
                a_range[0] - 1e-9 <= ar <= a_range[1] + 1e-9
                and s_range[0] - 1e-9 <= sr <= s_range[1] + 1e-9
            ):
                continue
            if any(
                abs(ar - x[0]) < cfg.merge_radius and abs(sr - x[1]) < cfg.merge_radius
                for x in roots
            ):
                continue
            roots.append((ar, sr))
        if not roots:
            raise NoCandidate("no (a, s) root found in the search box")
        roots.sort()
        return [_candidate_2x2(family, ar, s=sr, cfg=cfg) for ar, sr in roots]

    # 1-D best approach: |D(a)|^2 is a real quartic; its stationary points
    # are roots of a cubic, solved exactly; keep only local minima
    coeffs = np.array([c2, c1, c0])
    scale4 = max(abs(u) + abs(v), abs(w), 1e-300) ** 4
    if np.max(np.abs(coeffs)) < 1e-15 * scale4 + 1e-280:
        # splitting vanishes identically: the whole range is an EP line
        mid = 0.5 * (a_range[0] + a_range[1])
        return [_candidate_2x2(family, mid, cfg=cfg)]
    dabs2 = _abs2_poly_derivative(coeffs)
    h = 1e-7 * max(a_range[1] - a_range[0], 1.0)

    def absd(x):
        return abs(np.polyval(coeffs, x))

    crit = [r.real for r in np.roots(dabs2) if abs(r.imag) < 1e-9]
    crit = [
        x for x in crit
        if a_range[0] <= x <= a_range[1]
        and absd(x) <= min(absd(x - h), absd(x + h))
    ]
    for edge, inward in ((a_range[0], h), (a_range[1], -h)):
        if absd(edge) < absd(edge + inward):
            crit.append(edge)
    out = []
    for a_ in sorted(crit, key=absd):
        if any(abs(a_ - c.location["a"]) < cfg.merge_radius for c in out):
            continue
        out.append(_candidate_2x2(family, a_, cfg=cfg))
    out.sort(key=lambda c: c.gap)
    return out


def _abs2_poly_derivative(coeffs):
    """d/da |p(a)|^2 for complex polynomial coefficients, as real coeffs."""
    # |p|^2 = p * conj(p); on the real line conj(p)(a) = conj-coeff poly
    p = np.asarray(coeffs)
    q = np.conj(p)
    prod = np.polymul(p, q).real
    return np.polyder(prod)


def _newton_pair_scale(u, v, w, a, s, steps):
    for _ in range(steps):
        delta = u + v * a
        f = delta * delta + 4.0 * s * s * w * w
        fa = 2.0 * delta * v
        fs = 8.0 * s * w * w
        jac = np.array([[fa.real, fs.real], [fa.imag, fs.imag]])
        rhs = -np.array([f.real, f.imag])
        if not np.all(np.isfinite(jac)):
            return None
        (da, ds), *_ = np.linalg.lstsq(jac, rhs, rcond=None)
        step = (da * da + ds * ds) ** 0.5
        if step > 0.5:
            da *= 0.5 / step
            ds *= 0.5 / step
        a += da
        s += ds
        if not (np.isfinite(a) and np.isfinite(s)):
            return None
        if step < 1e-15:
            break
    delta = u + v * a
    f = delta * delta + 4.0 * s * s * w * w
    scale = max(abs(u) + abs(v), abs(w), 1e-300)
    if abs(f) > 1e-16 * scale**4 + 1e-250:
        return None
    if s < 0:
        a, s = a, -s  # D is even in s
    return a, s


# ------------------------------------------------- generic (resultant) path

def _char_coeffs_and_grads(family: HamiltonianFamily, a: float, s: float):
    """Monic characteristic coefficients of the trace-shifted matrix and
    their (analytic) partials in a and s, via Faddeev-LeVerrier.

    Shifting by tr/N removes the catastrophic cancellation the raw
    coefficients suffer near clustered spectra; the discriminant is
    shift-invariant.
    """
    n = family.n
    diag = family.diagonal(a)
    ddiag = family.diagonal_slope()
    w = family.coupling
    h = s * np.array(w)
    np.fill_diagonal(h, diag)
    mu = np.trace(h) / n
    dmu_a = np.sum(ddiag) / n
    dmu_s = 0.0  # coupling is traceless
    hs = h - mu * np.eye(n)
    dh_a = np.diag(ddiag) - dmu_a * np.eye(n)
    dh_s = np.array(w, dtype=complex)

    eye = np.eye(n, dtype=complex)
    coeffs = np.zeros(n + 1, dtype=complex)
    grads_a = np.zeros(n + 1, dtype=complex)
    grads_s = np.zeros(n + 1, dtype=complex)
    coeffs[0] = 1.0
    mk = eye.copy()
    dmk_a = np.zeros((n, n), dtype=complex)
    dmk_s = np.zeros((n, n), dtype=complex)
    c = 1.0 + 0.0j
    dc_a = 0.0 + 0.0j
    dc_s = 0.0 + 0.0j
    for k in range(1, n + 1):
        hm = hs @ mk
        dhm_a = dh_a @ mk + hs @ dmk_a
        dhm_s = dh_s @ mk + hs @ dmk_s
        c = -np.trace(hm) / k
        dc_a = -np.trace(dhm_a) / k
        dc_s = -np.trace(dhm_s) / k
        coeffs[k] = c
        grads_a[k] = dc_a
        grads_s[k] = dc_s
        mk = hm + c * eye
        dmk_a = dhm_a + dc_a * eye
        dmk_s = dhm_s + dc_s * eye
    return coeffs, grads_a, grads_s


def _sylvester(p, q):
    """Sylvester matrix of polynomials p (degree n) and q (degree m)."""
    n = len(p) - 1
    m = len(q) - 1
    size = n + m
    mat = np.zeros((size, size), dtype=complex)
    for i in range(m):
        mat[i, i : i + n + 1] = p
    for i in range(n):
        mat[m + i, i : i + m + 1] = q
    return mat


def _det_and_row_grads(mat, dmats):
    """det(mat) and its derivatives for each perturbation in dmats.

    Uses multilinearity: d det = sum_k det(mat with row k replaced by the
    corresponding row of dmat); exact also where mat is singular.
    """
    det = complex(np.linalg.det(mat))
    grads = []
    size = mat.shape[0]
    for dmat in dmats:
        g = 0.0 + 0.0j
        for k in range(size):
            if not np.any(dmat[k]):
                continue
            rows = mat.copy()
            rows[k] = dmat[k]
            g += complex(np.linalg.det(rows))
        grads.append(g)
    return det, grads


def discriminant(family: HamiltonianFamily, a: float, s: float = 1.0):
    """disc(p) and its (a, s) gradient via the resultant of p and p'."""
    coeffs, ga, gs = _char_coeffs_and_grads(family, a, s)
    n = family.n
    dp = np.polyder(coeffs)
    dga = np.polyder(ga)
    dgs = np.polyder(gs)
    mat = _sylvester(coeffs, dp)
    size = mat.shape[0]
    dmat_a = np.zeros((size, size), dtype=complex)
    dmat_s = np.zeros((size, size), dtype=complex)
    m = n - 1
    for i in range(m):
        dmat_a[i, i : i + n + 1] = ga
        dmat_s[i, i : i + n + 1] = gs
    for i in range(n):
        dmat_a[m + i, i : i + m + 1] = dga
        dmat_s[m + i, i : i + m + 1] = dgs
    det, (da, ds) = _det_and_row_grads(mat, (dmat_a, dmat_s))
    sign = (-1) ** (n * (n - 1) // 2)
    return sign * det, sign * da, sign * ds


def _min_gap_pair(system):
    lam = system.eigenvalues
    n = len(lam)
    best = (np.inf, (0, 1))
    for i in range(n):
        for j in range(i + 1, n):
            g = abs(lam[i] - lam[j])
            if g < best[0]:
                best = (g, (i, j))
    return best


def _solve_at(family, a, s=1.0):
    fam = family if s == 1.0 else family.scaled_coupling(s)
    return solve(evaluate(fam, a)), fam


def _order_exponent(family, a, pair, cfg, s=1.0, direction=None):
    """Puiseux exponent fit of the pair splitting along a ray through (a, s)."""
    if direction is None:
        direction = cfg.ray_direction
    sys0, _ = _solve_at(family, a, s)
    lam0 = sys0.eigenvalues
    center = 0.5 * (lam0[pair[0]] + lam0[pair[1]])
    offsets = np.asarray(cfg.order_fit_offsets)
    gaps = []
    for delta in offsets:
        sysd, _ = _solve_at(family, a + delta * direction[0], s + delta * direction[1])
        lam = sysd.eigenvalues
        idx = np.argsort(np.abs(lam - center))[:2]
        gaps.append(abs(lam[idx[0]] - lam[idx[1]]))
    gaps = np.asarray(gaps)
    if np.any(gaps <= 0):
        return 0.0, np.inf
    logd = np.log(offsets)
    logg = np.log(gaps)
    slope, intercept = np.polyfit(logd, logg, 1)
    residual = float(np.max(np.abs(logg - (slope * logd + intercept))))
    return float(slope), residual


def _probe_pair(family, a, pair, distance, s=1.0, direction=(1.0, 0.0)):
    """(min rigidity, eigenvector alignment defect) at a small ray offset."""
    sys0, _ = _solve_at(family, a, s)
    center = 0.5 * (
        sys0.eigenvalues[pair[0]] + sys0.eigenvalues[pair[1]]
    )
    sysd, _ = _solve_at(
        family, a + distance * direction[0], s + distance * direction[1]
    )
    idx = np.argsort(np.abs(sysd.eigenvalues - center))[:2]
    rig = phase_rigidity(sysd)
    rig_min = float(min(rig[idx[0]], rig[idx[1]]))
    v1 = sysd.vectors[idx[0]]
    v2 = sysd.vectors[idx[1]]
    v1 = v1 / np.linalg.norm(v1)
    v2 = v2 / np.linalg.norm(v2)
    align = min(
        np.linalg.norm(v1 - 1j * v2), np.linalg.norm(v1 + 1j * v2)
    )
    return rig_min, float(align)


def locate_generic(
    family: HamiltonianFamily,
    search_box,
    cfg: LocateConfig = LocateConfig(),
):
    """EP candidates of an N-level family over a 1-D (a) or 2-D (a, s) box.

    search_box: ((a_lo, a_hi),) or ((a_lo, a_hi), (s_lo, s_hi)).

    Coarse minima of the minimal pairwise gap seed Newton on the complex
    discriminant; candidates are refined on the eigenvalue gap, deduped
    within merge_radius, and certified by gap tolerance plus a square-root
    Puiseux fit.  1-D boxes generically contain no exact roots and yield
    best-approach candidates (certified only if the gap still vanishes).
    """
    if not family.coupling.any():
        raise NoCandidate("zero coupling admits no EP")
    box = tuple(tuple(map(float, b)) for b in search_box)
    two_d = len(box) == 2
    if two_d:
        cands = _locate_2d(family, box, cfg)
    else:
        cands = _locate_1d(family, box[0], cfg)
    if not cands:
        raise NoCandidate("no candidate below tolerance in the search box")
    return cands


def _coarse_gap_minima_1d(family, a_range, cfg):
    grid = np.linspace(a_range[0], a_range[1], max(cfg.coarse_steps, 8))
    per_pair = {}
    n = family.n
    for a in grid:
        sysa, _ = _solve_at(family, a)
        lam = sysa.eigenvalues
        for i in range(n):
            for j in range(i + 1, n):
                per_pair.setdefault((i, j), []).append(
                    (a, abs(lam[i] - lam[j]), lam)
                )
    # local minima per eigenvalue-index pair, so a shallow near-miss of one
    # pair is not shadowed by a deeper minimum of another one nearby
    out = []
    for pair, rows in per_pair.items():
        gaps = [g for _, g, _ in rows]
        for k in range(len(rows)):
            left = gaps[k - 1] if k > 0 else np.inf
            right = gaps[k + 1] if k < len(rows) - 1 else np.inf
            if gaps[k] < left and gaps[k] <= right:
                out.append((rows[k][0], gaps[k], pair, rows[k][2]))
    return out


def _tracked_pair_gap(family, a, s, ref_lams, pair):
    """Gap of the eigenvalue pair matched by continuity against ref_lams."""
    sysa, _ = _solve_at(family, a, s)
    perm = match_eigenvalues(ref_lams, sysa.eigenvalues)
    return abs(sysa.eigenvalues[perm[pair[0]]] - sysa.eigenvalues[perm[pair[1]]])


def _locate_1d(family, a_range, cfg):
    cands = []
    for a0, gap0, pair, lams0 in sorted(_coarse_gap_minima_1d(family, a_range, cfg)):
        res = minimize(
            lambda x: _tracked_pair_gap(family, float(x[0]), 1.0, lams0, pair) ** 2,
            [a0],
            method="Nelder-Mead",
            options={"xatol": 1e-12, "fatol": 1e-30, "maxiter": 200},
        )
        a_star = float(np.clip(res.x[0], a_range[0], a_range[1]))
        cand = _generic_candidate(family, a_star, None, cfg, pair_hint=(lams0, pair))
        # same-pair minima within a basin width are the same near-miss
        # (pair identity is fuzzy where all levels nearly coalesce)
        dup = next(
            (
                c for c in cands
                if c.branch_pair == cand.branch_pair
                and abs(a_star - c.location["a"]) < max(cfg.merge_radius, 5e-3)
            ),
            None,
        )
        if dup is not None:
            if cand.gap < dup.gap:
                cands[cands.index(dup)] = cand
            continue
        cands.append(cand)
    cands.sort(key=lambda c: c.gap)
    return cands


def _locate_2d(family, box, cfg):
    (a_lo, a_hi), (s_lo, s_hi) = box
    na = max(cfg.coarse_steps, 8)
    ns = max(cfg.coarse_steps // 2, 8)
    a_grid = np.linspace(a_lo, a_hi, na)
    s_grid = np.linspace(s_lo, s_hi, ns)
    gaps = np.empty((na, ns))
    for i, a in enumerate(a_grid):
        for j, s in enumerate(s_grid):
            sysa, _ = _solve_at(family, a, s)
            gaps[i, j] = _min_gap_pair(sysa)[0]
    seeds = []
    for i in range(na):
        for j in range(ns):
            neigh = gaps[max(0, i - 1) : i + 2, max(0, j - 1) : j + 2]
            if gaps[i, j] <= neigh.min():
                seeds.append((a_grid[i], s_grid[j]))
    roots = []
    for a0, s0 in seeds:
        res = _newton_discriminant(family, a0, s0, cfg)
        if res is None:
            continue
        a_star, s_star = res
        if not (
            a_lo - 1e-6 <= a_star <= a_hi + 1e-6
            and s_lo - 1e-6 <= s_star <= s_hi + 1e-6
        ):
            continue
        if any(
            abs(a_star - r[0]) < cfg.merge_radius
            and abs(s_star - r[1]) < cfg.merge_radius
            for r in roots
        ):
            continue
        roots.append((a_star, s_star))
    cands = []
    for a_star, s_star in sorted(roots):
        # final polish on the eigenvalue gap: near clustered spectra the
        # resultant's float64 noise floor exceeds the true discriminant
        sys0, _ = _solve_at(family, a_star, s_star)
        _, pair = _min_gap_pair(sys0)
        lams0 = sys0.eigenvalues
        res = minimize(
            lambda x: _tracked_pair_gap(family, float(x[0]), float(x[1]), lams0, pair)
            ** 2,
            [a_star, s_star],
            method="Nelder-Mead",
            options={"xatol": 1e-13, "fatol": 1e-30, "maxiter": 400},
        )
        a_star, s_star = float(res.x[0]), float(res.x[1])
        cands.append(_generic_candidate(family, a_star, s_star, cfg))
    cands.sort(key=lambda c: c.gap)
    return cands


def _newton_discriminant(family, a, s, cfg):
    max_step = 0.25
    for _ in range(cfg.newton_steps):
        f, fa, fs = discriminant(family, a, s)
        jac = np.array([[fa.real, fs.real], [fa.imag, fs.imag]])
        rhs = -np.array([f.real, f.imag])
        if not np.all(np.isfinite(jac)) or not np.all(np.isfinite(rhs)):
            return None
        # least squares tolerates families with a degenerate direction
        # (e.g. parameter-independent levels, where d disc/da = 0)
        (da, ds), *_ = np.linalg.lstsq(jac, rhs, rcond=None)
        step = (da * da + ds * ds) ** 0.5
        if step > max_step:
            da *= max_step / step
            ds *= max_step / step
        a += da
        s += ds
        if not (np.isfinite(a) and np.isfinite(s)):
            return None
        if step < 1e-13:
            break
    # accept only if Newton actually drove the gap into coalescence range
    sysa, _ = _solve_at(family, a, s)
    gap, _ = _min_gap_pair(sysa)
    scale = max(float(np.abs(sysa.eigenvalues).max()), 1.0)
    if gap > 1e-4 * scale:
        return None
    return a, s


def _generic_candidate(family, a, s, cfg, pair_hint=None):
    s_eff = 1.0 if s is None else float(s)
    sysa, fam = _solve_at(family, a, s_eff)
    if pair_hint is not None:
        ref_lams, ref_pair = pair_hint
        perm = match_eigenvalues(ref_lams, sysa.eigenvalues)
        pair = (int(perm[ref_pair[0]]), int(perm[ref_pair[1]]))
        pair = (min(pair), max(pair))
        gap = abs(sysa.eigenvalues[pair[0]] - sysa.eigenvalues[pair[1]])
    else:
        gap, pair = _min_gap_pair(sysa)
    lam = 0.5 * (sysa.eigenvalues[pair[0]] + sysa.eigenvalues[pair[1]])
    h = evaluate(fam, a)
    # constant-level families split only along the coupling scale
    direction = cfg.ray_direction if family.diagonal_slope().any() else (0.0, 1.0)
    exponent, residual = _order_exponent(
        family, a, pair, cfg, s=s_eff, direction=direction
    )
    rig, align = _probe_pair(
        family, a, pair, cfg.probe_distance, s=s_eff, direction=direction
    )
    certified = (
        gap <= cfg.gap_tolerance * max(h.scale, 1e-300)
        and 0.4 <= exponent <= 0.6
    )
    flags = []
    if residual > cfg.order_fit_residual_max:
        flags.append("certification_failed")
    location = {"a": float(a)} if s is None else {"a": float(a), "s": float(s)}
    return EpCandidate(
        location=location,
        branch_pair=pair,
        gap=float(gap),
        eigenvalue=complex(lam),
        rigidity_min=rig,
        align_defect=align,
        order_exponent=float(exponent),
        order_fit_residual=float(residual),
        certified=bool(certified),
        flags=tuple(flags),
    )


def cluster_report(candidates, radius: float):
    """Group candidates within ``radius`` (in search coordinates).

    Clusters of several second-order EPs in a finite parameter range are
    the observable signature of a shielded higher-order EP.
    """
    def coords(c):
        loc = c.location
        if "a" in loc:
            return np.array([loc["a"], loc.get("s", 0.0)])
        return np.array([loc["omega_re"], loc["omega_im"]])

    remaining = list(candidates)
    clusters = []
    while remaining:
        seed = remaining.pop(0)
        members = [seed]
        changed = True
        while changed:
            changed = False
            for other in remaining[:]:
                if any(
                    np.linalg.norm(coords(other) - coords(m)) <= radius
                    for m in members
                ):
                    members.append(other)
                    remaining.remove(other)
                    changed = True
        pts = np.array([coords(m) for m in members])
        center = pts.mean(axis=0)
        span = float(
            max(np.linalg.norm(p - q) for p in pts for q in pts)
        ) if len(pts) > 1 else 0.0
        key = "a" if "a" in seed.location else "omega_re"
        if key == "a":
            cdict = {"a": float(center[0])}
            if "s" in seed.location:
                cdict["s"] = float(center[1])
        else:
            cdict = {"omega_re": float(center[0]), "omega_im": float(center[1])}
        clusters.append(
            EpCluster(
                center=cdict,
                span=span,
                size=len(members),
                members=tuple(members),
                exponents=tuple(m.order_exponent for m in members),
            )
        )
    clusters.sort(key=lambda c: -c.size)
    return clusters


def candidates_to_json(candidates, clusters=None) -> str:
    def cand_dict(c):
        return {
            "location": c.location,
            "branch_pair": list(c.branch_pair),
            "gap": c.gap,
            "eigenvalue": {"re": c.eigenvalue.real, "im": c.eigenvalue.imag},
            "rigidity_min": c.rigidity_min,
            "align_defect": c.align_defect,
            "order_certificate": c.order_certificate(),
            "certified": c.certified,
            "flags": list(c.flags),
        }

    payload = {"candidates": [cand_dict(c) for c in candidates]}
    if clusters is not None:
        payload["clusters"] = [
            {
                "center": cl.center,
                "span": cl.span,
                "size": cl.size,
                "exponents": list(cl.exponents),
            }
            for cl in clusters
        ]
    return json.dumps(payload, indent=2, sort_keys=True)
