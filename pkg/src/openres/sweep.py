"""Parameter sweeps with continuous branch tracking.

A sweep solves the family on a grid of the parameter a and relabels the
per-point eigenvalues into continuous branches.  Consecutive points are
matched by minimum-cost assignment on a combined metric: eigenvalue
distance (scale-normalized) plus one minus the Hermitian overlap of the
eigenvectors, weighted 1:1.  Where the assignment is ambiguous (second
best within 10% of the best) or the spectrum nearly degenerates, the grid
is locally bisected; ambiguity that survives maximum refinement is exactly
the signature of an EP crossing and is flagged, not treated as an error.

EP suspects are intervals around local minima of a branch-pair gap where
the pair's phase rigidity dips below a threshold.  The rigidity condition
is what separates genuine EP influence from free level crossings: a
decoupled (omega = 0) family crosses freely with rigidity identically one
and never produces suspects.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .diagnostics import diagnose
from .eigensolver import solve
from .hamiltonian import HamiltonianFamily, evaluate

__all__ = ["SweepConfig", "EpSuspect", "SweepResult", "run_sweep", "write_csv"]

CSV_COLUMNS_FIXED = ["a", "branch", "re_e", "im_e", "width", "r", "one_minus_r", "a_norm"]

# ambiguity margin: second-best assignment within 10% of the best
_AMBIGUITY_FACTOR = 1.10


@dataclass(frozen=True)
class SweepConfig:
    a_min: float
    a_max: float
    steps: int = 2001
    refine_near_ep: bool = True
    refine_gap_threshold: float = 1e-2
    max_refine_depth: int = 8
    suspect_rigidity: float = 0.8

    def __post_init__(self):
        if not self.a_min < self.a_max:
            raise ValueError("need a_min < a_max")
        if self.steps < 2:
            raise ValueError("need at least 2 steps")


@dataclass(frozen=True)
class EpSuspect:
    """Interval where a branch pair shows EP influence."""

    a_lo: float
    a_hi: float
    a_at_min: float
    branch_pair: tuple
    min_gap: float
    min_rigidity: float
    ambiguous: bool


@dataclass
class SweepResult:
    """Branch-tracked trajectories; arrays are (n_branches, n_points)."""

    grid: np.ndarray
    eigenvalues: np.ndarray
    rigidity: np.ndarray
    a_norm: np.ndarray
    em_probability: np.ndarray
    mixing_abs: np.ndarray        # (n_branches, n_points, n)
    degenerate: np.ndarray
    ambiguous_step: np.ndarray    # per grid point, step ending here was ambiguous
    pairing_cost: np.ndarray
    ep_suspects: list = field(default_factory=list)

    @property
    def n_branches(self) -> int:
        return self.eigenvalues.shape[0]

    def widths(self) -> np.ndarray:
        """Reported decay widths, -2 Im(E) >= 0 for decaying states."""
        return -2.0 * self.eigenvalues.imag


class _Point:
    __slots__ = ("a", "system", "diag")

    def __init__(self, a, system, diag):
        self.a = a
        self.system = system
        self.diag = diag


def _solve_point(family: HamiltonianFamily, a: float) -> _Point:
    system = solve(evaluate(family, a))
    return _Point(a, system, diagnose(system))


def _unit_rows(vectors: np.ndarray) -> np.ndarray:
    return vectors / np.linalg.norm(vectors, axis=1, keepdims=True)


def _assignment_cost_matrix(prev: _Point, cur: _Point) -> np.ndarray:
    dist = np.abs(prev.system.eigenvalues[:, None] - cur.system.eigenvalues[None, :])
    scale = max(float(dist.max()), 1e-300)
    overlap = np.abs(_unit_rows(prev.system.vectors) @ _unit_rows(cur.system.vectors).conj().T)
    return dist / scale + (1.0 - overlap)


def _best_and_second(cost: np.ndarray):
    """Optimal assignment, its cost, and the best strictly different one."""
    n = cost.shape[0]
    rows, cols = linear_sum_assignment(cost)
    best = tuple(cols[np.argsort(rows)])
    best_cost = float(cost[np.arange(n), best].sum())
    second_cost = np.inf
    if n <= 6:
        for perm in itertools.permutations(range(n)):
            if perm == best:
                continue
            c = float(cost[np.arange(n), perm].sum())
            second_cost = min(second_cost, c)
    else:
        # pairwise swaps of the optimum: cheap lower-effort surrogate
        for i in range(n):
            for j in range(i + 1, n):
                perm = list(best)
                perm[i], perm[j] = perm[j], perm[i]
                c = float(cost[np.arange(n), perm].sum())
                second_cost = min(second_cost, c)
    return np.array(best), best_cost, second_cost


def _match(prev: _Point, cur: _Point):
    cost = _assignment_cost_matrix(prev, cur)
    perm, c1, c2 = _best_and_second(cost)
    ambiguous = c2 <= _AMBIGUITY_FACTOR * c1
    if ambiguous:
        # deterministic convention at genuine crossings: plain eigenvalue
        # distance decides the labels, the flag tells consumers it did
        dist = np.abs(
            prev.system.eigenvalues[:, None] - cur.system.eigenvalues[None, :]
        )
        rows, cols = linear_sum_assignment(dist)
        perm = cols[np.argsort(rows)]
    return perm, c1, ambiguous


def _min_pair_gap(point: _Point) -> float:
    lam = point.system.eigenvalues
    n = len(lam)
    return min(
        abs(lam[i] - lam[j]) for i in range(n) for j in range(i + 1, n)
    )


def _refine_interval(family, left: _Point, right: _Point, depth: int, cfg) -> list:
    """Points strictly inside (left, right) after recursive bisection."""
    if depth <= 0 or (right.a - left.a) <= 1e-14 * max(1.0, abs(right.a)):
        return []
    mid = _solve_point(family, 0.5 * (left.a + right.a))
    out = []
    _, _, amb_l = _match(left, mid)
    _, _, amb_r = _match(mid, right)
    gaps = (_min_pair_gap(left), _min_pair_gap(mid), _min_pair_gap(right))
    if amb_l or (gaps[1] < gaps[0] and gaps[1] <= gaps[2]):
        out += _refine_interval(family, left, mid, depth - 1, cfg)
    out.append(mid)
    if amb_r or (gaps[1] < gaps[2] and gaps[1] <= gaps[0]):
        out += _refine_interval(family, mid, right, depth - 1, cfg)
    return out


def run_sweep(family: HamiltonianFamily, cfg: SweepConfig) -> SweepResult:
    grid = np.linspace(cfg.a_min, cfg.a_max, cfg.steps)
    points = [_solve_point(family, a) for a in grid]

    match_cache = {}

    def match(left: _Point, right: _Point):
        key = (id(left), id(right))
        if key not in match_cache:
            match_cache[key] = _match(left, right)
        return match_cache[key]

    # local refinement: only ambiguous steps and steps bracketing a local
    # minimum of the spectral gap get bisected, so the cost stays bounded
    if cfg.refine_near_ep:
        gaps = np.array([_min_pair_gap(p) for p in points])
        inserts = {}
        for k in range(len(points) - 1):
            left, right = points[k], points[k + 1]
            near_min = False
            if min(gaps[k], gaps[k + 1]) < cfg.refine_gap_threshold:
                lo = max(0, k - 1)
                hi = min(len(points) - 1, k + 2)
                near_min = min(gaps[k], gaps[k + 1]) <= gaps[lo:hi + 1].min()
            _, _, ambiguous = match(left, right)
            if ambiguous or near_min:
                extra = _refine_interval(family, left, right, cfg.max_refine_depth, cfg)
                if extra:
                    inserts[k] = sorted(extra, key=lambda p: p.a)
        if inserts:
            merged = []
            for k, p in enumerate(points):
                merged.append(p)
                if k in inserts:
                    merged.extend(inserts[k])
            points = merged

    m = len(points)
    n = family.n
    grid = np.array([p.a for p in points])

    # chain the per-step assignments into global branch labels
    index = np.arange(n)
    labels = np.empty((m, n), dtype=int)
    labels[0] = index
    pairing_cost = np.zeros(m)
    ambiguous_step = np.zeros(m, dtype=bool)
    for t in range(1, m):
        perm, c, amb = match(points[t - 1], points[t])
        index = perm[index]
        labels[t] = index
        pairing_cost[t] = c
        ambiguous_step[t] = amb

    eigenvalues = np.empty((n, m), dtype=complex)
    rigidity = np.empty((n, m))
    a_norm = np.empty((n, m))
    em = np.empty((n, m))
    mixing_abs = np.empty((n, m, n))
    degenerate = np.zeros((n, m), dtype=bool)
    for t, p in enumerate(points):
        idx = labels[t]
        eigenvalues[:, t] = p.system.eigenvalues[idx]
        rigidity[:, t] = p.diag.rigidity[idx]
        a_norm[:, t] = p.diag.a_norm[idx]
        em[:, t] = p.diag.em_probability[idx]
        mixing_abs[:, t] = p.diag.mixing_abs[idx]
        degenerate[:, t] = p.system.degenerate[idx]

    result = SweepResult(
        grid=grid,
        eigenvalues=eigenvalues,
        rigidity=rigidity,
        a_norm=a_norm,
        em_probability=em,
        mixing_abs=mixing_abs,
        degenerate=degenerate,
        ambiguous_step=ambiguous_step,
        pairing_cost=pairing_cost,
    )
    result.ep_suspects = _find_suspects(result, cfg)
    return result


def _find_suspects(result: SweepResult, cfg: SweepConfig) -> list:
    """Intervals around branch-pair gap minima with collapsed rigidity."""
    suspects = []
    m = len(result.grid)
    for i in range(result.n_branches):
        for j in range(i + 1, result.n_branches):
            gap = np.abs(result.eigenvalues[i] - result.eigenvalues[j])
            rig = np.minimum(result.rigidity[i], result.rigidity[j])
            for t in range(m):
                left = gap[t - 1] if t > 0 else np.inf
                right = gap[t + 1] if t < m - 1 else np.inf
                if not (gap[t] < left and gap[t] <= right):
                    continue
                if rig[t] >= cfg.suspect_rigidity:
                    continue
                lo = t
                while lo > 0 and rig[lo - 1] < cfg.suspect_rigidity:
                    lo -= 1
                hi = t
                while hi < m - 1 and rig[hi + 1] < cfg.suspect_rigidity:
                    hi += 1
                interval = EpSuspect(
                    a_lo=float(result.grid[lo]),
                    a_hi=float(result.grid[hi]),
                    a_at_min=float(result.grid[t]),
                    branch_pair=(i, j),
                    min_gap=float(gap[lo:hi + 1].min()),
                    min_rigidity=float(rig[lo:hi + 1].min()),
                    ambiguous=bool(result.ambiguous_step[lo:hi + 1].any()),
                )
                if not any(
                    s.branch_pair == interval.branch_pair
                    and s.a_lo <= interval.a_at_min <= s.a_hi
                    for s in suspects
                ):
                    suspects.append(interval)
    suspects.sort(key=lambda s: s.a_at_min)
    return suspects


def _fmt(x) -> str:
    """Shortest round-trip decimal representation."""
    return repr(float(x))


def write_csv(result: SweepResult, fileobj) -> None:
    """One row per (branch, grid point).

    Columns: a, branch, re_e, im_e, width (= -2 im_e), r, 1-r, a_norm,
    b_abs_1..b_abs_N, flags.  Degenerate states carry nan diagnostics and
    the 'degenerate' flag; rows ending an ambiguous tracking step carry
    'ambiguous'.
    """
    n = result.n_branches
    header = CSV_COLUMNS_FIXED + [f"b_abs_{j + 1}" for j in range(n)] + ["flags"]
    fileobj.write(",".join(header) + "\n")
    for b in range(n):
        for t, a in enumerate(result.grid):
            lam = result.eigenvalues[b, t]
            r = result.rigidity[b, t]
            row = [
                _fmt(a),
                str(b),
                _fmt(lam.real),
                _fmt(lam.imag),
                _fmt(-2.0 * lam.imag),
                _fmt(r),
                _fmt(1.0 - r),
                _fmt(result.a_norm[b, t]),
            ]
            row += [_fmt(x) for x in result.mixing_abs[b, t]]
            flags = []
            if result.degenerate[b, t]:
                flags.append("degenerate")
            if result.ambiguous_step[t]:
                flags.append("ambiguous")
            row.append(";".join(flags))
            fileobj.write(",".join(row) + "\n")
