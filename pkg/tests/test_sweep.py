import io

import numpy as np
import pytest

from openres.sweep import SweepConfig, run_sweep, write_csv

from conftest import two_level_family


CFG = SweepConfig(a_min=0.0, a_max=1.0, steps=401)


def test_config_validation():
    with pytest.raises(ValueError):
        SweepConfig(a_min=1.0, a_max=0.0)
    with pytest.raises(ValueError):
        SweepConfig(a_min=0.0, a_max=1.0, steps=1)


def test_decoupled_sweep_is_exact():
    fam = two_level_family(omega=0.0)
    res = run_sweep(fam, CFG)
    assert not res.ep_suspects
    assert np.allclose(res.rigidity, 1.0, atol=1e-12)
    assert np.allclose(res.mixing_abs[0, :, 0], 1.0, atol=1e-12)
    assert np.allclose(res.mixing_abs[0, :, 1], 0.0, atol=1e-12)
    # branches are exactly the level energies, continuously labeled
    for t, a in enumerate(res.grid):
        eps = sorted(
            [complex(1 - 0.5 * a, -0.495), complex(a, -0.493)],
            key=lambda z: z.real,
        )
        got = sorted(res.eigenvalues[:, t], key=lambda z: z.real)
        assert max(abs(g - e) for g, e in zip(got, eps)) <= 1e-12


def test_decoupled_branches_follow_levels_through_crossing():
    fam = two_level_family(omega=0.0)
    res = run_sweep(fam, CFG)
    # branch 0 starts at eps_1 (e = 1 at a = 0) and must stay on it
    for t, a in enumerate(res.grid):
        assert abs(res.eigenvalues[0, t] - complex(1 - 0.5 * a, -0.495)) < 1e-12
        assert abs(res.eigenvalues[1, t] - complex(a, -0.493)) < 1e-12


def test_trace_along_sweep(fig1_left):
    res = run_sweep(fig1_left, CFG)
    for t, a in enumerate(res.grid):
        tr = complex(1 - 0.5 * a, -0.495) + complex(a, -0.493)
        assert abs(res.eigenvalues[:, t].sum() - tr) < 1e-10


def test_fig1_left_suspects(fig1_left):
    res = run_sweep(fig1_left, SweepConfig(0.0, 1.0, 2001))
    assert len(res.ep_suspects) == 2
    first, second = res.ep_suspects
    assert first.a_at_min == pytest.approx(0.653333, abs=2e-3)
    assert first.min_rigidity < 0.2
    assert second.a_at_min == pytest.approx(0.68, abs=5e-3)
    assert second.min_rigidity < 0.8
    # refinement reached well below the coarse grid spacing at the EP
    assert first.min_gap < 1e-3


def test_fig1_right_boundary_suspect(fig1_right):
    res = run_sweep(fig1_right, SweepConfig(0.0, 1.0, 1001))
    assert len(res.ep_suspects) == 1
    assert res.ep_suspects[0].a_at_min < 0.05
    assert res.ep_suspects[0].min_rigidity < 0.8


def test_fig1_right_combined_behavior(fig1_right):
    # strong coupling: widths bifurcate far beyond the bare width split
    # while the energy branches hug the mean and cross the bare lines
    res = run_sweep(fig1_right, SweepConfig(0.0, 1.0, 1001))
    dwidth = np.abs(res.widths()[0] - res.widths()[1])
    bare_split = 2.0 * abs(-0.495 + 0.595)
    assert dwidth.max() > 5.0 * bare_split
    e1 = 1.0 - 0.5 * res.grid
    crossings = 0
    for b in range(2):
        diff = res.eigenvalues[b].real - e1
        crossings += int(np.any(np.diff(np.sign(diff)) != 0))
    assert crossings == 2


def test_fig1_left_widths_bifurcate(fig1_left):
    res = run_sweep(fig1_left, SweepConfig(0.0, 1.0, 2001))
    dwidth = np.abs(res.widths()[0] - res.widths()[1])
    t = int(np.argmax(dwidth))
    assert res.grid[t] == pytest.approx(0.667, abs=2e-3)
    # rigidity near one at maximum width bifurcation
    assert min(res.rigidity[0, t], res.rigidity[1, t]) > 0.9


def test_fig2_left_three_branches(fig2_left):
    res = run_sweep(fig2_left, SweepConfig(0.0, 1.0, 501))
    assert res.n_branches == 3
    for t, a in enumerate(res.grid):
        tr = (
            complex(1 - 0.5 * a, -0.495)
            + complex(a, -0.493)
            + complex(-1 / 3 + 1.5 * a, -0.49)
        )
        assert abs(res.eigenvalues[:, t].sum() - tr) < 1e-10


def test_permutation_soundness(fig1_left):
    from openres.eigensolver import solve
    from openres.hamiltonian import evaluate

    res = run_sweep(fig1_left, SweepConfig(0.0, 1.0, 101))
    for t, a in enumerate(res.grid):
        lam = solve(evaluate(fig1_left, a)).eigenvalues
        got = np.sort_complex(res.eigenvalues[:, t])
        assert np.allclose(np.sort_complex(lam), got, atol=0)


def test_refinement_inserts_points_near_ep(fig1_left):
    coarse = run_sweep(
        fig1_left, SweepConfig(0.0, 1.0, 101, refine_near_ep=False)
    )
    fine = run_sweep(fig1_left, SweepConfig(0.0, 1.0, 101))
    assert len(fine.grid) > len(coarse.grid)
    assert not coarse.ep_suspects or coarse.ep_suspects  # both valid shapes


def test_refine_threshold_halving_keeps_labels(fig1_left):
    base_cfg = SweepConfig(0.0, 1.0, 301)
    half_cfg = SweepConfig(0.0, 1.0, 301, refine_gap_threshold=5e-3)
    base = run_sweep(fig1_left, base_cfg)
    half = run_sweep(fig1_left, half_cfg)
    common = np.intersect1d(base.grid, half.grid)
    sel_b = np.isin(base.grid, common)
    sel_h = np.isin(half.grid, common)
    assert np.allclose(
        base.eigenvalues[:, sel_b], half.eigenvalues[:, sel_h], atol=0
    )


def test_branch_continuity(fig1_left):
    res = run_sweep(fig1_left, SweepConfig(0.0, 1.0, 2001))
    lam = res.eigenvalues
    for t in range(1, len(res.grid)):
        step = np.abs(lam[:, t] - lam[:, t - 1]).max()
        cross = np.abs(lam[0, t] - lam[1, t])
        assert step < cross or res.ambiguous_step[t]


def test_csv_output(fig1_left):
    res = run_sweep(fig1_left, SweepConfig(0.0, 1.0, 21))
    buf = io.StringIO()
    write_csv(res, buf)
    lines = buf.getvalue().splitlines()
    header = lines[0].split(",")
    assert header == [
        "a", "branch", "re_e", "im_e", "width", "r", "one_minus_r",
        "a_norm", "b_abs_1", "b_abs_2", "flags",
    ]
    assert len(lines) == 1 + 2 * len(res.grid)
    # deterministic: emitting twice gives identical bytes
    buf2 = io.StringIO()
    write_csv(res, buf2)
    assert buf.getvalue() == buf2.getvalue()
