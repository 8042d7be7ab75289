"""Experiment orchestration: config in, files out.

Every run computes all artifacts in memory first and only then writes
them (write-to-temp, atomic rename), so failures never leave partial
output.  A manifest.json records the sha256 of the source config and of
every emitted file; identical configs give byte-identical artifacts.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .diagnostics import OverlapAnomaly, diagnose
from .ep_locator import (
    LocateConfig,
    NoCandidate,
    candidates_to_json,
    cluster_report,
    locate_2x2,
    locate_generic,
)
from .eigensolver import NoConvergence, solve
from .hamiltonian import evaluate
from .smatrix import (
    XsecGrid,
    auto_energy_grid,
    write_grid_csv,
    write_grid_matrix,
    write_scan_csv,
    xsec_contour,
    xsec_scan,
)
from .sweep import SweepConfig, run_sweep, write_csv

__all__ = ["ComputeError", "run_experiment"]


class ComputeError(RuntimeError):
    """A numerical stage failed; carries the original context."""


def _fmt(x) -> str:
    return repr(float(x))


def _sweep_cfg(cfg: ExperimentConfig, refine: bool) -> SweepConfig:
    sw = cfg.sweep
    if refine and sw.refine_near_ep:
        return sw
    return SweepConfig(
        a_min=sw.a_min,
        a_max=sw.a_max,
        steps=sw.steps,
        refine_near_ep=False,
        refine_gap_threshold=sw.refine_gap_threshold,
        max_refine_depth=sw.max_refine_depth,
        suspect_rigidity=sw.suspect_rigidity,
    )


def _suspects_json(result) -> str:
    payload = [
        {
            "a_lo": s.a_lo,
            "a_hi": s.a_hi,
            "a_at_min": s.a_at_min,
            "branch_pair": list(s.branch_pair),
            "min_gap": s.min_gap,
            "min_rigidity": s.min_rigidity,
            "ambiguous": s.ambiguous,
        }
        for s in result.ep_suspects
    ]
    return json.dumps({"ep_suspects": payload}, indent=2, sort_keys=True)


def _run_sweep_mode(cfg, refine, artifacts, meta):
    sw = _sweep_cfg(cfg, refine)
    result = run_sweep(cfg.family, sw)
    buf = io.StringIO()
    write_csv(result, buf)
    artifacts["sweep.csv"] = buf.getvalue()
    artifacts["ep_suspects.json"] = _suspects_json(result)
    if cfg.compare_no_coupling:
        twin = run_sweep(cfg.family.decoupled(), sw)
        buf = io.StringIO()
        write_csv(twin, buf)
        artifacts["sweep_no_coupling.csv"] = buf.getvalue()
    meta["grid_points"] = len(result.grid)


def _run_ep_mode(cfg, artifacts, meta):
    ep = cfg.ep
    locate_cfg = LocateConfig()
    if ep.search == "coupling":
        cands = locate_2x2(cfg.family, search_coupling=True, a=ep.fixed_a, cfg=locate_cfg)
    elif ep.search == "scale":
        cands = locate_2x2(
            cfg.family,
            search_omega_scale=True,
            a_range=(ep.a_min, ep.a_max),
            s_range=(ep.s_min, ep.s_max),
            cfg=locate_cfg,
        )
    elif ep.search == "param":
        cands = locate_2x2(cfg.family, a_range=(ep.a_min, ep.a_max), cfg=locate_cfg)
    else:
        box = ((ep.a_min, ep.a_max),)
        if ep.two_d:
            box = ((ep.a_min, ep.a_max), (ep.s_min, ep.s_max))
        cands = locate_generic(cfg.family, box, locate_cfg)
    clusters = cluster_report(cands, ep.cluster_radius)
    artifacts["ep_candidates.json"] = candidates_to_json(cands, clusters)
    meta["candidates"] = len(cands)


def _scan_name(index: int, no_coupling: bool) -> str:
    stem = f"xsec_scan_{index + 1}"
    return f"{stem}_no_coupling.csv" if no_coupling else f"{stem}.csv"


def _energies_for(cfg, pole_sets):
    if cfg.energy_grid_auto:
        return auto_energy_grid(pole_sets, cfg.xsec.energy_steps)
    return np.linspace(
        cfg.xsec.energy_min, cfg.xsec.energy_max, cfg.xsec.energy_steps
    )


def _emit_scans(cfg, energies, artifacts, meta):
    scans = {}
    for i, a in enumerate(cfg.xsec.a_values):
        poles = solve(evaluate(cfg.family, a)).eigenvalues
        sigma = xsec_scan(poles, energies)
        buf = io.StringIO()
        write_scan_csv(energies, sigma, buf)
        artifacts[_scan_name(i, False)] = buf.getvalue()
        scans[_scan_name(i, False)] = a
        if cfg.compare_no_coupling:
            sigma0 = xsec_scan(cfg.family.diagonal(a), energies)
            buf = io.StringIO()
            write_scan_csv(energies, sigma0, buf)
            artifacts[_scan_name(i, True)] = buf.getvalue()
            scans[_scan_name(i, True)] = a
    meta["scans"] = scans


def _contour(cfg, params, energies, use_coupling, threads) -> XsecGrid:
    if threads <= 1 or len(params) < 2 * threads:
        return xsec_contour(cfg.family, params, energies, use_coupling)
    chunks = np.array_split(params, threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        grids = list(
            pool.map(
                lambda ch: xsec_contour(cfg.family, ch, energies, use_coupling),
                chunks,
            )
        )
    sigma = np.vstack([g.sigma for g in grids])
    return XsecGrid(
        energies=energies,
        params=params,
        sigma=sigma,
        use_coupling=use_coupling,
    )


def _run_xsec_mode(cfg, threads, artifacts, meta, contour: bool):
    params = np.linspace(cfg.sweep.a_min, cfg.sweep.a_max, cfg.sweep.steps)
    sample = list(cfg.xsec.a_values) + (list(params) if contour else [])
    pole_sets = [solve(evaluate(cfg.family, a)).eigenvalues for a in sample] or [
        solve(evaluate(cfg.family, cfg.sweep.a_min)).eigenvalues
    ]
    energies = _energies_for(cfg, pole_sets)
    _emit_scans(cfg, energies, artifacts, meta)
    if not contour:
        return
    grid = _contour(cfg, params, energies, True, threads)
    buf = io.StringIO()
    write_grid_csv(grid, buf)
    artifacts["xsec_contour.csv"] = buf.getvalue()
    buf = io.StringIO()
    write_grid_matrix(grid, buf)
    artifacts["xsec_contour_matrix.txt"] = buf.getvalue()
    if cfg.compare_no_coupling:
        twin = _contour(cfg, params, energies, False, threads)
        buf = io.StringIO()
        write_grid_csv(twin, buf)
        artifacts["xsec_contour_no_coupling.csv"] = buf.getvalue()
        buf = io.StringIO()
        write_grid_matrix(twin, buf)
        artifacts["xsec_contour_no_coupling_matrix.txt"] = buf.getvalue()
    meta["contour_shape"] = [len(params), len(energies)]


def _run_diagnose_mode(cfg, artifacts, meta):
    points = []
    for a in cfg.diagnose_a_values:
        system = solve(evaluate(cfg.family, a))
        d = diagnose(system)

        def listify(arr):
            return [None if not np.isfinite(x) else float(x) for x in np.ravel(arr)]

        points.append(
            {
                "a": float(a),
                "eigenvalues": [
                    {"re": z.real, "im": z.imag} for z in system.eigenvalues
                ],
                "widths": [-2.0 * z.imag for z in system.eigenvalues],
                "rigidity": listify(d.rigidity),
                "a_norm": listify(d.a_norm),
                "em_probability": listify(d.em_probability),
                "mixing_abs": [listify(row) for row in d.mixing_abs],
                "degenerate": [bool(f) for f in d.degenerate],
            }
        )
    artifacts["diagnostics.json"] = json.dumps(
        {"points": points}, indent=2, sort_keys=True
    )
    meta["points"] = len(points)


def run_experiment(
    cfg: ExperimentConfig,
    output_dir: str,
    threads: int = 1,
    refine: bool = True,
) -> dict:
    """Run one experiment; returns the manifest written alongside outputs."""
    artifacts: dict[str, str] = {}
    meta: dict = {}
    try:
        if cfg.mode == "sweep":
            _run_sweep_mode(cfg, refine, artifacts, meta)
        elif cfg.mode == "ep":
            _run_ep_mode(cfg, artifacts, meta)
        elif cfg.mode == "xsec-scan":
            _run_xsec_mode(cfg, threads, artifacts, meta, contour=False)
        elif cfg.mode == "xsec-contour":
            _run_xsec_mode(cfg, threads, artifacts, meta, contour=True)
        elif cfg.mode == "diagnose":
            _run_diagnose_mode(cfg, artifacts, meta)
        else:  # pragma: no cover - config validation rejects this earlier
            raise ComputeError(f"unhandled mode {cfg.mode!r}")
    except (NoCandidate, NoConvergence, OverlapAnomaly, ArithmeticError) as exc:
        raise ComputeError(f"{cfg.mode} run failed: {exc}") from exc

    manifest = {
        "version": __version__,
        "mode": cfg.mode,
        "description": cfg.description,
        "config_sha256": hashlib.sha256(cfg.source_text.encode()).hexdigest(),
        "meta": meta,
        "files": {
            name: {
                "sha256": hashlib.sha256(content.encode()).hexdigest(),
                "bytes": len(content.encode()),
            }
            for name, content in sorted(artifacts.items())
        },
    }
    artifacts["manifest.json"] = json.dumps(manifest, indent=2, sort_keys=True)

    os.makedirs(output_dir, exist_ok=True)
    for name, content in artifacts.items():
        tmp = os.path.join(output_dir, f".{name}.tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(content)
        os.replace(tmp, os.path.join(output_dir, name))
    return manifest
