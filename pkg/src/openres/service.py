"""FastAPI service wrapping the core package.

Run with `uvicorn openres.service:app`.  Every endpoint is a pure
computation on the request body; nothing is persisted server-side.
"""

from __future__ import annotations

import math

import numpy as np
from fastapi import FastAPI, HTTPException

from . import __version__
from .config import list_experiments
from .diagnostics import diagnose
from .ep_locator import LocateConfig, NoCandidate, cluster_report, locate_2x2, locate_generic
from .eigensolver import NoConvergence, solve
from .hamiltonian import evaluate
from .schemas import (
    BranchModel,
    ComplexNumber,
    EpCandidateModel,
    EpClusterModel,
    EpSearchRequest,
    EpSearchResponse,
    EpSuspectModel,
    EvaluateRequest,
    ExperimentInfo,
    HealthResponse,
    MatrixResponse,
    SolveRequest,
    SolveResponse,
    StateModel,
    SweepRequest,
    SweepResponse,
    XsecContourRequest,
    XsecContourResponse,
    XsecScanRequest,
    XsecScanResponse,
)
from .smatrix import PoleOnRealAxis, auto_energy_grid, xsec_contour, xsec_scan
from .sweep import SweepConfig, run_sweep


def _opt(x) -> float | None:
    x = float(x)
    return x if math.isfinite(x) else None


def _sweep_config(model) -> SweepConfig:
    return SweepConfig(
        a_min=model.a_min,
        a_max=model.a_max,
        steps=model.steps,
        refine_near_ep=model.refine_near_ep,
        refine_gap_threshold=model.refine_gap_threshold,
        max_refine_depth=model.max_refine_depth,
        suspect_rigidity=model.suspect_rigidity,
    )


def create_app() -> FastAPI:
    app = FastAPI(
        title="openres",
        version=__version__,
        description=(
            "Eigenvalue trajectories, biorthogonality diagnostics, "
            "exceptional points and resonance cross sections of "
            "open-quantum-system Hamiltonians."
        ),
    )

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.get("/experiments", response_model=list[ExperimentInfo])
    def experiments():
        return [
            ExperimentInfo(name=name, description=description)
            for name, description in list_experiments()
        ]

    @app.post("/hamiltonian/evaluate", response_model=MatrixResponse)
    def hamiltonian_evaluate(req: EvaluateRequest):
        h = evaluate(req.family.to_family(), req.a)
        return MatrixResponse(
            a=req.a,
            matrix=[[ComplexNumber.wrap(z) for z in row] for row in h.matrix],
        )

    @app.post("/solve", response_model=SolveResponse)
    def solve_point(req: SolveRequest):
        try:
            system = solve(evaluate(req.family.to_family(), req.a))
        except NoConvergence as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        d = diagnose(system)
        states = [
            StateModel(
                eigenvalue=ComplexNumber.wrap(system.eigenvalues[k]),
                width=-2.0 * float(system.eigenvalues[k].imag),
                rigidity=float(d.rigidity[k]),
                a_norm=_opt(d.a_norm[k]),
                em_probability=_opt(d.em_probability[k]),
                mixing_abs=[_opt(x) for x in d.mixing_abs[k]],
                degenerate=bool(system.degenerate[k]),
                c_norm_defect=float(system.c_norm_defect[k]),
            )
            for k in range(system.n)
        ]
        return SolveResponse(a=req.a, states=states)

    @app.post("/sweep", response_model=SweepResponse)
    def sweep(req: SweepRequest):
        result = run_sweep(req.family.to_family(), _sweep_config(req.sweep))
        branches = [
            BranchModel(
                eigenvalues=[ComplexNumber.wrap(z) for z in result.eigenvalues[b]],
                widths=[-2.0 * float(z.imag) for z in result.eigenvalues[b]],
                rigidity=[float(x) for x in result.rigidity[b]],
                a_norm=[_opt(x) for x in result.a_norm[b]],
                mixing_abs=[
                    [_opt(x) for x in row] for row in result.mixing_abs[b]
                ],
                degenerate=[bool(x) for x in result.degenerate[b]],
            )
            for b in range(result.n_branches)
        ]
        return SweepResponse(
            grid=[float(a) for a in result.grid],
            branches=branches,
            ambiguous_step=[bool(x) for x in result.ambiguous_step],
            pairing_cost=[float(x) for x in result.pairing_cost],
            ep_suspects=[
                EpSuspectModel(
                    a_lo=s.a_lo,
                    a_hi=s.a_hi,
                    a_at_min=s.a_at_min,
                    branch_pair=tuple(s.branch_pair),
                    min_gap=s.min_gap,
                    min_rigidity=s.min_rigidity,
                    ambiguous=s.ambiguous,
                )
                for s in result.ep_suspects
            ],
        )

    @app.post("/ep/locate", response_model=EpSearchResponse)
    def ep_locate(req: EpSearchRequest):
        family = req.family.to_family()
        cfg = LocateConfig()
        try:
            if req.search == "coupling":
                cands = locate_2x2(family, search_coupling=True, a=req.fixed_a, cfg=cfg)
            elif req.search == "scale":
                cands = locate_2x2(
                    family,
                    search_omega_scale=True,
                    a_range=(req.a_min, req.a_max),
                    s_range=(req.s_min, req.s_max),
                    cfg=cfg,
                )
            elif req.search == "param":
                cands = locate_2x2(family, a_range=(req.a_min, req.a_max), cfg=cfg)
            else:
                box = ((req.a_min, req.a_max),)
                if req.two_d:
                    box = ((req.a_min, req.a_max), (req.s_min, req.s_max))
                cands = locate_generic(family, box, cfg)
        except NoCandidate as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        clusters = cluster_report(cands, req.cluster_radius)
        return EpSearchResponse(
            candidates=[
                EpCandidateModel(
                    location=c.location,
                    branch_pair=tuple(c.branch_pair),
                    gap=c.gap,
                    eigenvalue=ComplexNumber.wrap(c.eigenvalue),
                    rigidity_min=c.rigidity_min,
                    align_defect=c.align_defect,
                    order_exponent=c.order_exponent,
                    order_fit_residual=c.order_fit_residual,
                    certified=c.certified,
                    flags=list(c.flags),
                )
                for c in cands
            ],
            clusters=[
                EpClusterModel(
                    center=cl.center,
                    span=cl.span,
                    size=cl.size,
                    exponents=list(cl.exponents),
                )
                for cl in clusters
            ],
        )

    @app.post("/xsec/scan", response_model=XsecScanResponse)
    def xsec_scan_endpoint(req: XsecScanRequest):
        family = req.family.to_family()
        if req.use_coupling:
            poles = solve(evaluate(family, req.a)).eigenvalues
        else:
            poles = family.diagonal(req.a)
        grid = req.energy_grid
        if grid.min is None:
            energies = auto_energy_grid([poles], grid.steps)
        else:
            energies = np.linspace(grid.min, grid.max, grid.steps)
        try:
            sigma = xsec_scan(poles, energies)
        except PoleOnRealAxis as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return XsecScanResponse(
            a=req.a,
            energies=[float(e) for e in energies],
            sigma=[float(s) for s in sigma],
            use_coupling=req.use_coupling,
        )

    @app.post("/xsec/contour", response_model=XsecContourResponse)
    def xsec_contour_endpoint(req: XsecContourRequest):
        family = req.family.to_family()
        params = np.linspace(req.sweep.a_min, req.sweep.a_max, req.sweep.steps)
        grid = req.energy_grid
        energies = None
        if grid.min is not None:
            energies = np.linspace(grid.min, grid.max, grid.steps)
        result = xsec_contour(
            family,
            params,
            energies,
            use_coupling=req.use_coupling,
            energy_steps=grid.steps,
        )
        return XsecContourResponse(
            params=[float(a) for a in result.params],
            energies=[float(e) for e in result.energies],
            sigma=[[float(x) for x in row] for row in result.sigma],
            use_coupling=result.use_coupling,
        )

    return app


app = create_app()
