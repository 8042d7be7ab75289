"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from .hamiltonian import Affine, HamiltonianFamily, LevelSpec


class ComplexNumber(BaseModel):
    re: float = 0.0
    im: float = 0.0

    @classmethod
    def wrap(cls, z) -> "ComplexNumber":
        z = complex(z)
        return cls(re=z.real, im=z.imag)

    def unwrap(self) -> complex:
        return complex(self.re, self.im)


class LevelModel(BaseModel):
    e_intercept: float
    e_slope: float = 0.0
    gamma_half_intercept: float = 0.0
    gamma_half_slope: float = 0.0


class FamilyModel(BaseModel):
    """N levels plus either a scalar coupling or a full symmetric matrix."""

    levels: list[LevelModel] = Field(min_length=2)
    omega_scalar: Optional[ComplexNumber] = None
    omega_matrix: Optional[list[list[ComplexNumber]]] = None

    @model_validator(mode="after")
    def _exactly_one_coupling(self):
        if (self.omega_scalar is None) == (self.omega_matrix is None):
            raise ValueError("give exactly one of omega_scalar or omega_matrix")
        if self.omega_matrix is not None:
            n = len(self.levels)
            if len(self.omega_matrix) != n or any(
                len(row) != n for row in self.omega_matrix
            ):
                raise ValueError("omega_matrix must be N x N")
        return self

    def to_family(self) -> HamiltonianFamily:
        levels = [
            LevelSpec(
                Affine(lv.e_intercept, lv.e_slope),
                Affine(lv.gamma_half_intercept, lv.gamma_half_slope),
            )
            for lv in self.levels
        ]
        if self.omega_scalar is not None:
            return HamiltonianFamily(levels, self.omega_scalar.unwrap())
        coupling = np.array(
            [[z.unwrap() for z in row] for row in self.omega_matrix]
        )
        return HamiltonianFamily(levels, coupling)


class SweepModel(BaseModel):
    a_min: float = 0.0
    a_max: float = 1.0
    steps: int = Field(default=2001, ge=2, le=20001)
    refine_near_ep: bool = True
    refine_gap_threshold: float = 1e-2
    max_refine_depth: int = Field(default=8, ge=0, le=16)
    suspect_rigidity: float = 0.8


class EnergyGridModel(BaseModel):
    min: Optional[float] = None
    max: Optional[float] = None
    steps: int = Field(default=2001, ge=2, le=20001)

    @model_validator(mode="after")
    def _ordered(self):
        explicit = (self.min is None, self.max is None)
        if explicit == (False, False) and not self.min < self.max:
            raise ValueError("energy grid needs min < max")
        if explicit in ((True, False), (False, True)):
            raise ValueError("give both energy bounds or neither")
        return self


# ------------------------------------------------------------------ requests

class EvaluateRequest(BaseModel):
    family: FamilyModel
    a: float


class SolveRequest(BaseModel):
    family: FamilyModel
    a: float


class SweepRequest(BaseModel):
    family: FamilyModel
    sweep: SweepModel = SweepModel()


class EpSearchRequest(BaseModel):
    family: FamilyModel
    search: str = Field(default="param", pattern="^(param|scale|coupling|generic)$")
    a_min: float = 0.0
    a_max: float = 1.0
    s_min: float = 0.25
    s_max: float = 2.0
    two_d: bool = False
    fixed_a: float = 0.0
    cluster_radius: float = 0.05


class XsecScanRequest(BaseModel):
    family: FamilyModel
    a: float
    energy_grid: EnergyGridModel = EnergyGridModel()
    use_coupling: bool = True


class XsecContourRequest(BaseModel):
    family: FamilyModel
    sweep: SweepModel = SweepModel(steps=200)
    energy_grid: EnergyGridModel = EnergyGridModel()
    use_coupling: bool = True


# ----------------------------------------------------------------- responses

class MatrixResponse(BaseModel):
    a: float
    matrix: list[list[ComplexNumber]]


class StateModel(BaseModel):
    eigenvalue: ComplexNumber
    width: float
    rigidity: float
    a_norm: Optional[float]
    em_probability: Optional[float]
    mixing_abs: list[Optional[float]]
    degenerate: bool
    c_norm_defect: float


class SolveResponse(BaseModel):
    a: float
    states: list[StateModel]


class EpSuspectModel(BaseModel):
    a_lo: float
    a_hi: float
    a_at_min: float
    branch_pair: tuple[int, int]
    min_gap: float
    min_rigidity: float
    ambiguous: bool


class BranchModel(BaseModel):
    eigenvalues: list[ComplexNumber]
    widths: list[float]
    rigidity: list[float]
    a_norm: list[Optional[float]]
    mixing_abs: list[list[Optional[float]]]
    degenerate: list[bool]


class SweepResponse(BaseModel):
    grid: list[float]
    branches: list[BranchModel]
    ambiguous_step: list[bool]
    pairing_cost: list[float]
    ep_suspects: list[EpSuspectModel]


class EpCandidateModel(BaseModel):
    location: dict[str, float]
    branch_pair: tuple[int, int]
    gap: float
    eigenvalue: ComplexNumber
    rigidity_min: float
    align_defect: float
    order_exponent: float
    order_fit_residual: float
    certified: bool
    flags: list[str]


class EpClusterModel(BaseModel):
    center: dict[str, float]
    span: float
    size: int
    exponents: list[float]


class EpSearchResponse(BaseModel):
    candidates: list[EpCandidateModel]
    clusters: list[EpClusterModel]


class XsecScanResponse(BaseModel):
    a: float
    energies: list[float]
    sigma: list[float]
    use_coupling: bool


class XsecContourResponse(BaseModel):
    params: list[float]
    energies: list[float]
    sigma: list[list[float]]
    use_coupling: bool


class ExperimentInfo(BaseModel):
    name: str
    description: str


class HealthResponse(BaseModel):
    status: str
    version: str
