from pydantic import BaseModel, Field, field_validator
from typing import List, Optional, Dict, Any, Tuple
from enum import Enum

import numpy as np

# Enums for command dispatch
class CommandName(str, Enum):
    VERIFY = "verify"
    ESTIMATE = "estimate"
    SWEEP = "sweep"
    REPORT = "report"

class VerifySuite(str, Enum):
    REDUCTIONS = "reductions"
    DIVDIFF = "divdiff"
    DECOMPOSITION = "decomposition"
    PARTITION = "partition"
    FOURIER = "fourier"
    REMARK = "remark"

class SweepKind(str, Enum):
    EXPONENT = "exponent"
    LOWERBOUND = "lowerbound"
    BOUND_CURVE = "bound-curve"

class SymbolKind(str, Enum):
    TRUNCATION = "truncation"
    SAMPLED = "sampled"
    LATTICE = "lattice"
    ONES = "ones"

# Experiment configuration
class SymbolSpec(BaseModel):
    kind: SymbolKind
    params: Dict[str, Any] = Field(default_factory=dict)

    class Config:
        extra = "forbid"

class ExperimentConfig(BaseModel):
    command: CommandName
    suite: Optional[VerifySuite] = None
    sweep: Optional[SweepKind] = None
    symbol: Optional[SymbolSpec] = None
    n: int = Field(2, ge=1)
    k: Optional[int] = Field(None, ge=0)
    l: Optional[int] = Field(None, ge=0)
    q: float = 0.5
    p: Optional[float] = None
    p_grid: Optional[List[float]] = None
    dim: Optional[int] = Field(None, ge=2)
    trials: int = Field(100, ge=1)
    restarts: Optional[int] = Field(None, ge=1)
    iters: Optional[int] = Field(None, ge=1)
    seed: int = 0
    tol: Optional[float] = Field(None, gt=0)
    variant: str = "first"
    out: Optional[str] = None
    results: Optional[str] = None

    class Config:
        extra = "forbid"

    @field_validator("q")
    @classmethod
    def q_in_unit_interval(cls, v):
        if not 0.0 < v < 1.0:
            raise ValueError("q must lie in (0, 1)")
        return v

    @field_validator("p")
    @classmethod
    def p_at_least_one(cls, v):
        if v is not None and v < 1.0:
            raise ValueError("p must be >= 1")
        return v

    @field_validator("p_grid")
    @classmethod
    def grid_at_least_one(cls, v):
        if v is not None and any(p < 1.0 for p in v):
            raise ValueError("every p in the grid must be >= 1")
        return v

    @field_validator("variant")
    @classmethod
    def known_variant(cls, v):
        if v not in ("first", "second"):
            raise ValueError("variant must be 'first' or 'second'")
        return v

# Matrix and symbol payloads
class MatrixPayload(BaseModel):
    dim: int
    real: List[List[float]]
    imag: List[List[float]]

    @classmethod
    def from_array(cls, x) -> "MatrixPayload":
        x = np.asarray(x, dtype=complex)
        return cls(dim=x.shape[0], real=x.real.tolist(), imag=x.imag.tolist())

    def to_array(self) -> np.ndarray:
        return np.asarray(self.real) + 1j * np.asarray(self.imag)

class SymbolPayload(BaseModel):
    n: int
    index_set: List[int]
    real: List[float]
    imag: List[float]
    label: str = "phi"

# Result records
class NormEstimateRecord(BaseModel):
    label: str
    value: float
    p: float
    p_list: List[float]
    dim: int
    restarts: int
    seed: int
    envelope: float
    dispersion: float
    endpoint: bool
    trace: List[float]
    witnesses: List[MatrixPayload] = Field(default_factory=list)

class SweepRecord(BaseModel):
    p: float
    estimate: float
    exponent: Optional[float] = None
    fit_residual: Optional[float] = None
    claimed: Optional[bool] = None

class VerificationReport(BaseModel):
    suite: str
    trials: int
    max_residual: float
    tol: float
    passed: bool
    seed: int
    details: Dict[str, Any] = Field(default_factory=dict)

# Exported tables
class QTableEntry(BaseModel):
    F: List[Tuple[int, int]]
    alpha: List[int]
    poly: List[Tuple[List[int], str]]

class QTableDocument(BaseModel):
    n: int
    k: int
    entries: List[QTableEntry]

class FourierComponent(BaseModel):
    eps: List[int]
    real: List[float]
    imag: List[float]

class FourierWeightsDocument(BaseModel):
    n: int
    h: float
    half_width: float
    upper: float
    points: int
    boundary_ratio: float
    components: List[FourierComponent]
