"""Pydantic request/response models for the simulation service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class ComplexPair(BaseModel):
    """One complex amplitude as (re, im)."""

    re: float
    im: float = 0.0

    def value(self) -> complex:
        return complex(self.re, self.im)


class InputsSpec(BaseModel):
    """Node input amplitudes: explicit, balanced, or seeded-random pairs."""

    balanced: bool = False
    random_count: int | None = Field(default=None, ge=1)
    alpha: ComplexPair | None = None
    beta: ComplexPair | None = None
    a: ComplexPair | None = None
    b: ComplexPair | None = None


class CavitySpec(BaseModel):
    big_g_a: list[float] = Field(default=[100.0], min_length=1)
    big_g_b: list[float] | None = None
    p_z_a: float = 1.0
    p_z_b: float = 1.0
    mode: str = "narrowband-imperfect"


class NoiseSpec(BaseModel):
    p_l: list[float] = Field(default=[0.0], min_length=1)
    p_dc: list[float] = Field(default=[0.0], min_length=1)
    f: list[float] = Field(default=[0.0], min_length=1)
    n_gates: int = Field(default=1, ge=1)


class SweepRequest(BaseModel):
    inputs: InputsSpec = InputsSpec(balanced=True)
    cavity: CavitySpec = CavitySpec()
    noise: NoiseSpec = NoiseSpec()
    trials: int = Field(default=1000, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    workers: int = Field(default=1, ge=1)


class ResultRowModel(BaseModel):
    G_A: float
    G_B: float
    Pz_A: float
    Pz_B: float
    p_l: float
    p_dc: float
    f: float
    N: int
    trials: int
    accepted: int
    discarded: int
    false_positive: int
    acceptance_rate: float
    acceptance_stderr: float
    mean_fidelity: float | None
    fidelity_stderr: float | None
    analytic_F: float
    analytic_success: float
    analytic_total_factor: float
    seed: int


class SweepResponse(BaseModel):
    rows: list[ResultRowModel]
    csv: str


class SimulateResponse(BaseModel):
    row: ResultRowModel


class CorrectionEntry(BaseModel):
    r_a: str
    r_b: str
    pauli_a: str
    pauli_b: str


class CorrectionTableResponse(BaseModel):
    entries: list[CorrectionEntry]


class SpectrumPoint(BaseModel):
    omega: float
    re: float
    im: float
    abs: float


class SpectrumResponse(BaseModel):
    points: list[SpectrumPoint]


class FormulasResponse(BaseModel):
    big_g_a: float
    big_g_b: float
    p_z_a: float
    p_z_b: float
    n_gates: int
    delta_a: float
    delta_b: float
    analytic_fidelity: float
    ideal_reflection_a: float
    coherence_survival_a: float
    resonant_R_a: float
    shrinking_factor: float
    mismatch_factor: float
    success_probability: float
    total_fidelity_factor: float


class ErrorResponse(BaseModel):
    error: str
