"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class ModelBlock(BaseModel):
    preset: str | None = None
    nx: int | None = None
    ny: int | None = None
    A: list[float] | None = None
    H: list[float] | None = None
    Q: list[float] | None = None
    R: list[float] | None = None


class PriorBlock(BaseModel):
    x0_mean: list[float] | None = None
    x0_cov: list[float] | None = None


class TriggerBlock(BaseModel):
    kind: str | None = None
    M: int | None = None
    M_max: int | None = None
    cost: float | None = None
    cost_table: list[float] | None = None


class SimBlock(BaseModel):
    steps: int | None = None
    runs: int | None = None
    seed: int | None = None


class Scenario(BaseModel):
    model: ModelBlock = Field(default_factory=ModelBlock)
    prior: PriorBlock = Field(default_factory=PriorBlock)
    trigger: TriggerBlock = Field(default_factory=TriggerBlock)
    sim: SimBlock = Field(default_factory=SimBlock)

    def to_blocks(self) -> dict:
        """Nested dict with unset/None leaves dropped, as config expects."""
        raw = self.model_dump()
        return {
            section: {k: v for k, v in raw[section].items() if v is not None}
            for section in ("model", "prior", "trigger", "sim")
        }


class SimulateRequest(Scenario):
    pass


class SweepRequest(Scenario):
    triggers: list[str]
    cost_grid: list[float]
    workers: int = 1


class PeriodRequest(Scenario):
    cost_grid: list[float]


class ValidateRequest(Scenario):
    pass


class CheckReport(BaseModel):
    name: str
    status: str
    statistic: float
    threshold: float
    detail: str


class ValidationReport(BaseModel):
    status: str
    checks: list[CheckReport]


class Health(BaseModel):
    status: str = "ok"
