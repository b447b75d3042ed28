"""FastAPI application exposing the simulation laboratory.

Endpoints mirror the CLI commands: simulate, sweep, and period return
CSV bodies; validate returns a JSON calibration report.  Configuration
errors map to 422 and numeric failures to 500, both with a machine-
parseable ``code`` field.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse

from ..config import ConfigError, scenario_from_dict
from ..runners import (
    NumericError,
    period_csv_for,
    simulate_csv,
    sweep_csv_for,
    validation_report,
)
from .schemas import (
    Health,
    PeriodRequest,
    SimulateRequest,
    SweepRequest,
    ValidateRequest,
    ValidationReport,
)

app = FastAPI(title="triggerlab", version="1.0.0")


@app.exception_handler(ConfigError)
async def _config_error(request: Request, exc: ConfigError) -> JSONResponse:
    return JSONResponse(status_code=422,
                        content={"code": "config", "message": str(exc)})


@app.exception_handler(NumericError)
async def _numeric_error(request: Request, exc: NumericError) -> JSONResponse:
    return JSONResponse(status_code=500,
                        content={"code": "numeric", "message": str(exc)})


@app.get("/health", response_model=Health)
async def health() -> Health:
    return Health()


@app.post("/simulate", response_class=PlainTextResponse)
async def simulate(req: SimulateRequest) -> PlainTextResponse:
    cfg = scenario_from_dict(req.to_blocks())
    return PlainTextResponse(simulate_csv(cfg), media_type="text/csv")


@app.post("/sweep", response_class=PlainTextResponse)
async def sweep(req: SweepRequest) -> PlainTextResponse:
    cfg = scenario_from_dict(req.to_blocks())
    body = sweep_csv_for(cfg, req.triggers, req.cost_grid, workers=req.workers)
    return PlainTextResponse(body, media_type="text/csv")


@app.post("/period", response_class=PlainTextResponse)
async def period(req: PeriodRequest) -> PlainTextResponse:
    cfg = scenario_from_dict(req.to_blocks())
    return PlainTextResponse(period_csv_for(cfg, req.cost_grid),
                             media_type="text/csv")


@app.post("/validate", response_model=ValidationReport)
async def validate(req: ValidateRequest) -> ValidationReport:
    cfg = scenario_from_dict(req.to_blocks())
    return ValidationReport(**validation_report(cfg))
