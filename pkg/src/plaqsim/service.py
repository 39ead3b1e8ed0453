"""HTTP service exposing the experiment pipeline.

The payload functions are plain callables over pydantic models; the FastAPI
app wraps them, and the command-line client calls them either in-process or
over HTTP against a running server.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict, Field

from .transpile import DEVICE_QUANTUM_VOLUME, get_topology, volume_report
from .transpile import transpile as route_circuit
from .circuits import NonCommutingTerms, dump_circuit, model_circuit
from .harness import (
    ExperimentConfig,
    NoiseConfig,
    ResultRow,
    ResultTable,
    exact_reference,
    run_experiment,
)
from .mitigation import calibrate
from .simulator import child_seed


class RowModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    time: float
    observable: str
    raw_mean: float
    raw_err: float
    ro_mean: float
    ro_err: float
    zne_mean: float
    zne_err: float
    exact: float


class RunResponse(BaseModel):
    rows: list[RowModel]
    executed_circuits: int

    def to_table(self) -> ResultTable:
        return ResultTable(
            [ResultRow(**r.model_dump()) for r in self.rows],
            self.executed_circuits,
        )


class ExactRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: ExperimentConfig
    n_points: int = Field(default=200, ge=2)


class ExactCurve(BaseModel):
    times: list[float]
    values: list[float]


class ExactResponse(BaseModel):
    curves: dict[str, ExactCurve]


class CalibrateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    n_qubits: int = Field(ge=1, le=6)
    noise: NoiseConfig = Field(default_factory=NoiseConfig)
    shots: int = Field(default=100_000, ge=1)
    seed: int = 0


class CalibrateResponse(BaseModel):
    n_qubits: int
    matrix: list[list[float]]


class InspectRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: ExperimentConfig
    circuit_dump: bool = False


class InspectResponse(BaseModel):
    volume: dict
    device_quantum_volume: int | None
    layout: dict[int, int] | None
    circuit_dump: str | None


def run_payload(cfg: ExperimentConfig) -> RunResponse:
    table = run_experiment(cfg)
    return RunResponse(
        rows=[RowModel(**vars(r)) for r in table.rows],
        executed_circuits=table.executed_circuits,
    )


def exact_payload(req: ExactRequest) -> ExactResponse:
    curves = exact_reference(req.config, req.n_points)
    return ExactResponse(
        curves={
            name: ExactCurve(times=list(ts), values=list(vs))
            for name, (ts, vs) in curves.items()
        }
    )


def calibrate_payload(req: CalibrateRequest) -> CalibrateResponse:
    rm = calibrate(
        req.n_qubits, req.noise.to_model(), req.shots, child_seed(req.seed, 0)
    )
    return CalibrateResponse(n_qubits=rm.n_qubits, matrix=rm.matrix.tolist())


def inspect_payload(req: InspectRequest) -> InspectResponse:
    cfg = req.config
    circ = model_circuit(
        cfg.gauge_model(), cfg.geom(), max(cfg.time_list()), cfg.initial_label(),
        cfg.label_basis(),
    )
    layout = None
    if cfg.topology != "none":
        topo = get_topology(cfg.topology)
        circ, layout = route_circuit(circ, topo)
    return InspectResponse(
        volume=volume_report(circ),
        device_quantum_volume=DEVICE_QUANTUM_VOLUME.get(cfg.topology),
        layout=layout,
        circuit_dump=dump_circuit(circ) if req.circuit_dump else None,
    )


app = FastAPI(title="plaqsim", version="1.0")


def _guard(fn, *args):
    try:
        return fn(*args)
    except NonCommutingTerms as e:
        raise HTTPException(status_code=422, detail=str(e))
    except (ValueError, RuntimeError) as e:
        raise HTTPException(status_code=400, detail=str(e))


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/run", response_model=RunResponse)
def run_endpoint(cfg: ExperimentConfig) -> RunResponse:
    return _guard(run_payload, cfg)


@app.post("/exact", response_model=ExactResponse)
def exact_endpoint(req: ExactRequest) -> ExactResponse:
    return _guard(exact_payload, req)


@app.post("/calibrate", response_model=CalibrateResponse)
def calibrate_endpoint(req: CalibrateRequest) -> CalibrateResponse:
    return _guard(calibrate_payload, req)


@app.post("/inspect", response_model=InspectResponse)
def inspect_endpoint(req: InspectRequest) -> InspectResponse:
    return _guard(inspect_payload, req)
