"""FastAPI application wrapping the pipeline and the loaded twin.

Error mapping (mirrored by the CLI exit codes): domain usage errors ->
400, missing or empty inputs -> 422, training divergence -> 409. Request
bodies carry the full run configuration, so calls are stateless except for
the explicitly loaded twin.
"""

from __future__ import annotations

import os
from dataclasses import asdict

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, pipeline, qoe
from ..config import ConfigError, config_from_dict
from ..errors import (
    CorruptSnapshot,
    DivergenceDetected,
    EmptyInput,
    FileUnreadable,
    InvalidConfig,
    MissingInput,
    NdtError,
    TooFewNodes,
    VersionMismatch,
)
from ..nn import model as nn_model
from ..nn.sparse import adjacency_from_kb
from . import schemas

USAGE_ERRORS = (ConfigError, InvalidConfig, ValueError)
INPUT_ERRORS = (
    EmptyInput,
    MissingInput,
    FileUnreadable,
    TooFewNodes,
    CorruptSnapshot,
    VersionMismatch,
)


class TwinState:
    """Snapshot + checkpoint loaded for interactive queries."""

    def __init__(self):
        self.dataset = None
        self.model = None
        self.config = None

    @property
    def loaded(self) -> bool:
        return self.model is not None


def _run_config(model: schemas.RunConfigModel):
    return config_from_dict(model.model_dump())


def create_app() -> FastAPI:
    app = FastAPI(title="ndtwin", version=__version__)
    twin = TwinState()

    @app.exception_handler(NdtError)
    async def domain_error_handler(request: Request, exc: NdtError):
        if isinstance(exc, DivergenceDetected):
            return JSONResponse(
                status_code=409,
                content={
                    "error_code": "divergence",
                    "detail": str(exc),
                    "architecture": exc.architecture,
                },
            )
        if isinstance(exc, INPUT_ERRORS):
            code = "missing_input" if isinstance(exc, (MissingInput, FileUnreadable)) else "empty_input"
            return JSONResponse(
                status_code=422, content={"error_code": code, "detail": str(exc)}
            )
        return JSONResponse(
            status_code=400, content={"error_code": "usage", "detail": str(exc)}
        )

    @app.exception_handler(ConfigError)
    async def config_error_handler(request: Request, exc: ConfigError):
        return JSONResponse(
            status_code=400, content={"error_code": "usage", "detail": str(exc)}
        )

    @app.exception_handler(ValueError)
    async def value_error_handler(request: Request, exc: ValueError):
        return JSONResponse(
            status_code=400, content={"error_code": "usage", "detail": str(exc)}
        )

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/pipeline/synth", response_model=schemas.SynthResponse)
    def synth_step(request: schemas.ConfigRequest):
        result = pipeline.run_synth(_run_config(request.config))
        return schemas.SynthResponse(**asdict(result))

    @app.post("/pipeline/ingest", response_model=schemas.IngestResponse)
    def ingest_step(request: schemas.ConfigRequest):
        result = pipeline.run_ingest(_run_config(request.config))
        return schemas.IngestResponse(**asdict(result))

    @app.post("/pipeline/build", response_model=schemas.BuildResponse)
    def build_step(request: schemas.ConfigRequest):
        result = pipeline.run_build(_run_config(request.config))
        return schemas.BuildResponse(**asdict(result))

    @app.post("/pipeline/train", response_model=schemas.TrainResponse)
    def train_step(request: schemas.TrainRequest):
        entries = pipeline.run_train(_run_config(request.config), request.architecture)
        return schemas.TrainResponse(results=[schemas.TrainEntry(**asdict(e)) for e in entries])

    @app.post("/pipeline/evaluate", response_model=schemas.EvaluateResponse)
    def evaluate_step(request: schemas.ConfigRequest):
        result = pipeline.run_evaluate(_run_config(request.config))
        return schemas.EvaluateResponse(
            ranking=result.comparison.ranking(),
            comparison=result.comparison.as_dict(),
            artifact_paths=result.artifact_paths,
            table=result.table,
        )

    @app.post("/pipeline/qoe", response_model=schemas.QoeResponse)
    def qoe_step(request: schemas.QoeRequest):
        result = pipeline.run_qoe(_run_config(request.config), request.architecture)
        return schemas.QoeResponse(**asdict(result))

    @app.post("/pipeline/report", response_model=schemas.ReportResponse)
    def report_step(request: schemas.ConfigRequest):
        result = pipeline.run_report(_run_config(request.config))
        return schemas.ReportResponse(**asdict(result))

    @app.post("/twin/load", response_model=schemas.TwinLoadResponse)
    def twin_load(request: schemas.TwinLoadRequest):
        cfg = _run_config(request.config)
        if request.architecture not in nn_model.ARCHITECTURES:
            raise ValueError(f"unknown architecture {request.architecture!r}")
        checkpoint = os.path.join(cfg.output.dir, "checkpoints", f"{request.architecture}.json")
        if not os.path.exists(checkpoint):
            raise MissingInput(f"missing checkpoint: {checkpoint}")
        twin.dataset = pipeline.load_dataset(cfg)
        twin.model = nn_model.load_checkpoint(checkpoint)
        twin.config = cfg
        return schemas.TwinLoadResponse(
            nodes=twin.dataset.kb.n_nodes,
            arcs=twin.dataset.kb.n_arcs,
            architecture=request.architecture,
        )

    @app.get("/twin/stats", response_model=schemas.TwinStatsResponse)
    def twin_stats():
        if not twin.loaded:
            return schemas.TwinStatsResponse(loaded=False)
        kb = twin.dataset.kb
        n = kb.n_nodes
        density = kb.n_arcs / (n * (n - 1)) if n > 1 else 0.0
        return schemas.TwinStatsResponse(
            loaded=True,
            nodes=n,
            arcs=kb.n_arcs,
            density=density,
            architecture=twin.model.config.architecture,
        )

    @app.post("/twin/predict", response_model=schemas.TwinPredictResponse)
    def twin_predict(request: schemas.TwinPredictRequest):
        if not twin.loaded:
            raise MissingInput("no twin loaded; POST /twin/load first")
        dataset = twin.dataset
        n = dataset.kb.n_nodes
        for idx in request.node_indices:
            if not 0 <= idx < n:
                raise ValueError(f"node index {idx} out of range for {n} nodes")
        pred = nn_model.predict(twin.model, dataset.scaled_features, dataset.adj)
        original = dataset.targets.to_original_units(pred)
        ceilings = qoe.ImpairmentCeilings(
            rtt_ms=twin.config.qoe.rtt_ceiling_ms,
            loss_pct=twin.config.qoe.loss_ceiling_pct,
            jitter_ms=twin.config.qoe.jitter_ceiling_ms,
        )
        predictions = []
        for idx in request.node_indices:
            rtt_ms = max(float(original[idx, 0]), 0.0)
            loss_pct = float(np.clip(original[idx, 1], 0.0, 100.0))
            jitter_ms = dataset.kb.state[idx].jitter
            impairments = qoe.normalize_impairments(rtt_ms, loss_pct, jitter_ms, ceilings)
            scores = {
                p.name: qoe.estimate_qoe(p, impairments, node_index=idx).qoe
                for p in dataset.kb.app_profiles
            }
            predictions.append(
                schemas.NodePrediction(
                    node_index=idx,
                    rtt_ms=rtt_ms,
                    loss_pct=loss_pct,
                    jitter_ms=jitter_ms,
                    qoe=scores,
                )
            )
        return schemas.TwinPredictResponse(predictions=predictions)

    return app
