"""Pydantic request/response models for the service API.

The config models mirror the TOML run configuration one to one; requests
carry a full config so every call is self-contained and reproducible.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class IngestConfig(_Strict):
    results: list[str] = Field(default_factory=list)
    probes: str = ""
    msm_ids: list[int] = Field(default_factory=list)
    start: int = 0
    stop: int = 0


class GraphConfig(_Strict):
    geo_radius_km: float = 500.0
    sim_threshold: float = 0.95


class FeaturesConfig(_Strict):
    clip: float = 3.0


class ModelSectionConfig(_Strict):
    hidden_dim: int = 64
    layers: int = 2
    cheb_order: int = 3
    heads: int = 4
    pe_dim: int = 8
    cheb_exact_lambda_max: bool = False


class TrainingConfig(_Strict):
    lr: float = 1e-3
    weight_decay: float = 1e-4
    clip_norm: float = 1.0
    plateau_factor: float = 0.5
    plateau_patience: int = 10
    min_lr: float = 1e-5
    early_stop_patience: int = 30
    max_epochs: int = 500


class QoeConfig(_Strict):
    rtt_ceiling_ms: float = 400.0
    loss_ceiling_pct: float = 10.0
    jitter_ceiling_ms: float = 100.0
    mos: bool = False


class SynthConfig(_Strict):
    nodes: int = 300
    geo_radius_km: float = 250.0
    target_r2: float = 0.97


class OutputConfig(_Strict):
    dir: str = "out"


class RunConfigModel(_Strict):
    seed: int
    ingest: IngestConfig = Field(default_factory=IngestConfig)
    graph: GraphConfig = Field(default_factory=GraphConfig)
    features: FeaturesConfig = Field(default_factory=FeaturesConfig)
    model: ModelSectionConfig = Field(default_factory=ModelSectionConfig)
    training: TrainingConfig = Field(default_factory=TrainingConfig)
    qoe: QoeConfig = Field(default_factory=QoeConfig)
    synth: SynthConfig = Field(default_factory=SynthConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)


class ConfigRequest(_Strict):
    config: RunConfigModel


class TrainRequest(_Strict):
    config: RunConfigModel
    architecture: str = "all"


class QoeRequest(_Strict):
    config: RunConfigModel
    architecture: str


# --- responses -----------------------------------------------------------------

class HealthResponse(BaseModel):
    status: str
    version: str


class SynthResponse(BaseModel):
    summaries_path: str
    nodes: int


class IngestResponse(BaseModel):
    summaries_path: str
    validation_path: str
    accepted_probes: int
    validation: dict
    io_stats: dict


class BuildResponse(BaseModel):
    snapshot_path: str
    stats_path: str
    stats: dict


class TrainEntry(BaseModel):
    architecture: str
    epochs_run: int
    best_epoch: int
    best_val_loss: float
    stopped_early: bool
    checkpoint_path: str
    log_path: str


class TrainResponse(BaseModel):
    results: list[TrainEntry]


class EvaluateResponse(BaseModel):
    ranking: list[str]
    comparison: dict
    artifact_paths: list[str]
    table: str


class QoeResponse(BaseModel):
    csv_path: str
    rows: int
    nodes: int
    architecture: str


class ReportResponse(BaseModel):
    artifact_paths: list[str]
    table: str


class ErrorResponse(BaseModel):
    error_code: str
    detail: str
    architecture: str | None = None


# --- twin query surface -----------------------------------------------------------

class TwinLoadRequest(_Strict):
    config: RunConfigModel
    architecture: str


class TwinLoadResponse(BaseModel):
    nodes: int
    arcs: int
    architecture: str


class TwinStatsResponse(BaseModel):
    loaded: bool
    nodes: int = 0
    arcs: int = 0
    density: float = 0.0
    architecture: str | None = None


class TwinPredictRequest(_Strict):
    node_indices: list[int]


class NodePrediction(BaseModel):
    node_index: int
    rtt_ms: float
    loss_pct: float
    jitter_ms: float
    qoe: dict[str, float]


class TwinPredictResponse(BaseModel):
    predictions: list[NodePrediction]
