"""Run configuration: one TOML file drives the whole pipeline.

Every constant the experiments depend on lives here (edge-rule thresholds,
scaler clip, model sizes, optimizer settings, QoE ceilings), so a run is
reproducible from the config file plus its mandatory seed. Unknown keys
are rejected to catch typos early.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, fields

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .synth import DEFAULT_GEO_RADIUS_KM, DEFAULT_NODES, DEFAULT_TARGET_R2


class ConfigError(ValueError):
    """Malformed run configuration (usage error at the CLI/service edge)."""


@dataclass
class IngestSection:
    results: list[str] = field(default_factory=list)
    probes: str = ""
    msm_ids: list[int] = field(default_factory=list)
    start: int = 0
    stop: int = 0


@dataclass
class GraphSection:
    geo_radius_km: float = 500.0
    sim_threshold: float = 0.95


@dataclass
class FeaturesSection:
    clip: float = 3.0


@dataclass
class ModelSection:
    hidden_dim: int = 64
    layers: int = 2
    cheb_order: int = 3
    heads: int = 4
    pe_dim: int = 8
    cheb_exact_lambda_max: bool = False


@dataclass
class TrainingSection:
    lr: float = 1e-3
    weight_decay: float = 1e-4
    clip_norm: float = 1.0
    plateau_factor: float = 0.5
    plateau_patience: int = 10
    min_lr: float = 1e-5
    early_stop_patience: int = 30
    max_epochs: int = 500


@dataclass
class QoeSection:
    rtt_ceiling_ms: float = 400.0
    loss_ceiling_pct: float = 10.0
    jitter_ceiling_ms: float = 100.0
    mos: bool = False


@dataclass
class SynthSection:
    nodes: int = DEFAULT_NODES
    geo_radius_km: float = DEFAULT_GEO_RADIUS_KM
    target_r2: float = DEFAULT_TARGET_R2


@dataclass
class OutputSection:
    dir: str = "out"


_SECTIONS = {
    "ingest": IngestSection,
    "graph": GraphSection,
    "features": FeaturesSection,
    "model": ModelSection,
    "training": TrainingSection,
    "qoe": QoeSection,
    "synth": SynthSection,
    "output": OutputSection,
}


@dataclass
class RunConfig:
    seed: int
    ingest: IngestSection = field(default_factory=IngestSection)
    graph: GraphSection = field(default_factory=GraphSection)
    features: FeaturesSection = field(default_factory=FeaturesSection)
    model: ModelSection = field(default_factory=ModelSection)
    training: TrainingSection = field(default_factory=TrainingSection)
    qoe: QoeSection = field(default_factory=QoeSection)
    synth: SynthSection = field(default_factory=SynthSection)
    output: OutputSection = field(default_factory=OutputSection)

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        """Identifies the experiment; the output location is not part of it."""
        doc = self.to_dict()
        doc.pop("output")
        canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:12]


def _build_section(name: str, cls, data: dict):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"[{name}] has unknown keys: {', '.join(sorted(unknown))}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"[{name}]: {exc}") from exc


def config_from_dict(data: dict) -> RunConfig:
    data = dict(data)
    if "seed" not in data:
        raise ConfigError("config must set a seed")
    seed = data.pop("seed")
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError(f"seed must be an integer, got {seed!r}")
    sections = {}
    for name, value in data.items():
        if name not in _SECTIONS:
            raise ConfigError(f"unknown config section [{name}]")
        if not isinstance(value, dict):
            raise ConfigError(f"[{name}] must be a table of keys")
        sections[name] = _build_section(name, _SECTIONS[name], value)
    return RunConfig(seed=seed, **sections)


def load_config(path) -> RunConfig:
    try:
        with open(path, "rb") as fp:
            data = tomllib.load(fp)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(data)
