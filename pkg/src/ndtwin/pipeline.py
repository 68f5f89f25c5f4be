"""End-to-end pipeline steps over a run configuration.

Each step reads/writes files under the configured output directory:

    summaries.jsonl     aggregated per-probe summaries (ingest or synth)
    validation.json     measurement validation report
    snapshot.json       knowledge-base snapshot
    graph_stats.json    node/arc counts, density, degree histogram
    checkpoints/        one model checkpoint per architecture
    logs/               one epoch-log CSV per architecture
    report/             comparison.csv/json + SVG charts
    qoe.csv             per-node, per-application QoE estimates

All steps are deterministic for a fixed config (rerunning produces
byte-identical artifacts).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import evaluation, features, kgraph, qoe, report, synth, training
from .config import RunConfig
from .errors import DivergenceDetected, EmptyInput, MissingInput, UnusableRecord
from .ingest import jsonl, records
from .ingest.client import AtlasClient
from .nn import model as nn_model
from .nn.sparse import adjacency_from_kb

SUMMARIES_FILE = "summaries.jsonl"
VALIDATION_FILE = "validation.json"
SNAPSHOT_FILE = "snapshot.json"
STATS_FILE = "graph_stats.json"
CHECKPOINT_DIR = "checkpoints"
LOG_DIR = "logs"
REPORT_DIR = "report"
QOE_FILE = "qoe.csv"


def _out(cfg: RunConfig, *parts: str) -> str:
    return os.path.join(cfg.output.dir, *parts)


def _write_json(path, doc) -> None:
    import json

    with open(path, "w") as fp:
        json.dump(doc, fp, separators=(",", ":"))
        fp.write("\n")


# --- synth ----------------------------------------------------------------------

@dataclass
class SynthResult:
    summaries_path: str
    nodes: int


def run_synth(cfg: RunConfig) -> SynthResult:
    os.makedirs(cfg.output.dir, exist_ok=True)
    summaries = synth.generate_summaries(
        n=cfg.synth.nodes,
        seed=cfg.seed,
        geo_radius_km=cfg.synth.geo_radius_km,
        target_r2=cfg.synth.target_r2,
    )
    path = _out(cfg, SUMMARIES_FILE)
    jsonl.write_summaries(summaries, path)
    return SynthResult(summaries_path=path, nodes=len(summaries))


# --- ingest ---------------------------------------------------------------------

@dataclass
class IngestResult:
    summaries_path: str
    validation_path: str
    accepted_probes: int
    validation: dict
    io_stats: dict


def _iter_result_documents(cfg: RunConfig, client: AtlasClient | None, stats: jsonl.JsonlStats):
    for path in cfg.ingest.results:
        if not os.path.exists(path):
            raise MissingInput(f"results file not found: {path}")
        yield from jsonl.load_jsonl(path, stats)
    if cfg.ingest.msm_ids:
        owned = client is None
        client = client or AtlasClient()
        try:
            for msm_id in cfg.ingest.msm_ids:
                for doc in client.fetch_measurements(msm_id, cfg.ingest.start, cfg.ingest.stop):
                    stats.parsed += 1
                    yield doc
        finally:
            if owned:
                client.close()


def run_ingest(cfg: RunConfig, client: AtlasClient | None = None) -> IngestResult:
    if not cfg.ingest.results and not cfg.ingest.msm_ids:
        raise MissingInput("ingest needs result files or measurement ids")
    if not cfg.ingest.probes:
        raise MissingInput("ingest needs a probe catalog (ingest.probes)")
    os.makedirs(cfg.output.dir, exist_ok=True)
    catalog = jsonl.load_probe_catalog(cfg.ingest.probes)

    validation = records.ValidationReport()
    by_probe: dict[int, list[records.MeasurementRecord]] = {}
    io_stats = {"ping": 0, "traceroute": 0, "other": 0, "unknown_probe": 0}
    line_stats = jsonl.JsonlStats()

    for doc in _iter_result_documents(cfg, client, line_stats):
        doc_type = doc.get("type") if isinstance(doc, dict) else None
        if doc_type == "ping":
            io_stats["ping"] += 1
            ping = records.parse_ping_result(doc)
            try:
                rec = records.derive_record(ping)
            except UnusableRecord:
                validation.count_reject("unusable")
                continue
            reason = records.validate_record(rec)
            if reason is not None:
                validation.count_reject(reason)
                continue
            validation.count_accept()
            by_probe.setdefault(rec.probe_id, []).append(rec)
        elif doc_type == "traceroute":
            io_stats["traceroute"] += 1
            records.parse_traceroute_result(doc)
        else:
            io_stats["other"] += 1

    summaries = []
    for probe_id in sorted(by_probe):
        meta = catalog.get(probe_id)
        if meta is None:
            io_stats["unknown_probe"] += 1
            continue
        summaries.append(records.aggregate_probe_stats(by_probe[probe_id], meta))

    if not summaries:
        raise EmptyInput("no probes with accepted measurements")

    summaries_path = _out(cfg, SUMMARIES_FILE)
    validation_path = _out(cfg, VALIDATION_FILE)
    jsonl.write_summaries(summaries, summaries_path)
    _write_json(validation_path, validation.as_dict())
    io_stats["skipped_lines"] = line_stats.skipped
    return IngestResult(
        summaries_path=summaries_path,
        validation_path=validation_path,
        accepted_probes=len(summaries),
        validation=validation.as_dict(),
        io_stats=io_stats,
    )


# --- build ----------------------------------------------------------------------

@dataclass
class BuildResult:
    snapshot_path: str
    stats_path: str
    stats: dict


def run_build(cfg: RunConfig) -> BuildResult:
    summaries_path = _out(cfg, SUMMARIES_FILE)
    if not os.path.exists(summaries_path):
        raise MissingInput(f"summaries not found: {summaries_path} (run ingest or synth first)")
    summaries = jsonl.read_summaries(summaries_path)
    kb = kgraph.build_topology(
        summaries,
        geo_radius_km=cfg.graph.geo_radius_km,
        sim_threshold=cfg.graph.sim_threshold,
    )
    snapshot_path = _out(cfg, SNAPSHOT_FILE)
    stats_path = _out(cfg, STATS_FILE)
    kgraph.snapshot_save(kb, snapshot_path)
    stats = kgraph.graph_stats(kb)
    _write_json(stats_path, stats)
    return BuildResult(snapshot_path=snapshot_path, stats_path=stats_path, stats=stats)


# --- shared dataset assembly -------------------------------------------------------

@dataclass
class Dataset:
    kb: kgraph.KnowledgeBase
    adj: object
    scaled_features: np.ndarray
    targets: features.TargetVector
    masks: features.SplitMasks
    fingerprint: dict


def load_dataset(cfg: RunConfig) -> Dataset:
    snapshot_path = _out(cfg, SNAPSHOT_FILE)
    if not os.path.exists(snapshot_path):
        raise MissingInput(f"snapshot not found: {snapshot_path} (run build first)")
    kb = kgraph.snapshot_load(snapshot_path)
    adj = adjacency_from_kb(kb)
    masks = features.make_splits(kb.n_nodes, cfg.seed)
    raw = features.extract_features(kb)
    scaled, _ = features.scale_features(raw, masks.train_mask, clip=cfg.features.clip)
    targets = features.build_targets(kb, masks.train_mask, clip=cfg.features.clip)
    fingerprint = {
        "nodes": kb.n_nodes,
        "arcs": kb.n_arcs,
        "seed": cfg.seed,
        "split": list(masks.sizes()),
    }
    return Dataset(
        kb=kb, adj=adj, scaled_features=scaled, targets=targets, masks=masks,
        fingerprint=fingerprint,
    )


def _model_config(cfg: RunConfig, architecture: str) -> nn_model.ModelConfig:
    return nn_model.ModelConfig(
        architecture=architecture,
        input_dim=len(features.FEATURE_COLUMNS),
        hidden_dim=cfg.model.hidden_dim,
        layers=cfg.model.layers,
        cheb_order=cfg.model.cheb_order,
        heads=cfg.model.heads,
        pe_dim=cfg.model.pe_dim,
        seed=cfg.seed,
        cheb_exact_lambda_max=cfg.model.cheb_exact_lambda_max,
    )


def _train_config(cfg: RunConfig) -> training.TrainConfig:
    t = cfg.training
    return training.TrainConfig(
        lr=t.lr,
        weight_decay=t.weight_decay,
        clip_norm=t.clip_norm,
        plateau_factor=t.plateau_factor,
        plateau_patience=t.plateau_patience,
        min_lr=t.min_lr,
        early_stop_patience=t.early_stop_patience,
        max_epochs=t.max_epochs,
    )


# --- train ----------------------------------------------------------------------

@dataclass
class TrainResultEntry:
    architecture: str
    epochs_run: int
    best_epoch: int
    best_val_loss: float
    stopped_early: bool
    checkpoint_path: str
    log_path: str


def run_train(cfg: RunConfig, architecture: str = "all") -> list[TrainResultEntry]:
    names = list(nn_model.ARCHITECTURES) if architecture == "all" else [architecture]
    for name in names:
        if name not in nn_model.ARCHITECTURES:
            raise ValueError(f"unknown architecture {name!r}")
    dataset = load_dataset(cfg)
    os.makedirs(_out(cfg, CHECKPOINT_DIR), exist_ok=True)
    os.makedirs(_out(cfg, LOG_DIR), exist_ok=True)

    entries = []
    for name in names:
        model = nn_model.init_parameters(_model_config(cfg, name))
        try:
            state, logs = training.train(
                model,
                dataset.scaled_features,
                dataset.targets.scaled(),
                dataset.masks,
                dataset.adj,
                _train_config(cfg),
            )
        except DivergenceDetected as exc:
            exc.architecture = name
            raise
        checkpoint_path = _out(cfg, CHECKPOINT_DIR, f"{name}.json")
        log_path = _out(cfg, LOG_DIR, f"{name}_epochs.csv")
        nn_model.save_checkpoint(state.model, checkpoint_path)
        training.write_epoch_log(logs, log_path)
        entries.append(
            TrainResultEntry(
                architecture=name,
                epochs_run=len(logs),
                best_epoch=state.best_epoch,
                best_val_loss=state.best_val_loss,
                stopped_early=state.stopped_early,
                checkpoint_path=checkpoint_path,
                log_path=log_path,
            )
        )
    return entries


# --- evaluate -------------------------------------------------------------------

@dataclass
class EvaluateResult:
    comparison: evaluation.ComparisonReport
    artifact_paths: list[str]
    table: str


def run_evaluate(cfg: RunConfig) -> EvaluateResult:
    dataset = load_dataset(cfg)
    scaled_targets = dataset.targets.scaled()
    original_targets = np.stack(
        [dataset.targets.rtt_raw, dataset.targets.loss_raw], axis=1
    )
    reports = []
    for name in nn_model.ARCHITECTURES:
        checkpoint_path = _out(cfg, CHECKPOINT_DIR, f"{name}.json")
        log_path = _out(cfg, LOG_DIR, f"{name}_epochs.csv")
        for path in (checkpoint_path, log_path):
            if not os.path.exists(path):
                raise MissingInput(f"missing artifact for {name}: {path}")
        model = nn_model.load_checkpoint(checkpoint_path)
        logs = training.read_epoch_log(log_path)
        pred = nn_model.predict(model, dataset.scaled_features, dataset.adj)
        reports.append(
            evaluation.build_metric_report(
                architecture=name,
                scaled_targets=scaled_targets,
                scaled_pred=pred,
                original_targets=original_targets,
                original_pred=dataset.targets.to_original_units(pred),
                mask=dataset.masks.test_mask,
                logs=logs,
                parameter_count=model.parameter_count,
                fingerprint=dataset.fingerprint,
            )
        )
    comparison = evaluation.compare_models(reports, config_digest=cfg.digest())
    paths = report.render_report(comparison, _out(cfg, REPORT_DIR))
    return EvaluateResult(
        comparison=comparison,
        artifact_paths=paths,
        table=report.ranking_table(comparison),
    )


# --- qoe ------------------------------------------------------------------------

@dataclass
class QoeResult:
    csv_path: str
    rows: int
    nodes: int
    architecture: str


def run_qoe(cfg: RunConfig, architecture: str) -> QoeResult:
    if architecture not in nn_model.ARCHITECTURES:
        raise ValueError(f"unknown architecture {architecture!r}")
    checkpoint_path = _out(cfg, CHECKPOINT_DIR, f"{architecture}.json")
    if not os.path.exists(checkpoint_path):
        raise MissingInput(f"missing checkpoint: {checkpoint_path}")
    dataset = load_dataset(cfg)
    model = nn_model.load_checkpoint(checkpoint_path)
    pred = nn_model.predict(model, dataset.scaled_features, dataset.adj)
    original = dataset.targets.to_original_units(pred)

    ceilings = qoe.ImpairmentCeilings(
        rtt_ms=cfg.qoe.rtt_ceiling_ms,
        loss_pct=cfg.qoe.loss_ceiling_pct,
        jitter_ms=cfg.qoe.jitter_ceiling_ms,
    )
    profiles = dataset.kb.app_profiles
    estimates = []
    test_nodes = np.nonzero(dataset.masks.test_mask)[0]
    for node_index in test_nodes.tolist():
        rtt_ms = max(float(original[node_index, 0]), 0.0)
        loss_pct = float(np.clip(original[node_index, 1], 0.0, 100.0))
        jitter_ms = dataset.kb.state[node_index].jitter
        impairments = qoe.normalize_impairments(rtt_ms, loss_pct, jitter_ms, ceilings)
        for profile in profiles:
            estimates.append(qoe.estimate_qoe(profile, impairments, node_index=node_index))

    csv_path = _out(cfg, QOE_FILE)
    qoe.write_qoe_csv(estimates, csv_path, include_mos=cfg.qoe.mos)
    return QoeResult(
        csv_path=csv_path,
        rows=len(estimates),
        nodes=int(test_nodes.size),
        architecture=architecture,
    )


# --- report re-rendering -----------------------------------------------------------

@dataclass
class ReportResult:
    artifact_paths: list[str]
    table: str


def _comparison_from_dict(doc: dict) -> evaluation.ComparisonReport:
    reports = []
    for entry in doc["reports"]:
        per_target = {
            target: {
                space: evaluation.MetricSet(**ms) for space, ms in spaces.items()
            }
            for target, spaces in entry["per_target"].items()
        }
        reports.append(
            evaluation.MetricReport(
                architecture=entry["architecture"],
                scaled=evaluation.MetricSet(**entry["scaled"]),
                original=evaluation.MetricSet(**entry["original"]),
                per_target=per_target,
                epochs_to_converge=entry["epochs_to_converge"],
                parameter_count=entry["parameter_count"],
                fingerprint=entry["fingerprint"],
            )
        )
    return evaluation.ComparisonReport(
        reports=reports,
        fingerprint=doc["fingerprint"],
        config_digest=doc["config_digest"],
    )


def run_report(cfg: RunConfig) -> ReportResult:
    import json

    comparison_path = _out(cfg, REPORT_DIR, "comparison.json")
    if not os.path.exists(comparison_path):
        raise MissingInput(f"comparison not found: {comparison_path} (run evaluate first)")
    with open(comparison_path) as fp:
        comparison = _comparison_from_dict(json.load(fp))
    paths = report.render_report(comparison, _out(cfg, REPORT_DIR))
    return ReportResult(artifact_paths=paths, table=report.ranking_table(comparison))
