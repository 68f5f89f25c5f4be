"""Comparison metrics over the test mask and the cross-architecture report.

Metrics pool both targets (RTT, loss) into a single score per model; they
are computed in the transformed-scaled space the models are trained in and
again after back-transforming to original units (ms, percent), with both
labeled. Per-target breakdowns are emitted alongside.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyLog, EmptyMask, FingerprintMismatch, ZeroVariance

HUBER_DELTA = 1.0


def _masked_values(y: np.ndarray, y_hat: np.ndarray, mask: np.ndarray):
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if y.shape != y_hat.shape:
        raise ValueError(f"shape mismatch: {y.shape} vs {y_hat.shape}")
    selected_y = y[mask].ravel()
    selected_hat = y_hat[mask].ravel()
    if selected_y.size == 0:
        raise EmptyMask("metric requested over an empty mask")
    return selected_y, selected_hat


def r2_score(y, y_hat, mask) -> float:
    """1 - SS_res/SS_tot over all masked entries pooled."""
    yv, hv = _masked_values(y, y_hat, mask)
    if yv.size < 2:
        raise EmptyMask("r2 needs at least 2 masked values")
    ss_res = float(((yv - hv) ** 2).sum())
    ss_tot = float(((yv - yv.mean()) ** 2).sum())
    if ss_tot == 0.0:
        raise ZeroVariance("targets are constant over the mask")
    return 1.0 - ss_res / ss_tot


def mae(y, y_hat, mask) -> float:
    yv, hv = _masked_values(y, y_hat, mask)
    return float(np.abs(yv - hv).mean())


def rmse(y, y_hat, mask) -> float:
    yv, hv = _masked_values(y, y_hat, mask)
    return float(np.sqrt(((yv - hv) ** 2).mean()))


def huber_loss(y, y_hat, mask, delta: float = HUBER_DELTA) -> float:
    """Mean of 0.5 r^2 inside |r| <= delta, delta(|r| - delta/2) outside."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    yv, hv = _masked_values(y, y_hat, mask)
    r = np.abs(yv - hv)
    quadratic = 0.5 * r * r
    linear = delta * (r - 0.5 * delta)
    return float(np.where(r <= delta, quadratic, linear).mean())


def epochs_to_converge(logs) -> int:
    """1-based epoch of minimal validation loss; earliest wins ties."""
    if not logs:
        raise EmptyLog("no epochs logged")
    losses = [entry.val_loss for entry in logs]
    return logs[int(np.argmin(losses))].epoch


@dataclass(frozen=True)
class MetricSet:
    r2: float
    mae: float
    rmse: float
    huber: float

    def as_dict(self) -> dict:
        return {"r2": self.r2, "mae": self.mae, "rmse": self.rmse, "huber": self.huber}


def metric_set(y, y_hat, mask, delta: float = HUBER_DELTA) -> MetricSet:
    return MetricSet(
        r2=r2_score(y, y_hat, mask),
        mae=mae(y, y_hat, mask),
        rmse=rmse(y, y_hat, mask),
        huber=huber_loss(y, y_hat, mask, delta),
    )


@dataclass
class MetricReport:
    architecture: str
    scaled: MetricSet
    original: MetricSet
    per_target: dict[str, dict[str, MetricSet]]
    epochs_to_converge: int
    parameter_count: int
    fingerprint: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "architecture": self.architecture,
            "scaled": self.scaled.as_dict(),
            "original": self.original.as_dict(),
            "per_target": {
                target: {space: ms.as_dict() for space, ms in spaces.items()}
                for target, spaces in self.per_target.items()
            },
            "epochs_to_converge": self.epochs_to_converge,
            "parameter_count": self.parameter_count,
            "fingerprint": self.fingerprint,
        }


def build_metric_report(
    architecture: str,
    scaled_targets: np.ndarray,
    scaled_pred: np.ndarray,
    original_targets: np.ndarray,
    original_pred: np.ndarray,
    mask: np.ndarray,
    logs,
    parameter_count: int,
    fingerprint: dict,
) -> MetricReport:
    per_target: dict[str, dict[str, MetricSet]] = {}
    for j, target in enumerate(("rtt", "loss")):
        per_target[target] = {
            "scaled": metric_set(scaled_targets[:, j], scaled_pred[:, j], mask),
            "original": metric_set(original_targets[:, j], original_pred[:, j], mask),
        }
    return MetricReport(
        architecture=architecture,
        scaled=metric_set(scaled_targets, scaled_pred, mask),
        original=metric_set(original_targets, original_pred, mask),
        per_target=per_target,
        epochs_to_converge=epochs_to_converge(logs),
        parameter_count=parameter_count,
        fingerprint=fingerprint,
    )


@dataclass
class ComparisonReport:
    reports: list[MetricReport]
    fingerprint: dict
    config_digest: str

    def ranking(self) -> list[str]:
        return [r.architecture for r in self.reports]

    def tradeoff(self) -> list[tuple[str, float, int]]:
        """(architecture, scaled r2, epochs_to_converge) pairs."""
        return [(r.architecture, r.scaled.r2, r.epochs_to_converge) for r in self.reports]

    def as_dict(self) -> dict:
        return {
            "fingerprint": self.fingerprint,
            "config_digest": self.config_digest,
            "ranking": self.ranking(),
            "tradeoff": [
                {"architecture": a, "r2": r2, "epochs_to_converge": e}
                for a, r2, e in self.tradeoff()
            ],
            "reports": [r.as_dict() for r in self.reports],
        }


def compare_models(reports: list[MetricReport], config_digest: str = "") -> ComparisonReport:
    """Rank by scaled pooled R^2 descending; names break ties."""
    if len(reports) < 2:
        raise ValueError("need at least 2 reports to compare")
    fingerprint = reports[0].fingerprint
    for report in reports[1:]:
        if report.fingerprint != fingerprint:
            raise FingerprintMismatch(
                f"{report.architecture}: fingerprint {report.fingerprint} != {fingerprint}"
            )
    ordered = sorted(reports, key=lambda r: (-r.scaled.r2, r.architecture))
    return ComparisonReport(reports=ordered, fingerprint=fingerprint, config_digest=config_digest)
