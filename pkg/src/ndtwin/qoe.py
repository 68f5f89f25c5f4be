"""Per-application QoE estimation from predicted RTT/loss and measured jitter.

Each application carries a sensitivity profile: three nonnegative weights
(RTT, loss, jitter) summing to 1. Raw impairments are first normalized to
[0, 1] against configurable saturation ceilings, then QoE is computed as
1 minus the weighted impairment sum, so QoE lives on [0, 1] (1 = perfect).
A MOS-style view is a display transform: mos = 1 + 4 * qoe.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .errors import InvalidProfile, NegativeInput

WEIGHT_SUM_TOL = 1e-9


@dataclass(frozen=True)
class AppProfile:
    """Application sensitivity profile (weights over RTT, loss, jitter)."""

    name: str
    w_rtt: float
    w_loss: float
    w_jitter: float

    def validate(self) -> None:
        if min(self.w_rtt, self.w_loss, self.w_jitter) < 0:
            raise InvalidProfile(f"{self.name}: negative weight")
        total = self.w_rtt + self.w_loss + self.w_jitter
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise InvalidProfile(f"{self.name}: weights sum to {total}, expected 1.0")


@dataclass(frozen=True)
class ImpairmentCeilings:
    """Saturation points beyond which any application is unusable."""

    rtt_ms: float = 400.0
    loss_pct: float = 10.0
    jitter_ms: float = 100.0


@dataclass(frozen=True)
class QoeEstimate:
    node_index: int
    app: str
    qoe: float
    n_rtt: float
    n_loss: float
    n_jitter: float


_BUILTIN = (
    AppProfile("web_browsing", 0.5, 0.3, 0.2),
    AppProfile("video_streaming", 0.2, 0.5, 0.3),
    AppProfile("voip", 0.3, 0.2, 0.5),
    AppProfile("gaming", 0.6, 0.2, 0.2),
    AppProfile("file_transfer", 0.1, 0.8, 0.1),
)


def builtin_profiles() -> list[AppProfile]:
    """The five built-in application sensitivity profiles."""
    return list(_BUILTIN)


def normalize_impairments(
    rtt_ms: float,
    loss_pct: float,
    jitter_ms: float,
    ceilings: ImpairmentCeilings = ImpairmentCeilings(),
) -> tuple[float, float, float]:
    """Map raw impairments to [0, 1] fractions of their ceilings."""
    if min(rtt_ms, loss_pct, jitter_ms) < 0:
        raise NegativeInput(
            f"impairments must be nonnegative, got "
            f"({rtt_ms}, {loss_pct}, {jitter_ms})"
        )
    return (
        min(rtt_ms / ceilings.rtt_ms, 1.0),
        min(loss_pct / ceilings.loss_pct, 1.0),
        min(jitter_ms / ceilings.jitter_ms, 1.0),
    )


def estimate_qoe(
    profile: AppProfile,
    impairments: tuple[float, float, float],
    node_index: int = 0,
) -> QoeEstimate:
    """QoE = 1 - weighted impairment sum; monotone nonincreasing per axis."""
    profile.validate()
    n_rtt, n_loss, n_jitter = impairments
    qoe = 1.0 - (
        profile.w_rtt * n_rtt + profile.w_loss * n_loss + profile.w_jitter * n_jitter
    )
    return QoeEstimate(
        node_index=node_index,
        app=profile.name,
        qoe=qoe,
        n_rtt=n_rtt,
        n_loss=n_loss,
        n_jitter=n_jitter,
    )


QOE_CSV_FIELDS = ("node_index", "app", "n_rtt", "n_loss", "n_jitter", "qoe")


def write_qoe_csv(estimates: list[QoeEstimate], path, include_mos: bool = False) -> None:
    """One row per (node, app); optional MOS column (1 + 4*qoe)."""
    fields = QOE_CSV_FIELDS + (("mos",) if include_mos else ())
    with open(path, "w", newline="") as fp:
        writer = csv.writer(fp)
        writer.writerow(fields)
        for est in estimates:
            row = [
                est.node_index,
                est.app,
                repr(est.n_rtt),
                repr(est.n_loss),
                repr(est.n_jitter),
                repr(est.qoe),
            ]
            if include_mos:
                row.append(repr(1.0 + 4.0 * est.qoe))
            writer.writerow(row)
