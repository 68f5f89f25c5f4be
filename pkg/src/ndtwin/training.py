"""Training loop: masked MSE, AdamW, plateau LR decay, clipping, early stop.

Per epoch: forward, masked train MSE, backward, global-norm gradient clip,
AdamW step, masked validation MSE on the updated parameters, scheduler
step, early-stop check. An improvement means the validation loss dropped
by more than 1e-6 below the best seen, which keeps float noise from
resetting the patience counters. The parameters from the best validation
epoch are restored when training ends, so best_epoch doubles as the
epochs-to-converge measure.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DivergenceDetected,
    EmptyMask,
    InvalidConfig,
    NonFiniteGradient,
    ShapeMismatch,
    TooFewEpochs,
)
from .nn.model import GnnModel, model_backward, model_forward, predict
from .nn.sparse import CsrAdjacency

IMPROVEMENT_TOL = 1e-6


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    weight_decay: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float = 1.0
    plateau_factor: float = 0.5
    plateau_patience: int = 10
    min_lr: float = 1e-5
    early_stop_patience: int = 30
    max_epochs: int = 500

    def validate(self) -> None:
        if not 0.0 < self.plateau_factor < 1.0:
            raise InvalidConfig("plateau_factor must be in (0, 1)")
        if self.plateau_patience < 1 or self.early_stop_patience < 1:
            raise InvalidConfig("patience values must be >= 1")
        if not self.lr > self.min_lr > 0.0:
            raise InvalidConfig("need lr > min_lr > 0")
        if self.max_epochs < 1:
            raise InvalidConfig("max_epochs must be >= 1")


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    val_loss: float
    lr: float
    grad_norm_preclip: float


@dataclass
class TrainState:
    model: GnnModel
    moments_m: dict[str, np.ndarray]
    moments_v: dict[str, np.ndarray]
    best_val_loss: float
    best_epoch: int
    epochs_since_improvement: int
    stopped_early: bool


def mse_loss(pred: np.ndarray, target: np.ndarray, mask: np.ndarray):
    """Mean squared error over masked rows and both targets, plus d/d(pred)."""
    count = int(mask.sum())
    if count == 0:
        raise EmptyMask("loss requested over an empty mask")
    diff = np.where(mask[:, None], pred - target, 0.0)
    denom = count * pred.shape[1]
    loss = float((diff * diff).sum() / denom)
    grad = 2.0 * diff / denom
    return loss, grad


def clip_gradients(grads: dict[str, np.ndarray], clip_norm: float):
    """Global L2 clipping across all parameters; returns the pre-clip norm."""
    total = 0.0
    for name in grads:
        g = grads[name]
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient(f"gradient for {name} is not finite")
        total += float((g * g).sum())
    norm = float(np.sqrt(total))
    if norm > clip_norm and norm > 0.0:
        factor = clip_norm / norm
        grads = {name: g * factor for name, g in grads.items()}
    return grads, norm


def adamw_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    m: dict[str, np.ndarray],
    v: dict[str, np.ndarray],
    t: int,
    lr: float,
    cfg: TrainConfig,
) -> None:
    """One decoupled-weight-decay Adam update, in place."""
    if t < 1:
        raise InvalidConfig("step index must be >= 1")
    bc1 = 1.0 - cfg.beta1 ** t
    bc2 = 1.0 - cfg.beta2 ** t
    for name in params:
        g = grads[name]
        if g.shape != params[name].shape:
            raise ShapeMismatch(
                f"gradient for {name} is {g.shape}, parameter is {params[name].shape}"
            )
        m[name] = cfg.beta1 * m[name] + (1.0 - cfg.beta1) * g
        v[name] = cfg.beta2 * v[name] + (1.0 - cfg.beta2) * (g * g)
        m_hat = m[name] / bc1
        v_hat = v[name] / bc2
        params[name] = params[name] - lr * (
            m_hat / (np.sqrt(v_hat) + cfg.eps)
        ) - lr * cfg.weight_decay * params[name]


class PlateauScheduler:
    """ReduceLROnPlateau: shrink lr after `patience` non-improving epochs."""

    def __init__(self, lr: float, factor: float, patience: int, min_lr: float):
        self.lr = lr
        self.factor = factor
        self.patience = patience
        self.min_lr = min_lr
        self.best = np.inf
        self.num_bad = 0

    def step(self, val_loss: float) -> float:
        if val_loss < self.best - IMPROVEMENT_TOL:
            self.best = val_loss
            self.num_bad = 0
        else:
            self.num_bad += 1
            if self.num_bad >= self.patience:
                self.lr = max(self.lr * self.factor, self.min_lr)
                self.num_bad = 0
        return self.lr


def train(
    model: GnnModel,
    features: np.ndarray,
    targets: np.ndarray,
    masks,
    adj: CsrAdjacency,
    cfg: TrainConfig,
) -> tuple[TrainState, list[EpochLog]]:
    cfg.validate()
    m = {name: np.zeros_like(p) for name, p in model.params.items()}
    v = {name: np.zeros_like(p) for name, p in model.params.items()}
    scheduler = PlateauScheduler(cfg.lr, cfg.plateau_factor, cfg.plateau_patience, cfg.min_lr)
    logs: list[EpochLog] = []
    best_val = np.inf
    best_epoch = 0
    best_params = model.copy_params()
    stale = 0
    stopped_early = False

    for epoch in range(1, cfg.max_epochs + 1):
        lr = scheduler.lr
        pred = model_forward(model, features, adj)
        train_loss, upstream = mse_loss(pred, targets, masks.train_mask)
        if not np.isfinite(train_loss):
            raise DivergenceDetected(
                f"training loss became non-finite at epoch {epoch}",
                architecture=model.config.architecture,
            )
        grads = model_backward(model, upstream)
        grads, grad_norm = clip_gradients(grads, cfg.clip_norm)
        adamw_step(model.params, grads, m, v, epoch, lr, cfg)

        val_pred = predict(model, features, adj)
        val_loss, _ = mse_loss(val_pred, targets, masks.val_mask)

        logs.append(EpochLog(epoch, train_loss, val_loss, lr, grad_norm))
        scheduler.step(val_loss)

        if val_loss < best_val - IMPROVEMENT_TOL:
            best_val = val_loss
            best_epoch = epoch
            best_params = model.copy_params()
            stale = 0
        else:
            stale += 1
            if stale >= cfg.early_stop_patience:
                stopped_early = True
                break

    model.set_params(best_params)
    return (
        TrainState(
            model=model,
            moments_m=m,
            moments_v=v,
            best_val_loss=float(best_val),
            best_epoch=best_epoch,
            epochs_since_improvement=stale,
            stopped_early=stopped_early,
        ),
        logs,
    )


# --- overfitting detection -------------------------------------------------------

@dataclass
class OverfitReport:
    flagged: bool
    onset_epoch: int | None
    window: int
    band: float


def detect_overfitting(
    logs: list[EpochLog], band: float = 0.05, window: int = 10
) -> OverfitReport:
    """Flag a run where validation left the best-so-far band while training
    loss kept falling.

    A window of `window` consecutive epochs is flagged when every val loss
    in it exceeds the running best by more than `band` (relative) and the
    train loss decreased across the window.
    """
    if len(logs) < window:
        raise TooFewEpochs(f"need at least {window} epochs, got {len(logs)}")
    best = np.inf
    bad = np.zeros(len(logs), dtype=bool)
    for i, entry in enumerate(logs):
        best = min(best, entry.val_loss)
        bad[i] = entry.val_loss > best * (1.0 + band)
    run = 0
    for i in range(len(logs)):
        run = run + 1 if bad[i] else 0
        if run >= window:
            start = i - window + 1
            if logs[i].train_loss < logs[start].train_loss:
                return OverfitReport(True, logs[start].epoch, window, band)
    return OverfitReport(False, None, window, band)


# --- epoch log persistence ---------------------------------------------------------

EPOCH_LOG_FIELDS = ("epoch", "train_loss", "val_loss", "lr", "grad_norm")


def write_epoch_log(logs: list[EpochLog], path) -> None:
    with open(path, "w", newline="") as fp:
        writer = csv.writer(fp)
        writer.writerow(EPOCH_LOG_FIELDS)
        for entry in logs:
            writer.writerow(
                (
                    entry.epoch,
                    repr(entry.train_loss),
                    repr(entry.val_loss),
                    repr(entry.lr),
                    repr(entry.grad_norm_preclip),
                )
            )


def read_epoch_log(path) -> list[EpochLog]:
    logs = []
    with open(path, newline="") as fp:
        for row in csv.DictReader(fp):
            logs.append(
                EpochLog(
                    epoch=int(row["epoch"]),
                    train_loss=float(row["train_loss"]),
                    val_loss=float(row["val_loss"]),
                    lr=float(row["lr"]),
                    grad_norm_preclip=float(row["grad_norm"]),
                )
            )
    return logs
