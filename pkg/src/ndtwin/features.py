"""Model-ready inputs: 9-dim node features, transformed targets, split masks.

Targets use variance-stabilizing transforms (log1p for RTT so 0 is
representable, sqrt for loss percent), then a robust scaler built from the
median and the median absolute deviation (MAD). The MAD is multiplied by
1.4826 so the scale is comparable to a standard deviation under normality;
scaled values are clipped to +/- `clip` (default 3). Scalers are always
fitted on training-mask rows only.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, IncompleteNode, NegativeInput, OutOfRange, TooFewNodes

MAD_CONSISTENCY = 1.4826
DEFAULT_CLIP = 3.0

# Column order is fixed; row i corresponds to node_index i.
FEATURE_COLUMNS = (
    "avg_rtt",
    "jitter",
    "packet_loss",
    "asn",
    "latitude",
    "longitude",
    "measurement_count",
    "degree",
    "neighbor_count",
)


# --- target transforms ------------------------------------------------------

def transform_rtt(rtt_ms: float) -> float:
    """ln(1 + rtt); defined at 0, compresses the long RTT tail."""
    if rtt_ms < 0:
        raise NegativeInput(f"rtt must be >= 0, got {rtt_ms}")
    return float(np.log1p(rtt_ms))


def inverse_transform_rtt(x: float) -> float:
    return float(np.expm1(x))


def transform_loss(loss_pct: float) -> float:
    """sqrt of the loss percentage."""
    if not 0.0 <= loss_pct <= 100.0:
        raise OutOfRange(f"loss must be in [0, 100], got {loss_pct}")
    return float(np.sqrt(loss_pct))


def inverse_transform_loss(x: float) -> float:
    return float(x * x)


# --- robust scaler ----------------------------------------------------------

@dataclass(frozen=True)
class RobustScaler:
    """Median/MAD scaler with clipping.

    When mad == 0 (constant input) the scale degrades to 1 and the scaler
    only centers; clipping still applies.
    """

    median: float
    mad: float
    clip: float = DEFAULT_CLIP
    consistency_factor: float = MAD_CONSISTENCY

    @property
    def scale(self) -> float:
        return self.consistency_factor * self.mad if self.mad > 0 else 1.0

    def apply(self, x):
        y = (np.asarray(x, dtype=np.float64) - self.median) / self.scale
        return np.clip(y, -self.clip, self.clip)

    def invert(self, y):
        """Linear inverse; exact only for values that were not clipped."""
        return np.asarray(y, dtype=np.float64) * self.scale + self.median


def fit_robust_scaler(values, clip: float = DEFAULT_CLIP) -> RobustScaler:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise EmptyInput("cannot fit a scaler on an empty vector")
    if not np.all(np.isfinite(arr)):
        raise OutOfRange("scaler input contains non-finite values")
    med = float(np.median(arr))
    mad = float(np.median(np.abs(arr - med)))
    return RobustScaler(median=med, mad=mad, clip=clip)


# --- split masks -------------------------------------------------------------

TRAIN_FRACTION = 0.6
VAL_FRACTION = 0.2


@dataclass
class SplitMasks:
    train_mask: np.ndarray
    val_mask: np.ndarray
    test_mask: np.ndarray
    seed: int

    @property
    def n(self) -> int:
        return self.train_mask.shape[0]

    def sizes(self) -> tuple[int, int, int]:
        return (
            int(self.train_mask.sum()),
            int(self.val_mask.sum()),
            int(self.test_mask.sum()),
        )


def make_splits(n: int, seed: int) -> SplitMasks:
    """Seeded uniform shuffle, then 60/20/20 by floor with remainder to test."""
    if n < 5:
        raise TooFewNodes(f"need at least 5 nodes to split, got {n}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_train = int(np.floor(TRAIN_FRACTION * n))
    n_val = int(np.floor(VAL_FRACTION * n))
    masks = [np.zeros(n, dtype=bool) for _ in range(3)]
    masks[0][perm[:n_train]] = True
    masks[1][perm[n_train:n_train + n_val]] = True
    masks[2][perm[n_train + n_val:]] = True
    return SplitMasks(train_mask=masks[0], val_mask=masks[1], test_mask=masks[2], seed=seed)


def verify_masks(masks: SplitMasks) -> str | None:
    """Return None when masks are valid, else the first violation found."""
    n = masks.n
    stacked = (
        masks.train_mask.astype(int) + masks.val_mask.astype(int) + masks.test_mask.astype(int)
    )
    overlap = np.nonzero(stacked > 1)[0]
    if overlap.size:
        return f"overlap: node {int(overlap[0])} in multiple splits"
    uncovered = np.nonzero(stacked == 0)[0]
    if uncovered.size:
        return f"uncovered: node {int(uncovered[0])} in no split"
    n_train = int(np.floor(TRAIN_FRACTION * n))
    n_val = int(np.floor(VAL_FRACTION * n))
    expected = (n_train, n_val, n - n_train - n_val)
    if masks.sizes() != expected:
        return f"size: got {masks.sizes()}, expected {expected}"
    return None


# --- feature extraction and scaling ------------------------------------------

def extract_features(kb) -> np.ndarray:
    """Raw (unscaled) N x 9 matrix in FEATURE_COLUMNS order.

    Missing required values are an error rather than being imputed.
    """
    n = len(kb.nodes)
    out = np.empty((n, len(FEATURE_COLUMNS)), dtype=np.float64)
    for node, state in zip(kb.nodes, kb.state):
        row = (
            state.avg_rtt,
            state.jitter,
            state.packet_loss,
            node.asn,
            node.latitude,
            node.longitude,
            node.measurement_count,
            node.degree,
            node.neighbor_count,
        )
        for j, value in enumerate(row):
            if value is None or not np.isfinite(value):
                raise IncompleteNode(
                    f"node {node.node_index} missing feature '{FEATURE_COLUMNS[j]}'"
                )
            out[node.node_index, j] = float(value)
    return out


@dataclass
class TargetVector:
    """Transformed + scaled targets and the scalers needed to invert them."""

    rtt_t: np.ndarray
    loss_t: np.ndarray
    rtt_scaler: RobustScaler
    loss_scaler: RobustScaler
    rtt_raw: np.ndarray
    loss_raw: np.ndarray

    def scaled(self) -> np.ndarray:
        """N x 2 matrix (RTT column first) fed to the models."""
        return np.stack([self.rtt_t, self.loss_t], axis=1)

    def to_original_units(self, scaled: np.ndarray) -> np.ndarray:
        """Back-transform model-space values to (ms, percent) columns."""
        rtt = np.expm1(self.rtt_scaler.invert(scaled[:, 0]))
        loss_sqrt = self.loss_scaler.invert(scaled[:, 1])
        return np.stack([rtt, loss_sqrt * loss_sqrt], axis=1)


def build_targets(kb, train_mask: np.ndarray, clip: float = DEFAULT_CLIP) -> TargetVector:
    """Transform per-node RTT/loss and robust-scale on training rows only."""
    rtt_raw = np.array([s.avg_rtt for s in kb.state], dtype=np.float64)
    loss_raw = np.array([s.packet_loss for s in kb.state], dtype=np.float64)
    rtt_log = np.log1p(rtt_raw)
    loss_sqrt = np.sqrt(loss_raw)
    rtt_scaler = fit_robust_scaler(rtt_log[train_mask], clip=clip)
    loss_scaler = fit_robust_scaler(loss_sqrt[train_mask], clip=clip)
    return TargetVector(
        rtt_t=rtt_scaler.apply(rtt_log),
        loss_t=loss_scaler.apply(loss_sqrt),
        rtt_scaler=rtt_scaler,
        loss_scaler=loss_scaler,
        rtt_raw=rtt_raw,
        loss_raw=loss_raw,
    )


def scale_features(
    raw: np.ndarray, train_mask: np.ndarray, clip: float = DEFAULT_CLIP
) -> tuple[np.ndarray, list[RobustScaler]]:
    """Per-column robust scaling, fitted on training rows only."""
    scalers = [fit_robust_scaler(raw[train_mask, j], clip=clip) for j in range(raw.shape[1])]
    scaled = np.stack([scalers[j].apply(raw[:, j]) for j in range(raw.shape[1])], axis=1)
    if not np.all(np.isfinite(scaled)):
        raise OutOfRange("scaled feature matrix contains non-finite entries")
    return scaled, scalers


# --- CSV export ---------------------------------------------------------------

def write_features_csv(raw: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fp:
        writer = csv.writer(fp)
        writer.writerow(FEATURE_COLUMNS)
        for row in raw:
            writer.writerow([repr(float(v)) for v in row])


TARGET_COLUMNS = ("node_index", "rtt_transformed", "loss_transformed", "rtt_ms", "loss_pct")


def write_targets_csv(targets: TargetVector, path) -> None:
    """Transformed-scaled targets next to their original-unit values."""
    with open(path, "w", newline="") as fp:
        writer = csv.writer(fp)
        writer.writerow(TARGET_COLUMNS)
        for i in range(targets.rtt_t.shape[0]):
            writer.writerow(
                (
                    i,
                    repr(float(targets.rtt_t[i])),
                    repr(float(targets.loss_t[i])),
                    repr(float(targets.rtt_raw[i])),
                    repr(float(targets.loss_raw[i])),
                )
            )


def write_masks_csv(masks: SplitMasks, path) -> None:
    labels = np.empty(masks.n, dtype=object)
    labels[masks.train_mask] = "train"
    labels[masks.val_mask] = "val"
    labels[masks.test_mask] = "test"
    with open(path, "w", newline="") as fp:
        writer = csv.writer(fp)
        writer.writerow(("node_index", "split", "seed"))
        for i in range(masks.n):
            writer.writerow((i, labels[i], masks.seed))
