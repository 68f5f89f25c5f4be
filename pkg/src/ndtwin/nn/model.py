"""Model configuration, parameter initialization, forward/backward passes.

A model is a stack of `layers` graph layers of one architecture followed
by a linear 2-output head (RTT and loss predicted jointly). Architectures
whose layers require equal input/output widths (resgated, transformer) get
a linear input embedding; for the transformer the embedding also consumes
the Laplacian positional encoding appended to the raw features.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import CorruptSnapshot, InvalidConfig, ShapeMismatch, StaleTape
from . import autodiff as ad
from .autodiff import Tensor
from .layers import cheb_layer, identity, laplacian_pe, resgated_layer, sage_layer, transformer_layer
from .sparse import CsrAdjacency

ARCHITECTURES = ("sage", "cheb", "resgated", "transformer")

CHECKPOINT_FORMAT = "ndtwin-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    architecture: str
    input_dim: int = 9
    hidden_dim: int = 64
    layers: int = 2
    output_dim: int = 2
    cheb_order: int = 3
    heads: int = 4
    pe_dim: int = 8
    seed: int = 0
    cheb_exact_lambda_max: bool = False

    def validate(self) -> None:
        if self.architecture not in ARCHITECTURES:
            raise InvalidConfig(f"unknown architecture {self.architecture!r}")
        for name in ("input_dim", "hidden_dim", "layers", "output_dim"):
            if getattr(self, name) < 1:
                raise InvalidConfig(f"{name} must be positive")
        if self.cheb_order < 1:
            raise InvalidConfig("cheb_order must be >= 1")
        if self.architecture == "transformer":
            if self.heads < 1 or self.hidden_dim % self.heads != 0:
                raise InvalidConfig(
                    f"heads ({self.heads}) must divide hidden_dim ({self.hidden_dim})"
                )
            if self.pe_dim < 0:
                raise InvalidConfig("pe_dim must be >= 0")


def parameter_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Canonical parameter name -> shape map; also fixes the init draw order."""
    cfg.validate()
    shapes: dict[str, tuple[int, ...]] = {}
    hid = cfg.hidden_dim
    if cfg.architecture == "sage":
        d_in = cfg.input_dim
        for i in range(cfg.layers):
            shapes[f"layer{i}.w_self"] = (d_in, hid)
            shapes[f"layer{i}.w_neigh"] = (d_in, hid)
            shapes[f"layer{i}.bias"] = (hid,)
            d_in = hid
    elif cfg.architecture == "cheb":
        d_in = cfg.input_dim
        for i in range(cfg.layers):
            for k in range(cfg.cheb_order):
                shapes[f"layer{i}.theta{k}"] = (d_in, hid)
            d_in = hid
    elif cfg.architecture == "resgated":
        shapes["embed.weight"] = (cfg.input_dim, hid)
        shapes["embed.bias"] = (hid,)
        for i in range(cfg.layers):
            for w in ("w1", "w2", "w3", "w4"):
                shapes[f"layer{i}.{w}"] = (hid, hid)
    else:  # transformer
        shapes["embed.weight"] = (cfg.input_dim + cfg.pe_dim, hid)
        shapes["embed.bias"] = (hid,)
        d_head = hid // cfg.heads
        for i in range(cfg.layers):
            for h in range(cfg.heads):
                shapes[f"layer{i}.head{h}.w_q"] = (hid, d_head)
                shapes[f"layer{i}.head{h}.w_k"] = (hid, d_head)
                shapes[f"layer{i}.head{h}.w_v"] = (hid, d_head)
            shapes[f"layer{i}.w_out"] = (hid, hid)
    shapes["head.weight"] = (hid, cfg.output_dim)
    shapes["head.bias"] = (cfg.output_dim,)
    return shapes


@dataclass
class GnnModel:
    config: ModelConfig
    params: dict[str, np.ndarray]
    parameter_count: int
    _tape: tuple | None = field(default=None, repr=False)

    def copy_params(self) -> dict[str, np.ndarray]:
        return {name: value.copy() for name, value in self.params.items()}

    def set_params(self, params: dict[str, np.ndarray]) -> None:
        for name, value in params.items():
            self.params[name] = value.copy()


def init_parameters(cfg: ModelConfig) -> GnnModel:
    """Uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)) weights, zero biases.

    Draws follow the canonical parameter order, so a seed fully determines
    every parameter bitwise.
    """
    shapes = parameter_shapes(cfg)
    rng = np.random.default_rng(cfg.seed)
    params: dict[str, np.ndarray] = {}
    for name, shape in shapes.items():
        if name.endswith("bias"):
            params[name] = np.zeros(shape, dtype=np.float64)
        else:
            bound = np.sqrt(1.0 / shape[0])
            params[name] = rng.uniform(-bound, bound, size=shape)
    count = sum(v.size for v in params.values())
    return GnnModel(config=cfg, params=params, parameter_count=count)


def _forward_graph(model: GnnModel, x: np.ndarray, adj: CsrAdjacency,
                   tensors: dict[str, Tensor]) -> Tensor:
    cfg = model.config
    p = tensors
    if cfg.architecture == "transformer" and cfg.pe_dim > 0:
        x = np.concatenate([x, laplacian_pe(adj, cfg.pe_dim)], axis=1)
    h = ad.constant(x)
    if cfg.architecture == "sage":
        for i in range(cfg.layers):
            h = sage_layer(
                h, adj, p[f"layer{i}.w_self"], p[f"layer{i}.w_neigh"], p[f"layer{i}.bias"]
            )
    elif cfg.architecture == "cheb":
        lambda_max = adj.exact_lambda_max() if cfg.cheb_exact_lambda_max else 2.0
        laplacian = adj.rescaled_laplacian(lambda_max)
        for i in range(cfg.layers):
            thetas = [p[f"layer{i}.theta{k}"] for k in range(cfg.cheb_order)]
            h = cheb_layer(h, laplacian, thetas)
    elif cfg.architecture == "resgated":
        h = ad.relu(ad.add_bias(ad.matmul(h, p["embed.weight"]), p["embed.bias"]))
        for i in range(cfg.layers):
            h = resgated_layer(
                h, adj, p[f"layer{i}.w1"], p[f"layer{i}.w2"], p[f"layer{i}.w3"], p[f"layer{i}.w4"]
            )
    else:
        h = ad.relu(ad.add_bias(ad.matmul(h, p["embed.weight"]), p["embed.bias"]))
        for i in range(cfg.layers):
            w_q = [p[f"layer{i}.head{j}.w_q"] for j in range(cfg.heads)]
            w_k = [p[f"layer{i}.head{j}.w_k"] for j in range(cfg.heads)]
            w_v = [p[f"layer{i}.head{j}.w_v"] for j in range(cfg.heads)]
            h = transformer_layer(h, adj, w_q, w_k, w_v, p[f"layer{i}.w_out"])
    return ad.add_bias(ad.matmul(h, p["head.weight"]), p["head.bias"])


def model_forward(model: GnnModel, x: np.ndarray, adj: CsrAdjacency) -> np.ndarray:
    """N x output_dim predictions; records the tape for one backward pass."""
    x = np.asarray(x, dtype=np.float64)
    expected = model.config.input_dim
    if x.ndim != 2 or x.shape[1] != expected:
        raise ShapeMismatch(f"features are {x.shape}, expected (N, {expected})")
    if x.shape[0] != adj.n:
        raise ShapeMismatch(f"{x.shape[0]} feature rows for a {adj.n}-node graph")
    tensors = {name: ad.parameter(value) for name, value in model.params.items()}
    out = _forward_graph(model, x, adj, tensors)
    model._tape = (tensors, out)
    return out.data


def predict(model: GnnModel, x: np.ndarray, adj: CsrAdjacency) -> np.ndarray:
    """Forward pass for inference only; leaves no tape behind."""
    out = model_forward(model, x, adj)
    model._tape = None
    return out


def model_backward(model: GnnModel, upstream: np.ndarray) -> dict[str, np.ndarray]:
    """Exact reverse-mode gradients for every parameter; consumes the tape."""
    if model._tape is None:
        raise StaleTape("model_backward called without a matching model_forward")
    tensors, out = model._tape
    model._tape = None
    ad.backward(out, np.asarray(upstream, dtype=np.float64))
    grads: dict[str, np.ndarray] = {}
    for name, tensor in tensors.items():
        grads[name] = (
            tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
        )
    return grads


# --- checkpoints ----------------------------------------------------------------

def save_checkpoint(model: GnnModel, path) -> None:
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": asdict(model.config),
        "seed": model.config.seed,
        "parameter_count": model.parameter_count,
        "parameters": {name: value.tolist() for name, value in model.params.items()},
    }
    with open(path, "w") as fp:
        json.dump(doc, fp, separators=(",", ":"))
        fp.write("\n")


def load_checkpoint(path) -> GnnModel:
    try:
        with open(path) as fp:
            doc = json.load(fp)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptSnapshot(f"{path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != CHECKPOINT_FORMAT:
        raise CorruptSnapshot(f"{path}: not a model checkpoint")
    try:
        cfg = ModelConfig(**doc["config"])
        raw = doc["parameters"]
    except (KeyError, TypeError) as exc:
        raise CorruptSnapshot(f"{path}: {exc}") from exc
    shapes = parameter_shapes(cfg)
    params: dict[str, np.ndarray] = {}
    for name, shape in shapes.items():
        if name not in raw:
            raise CorruptSnapshot(f"{path}: missing parameter {name}")
        value = np.asarray(raw[name], dtype=np.float64)
        if value.shape != shape:
            raise ShapeMismatch(f"{name}: stored {value.shape}, config implies {shape}")
        params[name] = value
    count = sum(v.size for v in params.values())
    return GnnModel(config=cfg, params=params, parameter_count=count)
