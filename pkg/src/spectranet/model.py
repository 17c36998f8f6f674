"""The fixed four-block classifier.

Pipeline: 1x1 embedding conv (linear) -> channel re-excitation gate ->
3x3 stride-2 conv + ReLU -> 3x3 stride-2 conv + ReLU -> global average
pool -> fully connected head. The gate can be disabled for ablations, in
which case its parameters do not exist at all (keeps the parameter
census honest). The embedding vector produced by the pooling stage is
what the margin loss operates on.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import ops
from .errors import ConfigError, ShapeError
from .ops import ConvKernel


@dataclass(frozen=True)
class NetworkConfig:
    input_hw: int = 176
    energy_channels: int = 11
    embed_channels: int = 16
    block2_channels: int = 12
    block3_channels: int = 12
    se_bottleneck: int = 4
    num_classes: int = 3
    num_virtual: int = 1
    se_enabled: bool = True

    def __post_init__(self):
        if self.se_bottleneck > self.embed_channels:
            raise ConfigError(
                f"se_bottleneck {self.se_bottleneck} must not exceed "
                f"embed_channels {self.embed_channels}"
            )
        if self.num_virtual not in (0, 1):
            raise ConfigError(f"num_virtual must be 0 or 1, got {self.num_virtual}")
        for name in ("input_hw", "energy_channels", "embed_channels",
                     "block2_channels", "block3_channels", "se_bottleneck",
                     "num_classes"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")


@dataclass
class SeParams:
    w1: np.ndarray  # (bottleneck, C)
    b1: np.ndarray  # (bottleneck,)
    w2: np.ndarray  # (C, bottleneck)
    b2: np.ndarray  # (C,)


@dataclass
class ParamSet:
    conv1: ConvKernel
    se: SeParams | None
    conv2: ConvKernel
    conv3: ConvKernel
    head_w: np.ndarray  # (num_classes, block3_channels)
    head_b: np.ndarray  # (num_classes,)

    def as_dict(self) -> dict[str, np.ndarray]:
        """Flat name -> tensor view in a fixed canonical order."""
        out = {"conv1.weights": self.conv1.weights, "conv1.bias": self.conv1.bias}
        if self.se is not None:
            out.update({
                "se.w1": self.se.w1, "se.b1": self.se.b1,
                "se.w2": self.se.w2, "se.b2": self.se.b2,
            })
        out.update({
            "conv2.weights": self.conv2.weights, "conv2.bias": self.conv2.bias,
            "conv3.weights": self.conv3.weights, "conv3.bias": self.conv3.bias,
            "head.w": self.head_w, "head.b": self.head_b,
        })
        return out

    def copy(self) -> "ParamSet":
        return ParamSet(
            conv1=ConvKernel(self.conv1.weights.copy(), self.conv1.bias.copy(), self.conv1.stride),
            se=None if self.se is None else SeParams(
                self.se.w1.copy(), self.se.b1.copy(), self.se.w2.copy(), self.se.b2.copy()
            ),
            conv2=ConvKernel(self.conv2.weights.copy(), self.conv2.bias.copy(), self.conv2.stride),
            conv3=ConvKernel(self.conv3.weights.copy(), self.conv3.bias.copy(), self.conv3.stride),
            head_w=self.head_w.copy(),
            head_b=self.head_b.copy(),
        )

    def astype(self, dtype) -> "ParamSet":
        return ParamSet(
            conv1=ConvKernel(self.conv1.weights.astype(dtype), self.conv1.bias.astype(dtype), self.conv1.stride),
            se=None if self.se is None else SeParams(
                self.se.w1.astype(dtype), self.se.b1.astype(dtype),
                self.se.w2.astype(dtype), self.se.b2.astype(dtype),
            ),
            conv2=ConvKernel(self.conv2.weights.astype(dtype), self.conv2.bias.astype(dtype), self.conv2.stride),
            conv3=ConvKernel(self.conv3.weights.astype(dtype), self.conv3.bias.astype(dtype), self.conv3.stride),
            head_w=self.head_w.astype(dtype),
            head_b=self.head_b.astype(dtype),
        )


@dataclass
class ForwardTrace:
    embedding: np.ndarray   # (N, D) pooled feature fed to the classifier
    logits: np.ndarray      # (N, num_classes)
    se_weights: np.ndarray | None  # (N, embed_channels) gate values, None if disabled
    cache: dict | None = field(default=None, repr=False)


def init_params(config: NetworkConfig, rng: np.random.Generator) -> ParamSet:
    """Xavier-uniform weights, zero biases. Draw order is fixed:
    conv1, (se.w1, se.w2), conv2, conv3, head."""
    e, b2c, b3c = config.embed_channels, config.block2_channels, config.block3_channels
    cin = config.energy_channels

    def conv(kh, c_in, c_out, stride):
        fan_in, fan_out = kh * kh * c_in, kh * kh * c_out
        w = ops.xavier_uniform((kh, kh, c_in, c_out), fan_in, fan_out, rng)
        return ConvKernel(w, np.zeros(c_out, dtype=np.float32), stride)

    conv1 = conv(1, cin, e, 1)
    se = None
    if config.se_enabled:
        r = config.se_bottleneck
        se = SeParams(
            w1=ops.xavier_uniform((r, e), e, r, rng),
            b1=np.zeros(r, dtype=np.float32),
            w2=ops.xavier_uniform((e, r), r, e, rng),
            b2=np.zeros(e, dtype=np.float32),
        )
    conv2 = conv(3, e, b2c, 2)
    conv3 = conv(3, b2c, b3c, 2)
    head_w = ops.xavier_uniform((config.num_classes, b3c), b3c, config.num_classes, rng)
    head_b = np.zeros(config.num_classes, dtype=np.float32)
    return ParamSet(conv1=conv1, se=se, conv2=conv2, conv3=conv3, head_w=head_w, head_b=head_b)


def se_scale(x: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """Per-channel gating: X'[n,h,w,k] = X[n,h,w,k] * omega[n,k]."""
    if omega.shape != (x.shape[0], x.shape[3]):
        raise ShapeError(f"gate shape {omega.shape}, expected {(x.shape[0], x.shape[3])}")
    return x * omega[:, None, None, :]


def se_forward(x: np.ndarray, se: SeParams, want_cache: bool = False):
    """Squeeze (GAP) -> FC+ReLU -> FC+Sigmoid -> re-excite the channels.

    Returns (x_scaled, omega) or (x_scaled, omega, cache) when want_cache.
    """
    if x.shape[3] != se.w1.shape[1]:
        raise ShapeError(f"input has {x.shape[3]} channels, gate expects {se.w1.shape[1]}")
    delta = ops.gap_forward(x)
    z1 = ops.fc_forward(delta, se.w1, se.b1)
    a1 = ops.relu(z1)
    z2 = ops.fc_forward(a1, se.w2, se.b2)
    omega = ops.sigmoid(z2)
    out = se_scale(x, omega)
    if not want_cache:
        return out, omega
    return out, omega, {"x": x, "delta": delta, "z1": z1, "a1": a1, "z2": z2, "omega": omega}


def se_backward(cache: dict, grad_out: np.ndarray, se: SeParams):
    """Backward through the gate. Returns (d_x, grads dict for se.*)."""
    x, omega = cache["x"], cache["omega"]
    d_x_direct = grad_out * omega[:, None, None, :]
    d_omega = (grad_out * x).sum(axis=(1, 2))
    d_z2 = ops.sigmoid_backward(cache["z2"], d_omega)
    d_a1, d_w2, d_b2 = ops.fc_backward(cache["a1"], se.w2, d_z2)
    d_z1 = ops.relu_backward(cache["z1"], d_a1)
    d_delta, d_w1, d_b1 = ops.fc_backward(cache["delta"], se.w1, d_z1)
    d_x = d_x_direct + ops.gap_backward(x.shape, d_delta)
    return d_x, {"se.w1": d_w1, "se.b1": d_b1, "se.w2": d_w2, "se.b2": d_b2}


def forward(
    config: NetworkConfig, params: ParamSet, batch: np.ndarray, train_mode: bool = False
) -> ForwardTrace:
    """Run the full pipeline over a batch (N, H, W, energy_channels).

    In train_mode the trace carries the intermediate activations needed
    by `backward`. Evaluation mode is deterministic and cache-free.
    """
    if batch.ndim != 4 or batch.shape[3] != config.energy_channels:
        raise ShapeError(
            f"batch shape {batch.shape}, expected (N, H, W, {config.energy_channels})"
        )
    a1 = ops.conv2d_forward(batch, params.conv1)
    se_cache = None
    if config.se_enabled:
        if params.se is None:
            raise ConfigError("config enables the channel gate but params carry none")
        if train_mode:
            gated, omega, se_cache = se_forward(a1, params.se, want_cache=True)
        else:
            gated, omega = se_forward(a1, params.se)
    else:
        gated, omega = a1, None
    z2 = ops.conv2d_forward(gated, params.conv2)
    a2 = ops.relu(z2)
    z3 = ops.conv2d_forward(a2, params.conv3)
    a3 = ops.relu(z3)
    emb = ops.gap_forward(a3)
    logits = ops.fc_forward(emb, params.head_w, params.head_b)
    cache = None
    if train_mode:
        cache = {"batch": batch, "a1": a1, "se": se_cache, "gated": gated,
                 "z2": z2, "a2": a2, "z3": z3, "a3": a3, "emb": emb}
    return ForwardTrace(embedding=emb, logits=logits, se_weights=omega, cache=cache)


def backward_from_embedding(
    config: NetworkConfig, params: ParamSet, trace: ForwardTrace, d_embedding: np.ndarray
) -> dict[str, np.ndarray]:
    """Backpropagate a gradient w.r.t. the pooled embedding into all
    convolutional and gate parameters (head gradients are the loss
    module's job). Requires a trace from forward(train_mode=True)."""
    cache = trace.cache
    if cache is None:
        raise ConfigError("backward requires a trace produced with train_mode=True")
    d_a3 = ops.gap_backward(cache["a3"].shape, d_embedding)
    d_z3 = ops.relu_backward(cache["z3"], d_a3)
    d_a2, d_w3, d_b3 = ops.conv2d_backward(cache["a2"], params.conv3, d_z3)
    d_z2 = ops.relu_backward(cache["z2"], d_a2)
    d_gated, d_w2, d_b2 = ops.conv2d_backward(cache["gated"], params.conv2, d_z2)
    grads: dict[str, np.ndarray] = {}
    if config.se_enabled:
        d_a1, se_grads = se_backward(cache["se"], d_gated, params.se)
        grads.update(se_grads)
    else:
        d_a1 = d_gated
    _, d_w1, d_b1 = ops.conv2d_backward(cache["batch"], params.conv1, d_a1)
    grads.update({
        "conv1.weights": d_w1, "conv1.bias": d_b1,
        "conv2.weights": d_w2, "conv2.bias": d_b2,
        "conv3.weights": d_w3, "conv3.bias": d_b3,
    })
    return grads


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def predict_proba(config: NetworkConfig, params: ParamSet, batch: np.ndarray) -> np.ndarray:
    """Class probabilities (N, num_classes). The virtual class never
    scores at inference; only the real logits are normalized."""
    trace = forward(config, params, batch, train_mode=False)
    return softmax(trace.logits)


def predict(config: NetworkConfig, params: ParamSet, volume: np.ndarray) -> np.ndarray:
    """Probability vector over the real classes for one (H, W, C) volume."""
    if volume.ndim != 3:
        raise ShapeError(f"volume must be 3-D (H,W,C), got {volume.shape}")
    return predict_proba(config, params, volume[None])[0]


def param_census(params: ParamSet) -> int:
    """Exact number of learnable scalars."""
    return int(sum(arr.size for arr in params.as_dict().values()))


def census_breakdown(params: ParamSet) -> dict[str, int]:
    return {name: int(arr.size) for name, arr in params.as_dict().items()}


def miniature_config(config: NetworkConfig, input_hw: int = 8) -> NetworkConfig:
    """Same topology at a reduced spatial size, for gradient-check tests."""
    return replace(config, input_hw=input_hw)
