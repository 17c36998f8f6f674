"""Dense-tensor primitives with explicit backward passes.

Layout is channel-last (N, H, W, C), row-major, float32 in production.
Every op preserves the dtype of its inputs, so the gradient-check tests
can run the whole stack in a float64 shadow without touching this code.

All functions are pure: no hidden state, safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

VALID_KERNEL_SIZES = (1, 3)
VALID_STRIDES = (1, 2)


@dataclass
class ConvKernel:
    """Square convolution kernel: weights (kh, kw, c_in, c_out), bias (c_out,)."""

    weights: np.ndarray
    bias: np.ndarray
    stride: int

    def __post_init__(self):
        if self.weights.ndim != 4:
            raise ShapeError(f"kernel weights must be 4-D, got {self.weights.shape}")
        kh, kw, _, c_out = self.weights.shape
        if kh != kw or kh not in VALID_KERNEL_SIZES:
            raise ShapeError(f"kernel must be square with size in {VALID_KERNEL_SIZES}, got {kh}x{kw}")
        if self.stride not in VALID_STRIDES:
            raise ShapeError(f"stride must be in {VALID_STRIDES}, got {self.stride}")
        if self.bias.shape != (c_out,):
            raise ShapeError(f"bias shape {self.bias.shape} does not match c_out={c_out}")

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @property
    def c_in(self) -> int:
        return self.weights.shape[2]

    @property
    def c_out(self) -> int:
        return self.weights.shape[3]


def same_padding(size: int, kernel: int, stride: int) -> tuple[int, int]:
    """Zero-padding (before, after) so the output has ceil(size / stride) pixels.

    Matches the usual "same" convention: total pad = (out-1)*stride + kernel - size,
    split low/high with the extra pixel at the high end.
    """
    out = -(-size // stride)
    total = max((out - 1) * stride + kernel - size, 0)
    before = total // 2
    return before, total - before


def _padded(x: np.ndarray, kernel: ConvKernel) -> np.ndarray:
    n, h, w, c = x.shape
    ph = same_padding(h, kernel.size, kernel.stride)
    pw = same_padding(w, kernel.size, kernel.stride)
    if ph == (0, 0) and pw == (0, 0):
        return x
    return np.pad(x, ((0, 0), ph, pw, (0, 0)))


def conv2d_forward(x: np.ndarray, kernel: ConvKernel) -> np.ndarray:
    """2-D convolution with "same" zero padding.

    x: (N, H, W, c_in) -> (N, ceil(H/s), ceil(W/s), c_out). Computed as
    one stacked matmul per kernel tap, which beats explicit im2col here
    (no patch matrix is ever materialized); equivalence with the direct
    loop definition is pinned by tests.
    """
    if x.ndim != 4:
        raise ShapeError(f"conv input must be 4-D (N,H,W,C), got {x.shape}")
    if x.shape[3] != kernel.c_in:
        raise ShapeError(f"input has {x.shape[3]} channels, kernel expects {kernel.c_in}")
    if min(x.shape[1], x.shape[2]) < kernel.size:
        raise ShapeError(f"spatial dims {x.shape[1:3]} smaller than kernel {kernel.size}")
    k, s = kernel.size, kernel.stride
    n, h, w, _ = x.shape
    oh, ow = -(-h // s), -(-w // s)
    xp = _padded(x, kernel)
    y = np.zeros((n, oh, ow, kernel.c_out), dtype=np.result_type(x, kernel.weights))
    for i in range(k):
        for j in range(k):
            y += xp[:, i : i + s * oh : s, j : j + s * ow : s, :] @ kernel.weights[i, j]
    return y + kernel.bias


def conv2d_backward(
    x: np.ndarray, kernel: ConvKernel, grad_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of conv2d_forward: returns (d_input, d_weights, d_bias)."""
    n, h, w, _ = x.shape
    k, s = kernel.size, kernel.stride
    oh, ow = -(-h // s), -(-w // s)
    expected = (n, oh, ow, kernel.c_out)
    if grad_out.shape != expected:
        raise ShapeError(f"upstream grad shape {grad_out.shape}, expected {expected}")
    xp = _padded(x, kernel)
    d_b = grad_out.sum(axis=(0, 1, 2))
    dtype = np.result_type(grad_out, kernel.weights)
    d_w = np.empty_like(kernel.weights, dtype=dtype)
    d_xp = np.zeros(xp.shape, dtype=dtype)
    g_flat = grad_out.reshape(-1, kernel.c_out)
    for i in range(k):
        for j in range(k):
            sl = xp[:, i : i + s * oh : s, j : j + s * ow : s, :]
            d_w[i, j] = sl.reshape(-1, kernel.c_in).T @ g_flat
            d_xp[:, i : i + s * oh : s, j : j + s * ow : s, :] += grad_out @ kernel.weights[i, j].T
    ph, _ = same_padding(h, k, s)
    pw, _ = same_padding(w, k, s)
    d_x = d_xp[:, ph : ph + h, pw : pw + w, :]
    return np.ascontiguousarray(d_x), d_w, d_b


def gap_forward(x: np.ndarray) -> np.ndarray:
    """Global average pooling: (N, H, W, C) -> per-channel spatial mean (N, C)."""
    if x.ndim != 4:
        raise ShapeError(f"gap input must be 4-D, got {x.shape}")
    return x.mean(axis=(1, 2))


def gap_backward(x_shape: tuple[int, ...], grad_out: np.ndarray) -> np.ndarray:
    """Spread (N, C) gradient evenly back over the (N, H, W, C) input."""
    n, h, w, c = x_shape
    if grad_out.shape != (n, c):
        raise ShapeError(f"gap grad shape {grad_out.shape}, expected {(n, c)}")
    g = grad_out / (h * w)
    return np.broadcast_to(g[:, None, None, :], x_shape).copy()


def fc_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Affine map: (N, d_in) @ (d_out, d_in)^T + (d_out,)."""
    if x.ndim != 2 or weights.ndim != 2 or x.shape[1] != weights.shape[1]:
        raise ShapeError(f"fc shapes incompatible: x {x.shape}, W {weights.shape}")
    if bias.shape != (weights.shape[0],):
        raise ShapeError(f"fc bias shape {bias.shape}, expected ({weights.shape[0]},)")
    return x @ weights.T + bias


def fc_backward(
    x: np.ndarray, weights: np.ndarray, grad_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of fc_forward: returns (d_input, d_weights, d_bias)."""
    if grad_out.shape != (x.shape[0], weights.shape[0]):
        raise ShapeError(f"fc grad shape {grad_out.shape}, expected {(x.shape[0], weights.shape[0])}")
    return grad_out @ weights, grad_out.T @ x, grad_out.sum(axis=0)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def relu_backward(x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    return grad_out * (x > 0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    # Split by sign to avoid overflow in exp for large |x|.
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid_backward(x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    s = sigmoid(x)
    return grad_out * s * (1.0 - s)


def xavier_uniform(
    shape: tuple[int, ...], fan_in: int, fan_out: int, rng: np.random.Generator
) -> np.ndarray:
    """Uniform samples on [-L, L] with L = sqrt(6 / (fan_in + fan_out)), float32."""
    if fan_in < 1 or fan_out < 1:
        raise ShapeError(f"fans must be >= 1, got ({fan_in}, {fan_out})")
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(np.float32)


def l2_penalty(weights: list[np.ndarray], lam: float) -> tuple[float, list[np.ndarray]]:
    """Weight-decay term lam * sum(w^2) with gradient 2 * lam * w per tensor.

    Applied to convolution kernel weights only; biases and the excitation
    FC layers are exempt (see the config reference in the README).
    """
    penalty = 0.0
    grads = []
    for w in weights:
        penalty += lam * float(np.sum(np.square(w, dtype=np.float64)))
        grads.append(2.0 * lam * w)
    return penalty, grads
