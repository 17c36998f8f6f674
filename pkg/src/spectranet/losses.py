"""Classification losses: softmax cross-entropy and its virtual-class variant.

The virtual-class loss appends one synthetic competitor logit per sample,
equal to ||W_y|| * ||x||, i.e. the logit of a weight vector aligned with
the sample's embedding. The extra term only enlarges the softmax
denominator, so it never decreases the per-sample loss; minimizing it
pushes embeddings toward their class weight vector in angle. The virtual
class exists only inside the loss: inference always scores the real
classes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, SingularInputError


@dataclass
class CeLoss:
    value: float
    d_logits: np.ndarray
    per_sample: np.ndarray


@dataclass
class VirtualLoss:
    value: float
    d_embedding: np.ndarray
    d_weights: np.ndarray
    per_sample: np.ndarray


def _check_labels(labels: np.ndarray, num_classes: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise DataError(f"labels must be 1-D, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise DataError(f"labels out of range [0, {num_classes})")
    return labels.astype(np.intp)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax_ce(logits: np.ndarray, labels: np.ndarray) -> CeLoss:
    """Mean softmax cross-entropy; gradient is w.r.t. the logits."""
    n, c = logits.shape
    labels = _check_labels(labels, c)
    log_p = _log_softmax(logits)
    per_sample = -log_p[np.arange(n), labels]
    probs = np.exp(log_p)
    d_logits = probs.copy()
    d_logits[np.arange(n), labels] -= 1.0
    d_logits /= n
    return CeLoss(value=float(per_sample.mean()), d_logits=d_logits, per_sample=per_sample)


def virtual_softmax_loss(
    x: np.ndarray, weights: np.ndarray, labels: np.ndarray, num_virtual: int
) -> VirtualLoss:
    """Cross-entropy over real logits x @ W^T plus an optional virtual logit.

    With num_virtual=0 this reduces exactly to softmax_ce on x @ W^T.
    With num_virtual=1, sample i competes against the extra logit
    ||W_{y_i}|| * ||x_i||; gradients flow into both x and W through it.
    """
    if num_virtual not in (0, 1):
        raise ConfigError(f"num_virtual must be 0 or 1, got {num_virtual}")
    n, d = x.shape
    c = weights.shape[0]
    labels = _check_labels(labels, c)

    logits = x @ weights.T
    if num_virtual == 0:
        ce = softmax_ce(logits, labels)
        return VirtualLoss(
            value=ce.value,
            d_embedding=ce.d_logits @ weights,
            d_weights=ce.d_logits.T @ x,
            per_sample=ce.per_sample,
        )

    x_norm = np.linalg.norm(x, axis=1)
    if np.any(x_norm == 0.0):
        raise SingularInputError("zero-norm embedding: network output collapsed")
    w_norm = np.linalg.norm(weights, axis=1)
    wy_norm = w_norm[labels]
    if np.any(wy_norm == 0.0):
        raise SingularInputError("zero-norm class weight row")

    virt = wy_norm * x_norm
    aug = np.concatenate([logits, virt[:, None]], axis=1)
    log_p = _log_softmax(aug)
    per_sample = -log_p[np.arange(n), labels]
    probs = np.exp(log_p)

    d_aug = probs.copy()
    d_aug[np.arange(n), labels] -= 1.0
    d_aug /= n
    d_real, d_virt = d_aug[:, :c], d_aug[:, c]

    # Real logits: z_j = W_j . x_i.  Virtual logit: ||W_y|| * ||x||, whose
    # gradients are the unit vectors of x and W_y scaled by the other norm.
    d_x = d_real @ weights + (d_virt * wy_norm / x_norm)[:, None] * x
    d_w = d_real.T @ x
    coef = d_virt * x_norm / wy_norm
    np.add.at(d_w, labels, coef[:, None] * weights[labels])

    return VirtualLoss(
        value=float(per_sample.mean()), d_embedding=d_x, d_weights=d_w, per_sample=per_sample
    )
