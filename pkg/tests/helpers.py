"""Independent oracles used across the test suite.

Everything here is deliberately written from first principles (explicit
loops, Fractions, bisection) and never calls the implementation under
test, so each comparison is a genuine dual-route check.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np


# ---------------------------------------------------------------------------
# Convolution oracle: direct quadruple loop, "same" zero padding
# ---------------------------------------------------------------------------


def naive_conv2d(x: np.ndarray, weights: np.ndarray, bias: np.ndarray, stride: int) -> np.ndarray:
    n, h, w, cin = x.shape
    kh, kw, _, cout = weights.shape
    oh = -(-h // stride)
    ow = -(-w // stride)
    pad_h = max((oh - 1) * stride + kh - h, 0) // 2
    pad_w = max((ow - 1) * stride + kw - w, 0) // 2
    out = np.zeros((n, oh, ow, cout), dtype=np.float64)
    for b in range(n):
        for oy in range(oh):
            for ox in range(ow):
                for co in range(cout):
                    acc = 0.0
                    for ky in range(kh):
                        for kx in range(kw):
                            iy = oy * stride + ky - pad_h
                            ix = ox * stride + kx - pad_w
                            if 0 <= iy < h and 0 <= ix < w:
                                for ci in range(cin):
                                    acc += x[b, iy, ix, ci] * weights[ky, kx, ci, co]
                    out[b, oy, ox, co] = acc + bias[co]
    return out


# ---------------------------------------------------------------------------
# Finite differences
# ---------------------------------------------------------------------------


def numeric_grad_inplace(f, arrays: list[np.ndarray], h: float = 1e-3) -> list[np.ndarray]:
    """Central differences of the scalar f() w.r.t. each float64 array,
    perturbing the arrays in place (f must read them by reference)."""
    grads = []
    for arr in arrays:
        assert arr.dtype == np.float64
        g = np.zeros_like(arr)
        flat, gflat = arr.ravel(), g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = f()
            flat[i] = orig - h
            fm = f()
            flat[i] = orig
            gflat[i] = (fp - fm) / (2.0 * h)
        grads.append(g)
    return grads


def max_rel_err(analytic, numeric) -> float:
    """Per-tensor infinity-norm ratio; worst tensor wins."""
    if isinstance(analytic, np.ndarray):
        analytic, numeric = [analytic], [numeric]
    worst = 0.0
    for a, f in zip(analytic, numeric):
        denom = max(np.abs(a).max(), np.abs(f).max(), 1e-12)
        worst = max(worst, float(np.abs(a - f).max() / denom))
    return worst


# ---------------------------------------------------------------------------
# AUC oracle: exhaustive pair counting in exact rational arithmetic
# ---------------------------------------------------------------------------


def auc_pair_counting(scores, labels) -> Fraction:
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = ties = 0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                wins += 1
            elif sp == sn:
                ties += 1
    return Fraction(2 * wins + ties, 2 * len(pos) * len(neg))


def micro_auc_pair_counting(score_matrix, labels) -> Fraction:
    flat_scores, flat_labels = [], []
    for row, lab in zip(score_matrix, labels):
        for c, s in enumerate(row):
            flat_scores.append(s)
            flat_labels.append(1 if c == lab else 0)
    return auc_pair_counting(flat_scores, flat_labels)


# ---------------------------------------------------------------------------
# DeLong oracle: placement values from the definition, explicit sums
# ---------------------------------------------------------------------------


def _psi(x: float, y: float) -> float:
    if x > y:
        return 1.0
    if x == y:
        return 0.5
    return 0.0


def delong_components(scores_a, scores_b, labels):
    """Returns (auc_a, auc_b, v10 pairs, v01 pairs, var_a, var_b, cov, var_diff)."""
    pos = [i for i, y in enumerate(labels) if y == 1]
    neg = [i for i, y in enumerate(labels) if y == 0]
    m, n = len(pos), len(neg)

    def placements(scores):
        v10 = [sum(_psi(scores[i], scores[j]) for j in neg) / n for i in pos]
        v01 = [sum(_psi(scores[i], scores[j]) for i in pos) / m for j in neg]
        auc = sum(v10) / m
        return auc, v10, v01

    auc_a, v10_a, v01_a = placements(scores_a)
    auc_b, v10_b, v01_b = placements(scores_b)

    def cov(u, v, mu_u, mu_v):
        return sum((ui - mu_u) * (vi - mu_v) for ui, vi in zip(u, v)) / (len(u) - 1)

    s10 = [[cov(v10_a, v10_a, auc_a, auc_a), cov(v10_a, v10_b, auc_a, auc_b)],
           [cov(v10_b, v10_a, auc_b, auc_a), cov(v10_b, v10_b, auc_b, auc_b)]]
    mu01_a, mu01_b = sum(v01_a) / n, sum(v01_b) / n
    s01 = [[cov(v01_a, v01_a, mu01_a, mu01_a), cov(v01_a, v01_b, mu01_a, mu01_b)],
           [cov(v01_b, v01_a, mu01_b, mu01_a), cov(v01_b, v01_b, mu01_b, mu01_b)]]
    s = [[s10[r][c] / m + s01[r][c] / n for c in range(2)] for r in range(2)]
    var_diff = s[0][0] + s[1][1] - 2 * s[0][1]
    return {
        "auc_a": auc_a, "auc_b": auc_b,
        "v10_a": v10_a, "v10_b": v10_b, "v01_a": v01_a, "v01_b": v01_b,
        "var_a": s[0][0], "var_b": s[1][1], "cov": s[0][1], "var_diff": var_diff,
    }


# ---------------------------------------------------------------------------
# BCa oracle: Efron formulas coded independently (erf-based normal,
# bisection quantile, hand-rolled linear-interpolation percentile)
# ---------------------------------------------------------------------------


def _phi(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def _phi_inv(p: float) -> float:
    lo, hi = -12.0, 12.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _phi(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _quantile_linear(values, q: float) -> float:
    s = sorted(values)
    pos = (len(s) - 1) * q
    lo = math.floor(pos)
    hi = min(lo + 1, len(s) - 1)
    frac = pos - lo
    return s[lo] + (s[hi] - s[lo]) * frac


def bca_reference(reps, theta_hat: float, jack, alpha: float) -> tuple[float, float]:
    reps = list(map(float, reps))
    below = sum(1 for r in reps if r < theta_hat)
    z0 = _phi_inv(below / len(reps))
    jbar = sum(jack) / len(jack)
    d = [jbar - j for j in jack]
    sum2 = sum(x * x for x in d)
    sum3 = sum(x ** 3 for x in d)
    a = sum3 / (6.0 * sum2 ** 1.5) if sum2 > 0 else 0.0
    z_lo = _phi_inv(alpha / 2.0)
    z_hi = _phi_inv(1.0 - alpha / 2.0)
    a1 = _phi(z0 + (z0 + z_lo) / (1.0 - a * (z0 + z_lo)))
    a2 = _phi(z0 + (z0 + z_hi) / (1.0 - a * (z0 + z_hi)))
    return _quantile_linear(reps, a1), _quantile_linear(reps, a2)


# ---------------------------------------------------------------------------
# Smooth test images
# ---------------------------------------------------------------------------


def smooth_bump(h: int, w: int, radius_frac: float = 0.35) -> np.ndarray:
    """Radial cos^2 bump, exactly zero outside radius, C^1 smooth: safe
    under rotate-and-undo comparisons because nothing lives near the frame."""
    yy, xx = np.meshgrid(np.arange(h) - (h - 1) / 2, np.arange(w) - (w - 1) / 2, indexing="ij")
    r = np.sqrt(yy ** 2 + xx ** 2) / (radius_frac * min(h, w))
    return np.where(r < 1.0, np.cos(0.5 * np.pi * r) ** 2, 0.0)
