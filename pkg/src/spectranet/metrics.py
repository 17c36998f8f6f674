"""ROC/AUC statistics: exact rank-based AUC, BCa bootstrap intervals,
paired AUC comparison, multiple-comparison correction, and curve export.

AUC is computed through midranks, which is the Mann-Whitney count
(ties at half credit) and therefore exactly equals trapezoidal area
under the tie-grouped ROC polyline. The rank sums are exact in float64
(integers and halves), so the result is the correctly rounded value of
the underlying rational number -- the test suite exploits that.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ConfigError, DataError, DegenerateVarianceError, UndefinedAucError


def norm_cdf(x):
    """Standard normal CDF, |error| < 1e-10."""
    return ndtr(x)


def norm_ppf(p):
    """Standard normal quantile, |error| < 1e-10 on (0, 1)."""
    return ndtri(p)


@dataclass
class RocCurve:
    thresholds: np.ndarray  # descending, thresholds[0] = +inf
    fpr: np.ndarray
    tpr: np.ndarray


@dataclass
class AucResult:
    auc: float
    n_samples: int
    ci_low: float | None = None
    ci_high: float | None = None


@dataclass
class DelongResult:
    auc_a: float
    auc_b: float
    z: float
    p: float
    corrected_p: float | None = None


def _as_binary(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise DataError(f"scores {scores.shape} and labels {labels.shape} must be equal 1-D")
    uniq = np.unique(labels)
    if not np.isin(uniq, (0, 1)).all():
        raise DataError(f"binary labels must be 0/1, got {uniq}")
    if uniq.size < 2:
        raise UndefinedAucError("labels contain a single class; AUC undefined")
    return scores, labels.astype(bool)


def midranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties averaged; exact halves, no float drift."""
    order = np.argsort(x, kind="stable")
    z = x[order]
    n = len(x)
    ranks = np.empty(n, dtype=np.float64)
    i = 0
    while i < n:
        j = i
        while j < n and z[j] == z[i]:
            j += 1
        ranks[i:j] = (i + j + 1) / 2.0  # mean of ranks i+1 .. j
        i = j
    out = np.empty(n, dtype=np.float64)
    out[order] = ranks
    return out


def binary_auc(scores, labels) -> AucResult:
    """Mann-Whitney AUC: P(score+ > score-) + 0.5 * P(equal)."""
    scores, pos = _as_binary(scores, labels)
    m = int(pos.sum())
    n_neg = len(scores) - m
    r = midranks(scores)
    u = r[pos].sum() - m * (m + 1) / 2.0
    return AucResult(auc=u / (m * n_neg), n_samples=len(scores))


def roc_curve(scores, labels) -> RocCurve:
    """Tie-grouped ROC polyline from (0,0) to (1,1), thresholds descending."""
    scores, pos = _as_binary(scores, labels)
    order = np.argsort(-scores, kind="stable")
    s, y = scores[order], pos[order]
    distinct = np.nonzero(np.diff(s))[0]
    idx = np.r_[distinct, len(s) - 1]
    tp = np.cumsum(y)[idx]
    fp = idx + 1 - tp
    thresholds = np.r_[np.inf, s[idx]]
    tpr = np.r_[0.0, tp / tp[-1]]
    fpr = np.r_[0.0, fp / fp[-1]]
    return RocCurve(thresholds=thresholds, fpr=fpr, tpr=tpr)


def one_hot(labels: np.ndarray, num_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.intp)
    out = np.zeros((labels.size, num_classes), dtype=np.intp)
    out[np.arange(labels.size), labels] = 1
    return out


def micro_ovr_auc(score_matrix, labels) -> AucResult:
    """Micro-average one-vs-rest AUC: flatten the (N, C) score matrix and
    the matching one-hot indicators into a single binary problem."""
    scores = np.asarray(score_matrix, dtype=np.float64)
    if scores.ndim != 2:
        raise DataError(f"score matrix must be 2-D, got {scores.shape}")
    labels = np.asarray(labels, dtype=np.intp)
    if labels.shape != (scores.shape[0],):
        raise DataError("labels must have one entry per score row")
    if labels.min() < 0 or labels.max() >= scores.shape[1]:
        raise DataError("label outside score-matrix columns")
    onehot = one_hot(labels, scores.shape[1])
    res = binary_auc(scores.ravel(), onehot.ravel())
    return AucResult(auc=res.auc, n_samples=scores.shape[0])


def micro_roc_curve(score_matrix, labels) -> RocCurve:
    scores = np.asarray(score_matrix, dtype=np.float64)
    onehot = one_hot(np.asarray(labels, dtype=np.intp), scores.shape[1])
    return roc_curve(scores.ravel(), onehot.ravel())


# ---------------------------------------------------------------------------
# BCa bootstrap
# ---------------------------------------------------------------------------


def _take(sample, idx):
    if isinstance(sample, np.ndarray):
        return sample[idx]
    return [sample[i] for i in idx]


def bca_interval_from_replicates(
    reps: np.ndarray, theta_hat: float, jack: np.ndarray, alpha: float
) -> tuple[float, float]:
    """The Efron interval given precomputed replicates and jackknife values.

    z0 = Phi^-1 of the fraction of replicates strictly below theta_hat,
    acceleration from jackknife skewness, endpoints as linear-interpolated
    empirical quantiles of the replicates at the adjusted levels.
    """
    reps = np.asarray(reps, dtype=np.float64)
    if np.all(reps == reps[0]):
        warnings.warn("all bootstrap replicates identical; degenerate interval")
        return theta_hat, theta_hat

    p0 = np.count_nonzero(reps < theta_hat) / reps.size
    # Guard the endpoints so ndtri stays finite; interior cases untouched.
    p0 = min(max(p0, 1.0 / (reps.size + 1)), reps.size / (reps.size + 1.0))
    z0 = norm_ppf(p0)

    d = jack.mean() - np.asarray(jack, dtype=np.float64)
    denom = np.sum(d * d) ** 1.5
    a = float(np.sum(d ** 3) / (6.0 * denom)) if denom > 0 else 0.0

    def adjusted(z_alpha: float) -> float:
        zt = z0 + z_alpha
        return float(norm_cdf(z0 + zt / (1.0 - a * zt)))

    lo_q = adjusted(norm_ppf(alpha / 2.0))
    hi_q = adjusted(norm_ppf(1.0 - alpha / 2.0))
    lo, hi = np.quantile(reps, [lo_q, hi_q], method="linear")
    return float(lo), float(hi)


def bootstrap_replicates(stat_fn, sample, b: int, rng: np.random.Generator) -> np.ndarray:
    """B plain case-resampled replicates; replicate i uses the i-th batch
    of len(sample) index draws from rng. NaN replicates (degenerate
    resamples) are dropped."""
    n = len(sample)
    reps = np.empty(b)
    for i in range(b):
        reps[i] = stat_fn(_take(sample, rng.integers(0, n, size=n)))
    return reps[~np.isnan(reps)]


def jackknife_values(stat_fn, sample) -> np.ndarray:
    n = len(sample)
    jack = np.array([float(stat_fn(_take(sample, np.r_[0:i, i + 1 : n]))) for i in range(n)])
    return jack[~np.isnan(jack)]


def bca_ci(stat_fn, sample, b: int = 2000, alpha: float = 0.05,
           rng: np.random.Generator | None = None) -> tuple[float, float]:
    """Bias-corrected accelerated bootstrap interval for stat_fn(sample).

    stat_fn may return NaN to flag a degenerate resample (e.g. a
    single-class bootstrap draw); those replicates are dropped.
    """
    if b < 100:
        raise ConfigError(f"need at least 100 bootstrap replicates, got {b}")
    n = len(sample)
    if n < 10:
        raise DataError(f"sample size {n} too small for a bootstrap interval")
    if rng is None:
        rng = np.random.default_rng()
    theta_hat = float(stat_fn(sample))
    reps = bootstrap_replicates(stat_fn, sample, b, rng)
    if reps.size == 0:
        raise DataError("all bootstrap resamples were degenerate")
    jack = jackknife_values(stat_fn, sample)
    return bca_interval_from_replicates(reps, theta_hat, jack, alpha)


def auc_bca_ci(score_matrix, labels, b: int = 2000, alpha: float = 0.05,
               rng: np.random.Generator | None = None) -> AucResult:
    """Micro-OvR AUC with a case-resampled BCa interval. The bootstrap
    unit is the case, not the flattened prediction element."""
    scores = np.asarray(score_matrix, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.intp)
    point = micro_ovr_auc(scores, labels)

    sample = np.arange(scores.shape[0])

    def stat(idx):
        sub = np.asarray(idx, dtype=np.intp)
        if np.unique(labels[sub]).size < 2:
            return np.nan
        return micro_ovr_auc(scores[sub], labels[sub]).auc

    lo, hi = bca_ci(stat, sample, b=b, alpha=alpha, rng=rng)
    return AucResult(auc=point.auc, n_samples=point.n_samples, ci_low=lo, ci_high=hi)


# ---------------------------------------------------------------------------
# DeLong paired test
# ---------------------------------------------------------------------------


def _placements(scores: np.ndarray, pos: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """AUC plus per-positive (V10) and per-negative (V01) placement values,
    via the midrank identities."""
    m = int(pos.sum())
    n_neg = len(scores) - m
    tz = midranks(scores)
    tx = midranks(scores[pos])
    ty = midranks(scores[~pos])
    v10 = (tz[pos] - tx) / n_neg
    v01 = 1.0 - (tz[~pos] - ty) / m
    auc = (tz[pos].sum() - m * (m + 1) / 2.0) / (m * n_neg)
    return auc, v10, v01


def delong_test(scores_a, scores_b, labels) -> DelongResult:
    """Nonparametric comparison of two correlated AUCs on the same cases.

    Covariance of the AUC pair comes from the empirical covariance
    (ddof=1) of the placement values; z = diff / sqrt(var of diff),
    two-sided p. Identical score vectors give z=0, p=1 by convention.
    """
    scores_a, pos = _as_binary(scores_a, labels)
    scores_b, _ = _as_binary(scores_b, labels)
    auc_a, v10_a, v01_a = _placements(scores_a, pos)
    auc_b, v10_b, v01_b = _placements(scores_b, pos)
    m, n_neg = v10_a.size, v01_a.size
    if m < 2 or n_neg < 2:
        raise DataError("DeLong needs at least two cases of each class")
    s10 = np.cov(np.stack([v10_a, v10_b]), ddof=1)
    s01 = np.cov(np.stack([v01_a, v01_b]), ddof=1)
    s = s10 / m + s01 / n_neg
    var_diff = s[0, 0] + s[1, 1] - 2.0 * s[0, 1]
    if var_diff <= 0.0:
        if auc_a == auc_b:
            return DelongResult(auc_a=auc_a, auc_b=auc_b, z=0.0, p=1.0)
        raise DegenerateVarianceError("zero variance of the AUC difference with unequal AUCs")
    z = (auc_a - auc_b) / np.sqrt(var_diff)
    p = float(2.0 * (1.0 - norm_cdf(abs(z))))
    return DelongResult(auc_a=auc_a, auc_b=auc_b, z=float(z), p=p)


def per_class_delong(proba_a, proba_b, labels) -> list[DelongResult]:
    """One-vs-rest DeLong per class column of the two probability matrices."""
    proba_a = np.asarray(proba_a, dtype=np.float64)
    proba_b = np.asarray(proba_b, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.intp)
    results = []
    for c in range(proba_a.shape[1]):
        results.append(delong_test(proba_a[:, c], proba_b[:, c], (labels == c).astype(int)))
    return results


def bonferroni(p_values, m: int) -> np.ndarray:
    """p' = min(1, m * p)."""
    p = np.asarray(p_values, dtype=np.float64)
    if m < p.size:
        raise ConfigError(f"m={m} smaller than the {p.size} comparisons")
    return np.minimum(1.0, m * p)


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def roc_to_csv(curve: RocCurve, path: str | Path) -> None:
    lines = ["threshold,fpr,tpr"]
    for t, f, tp in zip(curve.thresholds, curve.fpr, curve.tpr):
        lines.append(f"{float(t)!r},{float(f)!r},{float(tp)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def roc_from_csv(path: str | Path) -> RocCurve:
    rows = Path(path).read_text().strip().splitlines()[1:]
    cols = np.array([[float(v) for v in row.split(",")] for row in rows])
    return RocCurve(thresholds=cols[:, 0], fpr=cols[:, 1], tpr=cols[:, 2])


_SVG_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")


def roc_svg(curves: list[tuple[str, RocCurve]], size: int = 480, margin: int = 50) -> str:
    """Overlay plot: one path per curve plus the chance diagonal."""
    span = size - 2 * margin

    def sx(v):
        return margin + v * span

    def sy(v):
        return size - margin - v * span

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<line x1="{sx(0):.1f}" y1="{sy(0):.1f}" x2="{sx(1):.1f}" y2="{sy(1):.1f}" '
        'stroke="#999999" stroke-dasharray="6,4" class="diagonal"/>',
        f'<text x="{size/2:.0f}" y="{size - 12}" text-anchor="middle" font-size="13">FPR</text>',
        f'<text x="14" y="{size/2:.0f}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 14 {size/2:.0f})">TPR</text>',
    ]
    for i, (name, curve) in enumerate(curves):
        pts = " ".join(f"{sx(f):.2f},{sy(t):.2f}" for f, t in zip(curve.fpr, curve.tpr))
        color = _SVG_COLORS[i % len(_SVG_COLORS)]
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.6" '
                     f'points="{pts}" class="curve" data-name="{name}"/>')
        parts.append(f'<text x="{sx(1) - 4:.0f}" y="{margin + 16 * (i + 1)}" text-anchor="end" '
                     f'font-size="12" fill="{color}">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def roc_export(curves: list[tuple[str, RocCurve]], out_dir: str | Path) -> list[Path]:
    """Write one CSV per curve and a combined SVG overlay; returns paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, curve in curves:
        p = out / f"roc_{name}.csv"
        roc_to_csv(curve, p)
        written.append(p)
    svg = out / "roc.svg"
    svg.write_text(roc_svg(curves) + "\n")
    written.append(svg)
    return written
