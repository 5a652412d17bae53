"""Evaluation metrics: permutation-matched state accuracy, transition-matrix
error, balanced accuracy, spectral features and confidence histograms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_toeplitz
from scipy.optimize import linear_sum_assignment
from scipy.signal import periodogram

from .errors import DegenerateInputError, DimensionError, InvalidParameterError
from .kernels import ar_psd


# ---------------------------------------------------------------------------
# state-sequence and transition-matrix comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StateMatch:
    """Optimal injective relabeling of inferred states onto true states."""

    mapping: dict
    accuracy: float


def matched_state_accuracy(z_inferred, z_true, n_states: int | None = None) -> StateMatch:
    """Best-permutation agreement between two label sequences.

    Builds the confusion matrix and solves the optimal assignment on it, so
    the reported accuracy is the maximum over injective label maps.
    """
    zi = np.asarray(z_inferred).ravel()
    zt = np.asarray(z_true).ravel()
    if zi.size != zt.size:
        raise DimensionError(f"sequence lengths differ: {zi.size} vs {zt.size}")
    inf_labels = np.unique(zi)
    true_labels = np.unique(zt)
    conf = np.zeros((inf_labels.size, true_labels.size), dtype=np.int64)
    ii = np.searchsorted(inf_labels, zi)
    tt = np.searchsorted(true_labels, zt)
    np.add.at(conf, (ii, tt), 1)
    rows, cols = linear_sum_assignment(conf, maximize=True)
    mapping = {int(inf_labels[r]): int(true_labels[c]) for r, c in zip(rows, cols)}
    agree = conf[rows, cols].sum()
    return StateMatch(mapping, float(agree) / zi.size)


def transition_mse(trans_estimated, trans_actual, match: StateMatch) -> float:
    """Mean squared entrywise error over the aligned transition block.

    The inferred matrix is relabeled through ``match``; only true states that
    received a matched inferred state enter the block, so unmatched inferred
    states are dropped.
    """
    est = np.asarray(trans_estimated, dtype=float)
    act = np.asarray(trans_actual, dtype=float)
    inverse = {}
    for inf_label, true_label in match.mapping.items():
        if 0 <= true_label < act.shape[0] and 0 <= inf_label < est.shape[0]:
            inverse[true_label] = inf_label
    matched_true = sorted(inverse)
    if not matched_true:
        raise DimensionError("no aligned states between the two matrices")
    est_idx = np.asarray([inverse[t] for t in matched_true])
    act_idx = np.asarray(matched_true)
    block_est = est[np.ix_(est_idx, est_idx)]
    block_act = act[np.ix_(act_idx, act_idx)]
    return float(np.mean((block_est - block_act) ** 2))


def balanced_accuracy(predicted, true, labels=None) -> float:
    """Mean per-class recall."""
    pred = np.asarray(predicted).ravel()
    tr = np.asarray(true).ravel()
    if pred.size != tr.size:
        raise DimensionError(f"label lengths differ: {pred.size} vs {tr.size}")
    if labels is None:
        labels = np.unique(tr)
    recalls = []
    for lab in labels:
        mask = tr == lab
        if not mask.any():
            raise DegenerateInputError(f"true class {lab!r} has no examples")
        recalls.append(float((pred[mask] == lab).mean()))
    return float(np.mean(recalls))


# ---------------------------------------------------------------------------
# spectral features
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralFeatures:
    """Periodogram summaries of one segment."""

    fundamental_hz: float
    spectral_entropy: float
    alpha_band_energy: float


def _yule_walker(x: np.ndarray, order: int) -> tuple[np.ndarray, float]:
    """AR coefficients and innovation variance from sample autocovariances."""
    x = x - x.mean()
    n = x.size
    acov = np.array([x[: n - k] @ x[k:] for k in range(order + 1)]) / n
    if acov[0] <= 0:
        return np.zeros(order), 1.0
    coeffs = solve_toeplitz(acov[:-1], acov[1:])
    noise = float(acov[0] - coeffs @ acov[1:])
    return coeffs, max(noise, 1e-12)


def spectral_features(segment, sampling_rate: float, estimator: str = "periodogram",
                      ar_order: int = 16) -> SpectralFeatures:
    """Fundamental frequency, normalized spectral entropy, and the fraction
    of power in the 8-13 Hz alpha band.

    The default estimator is a Hann-window periodogram; ``estimator="ar"``
    substitutes the parametric AR spectrum fit by Yule-Walker.  A constant
    segment takes the degenerate path (all features zero).
    """
    x = np.asarray(segment, dtype=float).ravel()
    if x.size < 64:
        raise InvalidParameterError(f"segment too short for spectral features: {x.size}")
    if not sampling_rate > 0:
        raise InvalidParameterError(f"sampling rate must be positive, got {sampling_rate}")
    # constant segments (up to float rounding) take the degenerate path
    if np.max(np.abs(x - x.mean())) <= 1e-12 * max(float(np.max(np.abs(x))), 1.0):
        return SpectralFeatures(0.0, 0.0, 0.0)
    if estimator == "periodogram":
        freqs, power = periodogram(x, fs=sampling_rate, window="hann", detrend="constant")
    elif estimator == "ar":
        coeffs, noise = _yule_walker(x, ar_order)
        norm_f = np.linspace(0.0, 0.5, 257)
        freqs = norm_f * sampling_rate
        power = ar_psd(coeffs, noise, norm_f)
    else:
        raise InvalidParameterError(f"unknown estimator {estimator!r}")
    total = power.sum()
    if not total > 0 or not np.isfinite(total):
        return SpectralFeatures(0.0, 0.0, 0.0)
    p = power / total
    fundamental = float(freqs[int(np.argmax(p))])
    nz = p[p > 0]
    entropy = float(-(nz * np.log(nz)).sum() / np.log(p.size))
    alpha = float(p[(freqs >= 8.0) & (freqs <= 13.0)].sum())
    return SpectralFeatures(fundamental, entropy, alpha)


def feature_density(values, grid=None):
    """Gaussian kernel density estimate with the Scott bandwidth rule.

    Returns ``(grid, density, meta)`` where meta records the rule used.
    """
    from scipy.stats import gaussian_kde

    v = np.asarray(values, dtype=float).ravel()
    if v.size < 2 or np.allclose(v, v[0]):
        raise DegenerateInputError("need at least two distinct values for a density")
    kde = gaussian_kde(v, bw_method="scott")
    if grid is None:
        lo, hi = v.min(), v.max()
        pad = 0.1 * (hi - lo)
        grid = np.linspace(lo - pad, hi + pad, 256)
    return grid, kde(grid), {"bandwidth_rule": "scott", "bandwidth": float(kde.factor)}


# ---------------------------------------------------------------------------
# confidence histograms
# ---------------------------------------------------------------------------

def confidence_histogram(confidences, true_labels, bins=None) -> dict:
    """Per-class normalized histograms of the positive-class confidence.

    ``bins`` must partition [0, 1]; each nonempty class's masses sum to one.
    Empty classes are flagged rather than raising.
    """
    conf = np.asarray(confidences, dtype=float).ravel()
    labels = np.asarray(true_labels).ravel()
    if conf.size != labels.size:
        raise DimensionError(f"lengths differ: {conf.size} vs {labels.size}")
    if bins is None:
        bins = np.linspace(0.0, 1.0, 11)
    bins = np.asarray(bins, dtype=float)
    if not (np.isclose(bins[0], 0.0) and np.isclose(bins[-1], 1.0)
            and np.all(np.diff(bins) > 0)):
        raise InvalidParameterError("bins must be an increasing partition of [0, 1]")
    out = {"bin_edges": bins.tolist(), "classes": {}}
    for lab in np.unique(labels):
        mask = labels == lab
        if not mask.any():
            out["classes"][str(lab)] = {"empty": True, "mass": []}
            continue
        counts, _ = np.histogram(conf[mask], bins=bins)
        out["classes"][str(lab)] = {
            "empty": False,
            "mass": (counts / counts.sum()).tolist(),
        }
    return out
