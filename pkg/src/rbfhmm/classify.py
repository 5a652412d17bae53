"""Few-shot classification with independent per-class Bayesian RBF-AR models.

Each class gets its own emission whose basis centers are perturbed copies of
the class prototype mean (the mean training window).  A segment is scored by
summing per-window log likelihoods under each class model; the softmax of the
class scores is the reported confidence.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import logsumexp

from .data import EegDataset
from .emissions import (
    EmissionHyperprior,
    LinearArEmission,
    PrototypeSet,
    RbfEmission,
    accumulate_stats,
    build_lagged_matrix,
    init_centers_from_prototypes,
    log_likelihood,
    log_likelihood_table,
    median_pairwise_distance,
    _posterior_pieces,
    sample_posterior_emission,
)
from .errors import (
    InsufficientDataError,
    InvalidParameterError,
)
from .kernels import BasisFunction, GaussianDecay
from .metrics import balanced_accuracy


@dataclass(frozen=True, eq=False)
class ClassModel:
    """One class's fitted emission plus its prior weight."""

    label: object
    emission: object
    log_prior: float = 0.0

    @property
    def lag(self) -> int:
        return self.emission.lag


@dataclass(frozen=True)
class SplitProtocol:
    """Training-fraction sweep protocol with subject-disjoint validation."""

    train_fractions: tuple
    held_out_subjects: tuple
    repeats: int = 20
    seed: int = 0

    def __post_init__(self):
        if any(not 0 < f < 1 for f in self.train_fractions):
            raise InvalidParameterError("training fractions must lie in (0, 1)")
        if self.repeats < 1:
            raise InvalidParameterError("need at least one repeat")


@dataclass(frozen=True, eq=False)
class ClassifierConfig:
    """Model settings shared by both class models."""

    lag: int
    n_centers: int = 250
    basis: BasisFunction | None = None
    metric: str = "euclidean"
    kind: str = "rbf"
    iw_dof: float | None = None
    iw_scale: float = 0.75
    ridge: float = 1e-3
    center_noise: float = 0.01
    fixed_weights: bool = False
    aggregation: str = "sum"

    def __post_init__(self):
        if self.kind not in ("rbf", "linear"):
            raise InvalidParameterError(f"kind must be rbf or linear, got {self.kind!r}")
        if self.aggregation not in ("sum", "vote"):
            raise InvalidParameterError(f"aggregation must be sum or vote, got {self.aggregation!r}")


@dataclass(eq=False)
class ClassificationResult:
    """Per-item decisions plus the softmax confidences over class models."""

    labels: list
    true_labels: np.ndarray
    predicted: np.ndarray
    log_scores: np.ndarray
    confidences: np.ndarray

    def positive_confidence(self, label) -> np.ndarray:
        return self.confidences[:, self.labels.index(label)]


def _segment_regression(segments, lag: int):
    """Stack targets/windows per segment; windows never cross segment bounds."""
    targets, windows = [], []
    for seg in segments:
        t, w = build_lagged_matrix(np.asarray(seg, dtype=float), lag)
        targets.append(t)
        windows.append(w)
    return np.vstack(targets), np.vstack(windows)


def _resolve_prior(windows: np.ndarray, targets: np.ndarray,
                   config: ClassifierConfig) -> EmissionHyperprior:
    d = targets.shape[1]
    dof = config.iw_dof if config.iw_dof is not None else d + 2.0
    scale = config.iw_scale * np.diag(np.maximum(targets.var(axis=0), 1e-8))
    center_cov = np.diag(config.center_noise * np.maximum(windows.var(axis=0), 1e-12))
    return EmissionHyperprior(dof, scale, center_cov, ridge=config.ridge)


def train_class_model(segments, config: ClassifierConfig, rng: np.random.Generator,
                      label=None, log_prior: float = 0.0) -> ClassModel:
    """Fit one class's emission from its labeled training segments.

    Centers are drawn around the prototype mean window, then the conjugate
    posterior over weights and noise is sampled (or solved at the MAP in
    fixed-weight mode).
    """
    segments = list(segments)
    if not segments:
        raise InsufficientDataError("need at least one training segment")
    targets, windows = _segment_regression(segments, config.lag)
    prior = _resolve_prior(windows, targets, config)
    d = targets.shape[1]
    if config.kind == "linear":
        em = LinearArEmission(np.zeros((d, windows.shape[1])), np.eye(d), config.lag)
    else:
        protos = PrototypeSet(label, windows)
        centers = init_centers_from_prototypes(protos, config.n_centers,
                                               prior.center_cov, rng)
        basis = config.basis
        if basis is None:
            basis = GaussianDecay(median_pairwise_distance(windows, config.metric))
        em = RbfEmission(np.zeros((d, config.n_centers)), centers, basis,
                         config.metric, np.eye(d), config.lag)
    assign = np.zeros(targets.shape[0], dtype=np.int64)
    stats = accumulate_stats(targets, windows, assign, 0, em, prior)
    if config.fixed_weights:
        w, _, iw = _posterior_pieces(stats, prior)
        sigma = iw.scale / max(iw.dof - d - 1.0, 1.0)
    else:
        w, sigma = sample_posterior_emission(stats, prior, rng)
    if config.kind == "linear":
        em = LinearArEmission(w, sigma, config.lag)
    else:
        em = replace(em, weights=w, noise_cov=sigma)
    return ClassModel(label, em, log_prior)


def classify_window(y, window, models) -> dict:
    """Score one observation/window pair under every class model.

    The per-class score is the emission log likelihood plus the log prior;
    confidences are the softmax of the scores.
    """
    if len(models) < 2:
        raise InvalidParameterError("need at least two class models")
    scores = np.array([log_likelihood(y, window, m.emission) + m.log_prior
                       for m in models])
    conf = np.exp(scores - logsumexp(scores))
    best = int(np.argmax(scores))
    return {"label": models[best].label, "log_scores": scores, "confidence": conf}


def classify_segment(segment, models, aggregation: str = "sum") -> dict:
    """Classify a whole segment from its windows.

    ``sum`` adds per-window class log likelihoods (the default); ``vote``
    takes the majority of per-window MAP decisions, breaking ties by the
    summed score.  Confidence is the softmax of the summed scores either way.
    """
    if len(models) < 2:
        raise InvalidParameterError("need at least two class models")
    lag = models[0].lag
    seg = np.asarray(segment, dtype=float)
    if seg.shape[0] < lag + 1:
        raise InsufficientDataError(
            f"segment of length {seg.shape[0]} too short for lag {lag}")
    targets, windows = build_lagged_matrix(seg, lag)
    per_window = log_likelihood_table(targets, windows,
                                      [m.emission for m in models])
    totals = per_window.sum(axis=0) + np.array([m.log_prior for m in models])
    conf = np.exp(totals - logsumexp(totals))
    if aggregation == "sum":
        best = int(np.argmax(totals))
    elif aggregation == "vote":
        votes = np.bincount(np.argmax(per_window, axis=1), minlength=len(models))
        leaders = np.flatnonzero(votes == votes.max())
        best = int(leaders[np.argmax(totals[leaders])])
    else:
        raise InvalidParameterError(f"unknown aggregation {aggregation!r}")
    return {"label": models[best].label, "log_scores": totals, "confidence": conf}


def evaluate_segments(segments, true_labels, models,
                      aggregation: str = "sum") -> ClassificationResult:
    """Classify a batch of segments and collect per-segment outputs."""
    labels = [m.label for m in models]
    preds, scores, confs = [], [], []
    for seg in segments:
        row = classify_segment(seg, models, aggregation)
        preds.append(row["label"])
        scores.append(row["log_scores"])
        confs.append(row["confidence"])
    return ClassificationResult(labels, np.asarray(true_labels), np.asarray(preds),
                                np.asarray(scores), np.asarray(confs))


# ---------------------------------------------------------------------------
# the training-fraction sweep
# ---------------------------------------------------------------------------

def _sweep_cell(args):
    (segments, seizure, pool_idx, val_idx, fraction, fi, rep, config, seed) = args
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                       spawn_key=(fi, rep)))
    pool_pos = pool_idx[seizure[pool_idx]]
    pool_neg = pool_idx[~seizure[pool_idx]]
    n_pos = int(round(fraction * pool_pos.size))
    n_neg = int(round(fraction * pool_neg.size))
    row = {"fraction": fraction, "repeat": rep, "skipped": False,
           "n_train_seizure": n_pos, "n_train_other": n_neg,
           "balanced_accuracy": float("nan"), "train_hash": 0}
    if n_pos < 1 or n_neg < 1:
        row["skipped"] = True
        return row, None
    train_pos = rng.choice(pool_pos, size=n_pos, replace=False)
    train_neg = rng.choice(pool_neg, size=n_neg, replace=False)
    log_prior = float(np.log(0.5))
    model_pos = train_class_model([segments[i] for i in train_pos], config, rng,
                                  label="seizure", log_prior=log_prior)
    model_neg = train_class_model([segments[i] for i in train_neg], config, rng,
                                  label="other", log_prior=log_prior)
    truth = np.where(seizure[val_idx], "seizure", "other")
    result = evaluate_segments([segments[i] for i in val_idx], truth,
                               [model_pos, model_neg], config.aggregation)
    row["balanced_accuracy"] = balanced_accuracy(result.predicted, truth)
    row["train_hash"] = int(np.sort(np.concatenate([train_pos, train_neg])).sum())
    return row, result


def run_split_sweep(dataset: EegDataset, protocol: SplitProtocol,
                    config: ClassifierConfig, n_jobs: int = 1,
                    collect_fraction: float | None = None):
    """Balanced accuracy over the fraction-by-repeat grid.

    Validation is the held-out subjects' segments; each cell draws a
    class-stratified training subset of the remaining pool, deterministic in
    (seed, fraction, repeat).  Cells whose fraction yields zero training
    segments for either class are recorded as skipped.  Returns the row list
    plus, when ``collect_fraction`` matches a grid fraction, the detailed
    result of its first repeat.
    """
    held = set(map(str, protocol.held_out_subjects))
    is_val = np.array([str(s) in held for s in dataset.subject_ids])
    if not is_val.any():
        raise InvalidParameterError("held-out subjects not present in the dataset")
    val_idx = np.flatnonzero(is_val)
    pool_idx = np.flatnonzero(~is_val)
    seizure = dataset.seizure
    cells = [
        (dataset.segments, seizure, pool_idx, val_idx, fraction, fi, rep,
         config, protocol.seed)
        for fi, fraction in enumerate(protocol.train_fractions)
        for rep in range(protocol.repeats)
    ]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            outputs = list(pool.map(_sweep_cell, cells))
    else:
        outputs = [_sweep_cell(c) for c in cells]
    rows = [row for row, _ in outputs]
    detail = None
    if collect_fraction is not None:
        for (row, result), cell in zip(outputs, cells):
            if result is not None and np.isclose(cell[4], collect_fraction) and row["repeat"] == 0:
                detail = result
                break
    return rows, detail


def choose_held_out_subjects(dataset: EegDataset, n_held_out: int,
                             seed: int) -> tuple:
    """Deterministically pick the validation subjects for a protocol."""
    subjects = np.unique(dataset.subject_ids.astype(str))
    if n_held_out >= subjects.size:
        raise InvalidParameterError(
            f"cannot hold out {n_held_out} of {subjects.size} subjects")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(97,)))
    return tuple(sorted(rng.choice(subjects, size=n_held_out, replace=False)))


def threshold_sweep(result: ClassificationResult, thresholds,
                    positive_label="seizure") -> list:
    """Accuracy against a sliding decision threshold on the positive class.

    At threshold t the positive label is predicted iff its confidence is at
    least t; each row reports balanced accuracy and the per-class rates.
    """
    conf = result.positive_confidence(positive_label)
    truth = result.true_labels
    other = [lab for lab in result.labels if lab != positive_label][0]
    rows = []
    for t in np.asarray(thresholds, dtype=float):
        pred = np.where(conf >= t, positive_label, other)
        pos_mask = truth == positive_label
        rows.append({
            "threshold": float(t),
            "balanced_accuracy": balanced_accuracy(pred, truth),
            "true_positive_rate": float((pred[pos_mask] == positive_label).mean()),
            "true_negative_rate": float((pred[~pos_mask] == other).mean()),
        })
    return rows
