"""State-specific autoregressive emission models.

An emission maps the window of the ``r`` most recent observations to a
predicted next value plus Gaussian noise.  Two feature maps are provided: a
radial-basis expansion around a set of centers (the nonlinear model) and the
identity map (which recovers the plain linear vector autoregression).  Both
share the same matrix-normal / inverse-Wishart conjugate update for the
weights and noise covariance, so the linear model is literally the RBF
machinery with a different feature map.

Emission records are immutable; every update builds a new record.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve
from scipy.spatial.distance import pdist

from .errors import (
    DimensionError,
    InsufficientDataError,
    InvalidParameterError,
    SingularityError,
)
from .kernels import (
    METRICS,
    BasisFunction,
    InverseWishartParams,
    MatrixNormalParams,
    ensure_spd,
    gaussian_log_density,
    pairwise_distances,
    require_spd,
    robust_cholesky,
    sample_inverse_wishart,
    sample_matrix_normal,
)


# ---------------------------------------------------------------------------
# series and lagged windows
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TimeSeries:
    """A T x D real-valued sequence with sampling-rate metadata."""

    values: np.ndarray
    sampling_rate: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise DimensionError(f"series must be 1-d or 2-d, got shape {v.shape}")
        if not self.sampling_rate > 0:
            raise InvalidParameterError(f"sampling rate must be positive, got {self.sampling_rate}")
        object.__setattr__(self, "values", v)

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def _series_values(series) -> np.ndarray:
    if isinstance(series, TimeSeries):
        return series.values
    v = np.asarray(series, dtype=float)
    return v[:, None] if v.ndim == 1 else v


def build_lagged_matrix(series, lag: int):
    """Split a series into regression targets and flattened lagged windows.

    Window i stacks observations most-recent-first,
    ``[y_{i+lag-1}, ..., y_i]``, flattened to length lag*D; its target is
    ``y_{i+lag}``.  Returns ``(targets, windows)`` with T - lag rows each.
    """
    values = _series_values(series)
    t, d = values.shape
    if lag < 1:
        raise InvalidParameterError(f"lag must be >= 1, got {lag}")
    if t <= lag:
        raise InsufficientDataError(f"need more than lag={lag} observations, got {t}")
    n = t - lag
    offsets = lag - 1 - np.arange(lag)
    idx = np.arange(n)[:, None] + offsets[None, :]
    windows = values[idx].reshape(n, lag * d)
    return values[lag:].copy(), windows


def flatten_window(window) -> np.ndarray:
    """Flatten an (r, D) window matrix to the canonical (r*D,) layout.

    Row-major flattening keeps the most-recent-first time ordering.  Already
    flat input passes through unchanged.
    """
    w = np.asarray(window, dtype=float)
    return w.ravel()


def linear_feature_map(window) -> np.ndarray:
    """Identity feature map: the flattened window itself."""
    return flatten_window(window).copy()


def median_pairwise_distance(windows: np.ndarray, metric: str = "euclidean",
                             max_points: int = 500) -> float:
    """Median pairwise distance over an evenly spaced subsample of rows.

    Deterministic; used as a length-scale heuristic.
    """
    w = np.atleast_2d(np.asarray(windows, dtype=float))
    n = w.shape[0]
    if n > max_points:
        w = w[np.linspace(0, n - 1, max_points).astype(int)]
    name = {"euclidean": "euclidean", "manhattan": "cityblock", "cosine": "cosine"}[metric]
    d = pdist(w, metric=name)
    med = float(np.median(d)) if d.size else 1.0
    return med if med > 0 else 1.0


# ---------------------------------------------------------------------------
# emission records
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RbfEmission:
    """One state's radial-basis autoregressive network.

    weights : (D, J) output weights
    centers : (J, lag*D) basis centers in flattened-window coordinates
    """

    weights: np.ndarray
    centers: np.ndarray
    basis: BasisFunction
    metric: str
    noise_cov: np.ndarray
    lag: int

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.weights, dtype=float))
        c = np.atleast_2d(np.asarray(self.centers, dtype=float))
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "noise_cov", require_spd(self.noise_cov, "noise_cov"))
        if self.metric not in METRICS:
            raise InvalidParameterError(f"unknown metric {self.metric!r}")
        if self.lag < 1:
            raise InvalidParameterError(f"lag must be >= 1, got {self.lag}")
        d, j = w.shape
        if j < 1 or c.shape[0] != j:
            raise DimensionError(f"weights {w.shape} do not match {c.shape[0]} centers")
        if c.shape[1] != self.lag * d:
            raise DimensionError(
                f"centers have length {c.shape[1]}, expected lag*D = {self.lag * d}")
        if self.noise_cov.shape[0] != d:
            raise DimensionError("noise covariance does not match output dimension")

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    @property
    def n_neurons(self) -> int:
        return self.weights.shape[1]

    @property
    def n_features(self) -> int:
        return self.n_neurons

    def features(self, windows) -> np.ndarray:
        """(N, J) activations of each window against every center."""
        w = np.atleast_2d(np.asarray(windows, dtype=float))
        return self.basis.activation(pairwise_distances(w, self.centers, self.metric))


@dataclass(frozen=True, eq=False)
class LinearArEmission:
    """Linear vector autoregression: the identity feature map special case."""

    coeffs: np.ndarray
    noise_cov: np.ndarray
    lag: int

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "noise_cov", require_spd(self.noise_cov, "noise_cov"))
        if self.lag < 1:
            raise InvalidParameterError(f"lag must be >= 1, got {self.lag}")
        if c.shape[1] != self.lag * c.shape[0]:
            raise DimensionError(
                f"coefficient matrix {c.shape} inconsistent with lag {self.lag}")
        if self.noise_cov.shape[0] != c.shape[0]:
            raise DimensionError("noise covariance does not match output dimension")

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return self.coeffs

    @property
    def n_features(self) -> int:
        return self.coeffs.shape[1]

    def features(self, windows) -> np.ndarray:
        w = np.atleast_2d(np.asarray(windows, dtype=float))
        if w.shape[1] != self.n_features:
            raise DimensionError(
                f"windows have length {w.shape[1]}, expected {self.n_features}")
        return w


Emission = RbfEmission | LinearArEmission


def feature_vector(window, emission: Emission) -> np.ndarray:
    """Feature vector of a single window (matrix or flattened form)."""
    return emission.features(flatten_window(window)[None, :])[0]


def predict_mean(window, emission: Emission) -> np.ndarray:
    """Predicted next observation, ``weights @ features``."""
    return emission.weights @ feature_vector(window, emission)


def predict_means(emission: Emission, windows: np.ndarray) -> np.ndarray:
    """Batch version of :func:`predict_mean` over rows of ``windows``."""
    return emission.features(windows) @ emission.weights.T


def log_likelihood(y, window, emission: Emission) -> float:
    """Gaussian log density of ``y`` under the emission at this window."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    resid = y - predict_mean(window, emission)
    return float(gaussian_log_density(resid, emission.noise_cov))


def log_likelihood_table(targets: np.ndarray, windows: np.ndarray,
                         emissions) -> np.ndarray:
    """(N, L) table of per-time log likelihoods for every emission."""
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    out = np.empty((targets.shape[0], len(emissions)))
    for k, em in enumerate(emissions):
        resid = targets - predict_means(em, windows)
        out[:, k] = gaussian_log_density(resid, em.noise_cov)
    return out


# ---------------------------------------------------------------------------
# priors, sufficient statistics, conjugate updates
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EmissionHyperprior:
    """Hyperprior for the matrix-normal / inverse-Wishart emission update.

    iw_dof, iw_scale : inverse Wishart prior on the noise covariance
    center_cov      : covariance of the additive center perturbation
    ridge           : prior column precision of the weights (kappa_0)
    prior_mean      : prior weight mean M_0; None means zero
    """

    iw_dof: float
    iw_scale: np.ndarray
    center_cov: np.ndarray
    ridge: float = 1e-3
    prior_mean: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "iw_scale", require_spd(self.iw_scale, "iw_scale"))
        object.__setattr__(self, "center_cov", require_spd(self.center_cov, "center_cov"))
        d = self.iw_scale.shape[0]
        if not self.iw_dof > d - 1:
            raise InvalidParameterError(f"iw_dof must exceed D - 1 = {d - 1}, got {self.iw_dof}")
        if not self.ridge > 0:
            raise InvalidParameterError(f"ridge must be positive, got {self.ridge}")
        if self.prior_mean is not None:
            object.__setattr__(self, "prior_mean",
                               np.atleast_2d(np.asarray(self.prior_mean, dtype=float)))


@dataclass(frozen=True, eq=False)
class SufficientStats:
    """Accumulated regression statistics for one state, prior included."""

    s_phiphi: np.ndarray
    s_yphi: np.ndarray
    s_yy: np.ndarray
    count: int

    def __post_init__(self):
        object.__setattr__(self, "s_phiphi", np.atleast_2d(np.asarray(self.s_phiphi, float)))
        object.__setattr__(self, "s_yphi", np.atleast_2d(np.asarray(self.s_yphi, float)))
        object.__setattr__(self, "s_yy", np.atleast_2d(np.asarray(self.s_yy, float)))


@dataclass(frozen=True, eq=False)
class PrototypeSet:
    """Labeled exemplar windows used to seed basis centers."""

    label: object
    windows: np.ndarray

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.windows, dtype=float))
        if w.shape[0] == 0:
            raise InsufficientDataError("prototype set must be nonempty")
        object.__setattr__(self, "windows", w)

    @property
    def mean(self) -> np.ndarray:
        return self.windows.mean(axis=0)


def _prior_mean_matrix(prior: EmissionHyperprior, d: int, j: int) -> np.ndarray:
    if prior.prior_mean is None:
        return np.zeros((d, j))
    m0 = prior.prior_mean
    if m0.shape != (d, j):
        raise DimensionError(f"prior_mean shape {m0.shape} does not match (D, J) = ({d}, {j})")
    return m0


def accumulate_stats(targets: np.ndarray, windows: np.ndarray, assignments: np.ndarray,
                     state: int, emission: Emission,
                     prior: EmissionHyperprior) -> SufficientStats:
    """Sufficient statistics over the observations assigned to ``state``.

    With no assigned observations the result is prior-only: the ridge on
    S_phiphi plus the prior-mean terms.
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    assignments = np.asarray(assignments)
    mask = assignments == state
    j = emission.n_features
    d = targets.shape[1]
    m0 = _prior_mean_matrix(prior, d, j)
    k0 = prior.ridge
    if mask.any():
        phi = emission.features(windows[mask])
        x = targets[mask]
        s_phiphi = phi.T @ phi + k0 * np.eye(j)
        s_yphi = x.T @ phi + k0 * m0
        s_yy = x.T @ x + k0 * (m0 @ m0.T)
    else:
        s_phiphi = k0 * np.eye(j)
        s_yphi = k0 * m0
        s_yy = k0 * (m0 @ m0.T)
    return SufficientStats(0.5 * (s_phiphi + s_phiphi.T), s_yphi,
                           0.5 * (s_yy + s_yy.T), int(mask.sum()))


def _posterior_pieces(stats: SufficientStats, prior: EmissionHyperprior):
    """Posterior weight mean, column covariance and IW parameters."""
    chol = robust_cholesky(stats.s_phiphi)
    mean_w = cho_solve((chol, True), stats.s_yphi.T).T
    s_cond = stats.s_yy - mean_w @ stats.s_yphi.T
    s_cond = 0.5 * (s_cond + s_cond.T)
    iw = InverseWishartParams(prior.iw_dof + stats.count,
                              ensure_spd(s_cond + prior.iw_scale))
    col_cov = cho_solve((chol, True), np.eye(stats.s_phiphi.shape[0]))
    return mean_w, 0.5 * (col_cov + col_cov.T), iw


def sample_posterior_emission(stats: SufficientStats, prior: EmissionHyperprior,
                              rng: np.random.Generator):
    """Draw (weights, noise covariance) from the conjugate posterior.

    Sigma ~ IW(n0 + N, S_{Y|Phi} + S0) and W | Sigma ~ MN(S_YPhi S_PhiPhi^{-1},
    Sigma, S_PhiPhi^{-1}).  Note the column covariance is the inverse of
    S_PhiPhi; only the inverse gives a posterior that contracts with data.
    """
    mean_w, col_cov, iw = _posterior_pieces(stats, prior)
    sigma = sample_inverse_wishart(iw, rng)
    w = sample_matrix_normal(MatrixNormalParams(mean_w, sigma, col_cov), rng)
    return w, sigma


def solve_weights_map(stats: SufficientStats) -> np.ndarray:
    """Deterministic ridge least-squares weights, S_YPhi S_PhiPhi^{-1}."""
    try:
        return np.linalg.solve(stats.s_phiphi, stats.s_yphi.T).T
    except np.linalg.LinAlgError as exc:
        raise SingularityError("S_PhiPhi is singular; use a positive ridge") from exc


# ---------------------------------------------------------------------------
# prototype-based center selection
# ---------------------------------------------------------------------------

def draw_centers(mean: np.ndarray, cov: np.ndarray, n_centers: int,
                 rng: np.random.Generator) -> np.ndarray:
    """n_centers i.i.d. draws from N(mean, cov), one per row."""
    if n_centers < 1:
        raise InvalidParameterError(f"need at least one center, got {n_centers}")
    mean = np.asarray(mean, dtype=float).ravel()
    L = robust_cholesky(cov)
    z = rng.standard_normal((n_centers, mean.size))
    return mean + z @ L.T


def init_centers_from_prototypes(protos: PrototypeSet, n_centers: int,
                                 center_cov: np.ndarray,
                                 rng: np.random.Generator) -> np.ndarray:
    """Perturbed copies of the prototype sample mean, c_j ~ N(mean, B)."""
    return draw_centers(protos.mean, center_cov, n_centers, rng)


def resample_centers(state_mean: np.ndarray, state_cov: np.ndarray, n_centers: int,
                     rng: np.random.Generator) -> np.ndarray:
    """Redraw a state's centers around its current lagged-observation mean.

    Same contract as :func:`init_centers_from_prototypes`; the caller supplies
    the per-state window statistics (or the prototype prior for empty states).
    """
    return draw_centers(state_mean, state_cov, n_centers, rng)
