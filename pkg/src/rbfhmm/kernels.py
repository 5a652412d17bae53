"""Deterministic numerical primitives.

Distances, radial basis activations, autoregressive power spectra, a few
matrix-variate samplers (matrix normal, inverse Wishart, Dirichlet) and the
composite covariance of a random radial-basis network.  Everything is a pure
function of its arguments plus, where randomness is involved, an explicit
``numpy.random.Generator``; callers may fan out over threads as long as each
thread owns its generator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import (
    DegenerateInputError,
    DimensionError,
    InvalidParameterError,
    NumericalError,
)

METRICS = ("euclidean", "manhattan", "cosine")

_CDIST_NAME = {"euclidean": "euclidean", "manhattan": "cityblock"}

LOG_2PI = float(np.log(2.0 * np.pi))


# ---------------------------------------------------------------------------
# distances
# ---------------------------------------------------------------------------

def distance(a, b, metric: str = "euclidean") -> float:
    """Distance between two vectors.

    ``euclidean`` and ``manhattan`` are the usual norms; ``cosine`` is the
    cosine dissimilarity ``1 - cos(a, b)``, which lives in ``[0, 2]`` and is
    zero for parallel nonzero vectors.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise DimensionError(f"vector lengths differ: {a.shape[0]} vs {b.shape[0]}")
    if metric == "euclidean":
        return float(np.linalg.norm(a - b))
    if metric == "manhattan":
        return float(np.abs(a - b).sum())
    if metric == "cosine":
        na = float(np.linalg.norm(a))
        nb = float(np.linalg.norm(b))
        if na == 0.0 or nb == 0.0:
            raise DegenerateInputError("cosine dissimilarity is undefined for a zero vector")
        cos = float(a @ b) / (na * nb)
        return float(np.clip(1.0 - cos, 0.0, 2.0))
    raise InvalidParameterError(f"unknown metric {metric!r}, expected one of {METRICS}")


def pairwise_distances(x: np.ndarray, centers: np.ndarray, metric: str = "euclidean") -> np.ndarray:
    """(N, J) matrix of distances between rows of ``x`` and rows of ``centers``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if x.shape[1] != centers.shape[1]:
        raise DimensionError(
            f"feature dimensions differ: {x.shape[1]} vs {centers.shape[1]}")
    if metric in _CDIST_NAME:
        return cdist(x, centers, metric=_CDIST_NAME[metric])
    if metric == "cosine":
        nx = np.linalg.norm(x, axis=1)
        nc = np.linalg.norm(centers, axis=1)
        if np.any(nx == 0.0) or np.any(nc == 0.0):
            raise DegenerateInputError("cosine dissimilarity is undefined for a zero vector")
        cos = (x @ centers.T) / np.outer(nx, nc)
        return np.clip(1.0 - cos, 0.0, 2.0)
    raise InvalidParameterError(f"unknown metric {metric!r}, expected one of {METRICS}")


# ---------------------------------------------------------------------------
# basis functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianDecay:
    """Gaussian-type radial activation.

    The default form is ``exp(-d / eta)`` with the *unsquared* distance in the
    exponent.  Setting ``squared=True`` switches to the squared-exponential
    form ``exp(-d^2 / (2 eta))``, the parameterization under which the
    composite-kernel formulas of :func:`composite_kernel_value` are exact.
    """

    eta: float
    squared: bool = False

    def __post_init__(self):
        if not self.eta > 0:
            raise InvalidParameterError(f"length-scale eta must be positive, got {self.eta}")

    def activation(self, dist):
        d = np.asarray(dist, dtype=float)
        if self.squared:
            return np.exp(-(d * d) / (2.0 * self.eta))
        return np.exp(-d / self.eta)


@dataclass(frozen=True)
class PolyharmonicSpline:
    """Polyharmonic spline activation: ``d^k`` for odd order k, ``d^k log d``
    for even order, with the d=0 limit defined as 0."""

    order: int

    def __post_init__(self):
        if not (isinstance(self.order, (int, np.integer)) and self.order >= 1):
            raise InvalidParameterError(f"spline order must be a positive integer, got {self.order}")

    def activation(self, dist):
        d = np.asarray(dist, dtype=float)
        if self.order % 2 == 1:
            return d ** self.order
        scalar = d.ndim == 0
        flat = np.atleast_1d(d)
        out = np.zeros_like(flat)
        nz = flat > 0
        out[nz] = flat[nz] ** self.order * np.log(flat[nz])
        return out[0] if scalar else out


BasisFunction = GaussianDecay | PolyharmonicSpline


def basis_activation(dist, basis: BasisFunction):
    """Apply the radial nonlinearity to one or more nonnegative distances."""
    out = basis.activation(dist)
    if np.ndim(dist) == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# autoregressive power spectral density
# ---------------------------------------------------------------------------

def ar_psd(coeffs, noise_var: float, freqs):
    """PSD of a scalar AR process at normalized frequencies.

    ``S(f) = noise_var / |1 - sum_j coeffs[j] exp(-i 2 pi f j)|^2`` with lags
    j = 1..r.  An empty coefficient vector gives the flat white-noise
    spectrum.
    """
    if not noise_var > 0:
        raise InvalidParameterError(f"noise variance must be positive, got {noise_var}")
    a = np.atleast_1d(np.asarray(coeffs, dtype=float))
    f = np.asarray(freqs, dtype=float)
    if a.size == 0:
        out = np.full(f.shape, float(noise_var))
    else:
        lags = np.arange(1, a.size + 1)
        phase = np.exp(-1j * 2.0 * np.pi * np.multiply.outer(f, lags))
        den = 1.0 - phase @ a
        out = noise_var / np.abs(den) ** 2
    if np.ndim(freqs) == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# linear algebra helpers
# ---------------------------------------------------------------------------

def _check_square_symmetric(mat, name: str) -> np.ndarray:
    m = np.asarray(mat, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be a square matrix, got shape {m.shape}")
    if not np.allclose(m, m.T, rtol=1e-8, atol=1e-10):
        raise InvalidParameterError(f"{name} must be symmetric")
    return m


def require_spd(mat, name: str = "matrix") -> np.ndarray:
    """Validate that ``mat`` is symmetric positive-definite (Cholesky succeeds)."""
    m = _check_square_symmetric(mat, name)
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"{name} is not positive definite (Cholesky failed)") from exc
    return m


def robust_cholesky(mat: np.ndarray) -> np.ndarray:
    """Cholesky factor with one repair attempt.

    Symmetrizes, and on failure adds a single jitter of ``1e-9 * trace / D``
    to the diagonal before giving up.  Routine hygiene for accumulated outer
    products.
    """
    m = np.asarray(mat, dtype=float)
    m = 0.5 * (m + m.T)
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        pass
    d = m.shape[0]
    jitter = 1e-9 * float(np.trace(m)) / d
    if jitter <= 0:
        jitter = 1e-12
    try:
        return np.linalg.cholesky(m + jitter * np.eye(d))
    except np.linalg.LinAlgError as exc:
        raise NumericalError("matrix is not positive definite after jitter repair") from exc


def ensure_spd(mat: np.ndarray) -> np.ndarray:
    """Return a symmetrized copy of ``mat`` that admits a Cholesky factor."""
    m = 0.5 * (np.asarray(mat, dtype=float) + np.asarray(mat, dtype=float).T)
    L = robust_cholesky(m)
    return L @ L.T


def gaussian_log_density(resid, cov) -> np.ndarray | float:
    """Log density of N(0, cov) evaluated at each row of ``resid``."""
    r = np.atleast_2d(np.asarray(resid, dtype=float))
    cov = np.asarray(cov, dtype=float)
    d = cov.shape[0]
    if r.shape[1] != d:
        raise DimensionError(f"residual dimension {r.shape[1]} does not match covariance {d}")
    L = robust_cholesky(cov)
    from scipy.linalg import solve_triangular

    sol = solve_triangular(L, r.T, lower=True, check_finite=False)
    maha = np.einsum("ij,ij->j", sol, sol)
    logdet = 2.0 * float(np.log(np.diag(L)).sum())
    out = -0.5 * (d * LOG_2PI + logdet + maha)
    if np.ndim(resid) == 1:
        return float(out[0])
    return out


# ---------------------------------------------------------------------------
# matrix-variate samplers
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MatrixNormalParams:
    """Parameters of a matrix normal law MN(mean, row_cov, col_cov)."""

    mean: np.ndarray
    row_cov: np.ndarray
    col_cov: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.atleast_2d(np.asarray(self.mean, dtype=float)))
        object.__setattr__(self, "row_cov", require_spd(self.row_cov, "row_cov"))
        object.__setattr__(self, "col_cov", require_spd(self.col_cov, "col_cov"))
        d, j = self.mean.shape
        if self.row_cov.shape[0] != d or self.col_cov.shape[0] != j:
            raise DimensionError(
                f"mean {self.mean.shape} incompatible with row_cov {self.row_cov.shape} "
                f"/ col_cov {self.col_cov.shape}")


def sample_matrix_normal(params: MatrixNormalParams, rng: np.random.Generator) -> np.ndarray:
    """One draw from MN(mean, row_cov, col_cov).

    Uses mean + L_row Z L_col^T with i.i.d. standard normal Z, so the
    vectorized covariance is col_cov (x) row_cov (Kronecker).
    """
    lr = np.linalg.cholesky(params.row_cov)
    lc = np.linalg.cholesky(params.col_cov)
    z = rng.standard_normal(params.mean.shape)
    return params.mean + lr @ z @ lc.T


@dataclass(frozen=True, eq=False)
class InverseWishartParams:
    """Degrees of freedom and scale of an inverse Wishart law."""

    dof: float
    scale: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "scale", require_spd(self.scale, "scale"))
        d = self.scale.shape[0]
        if not self.dof > d - 1:
            raise InvalidParameterError(
                f"inverse Wishart needs dof > D - 1 = {d - 1}, got {self.dof}")


def sample_inverse_wishart(params: InverseWishartParams, rng: np.random.Generator) -> np.ndarray:
    """One draw from IW(dof, scale) via the Bartlett decomposition.

    For dof > D + 1 the mean is scale / (dof - D - 1).
    """
    from scipy.linalg import solve_triangular

    scale = params.scale
    d = scale.shape[0]
    a = np.zeros((d, d))
    idx = np.arange(d)
    a[idx, idx] = np.sqrt(rng.chisquare(params.dof - idx))
    if d > 1:
        tril = np.tril_indices(d, k=-1)
        a[tril] = rng.standard_normal(len(tril[0]))
    ls = np.linalg.cholesky(scale)
    # sigma = L_S A^{-T} A^{-1} L_S^T = X^T X with X = A^{-1} L_S^T
    x = solve_triangular(a, ls.T, lower=True)
    sigma = x.T @ x
    return 0.5 * (sigma + sigma.T)


def sample_dirichlet(concentration, rng: np.random.Generator) -> np.ndarray:
    """One draw from a Dirichlet distribution.

    The output lies on the simplex (sums to one, entries nonnegative).  Built
    on gamma draws; if every gamma underflows to zero the unit mass is placed
    on the largest concentration entry.
    """
    conc = np.atleast_1d(np.asarray(concentration, dtype=float))
    if conc.size == 0 or np.any(conc <= 0) or not np.all(np.isfinite(conc)):
        raise InvalidParameterError("Dirichlet concentration entries must be positive and finite")
    g = rng.standard_gamma(conc)
    total = g.sum()
    if total <= 0:
        out = np.zeros_like(g)
        out[int(np.argmax(conc))] = 1.0
        return out
    return g / total


# ---------------------------------------------------------------------------
# composite covariance of a random RBF network
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CompositeKernelParams:
    """Variances entering the composite covariance of a random squared
    exponential RBF network with Gaussian basis centers.

    ``sigma_c2`` is the basis-center variance, ``eta`` the squared
    exponential length-scale.  The derived envelope variance is
    ``2 sigma_c2 + eta`` and the stationary kernel variance is
    ``2 eta + eta^2 / sigma_c2``.
    """

    sigma_c2: float
    eta: float

    def __post_init__(self):
        if not self.sigma_c2 > 0:
            raise InvalidParameterError(f"sigma_c2 must be positive, got {self.sigma_c2}")
        if not self.eta > 0:
            raise InvalidParameterError(f"eta must be positive, got {self.eta}")

    @property
    def envelope_var(self) -> float:
        return 2.0 * self.sigma_c2 + self.eta

    @property
    def kernel_var(self) -> float:
        return 2.0 * self.eta + self.eta ** 2 / self.sigma_c2


def composite_kernel_value(y, y_prime, params: CompositeKernelParams) -> float:
    """Composite covariance (up to a constant) between network outputs at two
    inputs: a stationary squared-exponential kernel modulated by Gaussian
    decay envelopes at both arguments.  Normalized so the value at (0, 0) is 1;
    only ratios are meaningful.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float)).ravel()
    yp = np.atleast_1d(np.asarray(y_prime, dtype=float)).ravel()
    if y.shape != yp.shape:
        raise DimensionError(f"input lengths differ: {y.shape[0]} vs {yp.shape[0]}")
    diff = y - yp
    env = (y @ y + yp @ yp) / (2.0 * params.envelope_var)
    stat = (diff @ diff) / (2.0 * params.kernel_var)
    return float(np.exp(-env - stat))
