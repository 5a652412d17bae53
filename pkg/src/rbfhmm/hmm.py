"""Sticky HDP-HMM backbone and the blocked Gibbs sweep.

The transition matrix carries a truncated hierarchical Dirichlet process
prior with extra mass on self-transitions.  One sweep resamples, in order:
the state sequence (backward messages then forward sampling), the auxiliary
table counts and top-level weights, the transition rows, optionally the basis
centers, and finally each state's emission parameters.

The top-level weights are resampled *before* the transition rows: the
table-count update is the collapsed conditional with the rows integrated
out, so the rows must be redrawn afterwards for the sweep to leave the joint
invariant.

Everything runs in log space; per-time normalizers are carried separately so
no density is ever multiplied out in linear space.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import logsumexp

from .emissions import (
    Emission,
    EmissionHyperprior,
    LinearArEmission,
    RbfEmission,
    accumulate_stats,
    build_lagged_matrix,
    draw_centers,
    log_likelihood_table,
    median_pairwise_distance,
    _posterior_pieces,
    sample_posterior_emission,
)
from .errors import DimensionError, InvalidParameterError, NumericalError
from ._loops import backward_pass, forward_pass
from .kernels import (
    BasisFunction,
    GaussianDecay,
    sample_dirichlet,
    sample_inverse_wishart,
)


# ---------------------------------------------------------------------------
# configuration and state containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StickyHdpPrior:
    """Concentrations of the two-level DP plus the emission hyperprior.

    gamma : top-level concentration
    alpha : per-row concentration
    sticky: extra Dirichlet mass on self-transitions
    truncation : number of instantiated states L
    """

    gamma: float
    alpha: float
    sticky: float
    truncation: int
    emission_prior: EmissionHyperprior

    def __post_init__(self):
        if not self.gamma > 0 or not self.alpha > 0:
            raise InvalidParameterError("gamma and alpha must be positive")
        if self.sticky < 0:
            raise InvalidParameterError(f"sticky mass must be >= 0, got {self.sticky}")
        # L = 1 is allowed as a documented degenerate case (the sweep then
        # reduces to a single Bayesian regression update)
        if self.truncation < 1:
            raise InvalidParameterError(f"truncation must be >= 1, got {self.truncation}")


@dataclass(frozen=True)
class GibbsConfig:
    sweeps: int = 1000
    burn_in: int = 500
    seed: int = 0
    center_resampling: bool = True
    fixed_weights: bool = False
    thinning: int = 1

    def __post_init__(self):
        if not 0 <= self.burn_in < self.sweeps:
            raise InvalidParameterError(
                f"burn_in must satisfy 0 <= burn_in < sweeps, got {self.burn_in}/{self.sweeps}")
        if self.thinning < 1:
            raise InvalidParameterError(f"thinning must be >= 1, got {self.thinning}")


@dataclass(frozen=True, eq=False)
class EmissionTemplate:
    """Structure of the per-state emission used when initializing a chain.

    kind is "rbf" or "linear"; ``basis=None`` resolves a Gaussian decay whose
    length-scale is the median pairwise window distance.
    """

    lag: int
    kind: str = "rbf"
    n_neurons: int = 5
    basis: BasisFunction | None = None
    metric: str = "euclidean"

    def __post_init__(self):
        if self.kind not in ("rbf", "linear"):
            raise InvalidParameterError(f"emission kind must be rbf or linear, got {self.kind!r}")
        if self.lag < 1:
            raise InvalidParameterError(f"lag must be >= 1, got {self.lag}")
        if self.kind == "rbf" and self.n_neurons < 1:
            raise InvalidParameterError(f"need at least one neuron, got {self.n_neurons}")


@dataclass(eq=False)
class ChainState:
    """All latent quantities of one chain after a sweep."""

    z: np.ndarray
    trans: np.ndarray
    beta: np.ndarray
    emissions: list
    counts: np.ndarray


@dataclass(frozen=True, eq=False)
class MessageTable:
    """Backward messages, rows normalized with cumulative log offsets.

    The true log message at time t is ``logm[t] + log_norm[t]``; the final
    row is identically zero (log 1).
    """

    logm: np.ndarray
    log_norm: np.ndarray

    def total(self) -> np.ndarray:
        return self.logm + self.log_norm[:, None]


@dataclass(frozen=True)
class SweepInfo:
    marginal_loglik: float


# ---------------------------------------------------------------------------
# message passing and state sampling
# ---------------------------------------------------------------------------

def _check_loglik_finite(ll: np.ndarray) -> None:
    if not np.isfinite(ll).all():
        bad = int(np.argwhere(~np.isfinite(ll))[0][0])
        raise NumericalError(f"non-finite emission log-likelihood at t={bad}")


def _backward(ll: np.ndarray, trans: np.ndarray) -> MessageTable:
    logm, log_norm, bad = backward_pass(np.ascontiguousarray(ll),
                                        np.ascontiguousarray(trans, dtype=float))
    if bad >= 0:
        raise NumericalError(f"backward message vanished at t={bad}")
    return MessageTable(logm, log_norm)


def backward_messages(targets, windows, trans, emissions) -> MessageTable:
    """Backward message table for the given transition matrix and emissions.

    ``log m_{t,t-1}(k) = logsumexp_q [log pi_{k,q} + loglik_q(y_{t+1}) +
    log m_{t+1,t}(q)]`` with the emission indexed by the successor state, and
    boundary message 1.
    """
    ll = log_likelihood_table(targets, windows, emissions)
    _check_loglik_finite(ll)
    return _backward(ll, np.asarray(trans, dtype=float))


def marginal_log_likelihood(init_dist, ll, table: MessageTable) -> float:
    """Log marginal of the whole sequence from the message table."""
    with np.errstate(divide="ignore"):
        first = np.log(np.asarray(init_dist, dtype=float)) + ll[0] + table.logm[0]
    return float(logsumexp(first) + table.log_norm[0])


def _forward_sample(ll, table, trans, init_dist, rng) -> np.ndarray:
    with np.errstate(divide="ignore"):
        log_init = np.log(np.asarray(init_dist, dtype=float))
        log_trans = np.log(np.asarray(trans, dtype=float))
    score = np.ascontiguousarray(ll + table.logm)
    z, bad = forward_pass(score, np.ascontiguousarray(log_trans), log_init, rng)
    if bad >= 0:
        raise NumericalError(f"all-zero state posterior at t={bad}")
    return z


def forward_sample_states(messages: MessageTable, trans, emissions, targets, windows,
                          init_dist, rng: np.random.Generator) -> np.ndarray:
    """Sample the state sequence given backward messages.

    z_t is drawn from the normalized product of the transition row of
    z_{t-1}, the emission likelihood, and the backward message; z_1 uses
    ``init_dist`` (the top-level weights).
    """
    ll = log_likelihood_table(targets, windows, emissions)
    _check_loglik_finite(ll)
    return _forward_sample(ll, messages, np.asarray(trans, dtype=float), init_dist, rng)


# ---------------------------------------------------------------------------
# transition structure updates
# ---------------------------------------------------------------------------

def count_transitions(z, n_states: int) -> np.ndarray:
    """n[k, q] = number of t >= 2 with z_{t-1} = k and z_t = q."""
    z = np.asarray(z)
    if z.size and (z.min() < 0 or z.max() >= n_states):
        raise InvalidParameterError(f"state labels must lie in [0, {n_states})")
    counts = np.zeros((n_states, n_states), dtype=np.int64)
    if z.size >= 2:
        np.add.at(counts, (z[:-1], z[1:]), 1)
    return counts


def sample_transition_rows(beta, counts, alpha: float, sticky: float,
                           rng: np.random.Generator) -> np.ndarray:
    """Resample each transition row from its Dirichlet conditional.

    Row k gets concentration ``alpha * beta_q + n_{k,q}``, plus the sticky
    mass on the diagonal entry only.
    """
    beta = np.asarray(beta, dtype=float)
    counts = np.asarray(counts, dtype=float)
    n_states = beta.size
    if counts.shape != (n_states, n_states):
        raise DimensionError(f"counts shape {counts.shape} does not match {n_states} states")
    conc = alpha * beta[None, :] + counts + sticky * np.eye(n_states)
    return np.stack([sample_dirichlet(conc[k], rng) for k in range(n_states)])


def _sample_table_counts(counts, beta, alpha: float, sticky: float,
                         rng: np.random.Generator) -> np.ndarray:
    """Auxiliary restaurant-table counts, sticky overrides removed.

    Each of the n_{j,k} transitions opens a new table with probability
    a / (a + i), a = alpha beta_k (+ sticky on the diagonal); diagonal tables
    are then thinned by the override probability sticky / (sticky + alpha
    beta_j).  Exact for the truncated model.
    """
    n_states = len(beta)
    mbar = np.zeros((n_states, n_states))
    for j in range(n_states):
        for k in range(n_states):
            n = int(counts[j, k])
            if n == 0:
                continue
            a = alpha * beta[k] + (sticky if j == k else 0.0)
            a = max(a, 1e-300)
            m = int((rng.random(n) < a / (a + np.arange(n))).sum())
            if j == k and sticky > 0 and m > 0:
                m -= int(rng.binomial(m, sticky / (sticky + alpha * beta[j])))
            mbar[j, k] = m
    return mbar


def sample_beta(counts, beta, alpha: float, gamma: float, sticky: float,
                rng: np.random.Generator, init_state: int | None = None) -> np.ndarray:
    """Resample the top-level weights given the transition counts.

    Draws auxiliary table counts per the hierarchical-DP restaurant scheme
    (with the sticky override correction) and then
    ``beta ~ Dir(gamma/L + mbar_col)``.  ``init_state`` adds the single
    pseudo-count contributed by z_1 ~ beta.
    """
    counts = np.asarray(counts)
    n_states = counts.shape[0]
    mbar = _sample_table_counts(counts, np.asarray(beta, dtype=float), alpha, sticky, rng)
    conc = gamma / n_states + mbar.sum(axis=0)
    if init_state is not None:
        conc[int(init_state)] += 1.0
    return sample_dirichlet(conc, rng)


# ---------------------------------------------------------------------------
# per-state emission updates
# ---------------------------------------------------------------------------

def _state_center_stats(assigned: np.ndarray, center_prior, fallback_cov):
    """Mean and covariance of a state's assigned windows.

    The window sufficient statistics (mean and covariance) define the
    center-resampling law; states with zero assigned observations fall back
    to the prototype/prior mean.
    """
    if assigned.shape[0] == 0:
        return center_prior
    mean = assigned.mean(axis=0)
    if assigned.shape[0] == 1:
        return mean, fallback_cov
    c = assigned - mean
    cov = c.T @ c / assigned.shape[0]
    dim = cov.shape[0]
    cov = cov + (1e-9 * max(float(np.trace(cov)) / dim, 1.0) + 1e-12) * np.eye(dim)
    return mean, cov


def _update_emission(em: Emission, targets, windows, z, k, prior: StickyHdpPrior,
                     config: GibbsConfig, rng, center_prior) -> Emission:
    eprior = prior.emission_prior
    if isinstance(em, RbfEmission) and config.center_resampling:
        mean, cov = _state_center_stats(windows[z == k], center_prior, eprior.center_cov)
        em = replace(em, centers=draw_centers(mean, cov, em.n_neurons, rng))
    stats = accumulate_stats(targets, windows, z, k, em, eprior)
    if config.fixed_weights:
        mean_w, _, iw = _posterior_pieces(stats, eprior)
        w, sigma = mean_w, sample_inverse_wishart(iw, rng)
    else:
        w, sigma = sample_posterior_emission(stats, eprior, rng)
    if isinstance(em, RbfEmission):
        return replace(em, weights=w, noise_cov=sigma)
    return LinearArEmission(coeffs=w, noise_cov=sigma, lag=em.lag)


# ---------------------------------------------------------------------------
# the sweep and the full sampler
# ---------------------------------------------------------------------------

def gibbs_sweep(state: ChainState, targets, windows, prior: StickyHdpPrior,
                config: GibbsConfig, rng: np.random.Generator,
                center_prior=None):
    """One full blocked sweep; returns the new chain state and diagnostics.

    Deterministic given the generator state.  The input state is never
    mutated, so a failed sweep leaves it untouched.
    """
    n_states = prior.truncation
    ll = log_likelihood_table(targets, windows, state.emissions)
    _check_loglik_finite(ll)
    table = _backward(ll, state.trans)
    marginal = marginal_log_likelihood(state.beta, ll, table)
    z = _forward_sample(ll, table, state.trans, state.beta, rng)
    counts = count_transitions(z, n_states)
    beta = sample_beta(counts, state.beta, prior.alpha, prior.gamma, prior.sticky,
                       rng, init_state=int(z[0]))
    trans = sample_transition_rows(beta, counts, prior.alpha, prior.sticky, rng)
    if center_prior is None:
        center_prior = (windows.mean(axis=0), prior.emission_prior.center_cov)
    emissions = [
        _update_emission(state.emissions[k], targets, windows, z, k, prior, config,
                         rng, center_prior)
        for k in range(n_states)
    ]
    return ChainState(z, trans, beta, emissions, counts), SweepInfo(marginal)


def joint_log_likelihood(state: ChainState, targets, windows) -> float:
    """log p(y, z | trans, beta, emissions) for a chain state."""
    ll = log_likelihood_table(targets, windows, state.emissions)
    z = state.z
    with np.errstate(divide="ignore"):
        out = float(np.log(state.beta[z[0]]))
        out += float(np.log(state.trans[z[:-1], z[1:]]).sum())
    out += float(ll[np.arange(z.size), z].sum())
    return out


def occupied_states(z, n_states: int) -> int:
    return int((np.bincount(np.asarray(z), minlength=n_states) > 0).sum())


def init_chain_state(targets, windows, prior: StickyHdpPrior,
                     template: EmissionTemplate, rng: np.random.Generator) -> ChainState:
    """Algorithm step 1: instantiate transitions and per-state emissions.

    RBF states get centers seeded at randomly chosen data windows; weights
    start at zero with a broad noise covariance, so the first sweep's
    segmentation is driven by the sticky prior and subsequent sweeps by fit.
    """
    n_states = prior.truncation
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    d = targets.shape[1]
    sigma0 = np.diag(np.maximum(targets.var(axis=0), 1e-6))
    basis = template.basis
    if template.kind == "rbf" and basis is None:
        basis = GaussianDecay(median_pairwise_distance(windows, template.metric))
    emissions = []
    for _ in range(n_states):
        if template.kind == "rbf":
            idx = rng.choice(windows.shape[0], size=template.n_neurons,
                             replace=windows.shape[0] < template.n_neurons)
            centers = windows[idx] + 1e-3 * rng.standard_normal((template.n_neurons,
                                                                 windows.shape[1]))
            emissions.append(RbfEmission(np.zeros((d, template.n_neurons)), centers,
                                         basis, template.metric, sigma0, template.lag))
        else:
            emissions.append(LinearArEmission(np.zeros((d, windows.shape[1])), sigma0,
                                              template.lag))
    beta = np.full(n_states, 1.0 / n_states)
    trans = (prior.alpha * beta[None, :] + prior.sticky * np.eye(n_states))
    trans /= trans.sum(axis=1, keepdims=True)
    z = np.zeros(targets.shape[0], dtype=np.int64)
    return ChainState(z, trans, beta, emissions, count_transitions(z, n_states))


@dataclass(eq=False)
class FitResult:
    samples: list
    point_estimate: ChainState
    loglik_trace: np.ndarray
    joint_trace: np.ndarray
    k_plus: int


def fit(series, prior: StickyHdpPrior, template: EmissionTemplate,
        config: GibbsConfig) -> FitResult:
    """Run burn-in plus retained sweeps on one series.

    The point estimate is the retained sweep with the largest joint
    log-likelihood; ``k_plus`` counts the states it actually occupies.  All
    randomness flows through a single generator seeded from the config, so
    a rerun reproduces every output byte for byte.
    """
    rng = np.random.default_rng(config.seed)
    targets, windows = build_lagged_matrix(series, template.lag)
    state = init_chain_state(targets, windows, prior, template, rng)
    center_prior = (windows.mean(axis=0), prior.emission_prior.center_cov)
    trace = np.empty(config.sweeps)
    samples: list[ChainState] = []
    joints: list[float] = []
    for sweep in range(config.sweeps):
        state, info = gibbs_sweep(state, targets, windows, prior, config, rng,
                                  center_prior=center_prior)
        trace[sweep] = info.marginal_loglik
        if sweep >= config.burn_in and (sweep - config.burn_in) % config.thinning == 0:
            samples.append(state)
            joints.append(joint_log_likelihood(state, targets, windows))
    joint_trace = np.asarray(joints)
    best = int(np.argmax(joint_trace))
    point = samples[best]
    return FitResult(samples, point, trace, joint_trace,
                     occupied_states(point.z, prior.truncation))
