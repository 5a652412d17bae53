"""Piecewise non-stationary data from a known switching RBF-AR process.

Ground-truth states are radial-basis autoregressions with matrix-normal
weights and Gaussian centers; the latent sequence follows a pre-defined
transition matrix.  Used for the unsupervised segmentation study.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .emissions import RbfEmission, TimeSeries
from .errors import (
    DivergenceError,
    GenerationError,
    InvalidParameterError,
)
from .kernels import (
    BasisFunction,
    GaussianDecay,
    MatrixNormalParams,
    sample_matrix_normal,
)

DIVERGENCE_BOUND = 1e8


@dataclass(frozen=True, eq=False)
class SynthSpec:
    """Everything needed to simulate one switching series."""

    n_states: int
    trans_actual: np.ndarray
    emissions: tuple
    length: int
    lag: int
    dim: int
    seed: int = 0

    def __post_init__(self):
        trans = np.asarray(self.trans_actual, dtype=float)
        if trans.shape != (self.n_states, self.n_states):
            raise InvalidParameterError(
                f"transition matrix shape {trans.shape} does not match {self.n_states} states")
        if not np.allclose(trans.sum(axis=1), 1.0, atol=1e-10) or np.any(trans < 0):
            raise InvalidParameterError("transition matrix rows must be probability vectors")
        if len(self.emissions) != self.n_states:
            raise InvalidParameterError("need one emission per state")
        if self.length <= self.lag:
            raise InvalidParameterError("series length must exceed the lag")
        object.__setattr__(self, "trans_actual", trans)
        object.__setattr__(self, "emissions", tuple(self.emissions))


@dataclass(frozen=True, eq=False)
class SynthOutput:
    series: TimeSeries
    z_true: np.ndarray
    spec: SynthSpec


def _median_intercenter(centers: np.ndarray) -> float:
    d = pdist(centers)
    med = float(np.median(d)) if d.size else 1.0
    return med if med > 0 else 1.0


def _simulate_state_path(em: RbfEmission, steps: int, rng: np.random.Generator,
                         bound: float) -> bool:
    """Warm up a single state's dynamics and report whether it stayed bounded."""
    d = em.dim
    buf = np.zeros(em.lag * d)
    chol = np.linalg.cholesky(em.noise_cov)
    for _ in range(steps):
        phi = em.features(buf[None, :])[0]
        y = em.weights @ phi + chol @ rng.standard_normal(d)
        if np.any(np.abs(y) > bound):
            return False
        buf = np.concatenate([y, buf[:-d]]) if em.lag > 1 else y.copy()
    return True


def sample_ground_truth_emissions(n_states: int, n_neurons: int, lag: int, dim: int,
                                  weight_law: MatrixNormalParams,
                                  rng: np.random.Generator,
                                  center_scale: float = 1.0,
                                  noise_var: float = 0.1,
                                  basis: BasisFunction | None = None,
                                  metric: str = "euclidean",
                                  stability_check: bool = True,
                                  warmup: int = 200,
                                  bound: float = 1e3,
                                  max_rejects: int = 100) -> list[RbfEmission]:
    """Draw ground-truth RBF-AR states.

    Weights come from the matrix normal law, centers are i.i.d. Gaussian with
    scale ``center_scale``, and with ``basis=None`` each state's Gaussian
    decay length-scale is its median inter-center distance.  Parameter sets
    whose warm-up simulation diverges are rejected and redrawn.
    """
    if noise_var <= 0:
        raise InvalidParameterError(f"noise variance must be positive, got {noise_var}")
    out = []
    for _ in range(n_states):
        rejects = 0
        while True:
            w = sample_matrix_normal(weight_law, rng)
            centers = center_scale * rng.standard_normal((n_neurons, lag * dim))
            b = basis if basis is not None else GaussianDecay(_median_intercenter(centers))
            em = RbfEmission(w, centers, b, metric, noise_var * np.eye(dim), lag)
            if not stability_check or _simulate_state_path(em, warmup, rng, bound):
                out.append(em)
                break
            rejects += 1
            if rejects > max_rejects:
                raise GenerationError(
                    f"exceeded {max_rejects} consecutive stability rejections")
    return out


def simulate(spec: SynthSpec, rng: np.random.Generator) -> SynthOutput:
    """Simulate the switching process defined by ``spec``.

    The first ``lag`` values are standard normal, the initial state uniform,
    and thereafter z follows the transition matrix while y follows the active
    state's autoregression.
    """
    t_total, lag, d = spec.length, spec.lag, spec.dim
    y = np.zeros((t_total, d))
    y[:lag] = rng.standard_normal((lag, d))
    z = np.empty(t_total - lag, dtype=np.int64)
    chols = [np.linalg.cholesky(em.noise_cov) for em in spec.emissions]
    state = int(rng.integers(spec.n_states))
    for t in range(lag, t_total):
        i = t - lag
        if i > 0:
            state = int(np.searchsorted(np.cumsum(spec.trans_actual[state]),
                                        rng.random(), side="right"))
            state = min(state, spec.n_states - 1)
        z[i] = state
        em = spec.emissions[state]
        window = y[t - lag:t][::-1].reshape(-1)
        phi = em.features(window[None, :])[0]
        y[t] = em.weights @ phi + chols[state] @ rng.standard_normal(d)
        if np.any(np.abs(y[t]) > DIVERGENCE_BOUND):
            raise DivergenceError(f"series diverged at t={t} in state {state}")
    return SynthOutput(TimeSeries(y), z, spec)


def default_transition_matrix(n_states: int, self_transition: float = 0.95) -> np.ndarray:
    """Diagonally dominant transition matrix with uniform off-diagonal mass."""
    if n_states == 1:
        return np.ones((1, 1))
    if not 0 < self_transition < 1:
        raise InvalidParameterError("self-transition probability must lie in (0, 1)")
    off = (1.0 - self_transition) / (n_states - 1)
    trans = np.full((n_states, n_states), off)
    np.fill_diagonal(trans, self_transition)
    return trans


def default_synth_spec(seed: int = 0, n_states: int = 6, length: int = 10000,
                       lag: int = 1, dim: int = 1, n_neurons: int = 5,
                       noise_var: float = 0.1, self_transition: float = 0.95,
                       weight_scale: float = 2.0,
                       center_scale: float = 1.0) -> SynthSpec:
    """Paper-scale defaults: six RBF-AR states over a 10k-step 1-d series."""
    rng = np.random.default_rng(seed)
    weight_law = MatrixNormalParams(np.zeros((dim, n_neurons)),
                                    weight_scale ** 2 * np.eye(dim),
                                    np.eye(n_neurons))
    emissions = sample_ground_truth_emissions(
        n_states, n_neurons, lag, dim, weight_law, rng,
        center_scale=center_scale, noise_var=noise_var)
    trans = default_transition_matrix(n_states, self_transition)
    return SynthSpec(n_states, trans, tuple(emissions), length, lag, dim, seed)
