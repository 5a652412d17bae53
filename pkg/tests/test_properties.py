"""Property suites: each spec invariant checked over at least 1000 generated
cases under hypothesis."""

import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from rbfhmm.kernels import distance, sample_dirichlet
from rbfhmm.hmm import sample_beta, sample_transition_rows
from rbfhmm.metrics import matched_state_accuracy, spectral_features

SUITE = settings(max_examples=1000, deadline=None,
                 suppress_health_check=[HealthCheck.too_slow,
                                        HealthCheck.filter_too_much,
                                        HealthCheck.data_too_large])

finite = st.floats(-100.0, 100.0, allow_nan=False, allow_infinity=False)


@st.composite
def vector_pairs(draw):
    dim = draw(st.integers(1, 8))
    a = np.asarray(draw(st.lists(finite, min_size=dim, max_size=dim)))
    b = np.asarray(draw(st.lists(finite, min_size=dim, max_size=dim)))
    return a, b


# ---------------------------------------------------------------------------
# distance axioms
# ---------------------------------------------------------------------------

@SUITE
@given(vector_pairs())
def test_distance_axioms(pair):
    a, b = pair
    for metric in ("euclidean", "manhattan"):
        d_ab = distance(a, b, metric)
        assert d_ab >= 0.0
        assert d_ab == distance(b, a, metric)
        assert distance(a, a, metric) == 0.0
        if not np.array_equal(a, b):
            assert d_ab > 0.0 or np.allclose(a, b)
    if np.linalg.norm(a) > 1e-6 and np.linalg.norm(b) > 1e-6:
        d_cos = distance(a, b, "cosine")
        assert 0.0 <= d_cos <= 2.0
        assert d_cos == pytest.approx(distance(b, a, "cosine"), abs=1e-12)
        # parallel vectors with positive scaling are at dissimilarity zero
        assert distance(a, 2.5 * a, "cosine") <= 1e-9


# ---------------------------------------------------------------------------
# Dirichlet draws stay on the simplex
# ---------------------------------------------------------------------------

@SUITE
@given(st.integers(1, 12), st.integers(0, 2 ** 31 - 1),
       st.floats(1e-3, 1e3, allow_nan=False))
def test_dirichlet_simplex(size, seed, scale):
    rng = np.random.default_rng(seed)
    conc = scale * (0.05 + rng.random(size))
    out = sample_dirichlet(conc, rng)
    assert abs(out.sum() - 1.0) <= 1e-12
    assert np.all(out >= 0.0)
    assert out.shape == (size,)


# ---------------------------------------------------------------------------
# transition rows and top-level weights stay stochastic
# ---------------------------------------------------------------------------

@SUITE
@given(st.integers(1, 8), st.integers(0, 2 ** 31 - 1),
       st.floats(0.01, 50.0), st.floats(0.0, 50.0), st.floats(0.05, 20.0))
def test_row_stochasticity(n_states, seed, alpha, sticky, gamma):
    rng = np.random.default_rng(seed)
    beta = sample_dirichlet(np.full(n_states, max(gamma / n_states, 1e-3)), rng)
    beta = np.maximum(beta, 1e-9)
    beta /= beta.sum()
    counts = rng.integers(0, 50, size=(n_states, n_states))
    trans = sample_transition_rows(beta, counts, alpha, sticky, rng)
    assert trans.shape == (n_states, n_states)
    assert np.allclose(trans.sum(axis=1), 1.0, atol=1e-10)
    assert np.all(trans >= 0.0)
    new_beta = sample_beta(counts, beta, alpha, gamma, sticky, rng,
                           init_state=int(rng.integers(n_states)))
    assert abs(new_beta.sum() - 1.0) <= 1e-12
    assert np.all(new_beta >= 0.0)


# ---------------------------------------------------------------------------
# permutation matching equals exhaustive search
# ---------------------------------------------------------------------------

def _brute_force(z_inf, z_true):
    inf_labels = sorted(set(z_inf))
    true_labels = sorted(set(z_true))
    pool = true_labels + [None] * max(0, len(inf_labels) - len(true_labels))
    best = 0
    for assign in itertools.permutations(pool, len(inf_labels)):
        agree = sum(int(((z_inf == lab) & (z_true == target)).sum())
                    for lab, target in zip(inf_labels, assign) if target is not None)
        best = max(best, agree)
    return best / len(z_inf)


@SUITE
@given(st.integers(2, 40), st.integers(0, 2 ** 31 - 1),
       st.integers(1, 4), st.integers(1, 4))
def test_permutation_matching_oracle(n, seed, k_true, k_inf):
    rng = np.random.default_rng(seed)
    z_true = rng.integers(0, k_true, size=n)
    z_inf = rng.integers(0, k_inf, size=n)
    match = matched_state_accuracy(z_inf, z_true)
    assert match.accuracy == pytest.approx(_brute_force(z_inf, z_true))
    assert match.accuracy >= (z_inf == z_true).mean() - 1e-12
    # injective on the matched labels
    targets = list(match.mapping.values())
    assert len(targets) == len(set(targets))


# ---------------------------------------------------------------------------
# spectral features ignore amplitude scaling
# ---------------------------------------------------------------------------

@SUITE
@given(st.integers(0, 2 ** 31 - 1), st.floats(1e-2, 1e2, allow_nan=False),
       st.integers(64, 512))
def test_spectral_scale_invariance(seed, scale, length):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(length)
    fs = 173.61
    a = spectral_features(x, fs)
    b = spectral_features(scale * x, fs)
    assert abs(a.fundamental_hz - b.fundamental_hz) <= fs / length + 1e-9
    assert a.spectral_entropy == pytest.approx(b.spectral_entropy, rel=1e-6, abs=1e-9)
    assert a.alpha_band_energy == pytest.approx(b.alpha_band_energy, rel=1e-6, abs=1e-9)
    assert 0.0 <= a.spectral_entropy <= 1.0
    assert 0.0 <= a.alpha_band_energy <= 1.0
