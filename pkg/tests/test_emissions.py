import numpy as np
import pytest
from scipy import stats

from rbfhmm.emissions import (
    EmissionHyperprior,
    LinearArEmission,
    PrototypeSet,
    RbfEmission,
    TimeSeries,
    accumulate_stats,
    build_lagged_matrix,
    feature_vector,
    init_centers_from_prototypes,
    linear_feature_map,
    log_likelihood,
    predict_mean,
    resample_centers,
    sample_posterior_emission,
    solve_weights_map,
)
from rbfhmm.errors import (
    InsufficientDataError,
    SingularityError,
)
from rbfhmm.kernels import GaussianDecay


def make_rbf(weights, centers, eta=1.0, noise=1.0, lag=1, metric="euclidean"):
    weights = np.atleast_2d(np.asarray(weights, dtype=float))
    return RbfEmission(weights, np.atleast_2d(centers), GaussianDecay(eta), metric,
                       noise * np.eye(weights.shape[0]), lag)


def default_prior(d=1, j=1, ridge=1e-3, dof=None, scale=0.1):
    dof = dof if dof is not None else d + 2.0
    return EmissionHyperprior(dof, scale * np.eye(d), np.eye(j), ridge=ridge)


# ---------------------------------------------------------------------------
# lagged windows
# ---------------------------------------------------------------------------

def test_lagged_matrix_hand_case():
    targets, windows = build_lagged_matrix([1.0, 2.0, 3.0, 4.0], 2)
    assert targets.ravel().tolist() == [3.0, 4.0]
    assert windows.tolist() == [[2.0, 1.0], [3.0, 2.0]]


def test_lagged_matrix_boundary():
    with pytest.raises(InsufficientDataError):
        build_lagged_matrix([1.0, 2.0, 3.0], 3)


def test_lagged_matrix_shapes_multivariate():
    series = np.arange(10.0).reshape(5, 2)
    targets, windows = build_lagged_matrix(series, 3)
    assert targets.shape == (2, 2)
    assert windows.shape == (2, 6)
    # most recent observation leads the flattened window
    assert windows[0].tolist() == [4.0, 5.0, 2.0, 3.0, 0.0, 1.0]


def test_timeseries_wraps_1d():
    ts = TimeSeries([1.0, 2.0, 3.0], sampling_rate=50.0)
    assert ts.values.shape == (3, 1)
    assert ts.dim == 1 and ts.length == 3


# ---------------------------------------------------------------------------
# feature vector / prediction / likelihood
# ---------------------------------------------------------------------------

def test_feature_vector_zero_distance():
    em = make_rbf([[2.0]], [[0.5]])
    assert feature_vector([0.5], em)[0] == 1.0


def test_feature_vector_analytic():
    em = make_rbf([[1.0]], [[0.0]], eta=1.0)
    phi = feature_vector([2.0], em)
    assert phi[0] == pytest.approx(np.exp(-2.0))


def test_feature_vector_center_permutation():
    em = make_rbf(np.ones((1, 3)), [[0.0], [1.0], [2.0]])
    perm = make_rbf(np.ones((1, 3)), [[2.0], [0.0], [1.0]])
    phi = feature_vector([0.7], em)
    assert feature_vector([0.7], perm).tolist() == [phi[2], phi[0], phi[1]]


def test_feature_vector_matrix_vs_flat_bit_identical():
    em = RbfEmission(np.ones((2, 3)), np.arange(12.0).reshape(3, 4),
                     GaussianDecay(1.5), "euclidean", np.eye(2), 2)
    flat = np.array([0.3, -1.0, 2.0, 0.1])
    matrix = flat.reshape(2, 2)
    a = feature_vector(flat, em)
    b = feature_vector(matrix, em)
    assert (a == b).all()


def test_predict_mean_zero_weights():
    em = make_rbf([[0.0, 0.0]], [[0.0], [1.0]])
    assert predict_mean([0.3], em).tolist() == [0.0]


def test_predict_mean_analytic():
    em = make_rbf([[2.0]], [[0.0]], eta=1.0)
    assert predict_mean([2.0], em)[0] == pytest.approx(2.0 * np.exp(-2.0))


def test_predict_mean_linear_in_weights():
    centers = [[0.0], [1.0], [-1.0]]
    w1 = np.array([[1.0, -0.5, 2.0]])
    w2 = np.array([[0.3, 0.7, -1.0]])
    window = [0.4]
    lhs = predict_mean(window, make_rbf(w1 + w2, centers))
    rhs = predict_mean(window, make_rbf(w1, centers)) + predict_mean(window, make_rbf(w2, centers))
    assert lhs == pytest.approx(rhs)


def test_log_likelihood_peak_of_unit_normal():
    em = make_rbf([[1.0]], [[0.0]])
    window = [0.5]
    y = predict_mean(window, em)
    assert log_likelihood(y, window, em) == pytest.approx(-0.5 * np.log(2 * np.pi))


def test_log_likelihood_unit_residual():
    em = make_rbf([[0.0]], [[0.0]])
    assert log_likelihood([1.0], [0.3], em) == pytest.approx(-0.5 * np.log(2 * np.pi) - 0.5)


def test_log_likelihood_normalizes_by_quadrature():
    # integrate the density over a fine grid; mass should be 1
    em = make_rbf([[1.5]], [[0.2]], noise=0.7)
    window = [0.4]
    mean = predict_mean(window, em)[0]
    ys = np.linspace(mean - 12, mean + 12, 20_001)
    dens = np.exp([log_likelihood([y], window, em) for y in ys])
    mass = np.trapezoid(dens, ys)
    assert mass == pytest.approx(1.0, abs=1e-4)


def test_log_likelihood_entropy_identity():
    # average log density of model draws approaches -differential entropy
    rng = np.random.default_rng(0)
    sigma2 = 0.5
    em = make_rbf([[1.0]], [[0.0]], noise=sigma2)
    window = [0.8]
    mean = predict_mean(window, em)[0]
    draws = mean + np.sqrt(sigma2) * rng.standard_normal(50_000)
    avg = np.mean([log_likelihood([y], window, em) for y in draws])
    want = -0.5 * np.log(2 * np.pi * np.e * sigma2)
    assert avg == pytest.approx(want, abs=3 * 1.0 / np.sqrt(draws.size))


def test_log_likelihood_gradient_matches_score():
    # numerical gradient in W vs analytic Sigma^{-1} (y - W phi) phi^T
    rng = np.random.default_rng(1)
    d, j = 2, 3
    w = rng.standard_normal((d, j))
    centers = rng.standard_normal((j, 2))
    cov = np.array([[1.2, 0.3], [0.3, 0.8]])
    em = RbfEmission(w, centers, GaussianDecay(1.0), "euclidean", cov, 1)
    window = rng.standard_normal(2)
    y = rng.standard_normal(d)
    phi = feature_vector(window, em)
    analytic = np.linalg.solve(cov, y - w @ phi)[:, None] * phi[None, :]
    h = 1e-6
    numeric = np.zeros_like(w)
    for a in range(d):
        for b in range(j):
            wp, wm = w.copy(), w.copy()
            wp[a, b] += h
            wm[a, b] -= h
            fp = log_likelihood(y, window, RbfEmission(wp, centers, em.basis, "euclidean", cov, 1))
            fm = log_likelihood(y, window, RbfEmission(wm, centers, em.basis, "euclidean", cov, 1))
            numeric[a, b] = (fp - fm) / (2 * h)
    assert np.allclose(numeric, analytic, rtol=1e-5, atol=1e-7)


def test_linear_emission_matches_var_density():
    # identity feature map reproduces the plain VAR likelihood exactly
    rng = np.random.default_rng(2)
    coeffs = rng.standard_normal((2, 4))
    cov = np.array([[1.0, 0.2], [0.2, 1.5]])
    em = LinearArEmission(coeffs, cov, 2)
    window = rng.standard_normal(4)
    y = rng.standard_normal(2)
    want = stats.multivariate_normal(mean=coeffs @ window, cov=cov).logpdf(y)
    assert log_likelihood(y, window, em) == pytest.approx(want, abs=1e-10)


def test_linear_feature_map_identity():
    assert linear_feature_map([[2.0, 1.0]]).tolist() == [2.0, 1.0]
    assert linear_feature_map(np.arange(6.0).reshape(3, 2)).shape == (6,)


# ---------------------------------------------------------------------------
# centers from prototypes
# ---------------------------------------------------------------------------

def test_init_centers_degenerate_noise():
    protos = PrototypeSet("a", np.array([[1.0, 2.0], [3.0, 4.0]]))
    centers = init_centers_from_prototypes(protos, 5, 1e-12 * np.eye(2),
                                           np.random.default_rng(0))
    assert np.all(np.abs(centers - [2.0, 3.0]) < 1e-5)


def test_init_centers_mc_mean():
    protos = PrototypeSet("a", np.array([[1.0], [3.0]]))
    centers = init_centers_from_prototypes(protos, 10_000, 4.0 * np.eye(1),
                                           np.random.default_rng(1))
    stderr = 2.0 / np.sqrt(10_000)
    assert abs(centers.mean() - 2.0) <= 3 * stderr


def test_init_centers_singleton_prototype():
    protos = PrototypeSet("a", np.array([[5.0, -1.0]]))
    assert protos.mean.tolist() == [5.0, -1.0]


def test_empty_prototype_set_rejected():
    with pytest.raises(InsufficientDataError):
        PrototypeSet("a", np.empty((0, 2)))


def test_resample_centers_same_contract():
    rng = np.random.default_rng(2)
    centers = resample_centers(np.array([1.0]), 1e-12 * np.eye(1), 4, rng)
    assert np.all(np.abs(centers - 1.0) < 1e-5)


# ---------------------------------------------------------------------------
# sufficient statistics
# ---------------------------------------------------------------------------

def test_stats_prior_only():
    em = make_rbf([[0.0]], [[0.0]])
    prior = default_prior(ridge=1.0)
    stats_ = accumulate_stats(np.zeros((3, 1)), np.zeros((3, 1)),
                              np.array([1, 1, 1]), 0, em, prior)
    assert stats_.count == 0
    assert stats_.s_phiphi.tolist() == [[1.0]]
    assert stats_.s_yphi.tolist() == [[0.0]]
    assert stats_.s_yy.tolist() == [[0.0]]


def test_stats_single_observation():
    em = make_rbf([[0.0]], [[0.3]])
    prior = default_prior(ridge=1e-12)
    windows = np.array([[0.3]])  # zero distance so phi = 1
    targets = np.array([[2.0]])
    stats_ = accumulate_stats(targets, windows, np.array([0]), 0, em, prior)
    assert stats_.count == 1
    assert stats_.s_phiphi[0, 0] == pytest.approx(1.0, abs=1e-10)
    assert stats_.s_yphi[0, 0] == pytest.approx(2.0)
    assert stats_.s_yy[0, 0] == pytest.approx(4.0)


def test_stats_additive_over_subsets():
    rng = np.random.default_rng(3)
    em = make_rbf([[0.0, 0.0]], [[0.0], [1.0]])
    prior = default_prior(j=2, ridge=0.5)
    targets = rng.standard_normal((20, 1))
    windows = rng.standard_normal((20, 1))
    z = np.zeros(20, dtype=int)
    full = accumulate_stats(targets, windows, z, 0, em, prior)
    a = accumulate_stats(targets[:12], windows[:12], z[:12], 0, em, prior)
    b = accumulate_stats(targets[12:], windows[12:], z[12:], 0, em, prior)
    ridge = 0.5 * np.eye(2)
    assert np.allclose(full.s_phiphi, a.s_phiphi + b.s_phiphi - ridge, atol=1e-12)
    assert np.allclose(full.s_yphi, a.s_yphi + b.s_yphi, atol=1e-12)
    assert np.allclose(full.s_yy, a.s_yy + b.s_yy, atol=1e-12)


# ---------------------------------------------------------------------------
# conjugate posterior
# ---------------------------------------------------------------------------

def test_posterior_no_data_equals_prior():
    em = make_rbf([[0.0]], [[0.0]])
    prior = default_prior(dof=8.0, scale=0.5, ridge=1.0)
    stats_ = accumulate_stats(np.zeros((1, 1)), np.zeros((1, 1)),
                              np.array([5]), 0, em, prior)
    rng = np.random.default_rng(4)
    draws_w = []
    draws_s = []
    for _ in range(20_000):
        w, s = sample_posterior_emission(stats_, prior, rng)
        draws_w.append(w[0, 0])
        draws_s.append(s[0, 0])
    draws_w = np.asarray(draws_w)
    draws_s = np.asarray(draws_s)
    assert abs(draws_w.mean()) <= 3 * draws_w.std() / np.sqrt(draws_w.size)
    # prior IW(8, 0.5) mean = 0.5 / 6
    assert abs(draws_s.mean() - 0.5 / 6) <= 3 * draws_s.std() / np.sqrt(draws_s.size)


def test_posterior_recovers_regression():
    # y = 3 phi + noise(0.01): posterior of W concentrates at the ridge solution
    rng = np.random.default_rng(5)
    n = 1000
    phi = rng.uniform(0.1, 1.0, size=n)
    y = 3.0 * phi + 0.1 * rng.standard_normal(n)
    prior = default_prior(dof=3.0, scale=0.01, ridge=1e-3)
    stats_ = _scalar_stats(phi, y, prior)
    ridge_solution = (phi @ y) / (phi @ phi + 1e-3)
    draws = np.array([sample_posterior_emission(stats_, prior, np.random.default_rng(6 + i))[0][0, 0]
                      for i in range(10_000)])
    stderr = draws.std() / np.sqrt(draws.size)
    assert abs(draws.mean() - ridge_solution) <= 3 * stderr
    assert abs(draws.mean() - 3.0) <= 0.05
    sigma_draws = np.array([sample_posterior_emission(stats_, prior, np.random.default_rng(10_000 + i))[1][0, 0]
                            for i in range(2_000)])
    assert abs(sigma_draws.mean() - 0.01) <= 0.5 * 0.01


def _scalar_stats(phi, y, prior):
    from rbfhmm.emissions import SufficientStats

    s_phiphi = np.array([[phi @ phi + prior.ridge]])
    s_yphi = np.array([[phi @ y]])
    s_yy = np.array([[y @ y]])
    return SufficientStats(s_phiphi, s_yphi, s_yy, phi.size)


def test_posterior_mean_equals_normal_equations():
    rng = np.random.default_rng(7)
    em = make_rbf(np.zeros((1, 3)), [[0.0], [1.0], [-1.0]])
    prior = default_prior(j=3, ridge=0.2)
    windows = rng.standard_normal((50, 1))
    targets = rng.standard_normal((50, 1))
    z = np.zeros(50, dtype=int)
    stats_ = accumulate_stats(targets, windows, z, 0, em, prior)
    w_map = solve_weights_map(stats_)
    phi = em.features(windows)
    direct = np.linalg.solve(phi.T @ phi + 0.2 * np.eye(3), phi.T @ targets).T
    assert np.allclose(w_map, direct, atol=1e-10)


def test_posterior_conjugate_consistency_with_fixed_sigma():
    # textbook Bayesian linear regression: W | data has mean m and
    # variance E[Sigma] / s_phiphi under the matrix-normal draw
    rng = np.random.default_rng(8)
    phi = rng.uniform(0.5, 1.5, 200)
    y = 1.7 * phi + 0.3 * rng.standard_normal(200)
    prior = default_prior(dof=5.0, scale=0.2, ridge=0.1)
    stats_ = _scalar_stats(phi, y, prior)
    draws = np.array([sample_posterior_emission(stats_, prior, np.random.default_rng(50_000 + i))[0][0, 0]
                      for i in range(10_000)])
    m = stats_.s_yphi[0, 0] / stats_.s_phiphi[0, 0]
    s_cond = stats_.s_yy[0, 0] - stats_.s_yphi[0, 0] ** 2 / stats_.s_phiphi[0, 0]
    dof_post = prior.iw_dof + 200
    e_sigma = (s_cond + 0.2) / (dof_post - 2)
    want_var = e_sigma / stats_.s_phiphi[0, 0]
    assert abs(draws.mean() - m) <= 3 * draws.std() / np.sqrt(draws.size)
    var = draws.var()
    # sample variance of ~t-distributed draws; allow 10% slack
    assert var == pytest.approx(want_var, rel=0.1)


def test_solve_weights_scalar():
    from rbfhmm.emissions import SufficientStats

    stats_ = SufficientStats([[2.0]], [[6.0]], [[18.0]], 3)
    assert solve_weights_map(stats_)[0, 0] == pytest.approx(3.0)


def test_solve_weights_exact_interpolation():
    # J = N distinct centers: residuals vanish at machine precision
    rng = np.random.default_rng(9)
    windows = np.array([[0.0], [0.5], [1.2], [2.0], [-1.0]])
    targets = rng.standard_normal((5, 1))
    em = make_rbf(np.zeros((1, 5)), windows.copy(), eta=1.0)
    prior = default_prior(j=5, ridge=1e-300)
    stats_ = accumulate_stats(targets, windows, np.zeros(5, dtype=int), 0, em, prior)
    w = solve_weights_map(stats_)
    resid = targets - em.features(windows) @ w.T
    assert np.max(np.abs(resid)) < 1e-8


def test_solve_weights_ridge_limit():
    from rbfhmm.emissions import SufficientStats

    stats_ = SufficientStats([[1e12]], [[6.0]], [[18.0]], 3)
    assert abs(solve_weights_map(stats_)[0, 0]) < 1e-10


def test_solve_weights_singular():
    from rbfhmm.emissions import SufficientStats

    stats_ = SufficientStats(np.zeros((2, 2)), np.zeros((1, 2)), [[1.0]], 2)
    with pytest.raises(SingularityError):
        solve_weights_map(stats_)


def test_linear_pipeline_recovers_ar_coefficient():
    # full stats/posterior machinery with the identity feature map on AR(1)
    rng = np.random.default_rng(10)
    t = 2000
    y = np.zeros(t)
    for i in range(1, t):
        y[i] = 0.5 * y[i - 1] + rng.standard_normal()
    targets, windows = build_lagged_matrix(y, 1)
    em = LinearArEmission(np.zeros((1, 1)), np.eye(1), 1)
    prior = default_prior(ridge=1e-6)
    stats_ = accumulate_stats(targets, windows, np.zeros(t - 1, dtype=int), 0, em, prior)
    w = solve_weights_map(stats_)
    assert abs(w[0, 0] - 0.5) < 0.05
