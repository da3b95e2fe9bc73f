"""Model assembly, square-root application, adjoint, and cost accounting."""

import numpy as np
import pytest
from threadpoolctl import threadpool_limits

from icrgp import (
    IdentityChart,
    Kernel,
    LatentVector,
    LogExperimentChart,
    LogSpacedChart,
    Matern32,
    RefinementSpec,
    apply_sqrt,
    apply_sqrt_adjoint,
    base_size_for_target,
    build_model,
    draw_latent,
    final_size,
    gram,
    implicit_covariance,
    inverse_transform,
    latent_from_flat,
    latent_zeros,
    nearest_base_size,
    predicted_cost,
    sample,
    standardized_log_prob,
)

LN_2 = 0.6931471805599453
NEG_HALF_LOG_2PI = -0.9189385332046727


def small_model(n0=10, n_lvl=1, n_csz=3, n_fsz=2, chart=None, rho=1.0):
    kernel = Matern32(rho=rho)
    spec = RefinementSpec(n0=n0, n_lvl=n_lvl, n_csz=n_csz, n_fsz=n_fsz)
    return build_model(kernel, chart or IdentityChart(), spec)


# --- exactness and composition ------------------------------------------------


def test_base_level_model_is_exact():
    model = small_model(n0=40, n_lvl=0)
    k_true = gram(model.kernel, model.modeled_coords, model.modeled_coords)
    np.testing.assert_allclose(implicit_covariance(model), k_true, atol=1e-12)


def test_single_window_model_matches_dense_conditional_composition():
    # Oracle first: with one window the realized covariance decomposes as
    # [S; R S | L] so cov = blocks of K00, K00 R', R K00, R K00 R' + L L'.
    kernel = Matern32(rho=1.0)
    model = small_model(n0=3, n_lvl=1)
    pts0 = np.array([0.0, 1.0, 2.0])
    fine = np.array([0.75, 1.25])
    k_cc = gram(kernel, pts0, pts0)
    k_fc = gram(kernel, fine, pts0)
    k_ff = gram(kernel, fine, fine)
    mean_filter = np.linalg.solve(k_cc, k_fc.T).T
    want = mean_filter @ k_cc @ mean_filter.T + (k_ff - mean_filter @ k_fc.T)
    got = implicit_covariance(model)
    assert got.shape == (2, 2)
    np.testing.assert_allclose(got, want, atol=1e-9)
    np.testing.assert_allclose(model.modeled_coords, fine, atol=1e-15)


def test_apply_sqrt_is_linear():
    model = small_model(n0=12, n_lvl=3)
    rng = np.random.default_rng(0)
    xi1 = rng.standard_normal(model.latent_size)
    xi2 = rng.standard_normal(model.latent_size)
    lhs = apply_sqrt(model, 2.5 * xi1 - 0.75 * xi2)
    rhs = 2.5 * apply_sqrt(model, xi1) - 0.75 * apply_sqrt(model, xi2)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_apply_sqrt_accepts_latent_vector_and_flat():
    model = small_model()
    rng = np.random.default_rng(1)
    latent = draw_latent(model, rng)
    np.testing.assert_array_equal(
        apply_sqrt(model, latent), apply_sqrt(model, latent.to_flat())
    )


def test_batched_apply_matches_single_columns():
    model = small_model(n0=12, n_lvl=2, n_csz=5, n_fsz=4)
    rng = np.random.default_rng(2)
    flat = rng.standard_normal((model.latent_size, 7))
    batched = apply_sqrt(model, flat)
    assert batched.shape == (model.n, 7)
    for j in range(7):
        np.testing.assert_allclose(
            batched[:, j], apply_sqrt(model, flat[:, j]), atol=1e-13
        )


@pytest.mark.parametrize(
    "chart", [IdentityChart(), LogSpacedChart(r0=0.1, a=0.2)]
)
def test_adjoint_identity(chart):
    model = small_model(n0=13, n_lvl=3, n_csz=5, n_fsz=4, chart=chart)
    rng = np.random.default_rng(3)
    for _ in range(5):
        xi = rng.standard_normal(model.latent_size)
        cotangent = rng.standard_normal(model.n)
        lhs = float(cotangent @ apply_sqrt(model, xi))
        rhs = float(apply_sqrt_adjoint(model, cotangent).to_flat() @ xi)
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


def test_adjoint_is_gradient_of_linear_functional():
    # For g(xi) = c . apply_sqrt(xi), central differences must recover the
    # adjoint-transported coefficients.
    model = small_model(n0=10, n_lvl=2)
    rng = np.random.default_rng(4)
    c = rng.standard_normal(model.n)
    grad = apply_sqrt_adjoint(model, c).to_flat()
    xi = rng.standard_normal(model.latent_size)
    step = 1e-5
    for _ in range(4):
        direction = rng.standard_normal(model.latent_size)
        plus = float(c @ apply_sqrt(model, xi + step * direction))
        minus = float(c @ apply_sqrt(model, xi - step * direction))
        fd = (plus - minus) / (2.0 * step)
        assert fd == pytest.approx(float(grad @ direction), rel=1e-7, abs=1e-8)


def test_monte_carlo_moments_match_realized_covariance():
    model = small_model(n0=10, n_lvl=1)  # n = 16
    assert model.n == 16
    k_model = implicit_covariance(model)
    n_draws = 200_000
    rng = np.random.default_rng(5)
    values = np.empty((model.n, n_draws))
    chunk = 50_000
    for start in range(0, n_draws, chunk):
        flat = rng.standard_normal((model.latent_size, chunk))
        values[:, start : start + chunk] = apply_sqrt(model, flat)
    mean = values.mean(axis=1)
    mean_sigma = np.sqrt(np.diag(k_model) / n_draws)
    assert np.all(np.abs(mean) <= 4.0 * mean_sigma)
    sample_cov = (values @ values.T) / n_draws
    diag = np.diag(k_model)
    cov_sigma = np.sqrt((np.outer(diag, diag) + k_model**2) / n_draws)
    assert np.all(np.abs(sample_cov - k_model) <= 5.0 * cov_sigma)


def test_sample_is_deterministic_and_matches_draw_path():
    model = small_model(n0=13, n_lvl=2, n_csz=5, n_fsz=4)
    s1 = sample(model, seed=42)
    s2 = sample(model, seed=42)
    np.testing.assert_array_equal(s1, s2)
    assert not np.array_equal(s1, sample(model, seed=43))
    manual = apply_sqrt(model, draw_latent(model, np.random.default_rng(42)))
    np.testing.assert_array_equal(s1, manual)


def test_same_thread_cap_is_bit_reproducible():
    model = small_model(n0=13, n_lvl=4, n_csz=5, n_fsz=4)
    xi = draw_latent(model, np.random.default_rng(6))
    with threadpool_limits(limits=1):
        a = apply_sqrt(model, xi)
        b = apply_sqrt(model, xi)
    np.testing.assert_array_equal(a, b)
    with threadpool_limits(limits=4):
        c = apply_sqrt(model, xi)
    np.testing.assert_allclose(a, c, rtol=1e-12)


# --- densities and transforms --------------------------------------------------


def test_standardized_log_prob_matches_dense_density():
    # On a square (n_lvl=0) model the latent density and the dense Gaussian
    # density differ exactly by the log-volume of the square-root factor.
    model = small_model(n0=24, n_lvl=0)
    k_true = gram(model.kernel, model.modeled_coords, model.modeled_coords)
    from icrgp import exact_log_prob

    xi = draw_latent(model, np.random.default_rng(7))
    s = apply_sqrt(model, xi)
    log_likelihood = lambda values: float(-0.5 * values @ values)
    lhs = standardized_log_prob(model, xi, log_likelihood)
    sign, logdet = np.linalg.slogdet(k_true)
    assert sign > 0
    rhs = exact_log_prob(k_true, s) + log_likelihood(s) + 0.5 * logdet
    assert lhs == pytest.approx(rhs, abs=1e-8)


def test_standardized_log_prob_at_zero_latent():
    model = small_model(n0=6, n_lvl=1)
    zero = latent_zeros(model)
    got = standardized_log_prob(model, zero, lambda values: 0.0)
    assert got == pytest.approx(model.latent_size * NEG_HALF_LOG_2PI, rel=1e-14)


def test_standardized_log_prob_rejects_batches_and_bad_likelihood():
    model = small_model()
    flat = np.zeros((model.latent_size, 2))
    with pytest.raises(ValueError):
        standardized_log_prob(model, flat, lambda values: 0.0)
    with pytest.raises(ValueError, match="finite"):
        standardized_log_prob(
            model, latent_zeros(model), lambda values: float("nan")
        )


def test_inverse_transform_standard_exponential():
    # Exponential inverse CDF -ln(1-u): a zero latent maps to the median ln 2.
    inv_cdf = lambda u: -np.log1p(-u)
    got = inverse_transform(np.zeros(3), inv_cdf)
    np.testing.assert_allclose(got, LN_2, rtol=1e-12)
    xi = np.linspace(-3.0, 3.0, 31)
    out = inverse_transform(xi, inv_cdf)
    assert np.all(np.diff(out) > 0.0)  # monotone map of a monotone input
    extreme = inverse_transform(np.array([-40.0, 40.0]), inv_cdf)
    assert np.all(np.isfinite(extreme))


# --- size recurrence and cost accounting ---------------------------------------


def test_final_size_chain_flagship():
    # Hand recurrence for (5,4): 13 -> 20 -> 32 -> 56 -> 104 -> 200.
    chain = [final_size(5, 4, depth, 13) for depth in range(6)]
    assert chain == [13, 20, 32, 56, 104, 200]


def test_base_size_for_target_exact_and_error_listing():
    assert base_size_for_target(5, 4, 5, 200) == 13
    assert base_size_for_target(5, 2, 5, 200) == 14
    with pytest.raises(ValueError) as excinfo:
        base_size_for_target(3, 2, 5, 200)
    message = str(excinfo.value)
    assert "196 (n0=10)" in message and "228 (n0=11)" in message


def test_nearest_base_size_rounding_and_ties():
    assert nearest_base_size(5, 4, 5, 200) == (13, 200)
    assert nearest_base_size(3, 2, 5, 200) == (10, 196)
    # equidistant between 196 and 228: prefer the smaller size
    assert nearest_base_size(3, 2, 5, 212) == (10, 196)
    assert nearest_base_size(3, 2, 5, 213) == (11, 228)


def test_predicted_cost_values():
    # Hand-counted multiply costs: base 3*n0 plus per-window work.
    assert predicted_cost(RefinementSpec(n0=5, n_lvl=1, n_csz=3, n_fsz=2)) == 33
    assert predicted_cost(RefinementSpec(n0=5, n_lvl=0)) == 15
    assert predicted_cost(RefinementSpec(n0=13, n_lvl=1, n_csz=5, n_fsz=4)) == 219
    assert predicted_cost(RefinementSpec(n0=14, n_lvl=1, n_csz=5, n_fsz=2)) == 182


# --- validation and guards ------------------------------------------------------


class _NotACovariance(Kernel):
    """Deliberately invalid 'kernel' whose profile is not positive definite."""

    name = "invalid"

    def _profile(self, d):
        return 1.0 - np.square(d)


def test_build_model_rejects_indefinite_kernel():
    spec = RefinementSpec(n0=3, n_lvl=0)
    with pytest.raises(ValueError, match="positive semidefinite"):
        build_model(_NotACovariance(rho=1.0), IdentityChart(), spec)


def test_latent_layout_and_coercion_errors():
    model = small_model(n0=10, n_lvl=2)
    shapes = model.latent_block_shapes
    assert shapes[0] == (10,)
    assert sum(int(np.prod(s)) for s in shapes) == model.latent_size
    rng = np.random.default_rng(8)
    flat = rng.standard_normal(model.latent_size)
    latent = latent_from_flat(model, flat)
    # layout: base first, then levels in order, windows in order
    np.testing.assert_array_equal(latent.base, flat[:10])
    np.testing.assert_array_equal(latent.to_flat(), flat)
    with pytest.raises(ValueError):
        apply_sqrt(model, flat[:-1])
    with pytest.raises(ValueError):
        apply_sqrt(model, np.zeros((model.latent_size, 2, 2)))
    bad = LatentVector(base=np.zeros(10), levels=[np.zeros((3, 2))])
    with pytest.raises(ValueError):
        apply_sqrt(model, bad)


def test_log_experiment_chart_is_resolved_at_build_time():
    kernel = Matern32(rho=1.0)
    spec = RefinementSpec(n0=13, n_lvl=2, n_csz=5, n_fsz=4)
    model = build_model(kernel, LogExperimentChart(spacing_ratio=50.0), spec)
    assert isinstance(model.chart, LogSpacedChart)
    gaps = np.diff(model.modeled_coords)
    assert gaps.max() == pytest.approx(1.0, rel=1e-9)
    assert gaps.max() / gaps.min() == pytest.approx(50.0, rel=1e-9)


def test_implicit_covariance_guard():
    # (3,2) with n0=6 and 11 levels lands at 4100 points, past the guard.
    model = small_model(n0=6, n_lvl=11)
    assert model.n == 4100
    with pytest.raises(ValueError, match="4096"):
        implicit_covariance(model)
