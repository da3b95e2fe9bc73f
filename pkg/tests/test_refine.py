"""Per-window conditional refinement matrices and their factorizations."""

import time

import numpy as np
import pytest

from icrgp import (
    AffineChart,
    IdentityChart,
    Matern32,
    RefinementMatrices,
    RefinementSpec,
    build_hierarchy,
    charted_kernel,
    matrices_for_level,
    refinement_matrices,
)
from icrgp import refine as refine_module


def dense_conditional(ck, coarse, fine):
    """Independent oracle: textbook Gaussian conditioning via dense solves."""
    k_cc = ck.gram(coarse, coarse)
    k_fc = ck.gram(fine, coarse)
    k_ff = ck.gram(fine, fine)
    mean_filter = np.linalg.solve(k_cc, k_fc.T).T
    cond_cov = k_ff - mean_filter @ k_fc.T
    return mean_filter, 0.5 * (cond_cov + cond_cov.T)


def test_single_window_matches_dense_conditioning():
    ck = charted_kernel(Matern32(rho=1.0), IdentityChart())
    coarse = np.array([0.0, 1.0, 2.0])
    fine = np.array([0.75, 1.25])
    got = refinement_matrices(ck, coarse, fine, jitter=1e-12)
    want_filter, want_cov = dense_conditional(ck, coarse, fine)
    np.testing.assert_allclose(got.mean_filter, want_filter, atol=1e-12)
    np.testing.assert_allclose(
        got.noise_factor @ got.noise_factor.T, want_cov, atol=1e-10
    )
    # noise factor is a lower-triangular Cholesky factor
    assert np.array_equal(got.noise_factor, np.tril(got.noise_factor))


def test_window_reconstruction_identity():
    # mean_filter*K_cc*mean_filter' + noise*noise' must reassemble K_ff
    # (within the jitter that the factorization may add).
    kernel = Matern32(rho=1.0)
    jitter = 1e-12 * kernel.amplitude
    ck = charted_kernel(kernel, AffineChart(scale=0.37, offset=-2.0))
    coarse = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    fine = np.array([2.25, 2.75, 3.25, 3.75])
    mats = refinement_matrices(ck, coarse, fine, jitter=jitter)
    k_cc = ck.gram(coarse, coarse)
    k_ff = ck.gram(fine, fine)
    rebuilt = (
        mats.mean_filter @ k_cc @ mats.mean_filter.T
        + mats.noise_factor @ mats.noise_factor.T
    )
    assert np.max(np.abs(rebuilt - k_ff)) <= 100.0 * jitter + 1e-10


def test_coarse_coords_must_strictly_increase():
    ck = charted_kernel(Matern32(rho=1.0), IdentityChart())
    with pytest.raises(ValueError, match="strictly increasing"):
        refinement_matrices(
            ck, np.array([0.0, 0.0, 1.0]), np.array([0.25, 0.75]), jitter=1e-12
        )


class _CraftedGram:
    """Stand-in charted kernel returning crafted blocks, keyed by shape.

    Coarse windows have 3 points and fine windows 2, so the three gram
    calls are distinguishable by their shapes alone.
    """

    def __init__(self, k_cc, k_fc, k_ff):
        self.blocks = {(3, 3): k_cc, (2, 3): k_fc, (2, 2): k_ff}

    def gram(self, xa, xb):
        return np.array(self.blocks[(len(xa), len(xb))], dtype=float)


def test_jitter_escalation_recovers_slightly_indefinite_window():
    # Conditional covariance diag(-5e-12, 1): the first factorization attempt
    # at jitter 1e-12 fails, the single hundredfold escalation succeeds.
    ck = _CraftedGram(
        k_cc=np.eye(3),
        k_fc=np.zeros((2, 3)),
        k_ff=np.diag([-5e-12, 1.0]),
    )
    got = refinement_matrices(
        ck, np.array([0.0, 1.0, 2.0]), np.array([0.75, 1.25]), jitter=1e-12
    )
    assert got.noise_factor[0, 0] == pytest.approx(np.sqrt(1e-10 - 5e-12), rel=1e-9)


def test_jitter_escalation_gives_up_after_one_step():
    ck = _CraftedGram(
        k_cc=np.eye(3),
        k_fc=np.zeros((2, 3)),
        k_ff=np.diag([-5e-12, 1.0]),
    )
    with pytest.raises(np.linalg.LinAlgError, match="conditional fine covariance"):
        refinement_matrices(
            ck, np.array([0.0, 1.0, 2.0]), np.array([0.75, 1.25]), jitter=1e-14
        )


def test_singular_coarse_covariance_falls_back_to_jitter():
    # All-ones coarse covariance is singular PSD; the solve must recover by
    # jittering the coarse block instead of failing outright.
    ck = _CraftedGram(
        k_cc=np.ones((3, 3)),
        k_fc=np.full((2, 3), 0.5),
        k_ff=np.eye(2),
    )
    got = refinement_matrices(
        ck, np.array([0.0, 1.0, 2.0]), np.array([0.75, 1.25]), jitter=1e-12
    )
    assert np.all(np.isfinite(got.mean_filter))
    assert np.all(np.isfinite(got.noise_factor))


def test_broadcast_on_identity_chart_matches_per_window():
    kernel = Matern32(rho=1.3)
    spec = RefinementSpec(n0=9, n_lvl=2, n_csz=3, n_fsz=2)
    hierarchy = build_hierarchy(spec)
    ck = charted_kernel(kernel, IdentityChart())
    broadcast = matrices_for_level(ck, hierarchy, 2, spec)
    assert isinstance(broadcast, RefinementMatrices)
    per_window = matrices_for_level(ck, hierarchy, 2, spec, force_per_window=True)
    assert isinstance(per_window, list)
    assert len(per_window) == hierarchy.window_counts[1]
    for mats in per_window:
        np.testing.assert_allclose(
            mats.mean_filter, broadcast.mean_filter, atol=1e-13
        )
        np.testing.assert_allclose(
            mats.noise_factor, broadcast.noise_factor, atol=1e-13
        )


def test_non_identity_chart_gets_per_window_list():
    kernel = Matern32(rho=1.0)
    spec = RefinementSpec(n0=9, n_lvl=1, n_csz=3, n_fsz=2)
    hierarchy = build_hierarchy(spec)
    ck = charted_kernel(kernel, AffineChart(scale=2.0))
    out = matrices_for_level(ck, hierarchy, 1, spec)
    assert isinstance(out, list) and len(out) == 7


def test_level_out_of_range_rejected():
    spec = RefinementSpec(n0=9, n_lvl=1, n_csz=3, n_fsz=2)
    hierarchy = build_hierarchy(spec)
    ck = charted_kernel(Matern32(rho=1.0), IdentityChart())
    with pytest.raises(ValueError, match="level"):
        matrices_for_level(ck, hierarchy, 2, spec)
    with pytest.raises(ValueError, match="level"):
        matrices_for_level(ck, hierarchy, 0, spec)


def test_window_failure_names_window_and_level(monkeypatch):
    spec = RefinementSpec(n0=9, n_lvl=1, n_csz=3, n_fsz=2)
    hierarchy = build_hierarchy(spec)
    ck = charted_kernel(Matern32(rho=1.0), AffineChart(scale=2.0))
    calls = {"n": 0}
    real = refine_module.refinement_matrices

    def failing(*args, **kwargs):
        if calls["n"] == 2:
            raise np.linalg.LinAlgError("crafted failure")
        calls["n"] += 1
        return real(*args, **kwargs)

    monkeypatch.setattr(refine_module, "refinement_matrices", failing)
    with pytest.raises(np.linalg.LinAlgError, match=r"window 2 at level 1"):
        matrices_for_level(ck, hierarchy, 1, spec)


def test_refinement_spec_validation():
    with pytest.raises(ValueError, match="odd"):
        RefinementSpec(n0=8, n_lvl=1, n_csz=4, n_fsz=2)
    with pytest.raises(ValueError):
        RefinementSpec(n0=8, n_lvl=1, n_csz=1, n_fsz=2)
    with pytest.raises(ValueError, match="even"):
        RefinementSpec(n0=8, n_lvl=1, n_csz=3, n_fsz=3)
    with pytest.raises(ValueError):
        RefinementSpec(n0=2, n_lvl=1, n_csz=3, n_fsz=2)
    with pytest.raises(ValueError):
        RefinementSpec(n0=8, n_lvl=-1, n_csz=3, n_fsz=2)
    # n_fsz=1 and n_lvl=0 are legal
    assert RefinementSpec(n0=8, n_lvl=1, n_csz=3, n_fsz=1).stride == 1
    assert RefinementSpec(n0=2, n_lvl=0).n0 == 2
    assert RefinementSpec(n0=13, n_lvl=1, n_csz=5, n_fsz=4).stride == 2
    assert RefinementSpec(n0=13, n_lvl=1, n_csz=5, n_fsz=6).stride == 3


def test_construction_cost_tracks_window_count():
    # Per-window construction work is constant, so building a level with
    # twice the windows should take about twice as long.
    kernel = Matern32(rho=1.0)
    spec = RefinementSpec(n0=6000, n_lvl=2, n_csz=3, n_fsz=2)
    hierarchy = build_hierarchy(spec)
    ck = charted_kernel(kernel, AffineChart(scale=0.001))
    w1, w2 = hierarchy.window_counts
    assert 1.9 < w2 / w1 < 2.1

    def measure(level):
        best = np.inf
        for _ in range(3):
            start = time.perf_counter()
            matrices_for_level(ck, hierarchy, level, spec)
            best = min(best, time.perf_counter() - start)
        return best

    measure(1)  # warmup
    ratio = measure(2) / measure(1)
    assert 1.4 <= ratio <= 2.6, f"construction doubling ratio {ratio:.2f}"
