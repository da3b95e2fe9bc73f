"""Dense exact-GP oracle and covariance-comparison metrics.

Everything here is O(n^3) and guarded to desk scale; it provides the ground
truth that the linear-time generative model is measured against.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .charts import Chart, LogExperimentChart
from .generate import IcrModel, apply_sqrt, base_size_for_target, build_model
from .kernels import Kernel, gram
from .refine import RefinementSpec

__all__ = [
    "CovarianceComparison",
    "CandidateReport",
    "SelectionResult",
    "spd_factor",
    "exact_log_prob",
    "exact_sample",
    "implicit_covariance",
    "compare_covariances",
    "select_refinement_params",
]

logger = logging.getLogger("icrgp")

DENSE_GUARD = 4096

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class CovarianceComparison:
    """Elementwise and information metrics between two covariances.

    ``kl_true_from_approx`` is the divergence of the zero-mean Gaussian with
    the true covariance from the one with the approximate covariance; it is
    ``+inf`` when the approximation is singular beyond jitter repair.
    """

    n: int
    mae: float
    max_abs_err: float
    max_diag_err: float
    kl_true_from_approx: float


@dataclass(frozen=True)
class CandidateReport:
    n_csz: int
    n_fsz: int
    reachable: bool
    n0: int = None
    kl: float = None
    mae: float = None


@dataclass(frozen=True)
class SelectionResult:
    winner: tuple
    table: list


def _as_sym_matrix(k) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {k.shape}")
    if not np.allclose(k, k.T, rtol=1e-8, atol=0.0):
        raise ValueError("matrix is not symmetric")
    return k


def spd_factor(k, jitter_scale: float = 1e-12):
    """Lower Cholesky factor of a symmetric matrix, with jitter fallback.

    On factorization failure retries once with ``jitter_scale * trace / n``
    on the diagonal (logged).  Returns ``(lower, jitter_used)``.
    """
    k = _as_sym_matrix(k)
    try:
        return np.linalg.cholesky(k), 0.0
    except np.linalg.LinAlgError:
        pass
    jitter = jitter_scale * float(np.trace(k)) / k.shape[0]
    try:
        lower = np.linalg.cholesky(k + jitter * np.eye(k.shape[0]))
    except np.linalg.LinAlgError:
        raise np.linalg.LinAlgError(
            f"matrix is not positive definite even with jitter {jitter:g}"
        ) from None
    logger.warning("covariance required diagonal jitter %g to factorize", jitter)
    return lower, jitter


def exact_log_prob(k, s) -> float:
    """Zero-mean Gaussian log density of ``s`` under covariance ``k``.

    Computed through a Cholesky factorization (jitter fallback as in
    :func:`spd_factor`, reported via the package logger).
    """
    k = _as_sym_matrix(k)
    s = np.asarray(s, dtype=float)
    if s.shape != (k.shape[0],):
        raise ValueError(f"sample has shape {s.shape}, expected ({k.shape[0]},)")
    lower, _ = spd_factor(k)
    half = scipy.linalg.solve_triangular(lower, s, lower=True)
    logdet = 2.0 * float(np.sum(np.log(np.diag(lower))))
    return -0.5 * (k.shape[0] * LOG_2PI + logdet + float(np.dot(half, half)))


def exact_sample(k, seed: int, size: int = None) -> np.ndarray:
    """Correlated Gaussian draw(s) by applying a dense factor of ``k``.

    Returns shape ``(n,)`` for ``size=None``, else ``(size, n)``.  Uses the
    same seeded generator family as the generative model.
    """
    k = _as_sym_matrix(k)
    lower, _ = spd_factor(k)
    rng = np.random.default_rng(seed)
    if size is None:
        return lower @ rng.standard_normal(k.shape[0])
    draws = rng.standard_normal((size, k.shape[0]))
    return draws @ lower.T


def implicit_covariance(model: IcrModel) -> np.ndarray:
    """Materialize the covariance realized by the generative model.

    Applies the square root to every standard basis latent vector (in
    batches) and accumulates the outer product.  Symmetric and positive
    semidefinite by construction.
    """
    n = model.n
    if n > DENSE_GUARD:
        raise ValueError(f"final size {n} exceeds the dense guard {DENSE_GUARD}")
    m = model.latent_size
    cov = np.zeros((n, n))
    chunk = 1024
    for start in range(0, m, chunk):
        stop = min(start + chunk, m)
        basis = np.zeros((m, stop - start))
        basis[np.arange(start, stop), np.arange(stop - start)] = 1.0
        cols = apply_sqrt(model, basis)
        cov += cols @ cols.T
    return 0.5 * (cov + cov.T)


def _chol_logdet(lower) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(lower))))


def compare_covariances(k_true, k_approx) -> CovarianceComparison:
    """Error metrics of an approximate covariance against the true one.

    ``mae`` is the mean absolute entry difference, ``max_abs_err`` the
    largest, ``max_diag_err`` the largest on the diagonal.  The KL term
    compares zero-mean Gaussians and adds ``1e-12 * trace / n`` jitter to the
    approximation only if its factorization fails; if it still fails the KL
    is ``+inf`` and the elementwise metrics are returned unchanged.
    """
    k_true = _as_sym_matrix(k_true)
    k_approx = _as_sym_matrix(k_approx)
    if k_true.shape != k_approx.shape:
        raise ValueError(
            f"shape mismatch: {k_true.shape} vs {k_approx.shape}"
        )
    n = k_true.shape[0]
    delta = np.abs(k_true - k_approx)
    mae = float(np.mean(delta))
    max_abs = float(np.max(delta))
    max_diag = float(np.max(np.abs(np.diag(k_true) - np.diag(k_approx))))

    try:
        lower_t = np.linalg.cholesky(k_true)
    except np.linalg.LinAlgError:
        raise ValueError("the true covariance must be positive definite") from None
    try:
        lower_a, _ = spd_factor(k_approx)
        half = scipy.linalg.solve_triangular(lower_a, lower_t, lower=True)
        trace_term = float(np.sum(half * half))  # tr(Ka^-1 Kt)
        kl = 0.5 * (
            trace_term - n + _chol_logdet(lower_a) - _chol_logdet(lower_t)
        )
    except np.linalg.LinAlgError:
        kl = float("inf")
    return CovarianceComparison(
        n=n,
        mae=mae,
        max_abs_err=max_abs,
        max_diag_err=max_diag,
        kl_true_from_approx=kl,
    )


def select_refinement_params(
    kernel: Kernel,
    chart: Chart,
    candidates,
    n: int,
    n_lvl: int,
    jitter: float = None,
) -> SelectionResult:
    """Pick the window shape whose model diverges least from the truth.

    Builds a model per ``(n_csz, n_fsz)`` candidate at final size ``n``,
    compares its realized covariance against the exact one over the same
    modeled points, and returns the KL-argmin with the full table.  Ties
    break toward smaller ``n_csz``, then smaller ``n_fsz``.  Candidates whose
    size recurrence cannot land on ``n`` are reported unreachable and skipped.

    Raises
    ------
    ValueError
        If no candidate is reachable.
    """
    table = []
    best = None
    best_key = None
    for n_csz, n_fsz in candidates:
        try:
            n0 = base_size_for_target(n_csz, n_fsz, n_lvl, n)
        except ValueError as exc:
            logger.info("candidate (%d, %d) skipped: %s", n_csz, n_fsz, exc)
            table.append(CandidateReport(n_csz=n_csz, n_fsz=n_fsz, reachable=False))
            continue
        spec = RefinementSpec(
            n0=n0, n_lvl=n_lvl, n_csz=n_csz, n_fsz=n_fsz, jitter=jitter
        )
        model = build_model(kernel, chart, spec)
        k_true = gram(kernel, model.modeled_coords, model.modeled_coords)
        comparison = compare_covariances(k_true, implicit_covariance(model))
        table.append(
            CandidateReport(
                n_csz=n_csz,
                n_fsz=n_fsz,
                reachable=True,
                n0=n0,
                kl=comparison.kl_true_from_approx,
                mae=comparison.mae,
            )
        )
        key = (comparison.kl_true_from_approx, n_csz, n_fsz)
        if best_key is None or key < best_key:
            best_key = key
            best = (n_csz, n_fsz)
    if best is None:
        raise ValueError("no candidate admits the requested final size")
    return SelectionResult(winner=best, table=table)
