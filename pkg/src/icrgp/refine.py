"""Refinement matrices: the coarse-to-fine conditional update for one window.

For a window of ``n_csz`` coarse pixels generating ``n_fsz`` fine pixels, the
fine values given the coarse values are Gaussian with mean
``mean_filter @ coarse`` and covariance ``noise_factor @ noise_factor.T``.
Both matrices derive from the charted covariance of the window's coordinates.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .charts import ChartedKernel, GridHierarchy, IdentityChart

__all__ = [
    "RefinementSpec",
    "RefinementMatrices",
    "refinement_matrices",
    "matrices_for_level",
]

# default diagonal regularization, as a fraction of the kernel amplitude
DEFAULT_JITTER_SCALE = 1e-12


@dataclass(frozen=True)
class RefinementSpec:
    """Shape of the refinement hierarchy.

    Parameters
    ----------
    n0 : int
        Base grid size.
    n_lvl : int
        Number of refinement levels; 0 means the base grid only.
    n_csz : int
        Coarse window size; odd, >= 3.
    n_fsz : int
        Fine pixels per window; 1 or an even number.
    jitter : float or None
        Diagonal regularization added to the conditional covariance before
        factorization.  None resolves to ``1e-12 * amplitude`` at build time.
    """

    n0: int
    n_lvl: int
    n_csz: int = 3
    n_fsz: int = 2
    jitter: float = None

    def __post_init__(self):
        if self.n_csz < 3 or self.n_csz % 2 == 0:
            raise ValueError(f"n_csz must be odd and >= 3, got {self.n_csz}")
        if self.n_fsz < 1 or (self.n_fsz > 1 and self.n_fsz % 2 == 1):
            # odd block sizes > 1 would make fine pixels of adjacent windows
            # collide at the same coordinate
            raise ValueError(f"n_fsz must be 1 or even, got {self.n_fsz}")
        if self.n_lvl < 0:
            raise ValueError(f"n_lvl must be >= 0, got {self.n_lvl}")
        min_n0 = self.n_csz if self.n_lvl > 0 else 1
        if self.n0 < min_n0:
            raise ValueError(f"n0 must be >= {min_n0}, got {self.n0}")
        if self.jitter is not None and (
            not np.isfinite(self.jitter) or self.jitter < 0.0
        ):
            raise ValueError(f"jitter must be nonnegative, got {self.jitter}")

    @property
    def stride(self):
        """Coarse pixels between consecutive window starts."""
        return max(1, self.n_fsz // 2)


@dataclass(frozen=True)
class RefinementMatrices:
    """The two matrices of one coarse-to-fine window update.

    ``mean_filter`` (n_fsz x n_csz) maps the coarse window values to the
    conditional mean of the fine values; ``noise_factor`` (n_fsz x n_fsz,
    lower triangular) is a factor of the conditional covariance, applied to
    fresh standard-normal excitations.
    """

    mean_filter: np.ndarray
    noise_factor: np.ndarray


def _chol_with_escalation(mat, jitter, what, coords):
    """Cholesky of ``mat + jitter*I``, retrying once with 100x the jitter."""
    eye = np.eye(mat.shape[0])
    for attempt, j in enumerate((jitter, jitter * 100.0)):
        try:
            return np.linalg.cholesky(mat + j * eye)
        except np.linalg.LinAlgError:
            if attempt == 1:
                break
    raise np.linalg.LinAlgError(
        f"{what} is not positive definite even with jitter {jitter * 100.0:g} "
        f"(window coordinates {np.asarray(coords).tolist()})"
    )


def refinement_matrices(
    ck: ChartedKernel, coarse_coords, fine_coords, jitter: float
) -> RefinementMatrices:
    """Build the conditional update matrices for one refinement window.

    Parameters
    ----------
    ck : ChartedKernel
        Covariance over grid coordinates.
    coarse_coords : array of n_csz reals
        Strictly increasing grid coordinates of the coarse window.
    fine_coords : array of n_fsz reals
        Grid coordinates of the fine pixels.
    jitter : float
        Added to the diagonal of the conditional covariance before its
        Cholesky factorization (and to the coarse covariance only if its
        factorization fails).

    Raises
    ------
    numpy.linalg.LinAlgError
        If a covariance block stays non-factorizable after one automatic
        hundredfold jitter escalation.
    """
    coarse_coords = np.asarray(coarse_coords, dtype=float)
    fine_coords = np.asarray(fine_coords, dtype=float)
    if np.any(np.diff(coarse_coords) <= 0.0):
        raise ValueError(
            f"coarse coordinates must be strictly increasing, got "
            f"{coarse_coords.tolist()}"
        )
    k_cc = ck.gram(coarse_coords, coarse_coords)
    k_fc = ck.gram(fine_coords, coarse_coords)
    k_ff = ck.gram(fine_coords, fine_coords)

    # conditional-mean filter via an SPD solve; jitter only on failure
    try:
        cho = scipy.linalg.cho_factor(k_cc, lower=True)
    except scipy.linalg.LinAlgError:
        lower = _chol_with_escalation(
            k_cc, jitter, "coarse-window covariance", coarse_coords
        )
        cho = (lower, True)
    mean_filter = scipy.linalg.cho_solve(cho, k_fc.T).T

    cond_cov = k_ff - mean_filter @ k_fc.T
    cond_cov = 0.5 * (cond_cov + cond_cov.T)  # solve output is not exactly symmetric
    noise_factor = _chol_with_escalation(
        cond_cov, jitter, "conditional fine covariance", fine_coords
    )
    return RefinementMatrices(mean_filter=mean_filter, noise_factor=noise_factor)


def matrices_for_level(
    ck: ChartedKernel,
    hierarchy: GridHierarchy,
    level: int,
    spec: RefinementSpec,
    force_per_window: bool = False,
):
    """Refinement matrices for every window of one level.

    For the identity chart (stationary covariance on a regular grid) every
    window sees the same geometry, so a single broadcast
    :class:`RefinementMatrices` is returned.  Otherwise returns a list with
    one entry per window.

    Parameters
    ----------
    force_per_window : bool
        Compute the per-window list even when broadcasting would apply.
    """
    if not 1 <= level <= hierarchy.n_lvl:
        raise ValueError(f"level must be in 1..{hierarchy.n_lvl}, got {level}")
    jitter = spec.jitter
    if jitter is None:
        jitter = DEFAULT_JITTER_SCALE * ck.kernel.amplitude
    coarse, fine = hierarchy.window_grid_coords(level)
    if isinstance(ck.chart, IdentityChart) and not force_per_window:
        # translation invariance: one window represents them all
        return refinement_matrices(ck, coarse[0], fine[0], jitter)
    out = []
    for w in range(coarse.shape[0]):
        try:
            out.append(refinement_matrices(ck, coarse[w], fine[w], jitter))
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise type(exc)(f"window {w} at level {level}: {exc}") from exc
    return out
