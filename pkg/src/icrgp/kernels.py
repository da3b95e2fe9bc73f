"""Stationary covariance functions evaluated on distances and point sets.

Kernels here are functions of the separation distance only.  They accept
distances rather than raw locations so that coordinate charts can remap
locations before the kernel ever sees them.
"""

import numpy as np

__all__ = ["Kernel", "Matern32", "RBF", "evaluate", "gram", "kernel_from_name"]


class Kernel:
    """Base class for stationary covariance functions.

    Parameters
    ----------
    rho : float
        Characteristic length scale, in the same units as the modeled
        locations.  Must be positive.
    amplitude : float, optional
        Marginal variance ``k(0)``.  Must be positive.  Defaults to 1.
    """

    name = "kernel"

    def __init__(self, rho: float, amplitude: float = 1.0):
        rho = float(rho)
        amplitude = float(amplitude)
        if not np.isfinite(rho) or rho <= 0.0:
            raise ValueError(f"length scale must be positive and finite, got {rho}")
        if not np.isfinite(amplitude) or amplitude <= 0.0:
            raise ValueError(f"amplitude must be positive and finite, got {amplitude}")
        self.rho = rho
        self.amplitude = amplitude

    def _profile(self, d):
        """Unit-amplitude covariance profile on nonnegative distances."""
        raise NotImplementedError

    def __call__(self, d):
        return evaluate(self, d)

    def gram(self, x, y=None):
        return gram(self, x, x if y is None else y)

    def __repr__(self):
        return f"{type(self).__name__}(rho={self.rho!r}, amplitude={self.amplitude!r})"


class Matern32(Kernel):
    """Matérn covariance with smoothness 3/2.

    ``k(d) = amplitude * (1 + sqrt(3) d / rho) * exp(-sqrt(3) d / rho)``
    """

    name = "matern32"

    def _profile(self, d):
        t = (np.sqrt(3.0) / self.rho) * d
        return (1.0 + t) * np.exp(-t)


class RBF(Kernel):
    """Squared-exponential covariance.

    ``k(d) = amplitude * exp(-d^2 / (2 rho^2))``
    """

    name = "rbf"

    def _profile(self, d):
        u = d / self.rho
        return np.exp(-0.5 * u * u)


_FAMILIES = {"matern32": Matern32, "rbf": RBF}


def kernel_from_name(family: str, rho: float, amplitude: float = 1.0) -> Kernel:
    """Construct a kernel from its config-file family name."""
    try:
        cls = _FAMILIES[family.lower()]
    except KeyError:
        raise ValueError(
            f"unknown kernel family {family!r}; valid: {sorted(_FAMILIES)}"
        ) from None
    return cls(rho, amplitude)


def evaluate(kernel: Kernel, d):
    """Evaluate ``kernel`` on nonnegative distances.

    Parameters
    ----------
    kernel : Kernel
    d : float or ndarray
        Separation distance(s); must be finite and >= 0.

    Returns
    -------
    float or ndarray
        ``amplitude * profile(d)``, with the same shape as ``d``.
    """
    arr = np.asarray(d, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("distances must be finite")
    if np.any(arr < 0.0):
        raise ValueError("distances must be nonnegative")
    out = kernel.amplitude * kernel._profile(arr)
    if np.isscalar(d) or np.ndim(d) == 0:
        return float(out)
    return out


def gram(kernel: Kernel, x, y) -> np.ndarray:
    """Covariance matrix between two sets of scalar locations.

    Entry ``(i, j)`` is ``evaluate(kernel, |x[i] - y[j]|)``.  ``gram(k, x, x)``
    is symmetric because the distance matrix is.
    """
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.ndim != 1 or ya.ndim != 1:
        raise ValueError("locations must be one-dimensional")
    d = np.abs(xa[:, None] - ya[None, :])
    return evaluate(kernel, d)
