"""Coordinate charts and the multiresolution grid hierarchy.

A chart maps regular Euclidean grid coordinates onto the modeled locations.
Composing a stationary kernel with a chart yields a covariance over grid
coordinates that can represent unevenly spaced point sets while the
refinement machinery keeps working on regular grids.
"""

from dataclasses import dataclass, field

import numpy as np

from .kernels import Kernel, evaluate

__all__ = [
    "Chart",
    "IdentityChart",
    "AffineChart",
    "LogSpacedChart",
    "LogExperimentChart",
    "ChartedKernel",
    "charted_kernel",
    "GridHierarchy",
    "build_hierarchy",
    "log_chart_for_experiment",
]


class Chart:
    """Strictly increasing map from grid coordinates to modeled locations."""

    def to_modeled(self, x):
        """Map grid coordinates to modeled locations (vectorized)."""
        raise NotImplementedError

    def _check_finite(self, out):
        if not np.all(np.isfinite(out)):
            raise ValueError(f"{type(self).__name__} overflowed on the queried range")
        return out


class IdentityChart(Chart):
    """Grid coordinates are the modeled locations."""

    def to_modeled(self, x):
        return np.asarray(x, dtype=float)

    def __repr__(self):
        return "IdentityChart()"


class AffineChart(Chart):
    """Modeled location = scale * grid coordinate + offset, scale > 0."""

    def __init__(self, scale: float, offset: float = 0.0):
        scale = float(scale)
        if not np.isfinite(scale) or scale <= 0.0:
            raise ValueError(f"scale must be positive and finite, got {scale}")
        if not np.isfinite(offset):
            raise ValueError("offset must be finite")
        self.scale = scale
        self.offset = float(offset)

    def to_modeled(self, x):
        return self._check_finite(self.scale * np.asarray(x, dtype=float) + self.offset)

    def __repr__(self):
        return f"AffineChart(scale={self.scale!r}, offset={self.offset!r})"


class LogSpacedChart(Chart):
    """Modeled location = r0 * exp(a * grid coordinate), r0 > 0, a > 0.

    Maps a regular grid onto geometrically spaced locations; nearest-neighbor
    distances grow by the constant factor exp(a * spacing) along the grid.
    """

    def __init__(self, r0: float, a: float):
        r0 = float(r0)
        a = float(a)
        if not np.isfinite(r0) or r0 <= 0.0:
            raise ValueError(f"r0 must be positive and finite, got {r0}")
        if not np.isfinite(a) or a <= 0.0:
            raise ValueError(f"a must be positive and finite, got {a}")
        self.r0 = r0
        self.a = a

    def to_modeled(self, x):
        with np.errstate(over="raise"):
            try:
                out = self.r0 * np.exp(self.a * np.asarray(x, dtype=float))
            except FloatingPointError:
                raise ValueError(
                    "LogSpacedChart overflowed on the queried range"
                ) from None
        return self._check_finite(out)

    def __repr__(self):
        return f"LogSpacedChart(r0={self.r0!r}, a={self.a!r})"


class LogExperimentChart(Chart):
    """Deferred log chart, calibrated against the hierarchy's final grid.

    Holds the target nearest-neighbor gap profile (largest gap ``max_gap``,
    largest/smallest gap ratio ``spacing_ratio``); model construction resolves
    it into a concrete :class:`LogSpacedChart` once the final grid is known.
    """

    def __init__(self, spacing_ratio: float, max_gap: float = 1.0):
        spacing_ratio = float(spacing_ratio)
        max_gap = float(max_gap)
        if not np.isfinite(spacing_ratio) or spacing_ratio <= 1.0:
            raise ValueError(f"spacing_ratio must be > 1, got {spacing_ratio}")
        if not np.isfinite(max_gap) or max_gap <= 0.0:
            raise ValueError(f"max_gap must be positive, got {max_gap}")
        self.spacing_ratio = spacing_ratio
        self.max_gap = max_gap

    def resolve(self, final_grid) -> LogSpacedChart:
        final_grid = np.asarray(final_grid, dtype=float)
        return log_chart_for_experiment(
            final_grid.size, self.spacing_ratio, max_gap=self.max_gap, grid=final_grid
        )

    def to_modeled(self, x):
        raise ValueError(
            "LogExperimentChart must be resolved against a final grid before use"
        )

    def __repr__(self):
        return (
            f"LogExperimentChart(spacing_ratio={self.spacing_ratio!r}, "
            f"max_gap={self.max_gap!r})"
        )


class ChartedKernel:
    """Covariance over grid coordinates: kernel distance after chart mapping."""

    def __init__(self, kernel: Kernel, chart: Chart):
        self.kernel = kernel
        self.chart = chart

    def __call__(self, xa, xb):
        pa = self.chart.to_modeled(xa)
        pb = self.chart.to_modeled(xb)
        return evaluate(self.kernel, np.abs(pa - pb))

    def gram(self, xa, xb) -> np.ndarray:
        """Pairwise covariance matrix between two grid-coordinate vectors."""
        pa = np.atleast_1d(self.chart.to_modeled(xa))
        pb = np.atleast_1d(self.chart.to_modeled(xb))
        return evaluate(self.kernel, np.abs(pa[:, None] - pb[None, :]))


def charted_kernel(kernel: Kernel, chart: Chart) -> ChartedKernel:
    """Compose a stationary kernel with a chart."""
    return ChartedKernel(kernel, chart)


@dataclass
class GridHierarchy:
    """Grid coordinates of every pixel at each refinement depth.

    ``levels[0]`` is the unit-spaced base grid 0..n0-1.  Each deeper level
    refines runs of ``n_csz`` coarse pixels into ``n_fsz`` fine pixels placed
    symmetrically around the run's central pixel at half the coarse spacing,
    so every level is again a regular grid.  Consecutive refinement windows
    advance by ``stride = n_fsz // 2`` coarse pixels (1 when ``n_fsz == 1``);
    a trailing remainder of coarse pixels narrower than a window is dropped.
    """

    levels: list = field(repr=False)
    n_csz: int
    n_fsz: int
    stride: int
    spacings: list
    window_counts: list

    @property
    def sizes(self):
        return [lv.size for lv in self.levels]

    @property
    def n_lvl(self):
        return len(self.levels) - 1

    def window_grid_coords(self, level: int):
        """Coarse and fine grid coordinates per window at a given level.

        Returns ``(coarse, fine)`` with shapes ``(windows, n_csz)`` and
        ``(windows, n_fsz)``.
        """
        if not 1 <= level <= self.n_lvl:
            raise ValueError(f"level must be in 1..{self.n_lvl}, got {level}")
        prev = self.levels[level - 1]
        view = np.lib.stride_tricks.sliding_window_view(prev, self.n_csz)
        coarse = view[:: self.stride][: self.window_counts[level - 1]]
        fine = self.levels[level].reshape(-1, self.n_fsz)
        return coarse, fine


def _fine_offsets(n_fsz: int, coarse_spacing: float) -> np.ndarray:
    # fine pixels sit at half the coarse spacing, centered on the window center
    j = np.arange(n_fsz, dtype=float)
    return (coarse_spacing / 2.0) * (j - (n_fsz - 1) / 2.0)


def build_hierarchy(spec) -> GridHierarchy:
    """Construct the per-level grid coordinates for a refinement spec.

    Parameters
    ----------
    spec : RefinementSpec
        Provides ``n0``, ``n_lvl``, ``n_csz``, ``n_fsz``.

    Raises
    ------
    ValueError
        If any level to be refined has fewer than ``n_csz`` pixels.
    """
    n_csz, n_fsz = spec.n_csz, spec.n_fsz
    stride = max(1, n_fsz // 2)
    half = (n_csz - 1) // 2
    levels = [np.arange(spec.n0, dtype=float)]
    spacings = [1.0]
    window_counts = []
    for level in range(1, spec.n_lvl + 1):
        prev = levels[-1]
        if prev.size < n_csz:
            raise ValueError(
                f"level {level - 1} has {prev.size} pixels, fewer than the "
                f"coarse window size {n_csz}; refinement level {level} is infeasible"
            )
        spacing = spacings[-1]
        windows = (prev.size - n_csz) // stride + 1
        centers = prev[half : half + stride * windows : stride]
        offsets = _fine_offsets(n_fsz, spacing)
        fine = (centers[:, None] + offsets[None, :]).ravel()
        levels.append(fine)
        # single-pixel windows sit on the window centers, keeping the parent
        # spacing; otherwise the fine grid runs at half the parent spacing
        spacings.append(spacing if n_fsz == 1 else spacing / 2.0)
        window_counts.append(windows)
    return GridHierarchy(
        levels=levels,
        n_csz=n_csz,
        n_fsz=n_fsz,
        stride=stride,
        spacings=spacings,
        window_counts=window_counts,
    )


def log_chart_for_experiment(
    n_points: int, spacing_ratio: float, max_gap: float = 1.0, grid=None
) -> LogSpacedChart:
    """Calibrate a log chart against a regular grid's gap profile.

    Returns the :class:`LogSpacedChart` whose image of ``grid`` (default
    ``0..n_points-1``) has nearest-neighbor distances spanning
    ``max_gap / spacing_ratio`` up to ``max_gap``, growing geometrically
    along the grid.

    Parameters
    ----------
    n_points : int
        Number of grid points; must be >= 2.
    spacing_ratio : float
        Largest over smallest nearest-neighbor distance; must be > 1.
    max_gap : float, optional
        The largest nearest-neighbor distance in modeled space.
    grid : ndarray, optional
        The actual grid coordinates to calibrate against; must be regularly
        spaced.  Defaults to ``arange(n_points)``.

    Notes
    -----
    With two points there is a single gap and the ratio is vacuous; the
    growth rate is then fixed by the convention ``a * spacing = ln 2`` and
    only the gap size is calibrated.
    """
    n_points = int(n_points)
    if n_points < 2:
        raise ValueError(f"need at least two points, got {n_points}")
    spacing_ratio = float(spacing_ratio)
    if not np.isfinite(spacing_ratio) or spacing_ratio <= 1.0:
        raise ValueError(f"spacing_ratio must be > 1, got {spacing_ratio}")
    if grid is None:
        grid = np.arange(n_points, dtype=float)
    else:
        grid = np.asarray(grid, dtype=float)
        if grid.size != n_points:
            raise ValueError(f"grid has {grid.size} points, expected {n_points}")
    deltas = np.diff(grid)
    delta = deltas[0]
    if delta <= 0.0 or not np.allclose(deltas, delta, rtol=1e-9, atol=0.0):
        raise ValueError("grid must be regularly spaced and increasing")

    # Gap i of the mapped grid is r0 * exp(a * grid[i]) * (exp(a*delta) - 1),
    # so gaps grow by exp(a*delta) per step: the largest/smallest ratio pins a,
    # and anchoring the last gap at max_gap pins r0.
    if n_points == 2:
        a = np.log(2.0) / delta
    else:
        a = np.log(spacing_ratio) / (delta * (n_points - 2))
    r0 = max_gap / (np.exp(a * grid[n_points - 2]) * np.expm1(a * delta))
    return LogSpacedChart(r0=r0, a=a)
