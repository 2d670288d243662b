"""Grids, curves, curve samples, and discretely observed panels.

A curve is represented by its values on a fixed quadrature grid; every
inner product and norm in the package is the trapezoid approximation on
that grid.  Panels (tables observed at arbitrary maturities, possibly
with holes) are turned into curve samples by natural cubic spline
interpolation, row by row.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DataError

__all__ = [
    "Grid",
    "Curve",
    "FunctionalSample",
    "DiscretePanel",
    "SplineFunction",
    "make_grid",
    "inner_product",
    "norm",
    "natural_cubic_spline",
    "panel_to_sample",
]


def _frozen(values, dtype=float) -> np.ndarray:
    """Owned, read-only array copy of ``values``."""
    out = np.array(values, dtype=dtype)
    out.flags.writeable = False
    return out


def trapezoid_weights(points: np.ndarray) -> np.ndarray:
    """Composite trapezoid quadrature weights for strictly increasing points.

    The weights are positive and sum exactly (in exact arithmetic) to the
    domain length ``points[-1] - points[0]``.
    """
    gaps = np.diff(points)
    w = np.empty_like(points)
    w[0] = gaps[0] / 2.0
    w[-1] = gaps[-1] / 2.0
    w[1:-1] = (points[2:] - points[:-2]) / 2.0
    return w


@dataclass(frozen=True, eq=False)
class Grid:
    """Evaluation points on an interval together with quadrature weights.

    Attributes
    ----------
    points : ndarray, shape (n,)
        Strictly increasing, finite evaluation points.  The domain is
        ``[points[0], points[-1]]``.
    weights : ndarray, shape (n,)
        Trapezoid weights; positive, summing to the domain length.
    """

    points: np.ndarray
    weights: np.ndarray = field(init=False)

    def __post_init__(self):
        points = _frozen(self.points)
        if points.ndim != 1 or points.size < 2:
            raise ValueError("grid needs at least two points")
        if not np.all(np.isfinite(points)):
            raise ValueError("grid points must be finite")
        if np.any(np.diff(points) <= 0):
            raise ValueError("grid points must be strictly increasing")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", _frozen(trapezoid_weights(points)))

    @property
    def n(self) -> int:
        return self.points.size

    @property
    def a(self) -> float:
        return float(self.points[0])

    @property
    def b(self) -> float:
        return float(self.points[-1])

    def __len__(self) -> int:
        return self.points.size

    def matches(self, other: "Grid") -> bool:
        """Whether both grids have identical points."""
        return self is other or np.array_equal(self.points, other.points)


def make_grid(a: float, b: float, n: int = 100) -> Grid:
    """Uniform grid of ``n`` points on ``[a, b]``.

    Requires ``a < b`` and ``n >= 2``.
    """
    if not n >= 2:
        raise ValueError(f"n must be at least 2, got {n}")
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    return Grid(np.linspace(a, b, n))


@dataclass(frozen=True, eq=False)
class Curve:
    """A single curve: values on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        if values.shape != (self.grid.n,):
            raise ValueError(
                f"curve has {values.shape} values for a grid of {self.grid.n} points"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("curve values must be finite")
        object.__setattr__(self, "values", values)


def _check_same_grid(x: Curve, y: Curve) -> None:
    if not x.grid.matches(y.grid):
        raise ValueError("curves live on different grids; resample explicitly first")


def inner_product(x: Curve, y: Curve) -> float:
    """Trapezoid approximation of the L2 inner product of two curves.

    Both curves must live on the same grid; there is no implicit
    resampling.
    """
    _check_same_grid(x, y)
    return float(np.dot(x.grid.weights, x.values * y.values))


def norm(x: Curve) -> float:
    """Quadrature L2 norm of a curve."""
    return float(np.sqrt(inner_product(x, x)))


@dataclass(frozen=True, eq=False)
class FunctionalSample:
    """A time series of curves on a common grid.

    Attributes
    ----------
    grid : Grid
        Common evaluation grid.
    matrix : ndarray, shape (T, n)
        Row t holds the values of the curve observed at time t.
    times : tuple, length T
        Observation labels; defaults to 1..T.
    """

    grid: Grid
    matrix: np.ndarray
    times: tuple = None

    def __post_init__(self):
        matrix = _frozen(np.atleast_2d(self.matrix))
        if matrix.ndim != 2 or matrix.shape[1] != self.grid.n:
            raise ValueError(
                f"matrix shape {matrix.shape} does not match grid of {self.grid.n} points"
            )
        if not np.all(np.isfinite(matrix)):
            raise ValueError("sample values must be finite")
        times = self.times
        if times is None:
            times = tuple(range(1, matrix.shape[0] + 1))
        else:
            times = tuple(times)
            if len(times) != matrix.shape[0]:
                raise ValueError("number of time labels does not match number of curves")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "times", times)

    @property
    def n_curves(self) -> int:
        return self.matrix.shape[0]

    def curve(self, t: int) -> Curve:
        """Curve at row index ``t`` (0-based)."""
        return Curve(self.grid, self.matrix[t])


@dataclass(frozen=True, eq=False)
class DiscretePanel:
    """Curves observed discretely at fixed maturities, with optional holes.

    Attributes
    ----------
    maturities : ndarray, shape (M,)
        Strictly increasing observation points shared by all rows.
    table : ndarray, shape (T, M)
        Observed values; NaN marks a missing cell.  Every row must keep
        at least ``MIN_KNOTS`` non-missing entries so it can support a
        natural cubic spline.
    times : tuple, length T
        Observation labels; defaults to 1..T.
    """

    MIN_KNOTS = 4

    maturities: np.ndarray
    table: np.ndarray
    times: tuple = None

    def __post_init__(self):
        maturities = _frozen(self.maturities)
        if maturities.ndim != 1 or maturities.size < 2:
            raise DataError("panel needs at least two maturities")
        if np.any(np.diff(maturities) <= 0):
            raise DataError("maturities must be strictly increasing")
        table = _frozen(np.atleast_2d(self.table))
        if table.ndim != 2 or table.shape[1] != maturities.size:
            raise DataError(
                f"table shape {table.shape} does not match {maturities.size} maturities"
            )
        counts = np.sum(~np.isnan(table), axis=1)
        bad = np.nonzero(counts < self.MIN_KNOTS)[0]
        if bad.size:
            raise DataError(
                f"rows {bad.tolist()} have fewer than {self.MIN_KNOTS} observed values"
            )
        times = self.times
        if times is None:
            times = tuple(range(1, table.shape[0] + 1))
        else:
            times = tuple(times)
            if len(times) != table.shape[0]:
                raise DataError("number of time labels does not match number of rows")
        object.__setattr__(self, "maturities", maturities)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "times", times)

    @property
    def n_rows(self) -> int:
        return self.table.shape[0]

    def row_knots(self, t: int) -> np.ndarray:
        """Maturities observed (non-missing) in row ``t``."""
        return self.maturities[~np.isnan(self.table[t])]

    def is_complete(self) -> bool:
        return not np.any(np.isnan(self.table))


class SplineFunction:
    """Natural cubic spline through given knots.

    Interpolates the data exactly, has zero second derivative at both end
    knots, and refuses to extrapolate.
    """

    def __init__(self, xs: np.ndarray, ys: np.ndarray):
        self.xs = _frozen(xs)
        self.ys = _frozen(ys)
        self._pp = CubicSpline(self.xs, self.ys, bc_type="natural", extrapolate=False)

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if np.any(r < self.xs[0]) or np.any(r > self.xs[-1]):
            raise ValueError(
                f"evaluation outside the knot span [{self.xs[0]}, {self.xs[-1]}]"
            )
        return self._pp(r)

    def second_derivatives(self) -> np.ndarray:
        """Second derivative at each knot (zero at both ends by construction)."""
        return self._pp(self.xs, 2)


def natural_cubic_spline(xs, ys, min_knots: int = DiscretePanel.MIN_KNOTS) -> SplineFunction:
    """Natural cubic spline through ``(xs, ys)``.

    Parameters
    ----------
    xs : array_like
        Strictly increasing knots, at least ``min_knots`` of them.
    ys : array_like
        Values at the knots.
    min_knots : int
        Floor on the number of knots.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape:
        raise ValueError("xs and ys must be one-dimensional and of equal length")
    if xs.size < min_knots:
        raise ValueError(f"need at least {min_knots} knots, got {xs.size}")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("knots must be strictly increasing")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise ValueError("knots and values must be finite")
    return SplineFunction(xs, ys)


def panel_to_sample(panel: DiscretePanel, grid: Grid,
                    min_knots: int = DiscretePanel.MIN_KNOTS) -> FunctionalSample:
    """Interpolate every panel row onto ``grid`` with natural cubic splines.

    Each row uses only its own observed maturities as knots.  The grid
    must lie inside every row's knot span; rows that cannot cover it are
    rejected with their index named.  Rows observed exactly on the grid
    are copied, so a complete panel whose maturities equal the grid
    points round-trips bit for bit.
    """
    rows = np.empty((panel.n_rows, grid.n))
    for t in range(panel.n_rows):
        mask = ~np.isnan(panel.table[t])
        knots = panel.maturities[mask]
        if knots.size < min_knots:
            raise DataError(f"row {t} has fewer than {min_knots} observed values")
        if mask.all() and np.array_equal(panel.maturities, grid.points):
            rows[t] = panel.table[t]
            continue
        if grid.a < knots[0] or grid.b > knots[-1]:
            raise DataError(
                f"row {t}: grid [{grid.a}, {grid.b}] exceeds the observed span "
                f"[{knots[0]}, {knots[-1]}]"
            )
        rows[t] = natural_cubic_spline(knots, panel.table[t, mask], min_knots)(grid.points)
    return FunctionalSample(grid, rows, times=panel.times)
