"""Expanding-window pseudo out-of-sample forecast comparison.

Each origin t >= initial_window refits the chosen method on the first t
observations and forecasts h steps ahead; errors are recorded at the
observed maturities.  The headline figure is

    RMSFE = sqrt( mean over origins and maturities of squared errors ),

with origins t = initial_window..T-h, so a complete panel contributes
N * (T - h - initial_window + 1) squared errors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DiscretePanel, FunctionalSample, Grid, _frozen, panel_to_sample
from .dns import DEFAULT_DECAY, dns_forecast, fit_dns
from .errors import DataError, NumericError
from .pipeline import FfmConfig, fit_ffm, forecast
from .selection import CRITERIA

__all__ = ["FfmFixed", "FfmCriterion", "Dns", "BacktestReport", "rolling_backtest"]

DEFAULT_INITIAL_WINDOW = 120


@dataclass(frozen=True)
class FfmFixed:
    """Factor model with pinned orders (K, p)."""

    k: int
    p: int
    restricted: bool = False

    @property
    def label(self) -> str:
        tag = "ar" if self.restricted else "var"
        return f"ffm-fixed({self.k},{self.p},{tag})"


@dataclass(frozen=True)
class FfmCriterion:
    """Factor model whose orders are re-selected at every origin."""

    criterion: str = "bic"
    k_max: int = 8
    p_max: int = 8
    restricted: bool = False

    def __post_init__(self):
        if self.criterion not in CRITERIA:
            raise ValueError(f"unknown criterion {self.criterion!r}; expected one of {CRITERIA}")

    @property
    def label(self) -> str:
        tag = "ar" if self.restricted else "var"
        return f"ffm-{self.criterion}({tag})"


@dataclass(frozen=True)
class Dns:
    """Dynamic Nelson-Siegel benchmark."""

    decay: float = DEFAULT_DECAY
    diagonal: bool = False

    @property
    def label(self) -> str:
        return f"dns({'ar' if self.diagonal else 'var'})"


@dataclass(frozen=True, eq=False)
class BacktestReport:
    """Out-of-sample errors of one method at one horizon.

    ``errors[i, j]`` is the forecast error at origin ``origins[i]`` and
    maturity ``maturities[j]``; NaN marks cells that could not be
    evaluated (missing realized value, or a failed fit counted in
    ``failures``).  ``selected`` holds the per-origin (K, p) where the
    method selects them, else None; failed origins keep (0, 0) there.
    """

    method: str
    horizon: int
    initial_window: int
    maturities: np.ndarray
    origins: np.ndarray
    errors: np.ndarray
    selected: np.ndarray | None
    failures: int
    k: int | None = None
    p: int | None = None
    dynamics: str = "var"

    @property
    def rmsfe(self) -> float:
        """Root mean squared error over all evaluated origin-maturity cells."""
        return float(np.sqrt(np.nanmean(self.errors**2)))

    def summary_row(self) -> dict:
        """Table row; K and p are None when re-selected per origin."""
        return {
            "method": self.method,
            "K": self.k,
            "p": self.p,
            "dynamics": self.dynamics,
            "horizon": self.horizon,
            "rmsfe": self.rmsfe,
            "initial_window": self.initial_window,
            "origins": int(self.origins.size),
            "failures": self.failures,
        }


def _as_views(data, need_sample: bool) -> tuple:
    """Panel and sample views of the input, built on the observed maturities.

    The sample view interpolates panel holes, which requires every row to
    span the full maturity range; it is only built when the method needs
    curves (DNS works straight off the panel).
    """
    if isinstance(data, FunctionalSample):
        panel = DiscretePanel(data.grid.points, data.matrix, times=data.times)
        return panel, data
    if isinstance(data, DiscretePanel):
        sample = panel_to_sample(data, Grid(data.maturities)) if need_sample else None
        return data, sample
    raise TypeError(f"expected FunctionalSample or DiscretePanel, got {type(data).__name__}")


def rolling_backtest(data, method, h: int = 1,
                     initial_window: int = DEFAULT_INITIAL_WINDOW) -> BacktestReport:
    """Expanding-window forecast evaluation of one method.

    Parameters
    ----------
    data : FunctionalSample or DiscretePanel
        Full history; forecasts are evaluated against its own later rows
        at the observed maturities (panel holes stay unevaluated).
    method : FfmFixed, FfmCriterion, or Dns
    h : int
        Forecast horizon, at least 1.
    initial_window : int
        First origin (number of observations in the first training set).

    Origins with failed fits are recorded as NaN rows and counted in the
    report's ``failures`` instead of aborting the whole exercise.
    """
    if h < 1:
        raise ValueError(f"horizon must be at least 1, got {h}")
    if initial_window < 3:
        raise ValueError(f"initial_window must be at least 3, got {initial_window}")
    panel, sample = _as_views(data, need_sample=not isinstance(method, Dns))
    t_total = panel.n_rows
    if t_total < initial_window + h:
        raise ValueError(
            f"need at least initial_window + h = {initial_window + h} rows, got {t_total}"
        )
    realized = panel.table
    maturities = panel.maturities
    origins = np.arange(initial_window, t_total - h + 1)
    errors = np.full((origins.size, maturities.size), np.nan)
    selects_orders = isinstance(method, FfmCriterion)
    selected = np.zeros((origins.size, 2), dtype=int) if selects_orders else None
    failures = 0

    for i, t in enumerate(origins):
        try:
            if isinstance(method, Dns):
                train = DiscretePanel(maturities, realized[:t], times=panel.times[:t])
                model = fit_dns(train, method.decay, method.diagonal)
                pred = dns_forecast(model, maturities, h).matrix[h - 1]
            else:
                train = FunctionalSample(sample.grid, sample.matrix[:t],
                                         times=sample.times[:t])
                if isinstance(method, FfmFixed):
                    config = FfmConfig(k=method.k, p=method.p, restricted=method.restricted)
                else:
                    config = FfmConfig(criterion=method.criterion,
                                       k_max=min(method.k_max, t - 1, sample.grid.n),
                                       p_max=method.p_max,
                                       restricted=method.restricted)
                model = fit_ffm(train, config)
                if selects_orders:
                    selected[i] = (model.k, model.p)
                pred = forecast(model, h).matrix[h - 1]
        except (NumericError, DataError, ValueError):
            # a window can be legitimately unusable (singular dynamics,
            # rank below a pinned K, too few quotes); record and move on
            failures += 1
            continue
        errors[i] = pred - realized[t + h - 1]

    if not np.any(np.isfinite(errors)):
        raise NumericError("every backtest origin failed; nothing was evaluated")
    if isinstance(method, FfmFixed):
        orders = (method.k, method.p)
        dynamics = "ar" if method.restricted else "var"
    elif isinstance(method, FfmCriterion):
        orders = (None, None)   # re-selected per origin; see ``selected``
        dynamics = "ar" if method.restricted else "var"
    else:
        orders = (3, 1)         # the benchmark always carries 3 factors
        dynamics = "ar" if method.diagonal else "var"
    return BacktestReport(
        method=method.label,
        horizon=h,
        initial_window=initial_window,
        maturities=_frozen(maturities),
        origins=_frozen(origins, dtype=int),
        errors=_frozen(errors),
        selected=None if selected is None else _frozen(selected, dtype=int),
        failures=failures,
        k=orders[0],
        p=orders[1],
        dynamics=dynamics,
    )
