"""Dynamic Nelson-Siegel benchmark for yield curve panels.

The three loadings (level, slope, curvature) are fixed functions of
maturity with a single decay parameter; factor paths come from
cross-sectional least squares date by date on the observed maturities,
and their dynamics from an autoregression without constant on the raw
(not demeaned) factor series.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Grid, _frozen
from .dynamics import VarFit, fit_var, forecast_scores
from .errors import DataError
from .pipeline import ForecastResult

__all__ = ["DEFAULT_DECAY", "DnsModel", "dns_loadings", "fit_dns", "dns_forecast"]

# Conventional monthly decay; places the curvature loading's maximum
# near maturity 30 months.
DEFAULT_DECAY = 0.0609


def dns_loadings(maturities, decay: float = DEFAULT_DECAY) -> np.ndarray:
    """Level, slope, and curvature loadings at the given maturities.

    Columns are (1, (1 - e^{-dr})/(dr), (1 - e^{-dr})/(dr) - e^{-dr})
    for maturity r; the slope column tends to 1 and the curvature column
    to 0 as r -> 0, and maturity 0 is mapped to those limits exactly.
    """
    if decay <= 0:
        raise ValueError(f"decay must be positive, got {decay}")
    r = np.atleast_1d(np.asarray(maturities, dtype=float))
    if np.any(r < 0):
        raise ValueError("maturities must be nonnegative")
    out = np.ones((r.size, 3))
    pos = r > 0
    x = decay * r[pos]
    slope = -np.expm1(-x) / x
    out[pos, 1] = slope
    out[pos, 2] = slope - np.exp(-x)
    out[~pos, 2] = 0.0
    return out


@dataclass(frozen=True, eq=False)
class DnsModel:
    """Fitted dynamic Nelson-Siegel model.

    ``betas`` holds the per-date factor estimates (T, 3); ``dynamics``
    their first-order autoregression (full or diagonal) without constant.
    """

    decay: float
    betas: np.ndarray
    dynamics: VarFit
    times: tuple


def fit_dns(panel, decay: float = DEFAULT_DECAY, diagonal: bool = False) -> DnsModel:
    """Fit the benchmark to a discrete panel.

    Every row needs at least 3 observed maturities; each date's factors
    come from ordinary least squares of the observed values on the three
    loadings at the observed maturities, never from interpolated curves.
    """
    loadings = dns_loadings(panel.maturities, decay)
    betas = np.empty((panel.n_rows, 3))
    for t in range(panel.n_rows):
        mask = ~np.isnan(panel.table[t])
        if mask.sum() < 3:
            raise DataError(f"row {t} has fewer than 3 observed maturities")
        design = loadings[mask]
        coef, res, rank, _ = np.linalg.lstsq(design, panel.table[t, mask], rcond=None)
        if rank < 3:
            raise DataError(f"row {t} has a rank-deficient loading cross-section")
        betas[t] = coef
    dynamics = fit_var(betas, 1, restricted=diagonal)
    return DnsModel(decay=decay, betas=_frozen(betas), dynamics=dynamics, times=panel.times)


def dns_forecast(model: DnsModel, maturities, h: int) -> ForecastResult:
    """Curve forecasts 1..h steps ahead at the requested maturities."""
    if h < 1:
        raise ValueError(f"horizon must be at least 1, got {h}")
    beta_fc = forecast_scores(model.dynamics, model.betas, h)
    loadings = dns_loadings(maturities, model.decay)
    matrix = beta_fc @ loadings.T
    return ForecastResult(
        grid=Grid(np.asarray(maturities, dtype=float)),
        horizons=tuple(range(1, h + 1)),
        matrix=matrix,
        score_forecasts=beta_fc,
    )
