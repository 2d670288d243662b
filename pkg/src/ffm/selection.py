"""Joint selection of the number of factors and the VAR lag order.

All criteria are built from the simplified one-step mean squared error

    MSE(J, m) = tr(Sigma_eta(J, m)) + sum of eigenvalues beyond J,

evaluated on a (J, m) grid.  bic and hqc penalize its log with J*m
parameter counts; ffpe multiplies the innovation trace by (T + J*m)/T
and adds the eigenvalue tail without any log or additive penalty, which
is why it tends to overshoot.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import FunctionalSample
from .dynamics import fit_var
from .errors import NumericError
from .fpca import FpcaResult

__all__ = [
    "CRITERIA",
    "SelectionGrid",
    "mse_simplified",
    "mse_direct",
    "criterion_grid",
    "select_orders",
    "penalty",
    "export_mse_surface",
]

CRITERIA = ("bic", "hqc", "ffpe")


@dataclass(frozen=True, eq=False)
class SelectionGrid:
    """Criterion values over the (J, m) grid and the chosen orders.

    ``mse[J-1, m-1]`` and ``values[J-1, m-1]`` hold the simplified MSE
    and the criterion value for J factors and m lags.  Cells whose VAR
    fit failed hold +inf.  ``chosen`` is the lexicographically smallest
    (J, m) attaining the minimum criterion value.
    """

    criterion: str
    k_max: int
    p_max: int
    mse: np.ndarray
    values: np.ndarray
    chosen: tuple[int, int]
    n_obs: int
    restricted: bool


def penalty(criterion: str, j: int, m: int, t_obs: int) -> float:
    """Additive penalty of a log-MSE criterion at cell (j, m).

    ffpe has no additive penalty (its correction is multiplicative), so
    it returns 0.
    """
    if criterion == "bic":
        return j * m * math.log(t_obs) / t_obs
    if criterion == "hqc":
        return 2.0 * j * m * math.log(math.log(t_obs)) / t_obs
    if criterion == "ffpe":
        return 0.0
    raise ValueError(f"unknown criterion {criterion!r}; expected one of {CRITERIA}")


def _innovation_traces(result: FpcaResult, k_max: int, p_max: int,
                       restricted: bool) -> np.ndarray:
    """tr(Sigma_eta(J, m)) for every grid cell; +inf where the fit fails."""
    traces = np.full((k_max, p_max), np.inf)
    for j in range(1, k_max + 1):
        scores = result.scores[:, :j]
        for m in range(1, p_max + 1):
            try:
                traces[j - 1, m - 1] = float(np.trace(fit_var(scores, m, restricted).sigma_eta))
            except (NumericError, ValueError) as exc:
                warnings.warn(
                    f"selection cell (J={j}, m={m}) failed and was set to +inf: {exc}",
                    stacklevel=2,
                )
    return traces


def mse_simplified(result: FpcaResult, j: int, m: int, restricted: bool = False) -> float:
    """Simplified one-step MSE at (j, m): innovation trace plus eigenvalue tail.

    ``j = 0`` is the static no-factor case: the full variance sum, with
    no dynamics fitted and ``m`` ignored.
    """
    if j == 0:
        return result.total_variance()
    if not 1 <= j <= result.rank:
        raise ValueError(f"j must be in [0, {result.rank}], got {j}")
    fit = fit_var(result.scores[:, :j], m, restricted)
    return float(np.trace(fit.sigma_eta)) + result.tail_sum(j)


def mse_direct(sample: FunctionalSample, fitted: FunctionalSample, m: int) -> float:
    """Average squared quadrature distance between sample and fitted curves.

    ``fitted`` holds one-step fitted curves for t = m+1..T, either as
    T - m rows or as T rows whose first m are ignored.  ``m = 0``
    averages over the whole sample.
    """
    if not sample.grid.matches(fitted.grid):
        raise ValueError("sample and fitted curves live on different grids")
    if m < 0 or m >= sample.n_curves:
        raise ValueError(f"m must be in [0, {sample.n_curves - 1}], got {m}")
    target = sample.matrix[m:]
    if fitted.n_curves == target.shape[0]:
        diff = target - fitted.matrix
    elif fitted.n_curves == sample.n_curves:
        diff = target - fitted.matrix[m:]
    else:
        raise ValueError(
            f"fitted sample has {fitted.n_curves} rows; expected {target.shape[0]} "
            f"or {sample.n_curves}"
        )
    return float(np.mean(diff**2 @ sample.grid.weights))


def _criterion_values(criterion: str, traces: np.ndarray, tails: np.ndarray,
                      t_obs: int) -> np.ndarray:
    k_max, p_max = traces.shape
    js = np.arange(1, k_max + 1)[:, None]
    ms = np.arange(1, p_max + 1)[None, :]
    if criterion == "ffpe":
        return (t_obs + js * ms) / t_obs * traces + tails[:, None]
    mse = traces + tails[:, None]
    with np.errstate(divide="ignore"):
        logs = np.log(mse)
    if criterion == "bic":
        return logs + js * ms * math.log(t_obs) / t_obs
    if criterion == "hqc":
        return logs + 2.0 * js * ms * math.log(math.log(t_obs)) / t_obs
    raise ValueError(f"unknown criterion {criterion!r}; expected one of {CRITERIA}")


def select_orders(result: FpcaResult, k_max: int, p_max: int,
                  criteria=CRITERIA, restricted: bool = False) -> dict[str, SelectionGrid]:
    """Evaluate several criteria on one shared (J, m) MSE grid.

    The VAR fits are done once; each criterion only re-penalizes them.
    """
    if not 1 <= k_max <= result.rank:
        raise ValueError(f"k_max must be in [1, {result.rank}], got {k_max}")
    t_obs = result.n_curves
    if not 1 <= p_max < t_obs:
        raise ValueError(f"p_max must be in [1, {t_obs - 1}], got {p_max}")
    for criterion in criteria:
        if criterion not in CRITERIA:
            raise ValueError(f"unknown criterion {criterion!r}; expected one of {CRITERIA}")

    traces = _innovation_traces(result, k_max, p_max, restricted)
    tails = np.array([result.tail_sum(j) for j in range(1, k_max + 1)])
    mse = traces + tails[:, None]

    grids = {}
    for criterion in criteria:
        values = _criterion_values(criterion, traces, tails, t_obs)
        values = np.where(np.isfinite(traces), values, np.inf)
        if not np.isfinite(values).any():
            raise NumericError("every selection cell failed; the grid is empty")
        # row-major argmin takes the first minimum, i.e. the smallest (J, m)
        flat = int(np.argmin(values))
        chosen = (flat // p_max + 1, flat % p_max + 1)
        grids[criterion] = SelectionGrid(
            criterion=criterion,
            k_max=k_max,
            p_max=p_max,
            mse=mse,
            values=values,
            chosen=chosen,
            n_obs=t_obs,
            restricted=restricted,
        )
    return grids


def criterion_grid(result: FpcaResult, k_max: int, p_max: int,
                   criterion: str = "bic", restricted: bool = False) -> SelectionGrid:
    """Criterion values over 1 <= J <= k_max, 1 <= m <= p_max and the argmin."""
    return select_orders(result, k_max, p_max, (criterion,), restricted)[criterion]


def export_mse_surface(grid: SelectionGrid) -> list[dict]:
    """Long-format rows of the selection surface, one dict per (J, m) cell."""
    rows = []
    for j in range(1, grid.k_max + 1):
        for m in range(1, grid.p_max + 1):
            rows.append(
                {
                    "J": j,
                    "m": m,
                    "mse": float(grid.mse[j - 1, m - 1]),
                    "criterion": float(grid.values[j - 1, m - 1]),
                    "chosen": (j, m) == grid.chosen,
                }
            )
    return rows
