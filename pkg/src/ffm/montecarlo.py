"""Replicated order-selection experiments on simulated curve processes."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .fpca import fpca
from .selection import CRITERIA, select_orders
from .simulate import SimSpec, replication_rng, simulate

__all__ = ["McReport", "monte_carlo"]


@dataclass(frozen=True, eq=False)
class McReport:
    """Selection outcomes of a replicated experiment.

    ``selections[criterion]`` is a (reps, 2) integer array of the chosen
    (K, p) per replication, in replication order.  Bias and RMSE are
    reported against the true orders of the generating spec.
    """

    spec: SimSpec
    reps: int
    k_max: int
    p_max: int
    criteria: tuple
    restricted: bool
    selections: dict

    def bias(self, criterion: str) -> tuple[float, float]:
        """Mean of (K_hat - K, p_hat - p)."""
        chosen = self.selections[criterion]
        return (
            float(np.mean(chosen[:, 0] - self.spec.k)),
            float(np.mean(chosen[:, 1] - self.spec.p)),
        )

    def rmse(self, criterion: str) -> tuple[float, float]:
        """Root mean squared error of (K_hat, p_hat)."""
        chosen = self.selections[criterion]
        return (
            float(np.sqrt(np.mean((chosen[:, 0] - self.spec.k) ** 2.0))),
            float(np.sqrt(np.mean((chosen[:, 1] - self.spec.p) ** 2.0))),
        )

    def frequencies(self, criterion: str) -> np.ndarray:
        """Share of replications choosing each (K, p) cell; sums to 1."""
        chosen = self.selections[criterion]
        freq = np.zeros((self.k_max, self.p_max))
        for k, p in chosen:
            freq[k - 1, p - 1] += 1.0
        return freq / chosen.shape[0]

    def summary_rows(self) -> list[dict]:
        rows = []
        for criterion in self.criteria:
            bias_k, bias_p = self.bias(criterion)
            rmse_k, rmse_p = self.rmse(criterion)
            rows.append(
                {
                    "model": self.spec.model,
                    "T": self.spec.n_obs,
                    "criterion": criterion,
                    "bias_K": bias_k,
                    "bias_p": bias_p,
                    "rmse_K": rmse_k,
                    "rmse_p": rmse_p,
                    "reps": self.reps,
                }
            )
        return rows


def _run_replication(spec: SimSpec, rep: int, k_max: int, p_max: int,
                     criteria: tuple, restricted: bool) -> dict:
    rng = replication_rng(spec.seed, rep)
    sample = simulate(spec, rng)
    result = fpca(sample)
    grids = select_orders(result, k_max, p_max, criteria, restricted)
    return {criterion: grid.chosen for criterion, grid in grids.items()}


def _run_batch(args) -> list[tuple[int, dict]]:
    spec, reps, k_max, p_max, criteria, restricted = args
    return [
        (rep, _run_replication(spec, rep, k_max, p_max, criteria, restricted))
        for rep in reps
    ]


def monte_carlo(spec: SimSpec, reps: int, k_max: int = 8, p_max: int = 8,
                criteria=CRITERIA, restricted: bool = False, jobs: int = 1) -> McReport:
    """Run ``reps`` independent selection replications of ``spec``.

    Replication r always uses the stream derived from (spec.seed, r), so
    results are identical for any ``jobs``; workers only change the
    schedule.
    """
    if reps < 1:
        raise ValueError(f"reps must be positive, got {reps}")
    criteria = tuple(criteria)
    outcomes: list = [None] * reps

    if jobs > 1 and reps > 1:
        workers = min(jobs, reps)
        batches = [
            (spec, range(w, reps, workers), k_max, p_max, criteria, restricted)
            for w in range(workers)
        ]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for batch in pool.map(_run_batch, batches):
                for rep, chosen in batch:
                    outcomes[rep] = chosen
    else:
        for rep in range(reps):
            outcomes[rep] = _run_replication(spec, rep, k_max, p_max, criteria, restricted)

    selections = {
        criterion: np.array([outcome[criterion] for outcome in outcomes], dtype=int)
        for criterion in criteria
    }
    return McReport(
        spec=spec,
        reps=reps,
        k_max=k_max,
        p_max=p_max,
        criteria=criteria,
        restricted=restricted,
        selections=selections,
    )
