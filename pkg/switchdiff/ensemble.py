#
# Copyright 2024 Capital One Services, LLC
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""
Monte Carlo ensembles of hybrid diffusion paths.

Replicate ``k`` always draws from ``Stream(base_seed).split(tag, k)``, and
every reduction runs in replicate order, so results do not depend on how
replicates were scheduled.  With ``parallelism=None`` replicates run in a
local loop; otherwise they are partitioned across a Fugue execution engine
and gathered back before reduction.
"""

import logging
import math
import pickle
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import fugue.api as fa
import numpy as np
import pandas as pd
from scipy.stats import norm

from switchdiff.averaging import VectorField, averaged_field, integrate_ode
from switchdiff.base import BlowupError, InvalidBudget, SwitchDiffError, render
from switchdiff.ctmc import StationaryDist, stationary_distribution
from switchdiff.hybrid_sde import HybridModel, Trajectory, simulate
from switchdiff.streams import Stream

LOG = logging.getLogger(__name__)

MAX_EXIT_STEPS = 10**8


class _ReplicateFailure:
    """Error raised inside a replicate, carried back to the driver."""

    def __init__(self, error: SwitchDiffError) -> None:
        self.error = error


def _guarded(func: Callable[[int], Any], k: int) -> Any:
    try:
        return func(k)
    except BlowupError as exc:
        return _ReplicateFailure(BlowupError(exc.time, replicate=k))
    except SwitchDiffError as exc:
        return _ReplicateFailure(exc)


def map_replicates(
    func: Callable[[int], Any],
    n: int,
    parallelism: Optional[int] = None,
    engine: Any = None,
) -> List[Any]:
    """Evaluate ``func(k)`` for ``k = 0 .. n-1`` and return results in index order.

    Parameters
    ----------
    func : callable
        Replicate body; must be deterministic given ``k``
    n : int
        Number of replicates
    parallelism : int, optional
        Number of partitions.  Entering a value for this will force the use of
        Fugue over a plain local loop
    engine : Any, optional
        Fugue execution engine (e.g. ``"dask"``); the current engine when omitted

    Returns
    -------
    list
        ``[func(0), ..., func(n - 1)]``

    Raises
    ------
    SwitchDiffError
        The error of the lowest-index failing replicate; ``BlowupError``
        carries that index.
    """
    if n < 1:
        raise ValueError(f"need at least one replicate, got {n}")
    if parallelism is None and engine is None and fa.get_current_parallelism() == 1:
        results = [_guarded(func, k) for k in range(n)]
    else:
        results = _distributed_replicates(func, n, parallelism, engine)
    for res in results:
        if isinstance(res, _ReplicateFailure):
            raise res.error
    return results


def _distributed_replicates(
    func: Callable[[int], Any], n: int, parallelism: Optional[int], engine: Any
) -> List[Any]:
    bucket = (
        parallelism if parallelism is not None else fa.get_current_parallelism() * 2
    )
    tasks = pd.DataFrame({"replicate": np.arange(n, dtype="int64")})
    tasks["key"] = tasks["replicate"] % bucket

    def _run(df: List[Dict[str, Any]]) -> List[List[Any]]:
        return [
            [int(row["replicate"]), pickle.dumps(_guarded(func, int(row["replicate"])))]
            for row in df
        ]

    objs = fa.as_array(
        fa.transform(
            tasks,
            _run,
            schema="replicate:long,obj:binary",
            partition={"by": "key", "num": bucket},
            engine=engine,
        )
    )
    LOG.debug(f"gathered {len(objs)} replicates from {bucket} partitions")
    return [pickle.loads(obj) for _, obj in sorted(objs, key=lambda row: row[0])]


@dataclass(frozen=True, eq=False)
class EnsembleSummary:
    """Per-time first and second moments of an ensemble."""

    times: np.ndarray
    mean: np.ndarray
    second_moment: np.ndarray
    n: int
    trajectories: Optional[List[Trajectory]] = None

    @property
    def variance(self) -> np.ndarray:
        return self.second_moment - self.mean**2


def simulate_ensemble(
    model: HybridModel,
    eps: float,
    delta: float,
    x0: Sequence[float],
    i0: int,
    T: float,
    dt: float,
    n: int,
    base_seed: int,
    keep: bool = False,
    parallelism: Optional[int] = None,
    engine: Any = None,
) -> EnsembleSummary:
    """Simulate ``n`` independent paths and summarize them per sample time.

    Parameters
    ----------
    model, eps, delta, x0, i0, T, dt
        As for :func:`switchdiff.hybrid_sde.simulate`
    n : int
        Number of replicates
    base_seed : int
        Replicate ``k`` uses ``Stream(base_seed).split("ensemble", k)``
    keep : bool, optional
        Retain the trajectories in the summary
    parallelism : int, optional
        Number of Fugue partitions; local loop when omitted
    engine : Any, optional
        Fugue execution engine

    Returns
    -------
    EnsembleSummary
    """
    root = Stream(base_seed)

    def _one(k: int) -> Trajectory:
        return simulate(model, eps, delta, x0, i0, T, dt, root.split("ensemble", k))

    trajectories = map_replicates(_one, n, parallelism, engine)
    total = np.zeros_like(trajectories[0].states)
    total_sq = np.zeros_like(total)
    for traj in trajectories:
        total += traj.states
        total_sq += traj.states**2
    LOG.info(f"{model.name}: ensemble of {n} paths at eps={eps}, delta={delta}")
    return EnsembleSummary(
        times=trajectories[0].times,
        mean=total / n,
        second_moment=total_sq / n,
        n=n,
        trajectories=trajectories if keep else None,
    )


@dataclass(frozen=True)
class DeviationEstimate:
    """Estimated probability with a normal-approximation 95% interval."""

    p_hat: float
    ci_low: float
    ci_high: float
    n: int


def proportion_interval(hits: int, n: int, level: float = 0.95) -> DeviationEstimate:
    """Point estimate and clipped normal-approximation interval for ``hits / n``."""
    p_hat = hits / n
    half = norm.ppf(0.5 + level / 2) * math.sqrt(p_hat * (1.0 - p_hat) / n)
    return DeviationEstimate(p_hat, max(0.0, p_hat - half), min(1.0, p_hat + half), n)


def sup_deviation_probability(
    model: HybridModel,
    eps: float,
    delta: float,
    x0: Sequence[float],
    i0: int,
    gamma: float,
    T: float,
    dt: float,
    n: int,
    base_seed: int = 0,
    field: Optional[VectorField] = None,
    nu: Optional[Union[StationaryDist, Sequence[float]]] = None,
    parallelism: Optional[int] = None,
    engine: Any = None,
) -> DeviationEstimate:
    """Estimate ``P(sup_{t <= T} |X(t) - Xbar(t)| >= gamma)``.

    ``Xbar`` is the RK4 solution of the averaged field from the same initial
    value, compared with each path on the shared sampling grid.

    Parameters
    ----------
    gamma : float
        Deviation threshold
    field : VectorField, optional
        Averaged field; built from ``nu`` (default the stationary distribution)
        when omitted

    Returns
    -------
    DeviationEstimate
    """
    if field is None:
        field = averaged_field(model, nu or stationary_distribution(model.generator))
    reference = integrate_ode(field, x0, T, dt).states
    root = Stream(base_seed)

    def _one(k: int) -> float:
        traj = simulate(model, eps, delta, x0, i0, T, dt, root.split("deviation", k))
        return float(np.linalg.norm(traj.states - reference, axis=1).max())

    sups = np.array(map_replicates(_one, n, parallelism, engine))
    estimate = proportion_interval(int(np.sum(sups >= gamma)), n)
    LOG.info(
        f"{model.name}: P(sup deviation >= {gamma}) at eps={eps}, delta={delta} "
        f"is {estimate.p_hat:.4f} [{estimate.ci_low:.4f}, {estimate.ci_high:.4f}]"
    )
    return estimate


@dataclass(frozen=True, eq=False)
class ExitTimeStats:
    """Exit times from a ball, censored at the budget."""

    center: np.ndarray
    radius: float
    samples: np.ndarray
    censored: np.ndarray
    budget: float

    def __post_init__(self) -> None:
        if np.any(self.samples[~self.censored] > self.budget):
            raise ValueError("uncensored exit times must not exceed the budget")

    @property
    def fraction_exited(self) -> float:
        return float(np.mean(~self.censored))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "replicate": np.arange(self.samples.shape[0]),
                "exit_time": self.samples,
                "censored": self.censored,
            }
        )

    def report(self) -> str:
        exited = self.samples[~self.censored]
        mean_exit = float(exited.mean()) if exited.size else float("nan")
        return render(
            "exit_summary.txt",
            ", ".join(f"{v:.6g}" for v in self.center),
            self.radius,
            self.budget,
            self.samples.shape[0],
            self.fraction_exited,
            mean_exit,
        )


def exit_time_experiment(
    model: HybridModel,
    eps: float,
    delta: float,
    center: Sequence[float],
    radius: float,
    budget: float,
    dt: float,
    n: int,
    base_seed: int = 0,
    i0: Optional[int] = None,
    parallelism: Optional[int] = None,
    engine: Any = None,
) -> ExitTimeStats:
    """First exit times from the ball ``|x - center| <= radius``.

    Each replicate starts at ``center``; its initial regime is ``i0`` or, when
    omitted, a draw from the stationary distribution.  Paths that stay inside
    until ``budget`` are recorded as censored at ``budget``.

    Raises
    ------
    InvalidBudget
        If the budget is not positive or would need more than
        ``MAX_EXIT_STEPS`` samples of size ``dt``.
    """
    if not budget > 0 or not math.isfinite(budget):
        raise InvalidBudget(f"budget must be a positive time, got {budget}")
    if budget / dt > MAX_EXIT_STEPS:
        raise InvalidBudget(f"budget {budget} needs more than {MAX_EXIT_STEPS} steps of {dt}")
    middle = np.asarray(center, dtype=float)
    nu = stationary_distribution(model.generator).nu
    root = Stream(base_seed)

    def _outside(x: np.ndarray) -> bool:
        return bool(np.linalg.norm(x - middle) > radius)

    def _one(k: int) -> Tuple[float, bool]:
        stream = root.split("exit", k)
        start = (
            i0 if i0 is not None else int(stream.generator("init").choice(len(nu), p=nu))
        )
        traj = simulate(
            model, eps, delta, middle, start, budget, dt, stream, stop=_outside
        )
        if traj.stopped_at is None:
            return budget, True
        return traj.stopped_at, False

    outcomes = map_replicates(_one, n, parallelism, engine)
    samples = np.array([time for time, _ in outcomes], dtype=float)
    censored = np.array([flag for _, flag in outcomes], dtype=bool)
    stats = ExitTimeStats(middle, radius, samples, censored, budget)
    LOG.info(
        f"{model.name}: {stats.fraction_exited:.3f} of {n} paths left the ball of radius "
        f"{radius} within {budget:.4g}"
    )
    return stats

