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
Empirical invariant measures and the convergence diagnostics built on them.

Long-run time averages of a switching diffusion approximate its invariant
measure.  Here they are binned on a :class:`~switchdiff.grid.GridSpec`,
compared with the occupation measure of the averaged system's limit cycle,
and summarized over a schedule of ``(eps, delta)`` pairs.
"""

import logging
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from switchdiff.averaging import (
    CriticalPoint,
    LimitCycle,
    cycle_average,
    cycle_measure,
    evaluate_rows,
    neighborhood_radius,
)
from switchdiff.base import (
    GridCoverageError,
    InvalidSpan,
    SpecMismatch,
    SwitchDiffError,
    render,
)
from switchdiff.ctmc import StationaryDist, stationary_distribution
from switchdiff.grid import GridMeasure, GridSpec
from switchdiff.hybrid_sde import (
    HybridModel,
    ScaleSchedule,
    SimulationConfig,
    nondegeneracy,
    simulate,
)
from switchdiff.streams import Stream

LOG = logging.getLogger(__name__)

FAMILY_SIZE = 64
OFFSET_SPACING = 0.5
OVERFLOW_LIMIT = 0.01
_PLANAR = {"x": "x1", "y": "x2", "x^2": "x1^2", "y^2": "x2^2", "xy": "x1*x2"}


@dataclass(frozen=True, eq=False)
class Observable:
    """Named test function evaluated row-wise on an ``(N, d)`` array of points.

    Parameters
    ----------
    name : str
        Label used in reports
    func : callable
        ``func(points)`` or, when ``by_regime`` is set, ``func(points, i)``,
        returning one value per row
    by_regime : bool, optional
        Whether the function depends on the regime
    """

    name: str
    func: Callable[..., np.ndarray]
    by_regime: bool = False

    def __call__(self, points: np.ndarray, regime: int = 0) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = self.func(pts, regime) if self.by_regime else self.func(pts)
        return np.broadcast_to(np.asarray(out, dtype=float), (pts.shape[0],))

    def averaged(self, nu: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
        """``gbar(x) = sum_i g(x, i) nu_i``; ``g`` itself when regime-blind."""
        if not self.by_regime:
            return self.__call__
        return lambda pts: sum(w * self(pts, i) for i, w in enumerate(nu))


def observable(name: str, d: int) -> Observable:
    """Parse a monomial test function name.

    Accepts ``x<k>``, ``x<k>^2`` and ``x<j>*x<k>`` (1-based) and, in two
    dimensions, the aliases ``x``, ``y``, ``x^2``, ``y^2`` and ``xy``.
    """
    spec = _PLANAR.get(name, name) if d == 2 else name
    factors = re.fullmatch(r"x(\d+)(?:\^2|\*x(\d+))?", spec)
    if factors is None:
        raise ValueError(f"unknown test function {name!r}")
    j = int(factors.group(1)) - 1
    k = j if spec.endswith("^2") else (int(factors.group(2)) - 1 if factors.group(2) else None)
    if not 0 <= j < d or (k is not None and not 0 <= k < d):
        raise ValueError(f"test function {name!r} refers to a coordinate beyond d={d}")
    if k is None:
        return Observable(name, lambda pts: pts[:, j])
    return Observable(name, lambda pts: pts[:, j] * pts[:, k])


def empirical_measure(
    model: HybridModel,
    eps: float,
    delta: float,
    x0: Sequence[float],
    i0: int,
    T: float,
    dt: float,
    burn_in: float,
    spec: GridSpec,
    stream: Stream,
    resolve_regimes: bool = True,
    box: Optional[Tuple[Sequence[float], Sequence[float]]] = None,
) -> GridMeasure:
    """Time-weighted histogram of one path over ``(burn_in, T]``.

    Every substep of the integrator contributes its length (the part after
    ``burn_in``) to the cell of the state at its start and, when
    ``resolve_regimes`` is set, to its regime.

    Parameters
    ----------
    model, eps, delta, x0, i0, T, dt, stream
        As for :func:`switchdiff.hybrid_sde.simulate`
    burn_in : float
        Discarded initial time, below ``T``
    spec : GridSpec
        Histogram grid
    resolve_regimes : bool, optional
        Keep one weight per (cell, regime)
    box : tuple, optional
        ``(lo, hi)`` of a reference box.  The share of post-burn-in time
        whose raw state lies in it is stored as ``box_fraction``; the box may
        reach beyond the grid.

    Returns
    -------
    GridMeasure

    Raises
    ------
    GridCoverageError
        If more than 1% of the post-burn-in time is spent outside the grid.
    """
    if not 0 <= burn_in < T:
        raise InvalidSpan(f"burn-in {burn_in} must lie in [0, T={T})")
    m = model.m0 if resolve_regimes else 1
    acc = np.zeros(spec.cells * m)
    outside = [0.0]
    in_box = [0.0]
    if box is not None:
        box_lo, box_hi = (np.asarray(b, dtype=float) for b in box)

    def _observe(t: np.ndarray, h: np.ndarray, x: np.ndarray, r: np.ndarray) -> None:
        w = np.clip(t + h - np.maximum(t, burn_in), 0.0, None)
        keep = w > 0
        if not keep.any():
            return
        flat, inside = spec.locate(x[keep])
        weight = w[keep]
        regime = r[keep] if resolve_regimes else 0
        acc[:] += np.bincount(
            flat * m + regime, weights=np.where(inside, weight, 0.0), minlength=acc.size
        )
        outside[0] += float(weight[~inside].sum())
        if box is not None:
            boxed = np.all((x[keep] >= box_lo) & (x[keep] <= box_hi), axis=1)
            in_box[0] += float(weight[boxed].sum())

    simulate(model, eps, delta, x0, i0, T, dt, stream, observer=_observe)
    inside_mass = float(acc.sum())
    total = inside_mass + outside[0]
    overflow = outside[0] / total if total > 0 else 1.0
    if overflow > OVERFLOW_LIMIT or inside_mass <= 0:
        raise GridCoverageError(
            f"{overflow:.2%} of post-burn-in time lies outside the grid {spec.lo}..{spec.hi}"
        )
    LOG.debug(f"{model.name}: empirical measure at eps={eps}, delta={delta}, overflow {overflow:.2e}")
    box_fraction = in_box[0] / total if box is not None else None
    return GridMeasure(spec, (acc / inside_mass).reshape(spec.cells, m), overflow, box_fraction)


def integrate_test_function(
    mu: GridMeasure, g: Union[Observable, Callable[[np.ndarray], Any]]
) -> float:
    """``sum g(center, i) * weight(cell, i)``; regime-blind ``g`` uses the cell marginal."""
    centers = mu.spec.centers()
    if isinstance(g, Observable) and g.by_regime:
        if mu.regimes == 1:
            raise ValueError(f"{g.name} depends on the regime but the measure is regime-blind")
        return float(sum(g(centers, i) @ mu.weights[:, i] for i in range(mu.regimes)))
    values = g(centers) if isinstance(g, Observable) else evaluate_rows(g, centers)
    return float(values @ mu.cell_weights)


def bl_family(spec: GridSpec, family_seed: int = 0) -> np.ndarray:
    """Bounded-Lipschitz test functions evaluated at the cell centers.

    Returns a ``(64, cells)`` array.  The family holds clipped coordinate
    functions ``clip(x_k - c, -1, 1)`` with offsets ``c`` spaced at most
    ``OFFSET_SPACING`` apart along each axis (together at most half the
    family, so very wide boxes get coarser offsets), clipped ridges
    ``clip(u . (x - c), -1, 1)`` along random unit directions, and
    tents ``max(0, 1 - |x - c| / r)`` with ``r >= 1``.  Each has Lipschitz
    constant and sup norm at most one.

    Point masses less than ``2 - OFFSET_SPACING`` apart along an axis always
    have a coordinate function whose linear part covers both, so their
    distance is recovered to within a cell width.
    """
    centers = spec.centers()
    lo, hi = np.array(spec.lo), np.array(spec.hi)
    rows: List[np.ndarray] = []
    for k in range(spec.d):
        count = int(np.floor((hi[k] - lo[k]) / OFFSET_SPACING)) + 1
        count = min(max(count, 2), FAMILY_SIZE // (2 * spec.d))
        for offset in np.linspace(lo[k], hi[k], count):
            rows.append(np.clip(centers[:, k] - offset, -1.0, 1.0))
    rows = rows[:FAMILY_SIZE]
    rng = Stream(family_seed).generator("family")
    while len(rows) < FAMILY_SIZE:
        offset = rng.uniform(lo, hi)
        if len(rows) % 2:
            direction = rng.standard_normal(spec.d)
            direction /= np.linalg.norm(direction)
            rows.append(np.clip((centers - offset) @ direction, -1.0, 1.0))
        else:
            reach = rng.uniform(1.0, 3.0)
            rows.append(np.maximum(0.0, 1.0 - np.linalg.norm(centers - offset, axis=1) / reach))
    return np.array(rows)


def bl_distance(mu1: GridMeasure, mu2: GridMeasure, family_seed: int = 0) -> float:
    """Largest gap ``|int f dmu1 - int f dmu2|`` over the seeded family of :func:`bl_family`.

    Raises
    ------
    SpecMismatch
        If the measures live on different grids.
    """
    if mu1.spec != mu2.spec:
        raise SpecMismatch(f"grids differ: {mu1.spec} vs {mu2.spec}")
    gaps = bl_family(mu1.spec, family_seed) @ (mu1.cell_weights - mu2.cell_weights)
    return float(np.abs(gaps).max())


def neighborhood_mass(mu: GridMeasure, center: Sequence[float], radius: float) -> float:
    """Mass of cells whose centers lie within ``radius`` of ``center``.

    The cell containing ``center`` always counts, so radius 0 gives its weight.
    """
    point = np.asarray(center, dtype=float)
    mask = np.linalg.norm(mu.spec.centers() - point, axis=1) <= radius
    flat, inside = mu.spec.locate(point)
    if inside[0]:
        mask[flat[0]] = True
    return float(mu.cell_weights[mask].sum())


def tightness_fraction(
    mu: GridMeasure, lo: Sequence[float], hi: Sequence[float]
) -> float:
    """Mass of the cells whose centers lie in ``[lo, hi]``; overflow counts as outside.

    Only a cell-level estimate for stored measures; :func:`empirical_measure`
    records the exact share of time in a box as ``box_fraction``.
    """
    centers = mu.spec.centers()
    mask = np.all((centers >= np.asarray(lo)) & (centers <= np.asarray(hi)), axis=1)
    return float((1.0 - mu.overflow) * mu.cell_weights[mask].sum())


def default_burn_in(cycle: LimitCycle) -> float:
    """``max(1000, 10 periods)``."""
    return max(1e3, 10.0 * cycle.period)


def _label(point: Sequence[float]) -> str:
    return "(" + ", ".join(f"{v:.4g}" for v in point) + ")"


@dataclass
class ConvergenceRow:
    """Diagnostics at one ``(eps, delta)`` pair."""

    eps: float
    delta: float
    bl_distance: float = float("nan")
    gaps: Dict[str, float] = field(default_factory=dict)
    masses: Dict[str, float] = field(default_factory=dict)
    tightness: float = float("nan")
    overflow: float = float("nan")
    error: Optional[str] = None


@dataclass
class ConvergenceReport:
    """Rows of :class:`ConvergenceRow` in schedule order (decreasing ``eps``)."""

    schedule: ScaleSchedule
    rows: List[ConvergenceRow]

    def to_frame(self) -> pd.DataFrame:
        records = []
        for row in self.rows:
            record: Dict[str, Any] = {
                "eps": row.eps,
                "delta": row.delta,
                "bl_distance": row.bl_distance,
            }
            record.update({f"gap_{k}": v for k, v in row.gaps.items()})
            record.update({f"mass_{k}": v for k, v in row.masses.items()})
            record.update(
                {"tightness": row.tightness, "overflow": row.overflow, "error": row.error or ""}
            )
            records.append(record)
        return pd.DataFrame.from_records(records)

    def to_csv(self, path: Any) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.17g")

    def report(self) -> str:
        """Human-readable summary."""
        failed = sum(row.error is not None for row in self.rows)
        return render(
            "convergence_summary.txt",
            self.schedule.case_id,
            self.schedule.l,
            len(self.rows),
            failed,
            self.to_frame().drop(columns=["error"]).to_string(index=False),
        )


def convergence_sweep(
    model: HybridModel,
    schedule: ScaleSchedule,
    cycle: LimitCycle,
    critical_points: Sequence[Union[CriticalPoint, Sequence[float]]],
    observables: Sequence[Observable],
    run: SimulationConfig,
    grid: Optional[GridSpec] = None,
    nu: Optional[StationaryDist] = None,
    radius: Optional[float] = None,
    tight_box: Optional[Tuple[Sequence[float], Sequence[float]]] = None,
    family_seed: int = 0,
    reference_points: Sequence[Tuple[Sequence[float], float]] = (),
) -> ConvergenceReport:
    """Compare empirical invariant measures with the cycle's occupation measure.

    For each ``(eps, delta)`` pair of ``schedule`` (row ``k`` simulated with
    ``Stream(run.seed).split("converge", k)``), computes the empirical measure,
    its bounded-Lipschitz distance to the occupation measure of ``cycle``, the
    gaps ``|int g dmu - cycle_average(gbar)|``, the masses of the
    neighborhoods of the critical points and the share of time spent in the
    tightness box.  A row
    that fails keeps its error message and the sweep moves on.

    Parameters
    ----------
    model : HybridModel
        Simulated model
    schedule : ScaleSchedule
        Scale pairs to visit
    cycle : LimitCycle
        Limit cycle of the averaged field
    critical_points : sequence
        Points whose neighborhood mass is tracked
    observables : sequence of Observable
        Test functions
    run : SimulationConfig
        Horizon, step, burn-in (``default_burn_in`` when ``None``), seed and
        start; the start defaults to the first cycle sample
    grid : GridSpec, optional
        Histogram grid; 1.5 times the cycle's bounding box with 200 cells per
        axis when omitted
    nu : StationaryDist, optional
        Regime weights for ``gbar``; the chain's stationary distribution by default
    radius : float, optional
        Neighborhood radius for every critical point; 10% of the distance to
        the cycle when omitted
    tight_box : tuple, optional
        ``(lo, hi)`` of the tightness box; the grid box when omitted.  The
        fraction is taken from the raw path, so the box may exceed the grid
    family_seed : int, optional
        Seed of the bounded-Lipschitz family
    reference_points : sequence of (point, radius), optional
        Further neighborhoods to track, each with its own radius, such as an
        equilibrium of a reference field that the averaged field only
        approximates

    Returns
    -------
    ConvergenceReport
    """
    grid = grid or GridSpec.around(cycle.samples, 1.5, 200)
    nu = nu or stationary_distribution(model.generator)
    mu0 = cycle_measure(cycle, grid)
    targets = {g.name: cycle_average(cycle, g.averaged(nu.nu)) for g in observables}
    balls: Dict[str, Tuple[np.ndarray, float]] = {}
    for c in critical_points:
        p = np.asarray(c.location if isinstance(c, CriticalPoint) else c, dtype=float)
        balls[_label(p)] = (p, radius if radius is not None else neighborhood_radius(p, cycle))
    # an explicit radius wins over the default for the same point
    for c, r in reference_points:
        p = np.asarray(c, dtype=float)
        balls[_label(p)] = (p, float(r))
    for p, _ in balls.values():
        check = nondegeneracy(model, p)
        if not check.admits(schedule.case_id):
            LOG.warning(
                f"{schedule.case_id} exit condition fails at {_label(p)}: "
                f"drift regimes {check.drift_regimes}, diffusion regimes {check.diffusion_regimes}"
            )
    burn_in = run.burn_in if run.burn_in is not None else default_burn_in(cycle)
    x0 = run.x0 or tuple(cycle.points[0])
    lo, hi = tight_box if tight_box is not None else (grid.lo, grid.hi)
    root = Stream(run.seed)

    rows = []
    for k, (eps, delta) in enumerate(schedule.pairs()):
        row = ConvergenceRow(eps, delta)
        try:
            mu = empirical_measure(
                model, eps, delta, x0, run.i0, run.T, run.dt, burn_in, grid,
                root.split("converge", k), box=(lo, hi),
            )
        except SwitchDiffError as exc:
            LOG.warning(f"sweep row eps={eps}, delta={delta} failed: {exc}")
            row.error = f"{type(exc).__name__}: {exc}"
            rows.append(row)
            continue
        row.bl_distance = bl_distance(mu, mu0, family_seed)
        row.gaps = {
            g.name: abs(integrate_test_function(mu, g) - targets[g.name]) for g in observables
        }
        row.masses = {label: neighborhood_mass(mu, p, r) for label, (p, r) in balls.items()}
        row.tightness = float(mu.box_fraction or 0.0)
        row.overflow = mu.overflow
        LOG.info(
            f"eps={eps}, delta={delta}: bl distance {row.bl_distance:.4f}, "
            f"tightness {row.tightness:.4f}"
        )
        rows.append(row)
    return ConvergenceReport(schedule, rows)
