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
The averaged system and its limit cycle.

Averaging the regime drifts against the stationary distribution of the
switching chain gives an ODE ``x' = fbar(x)``.  This module integrates that
ODE with fixed-step RK4, locates its critical points, finds its limit cycle
through a Poincare section, and turns the cycle into the occupation measure
that the invariant measures of the switching diffusion converge to.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Any, Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid
from scipy.optimize import brentq

from switchdiff.base import (
    BlowupError,
    ConvergesToEquilibrium,
    GridCoverageError,
    InvalidModel,
    InvalidTrajectory,
    NoCycleError,
    state_columns,
)
from switchdiff.ctmc import StationaryDist
from switchdiff.grid import GridMeasure, GridSpec
from switchdiff.hybrid_sde import HybridModel, Trajectory, time_grid

LOG = logging.getLogger(__name__)

_REL_STEP = 1e-5


@dataclass(frozen=True, eq=False)
class VectorField:
    """Autonomous vector field on ``R^d``.

    Parameters
    ----------
    d : int
        Dimension
    func : callable
        Maps a length ``d`` array to a length ``d`` array
    jacobian_func : callable, optional
        Analytic Jacobian; central differences are used when omitted
    name : str, optional
        Label used in logs
    """

    d: int
    func: Callable[[np.ndarray], np.ndarray]
    jacobian_func: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "field"

    def __call__(self, x: Any) -> np.ndarray:
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)

    def jacobian(self, x: Any, rel_step: float = _REL_STEP) -> np.ndarray:
        """Jacobian at ``x``; central differences with step ``rel_step * max(1, |x_j|)``."""
        point = np.asarray(x, dtype=float)
        if self.jacobian_func is not None:
            return np.asarray(self.jacobian_func(point), dtype=float)
        jac = np.empty((self.d, self.d))
        for j in range(self.d):
            h = rel_step * max(1.0, abs(point[j]))
            shift = np.zeros(self.d)
            shift[j] = h
            jac[:, j] = (self(point + shift) - self(point - shift)) / (2.0 * h)
        return jac


def _weights(nu: Union[StationaryDist, Sequence[float]], m0: int) -> List[float]:
    w = np.asarray(nu.nu if isinstance(nu, StationaryDist) else nu, dtype=float)
    if w.shape != (m0,):
        raise InvalidModel(f"{w.size} weights for {m0} regimes")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise InvalidModel(f"weights {w} are not a probability vector")
    return w.tolist()


def averaged_field(
    model: HybridModel, nu: Union[StationaryDist, Sequence[float]]
) -> VectorField:
    """The ``nu``-weighted average ``fbar(x) = sum_i f(x, i) nu_i`` of the regime drifts.

    Parameters
    ----------
    model : HybridModel
        Switching model
    nu : StationaryDist or sequence of float
        Regime weights, usually the stationary distribution of the chain

    Returns
    -------
    VectorField
    """
    weights = _weights(nu, model.m0)
    drift = model.drift

    def fbar(x: np.ndarray) -> np.ndarray:
        out = np.zeros(model.d)
        for i, w in enumerate(weights):
            out = out + w * np.asarray(drift(x, i), dtype=float)
        return out

    return VectorField(model.d, fbar, name=f"averaged {model.name}")


def _rk4(field: VectorField, x: np.ndarray, h: float) -> np.ndarray:
    k1 = field(x)
    k2 = field(x + 0.5 * h * k1)
    k3 = field(x + 0.5 * h * k2)
    k4 = field(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_ode(
    field: VectorField, x0: Sequence[float], T: float, dt: float, t0: float = 0.0
) -> Trajectory:
    """Classical fixed-step RK4 on the grid ``t0, t0 + dt, ..., t0 + T``.

    Raises
    ------
    BlowupError
        If the state becomes non-finite.
    """
    times = time_grid(T, dt, t0)
    states = np.empty((times.shape[0], field.d))
    x = np.asarray(x0, dtype=float).reshape(field.d)
    states[0] = x
    with np.errstate(over="ignore", invalid="ignore"):
        for k, h in enumerate(np.diff(times)):
            x = _rk4(field, x, float(h))
            if not np.all(np.isfinite(x)):
                raise BlowupError(float(times[k + 1]))
            states[k + 1] = x
    return Trajectory(
        times=times,
        states=states,
        regimes=np.zeros(times.shape[0], dtype=np.int64),
        eps=0.0,
        delta=0.0,
        dt=dt,
    )


@dataclass(frozen=True, eq=False)
class CriticalPoint:
    """Zero of a vector field with the eigenvalues of its Jacobian."""

    location: np.ndarray
    residual: float
    eigenvalues: np.ndarray
    kind: str

    def __repr__(self) -> str:
        loc = ", ".join(f"{v:.6g}" for v in self.location)
        return f"CriticalPoint(({loc}), {self.kind}, residual={self.residual:.2e})"


def classify(eigenvalues: np.ndarray, tol: float = 1e-9) -> str:
    """Name the local behavior from Jacobian eigenvalues."""
    real = eigenvalues.real
    rotating = bool(np.any(np.abs(eigenvalues.imag) > tol))
    if np.any(np.abs(real) <= tol):
        return "non-hyperbolic"
    if np.all(real < 0):
        return "stable focus" if rotating else "stable node"
    if np.all(real > 0):
        return "unstable focus" if rotating else "unstable node"
    return "saddle"


def _newton(
    field: VectorField, seed: np.ndarray, tol: float, max_iter: int
) -> Optional[np.ndarray]:
    x = seed.copy()
    for _ in range(max_iter):
        fx = field(x)
        if not np.all(np.isfinite(fx)):
            return None
        if np.linalg.norm(fx) < tol:
            for _ in range(2):
                try:
                    polished = x - np.linalg.solve(field.jacobian(x), fx)
                except np.linalg.LinAlgError:
                    break
                f_polished = field(polished)
                if not np.linalg.norm(f_polished) <= np.linalg.norm(fx):
                    break
                x, fx = polished, f_polished
            return x
        try:
            x = x - np.linalg.solve(field.jacobian(x), fx)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(x)):
            return None
    return None


def find_critical_points(
    field: VectorField,
    box: Tuple[Sequence[float], Sequence[float]],
    coarse_n: int = 40,
    tol: float = 1e-9,
    max_iter: int = 50,
) -> List[CriticalPoint]:
    """Zeros of ``field`` inside ``box``.

    Every coarse cell in which each component of the field changes sign over
    the cell corners seeds a Newton iteration from its center.  Converged
    points inside the box are merged when closer than ``10 * tol``.  Cells
    whose seed fails without a zero being found inside them are reported
    through :func:`warnings.warn`.

    Parameters
    ----------
    field : VectorField
        Field to search
    box : tuple
        ``(lo, hi)`` corners of the search rectangle
    coarse_n : int, optional
        Coarse cells per axis, at least 8
    tol : float, optional
        Residual tolerance ``|f(x*)| < tol``
    max_iter : int, optional
        Newton iteration cap per seed

    Returns
    -------
    list of CriticalPoint
        Sorted lexicographically by location
    """
    if coarse_n < 8:
        raise ValueError(f"coarse_n must be at least 8, got {coarse_n}")
    spec = GridSpec(tuple(box[0]), tuple(box[1]), coarse_n)
    d = spec.d
    nodes_axes = [np.linspace(spec.lo[k], spec.hi[k], coarse_n + 1) for k in range(d)]
    mesh = np.meshgrid(*nodes_axes, indexing="ij")
    nodes = np.stack([m.reshape(-1) for m in mesh], axis=1)
    values = np.array([field(p) for p in nodes]).reshape((coarse_n + 1,) * d + (d,))

    low = np.full(spec.shape + (d,), np.inf)
    high = np.full(spec.shape + (d,), -np.inf)
    for corner in np.ndindex(*(2,) * d):
        window = values[tuple(slice(c, c + coarse_n) for c in corner)]
        low = np.minimum(low, window)
        high = np.maximum(high, window)
    candidates = np.all((low <= 0) & (high >= 0), axis=-1).reshape(-1)
    seeds = spec.centers()[candidates]
    LOG.debug(f"{field.name}: {seeds.shape[0]} sign-change cells on a {coarse_n}^{d} grid")

    lo, hi = np.array(spec.lo), np.array(spec.hi)
    found: List[np.ndarray] = []
    failed: List[np.ndarray] = []
    for seed in seeds:
        root = _newton(field, seed, tol, max_iter)
        if root is None or np.any(root < lo) or np.any(root > hi):
            failed.append(seed)
            continue
        if all(np.linalg.norm(root - other) >= 10 * tol for other in found):
            found.append(root)

    half = 0.5 * spec.widths
    orphaned = [
        s for s in failed if not any(np.all(np.abs(r - s) <= half) for r in found)
    ]
    if orphaned:
        msg = f"Newton did not converge in {len(orphaned)} sign-change cells of {field.name}"
        LOG.warning(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)

    points = []
    for root in sorted(found, key=lambda r: tuple(r)):
        eig = np.linalg.eigvals(field.jacobian(root))
        points.append(
            CriticalPoint(root, float(np.linalg.norm(field(root))), eig, classify(eig))
        )
    LOG.info(f"{field.name}: {len(points)} critical points: {points}")
    return points


@dataclass(frozen=True)
class CycleOptions:
    """Tuning of :func:`detect_limit_cycle`.

    Parameters
    ----------
    transient : float
        Integration time discarded before the section is erected
    dt : float
        RK4 step
    closure_tol : float
        Consecutive section returns closer than this declare convergence
    max_time : float
        Search horizon after the transient
    eq_tol : float
        Flow speed below which the orbit is treated as resting at a critical point
    """

    transient: float = 100.0
    dt: float = 0.01
    closure_tol: float = 1e-6
    max_time: float = 1e4
    eq_tol: float = 1e-8


@dataclass(frozen=True, eq=False)
class LimitCycle:
    """One period of a closed orbit, sampled uniformly in time.

    Parameters
    ----------
    times : numpy.ndarray
        ``0 = t_0 < ... < t_N = period``
    samples : numpy.ndarray
        Orbit points at ``times``; the last repeats the first up to closure error
    period : float
        Period ``T``
    section_point, section_normal : numpy.ndarray
        Hyperplane ``{y : normal . (y - point) = 0}`` used to detect returns
    closure_tol : float
        Tolerance the closure error is validated against
    """

    times: np.ndarray
    samples: np.ndarray
    period: float
    section_point: np.ndarray
    section_normal: np.ndarray
    closure_tol: float = 1e-6

    def __post_init__(self) -> None:
        if not self.period > 0:
            raise InvalidTrajectory(f"period must be positive, got {self.period}")
        if np.any(np.diff(self.times) <= 0):
            raise InvalidTrajectory("cycle times must increase strictly")
        if self.closure_error > 100 * self.closure_tol:
            raise InvalidTrajectory(
                f"orbit does not close: error {self.closure_error:.3g}"
            )

    @property
    def d(self) -> int:
        return int(self.samples.shape[1])

    @property
    def closure_error(self) -> float:
        return float(np.linalg.norm(self.samples[-1] - self.samples[0]))

    @property
    def points(self) -> np.ndarray:
        """Orbit samples without the closing duplicate."""
        return self.samples[:-1]

    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.samples.min(axis=0), self.samples.max(axis=0)

    def to_frame(self) -> pd.DataFrame:
        """Frame with columns ``t, x1, ..., xd`` over one period."""
        frame = pd.DataFrame(self.samples, columns=state_columns(self.d))
        frame.insert(0, "t", self.times)
        return frame


def detect_limit_cycle(
    field: VectorField,
    x0: Sequence[float],
    transient: Optional[float] = None,
    opts: Optional[CycleOptions] = None,
) -> LimitCycle:
    """Find the limit cycle attracting ``x0`` with a Poincare section.

    After the transient, a hyperplane is erected through the current point,
    orthogonal to the flow.  Crossings in the flow direction are refined with
    Brent's method on the section coordinate (time accuracy ``1e-10``) and
    convergence is declared once two consecutive return points are closer
    than ``closure_tol``.  The period is the time between those two returns,
    and the orbit is resampled uniformly in time over one period.

    Parameters
    ----------
    field : VectorField
        Planar or higher-dimensional autonomous field
    x0 : sequence of float
        Start point, not a critical point
    transient : float, optional
        Overrides ``opts.transient``
    opts : CycleOptions, optional
        Search settings

    Returns
    -------
    LimitCycle

    Raises
    ------
    ConvergesToEquilibrium
        If the flow comes to rest instead of cycling.
    NoCycleError
        If returns do not settle within ``opts.max_time``.
    """
    opts = opts or CycleOptions()
    transient = opts.transient if transient is None else transient
    h = opts.dt
    y = np.asarray(x0, dtype=float).reshape(field.d)

    def _advance(x: np.ndarray, step: float) -> np.ndarray:
        out = _rk4(field, x, step)
        if not np.all(np.isfinite(out)):
            raise BlowupError(float("nan"))
        return out

    for _ in range(int(math.ceil(transient / h))):
        y = _advance(y, h)
    speed = float(np.linalg.norm(field(y)))
    if speed < opts.eq_tol:
        raise ConvergesToEquilibrium(f"{field.name}: flow at rest near {y} after transient")

    anchor = y.copy()
    normal = field(anchor) / speed

    def _section(x: np.ndarray) -> float:
        return float(normal @ (x - anchor))

    returns: List[Tuple[float, np.ndarray]] = []
    t = 0.0
    s_prev = 0.0
    far = 0.0
    converged = False
    for step in range(int(math.ceil(opts.max_time / h))):
        y_new = _advance(y, h)
        s_new = _section(y_new)
        far = max(far, float(np.linalg.norm(y_new - anchor)))
        if s_prev < 0.0 <= s_new:
            if s_new == 0.0:
                tau = h
            else:
                y_left = y
                tau = brentq(
                    lambda s: _section(_rk4(field, y_left, s)), 0.0, h, xtol=1e-10
                )
            point = _rk4(field, y, tau)
            if np.linalg.norm(point - anchor) <= 0.5 * far:
                returns.append((t + tau, point))
                far = 0.0
                if np.linalg.norm(field(point)) < opts.eq_tol:
                    raise ConvergesToEquilibrium(f"{field.name}: returns approach a critical point")
                LOG.debug(f"{field.name}: return {len(returns)} at t={t + tau:.6f}")
                if (
                    len(returns) >= 2
                    and np.linalg.norm(returns[-1][1] - returns[-2][1]) < opts.closure_tol
                ):
                    converged = True
                    break
        y = y_new
        t += h
        s_prev = s_new
        if step % 1000 == 999 and np.linalg.norm(field(y)) < opts.eq_tol:
            raise ConvergesToEquilibrium(f"{field.name}: flow at rest near {y}")

    if not converged:
        if np.linalg.norm(field(y)) < 100 * opts.eq_tol:
            raise ConvergesToEquilibrium(f"{field.name}: flow at rest near {y}")
        raise NoCycleError(
            f"{field.name}: {len(returns)} returns without closure within {opts.max_time}"
        )

    period = returns[-1][0] - returns[-2][0]
    n = max(16, int(math.ceil(period / h)))
    step_size = period / n
    samples = np.empty((n + 1, field.d))
    samples[0] = returns[-1][1]
    for k in range(n):
        samples[k + 1] = _rk4(field, samples[k], step_size)
    times = step_size * np.arange(n + 1, dtype=float)
    times[-1] = period
    if np.ptp(samples, axis=0).max() < 100 * opts.closure_tol:
        raise ConvergesToEquilibrium(f"{field.name}: orbit shrinks to a point")
    cycle = LimitCycle(times, samples, period, anchor, normal, opts.closure_tol)
    if cycle.closure_error > opts.closure_tol:
        LOG.warning(
            f"{field.name}: resampled orbit closes to {cycle.closure_error:.3g}, "
            f"above tolerance {opts.closure_tol:.3g}"
        )
    LOG.info(f"{field.name}: limit cycle with period {period:.6f} after {len(returns)} returns")
    return cycle


def evaluate_rows(g: Callable[[np.ndarray], Any], points: np.ndarray) -> np.ndarray:
    """Values of ``g`` on each row of ``points``.

    A function that returns one value per row is called once on the whole
    array. Any other result, a scalar included, means ``g`` works on single
    points, so it is applied row by row: a norm or a sum over the batch also
    collapses to one number and must not be broadcast.
    """
    try:
        values = np.asarray(g(points), dtype=float)
    except (TypeError, ValueError, IndexError):
        values = np.empty(0)
    if values.shape != (points.shape[0],):
        values = np.array([float(g(p)) for p in points])
    return values


def cycle_measure(cycle: LimitCycle, grid: GridSpec) -> GridMeasure:
    """Occupation measure of the cycle: share of the period spent in each cell.

    Raises
    ------
    GridCoverageError
        If the orbit leaves the grid.
    """
    flat, inside = grid.locate(cycle.points)
    if not np.all(inside):
        raise GridCoverageError(
            f"{int((~inside).sum())} of {inside.size} cycle samples lie outside the grid"
        )
    counts = np.bincount(flat, minlength=grid.cells).astype(float)
    return GridMeasure(grid, counts / inside.size)


def cycle_average(cycle: LimitCycle, g: Callable[[np.ndarray], Any]) -> float:
    """Time average ``(1/T) int_0^T g(x(t)) dt`` by the trapezoid rule.

    ``g`` is called on the ``(N, d)`` array of samples and should return one
    value per row; scalar functions of a single point also work.
    """
    values = evaluate_rows(g, cycle.samples)
    return float(trapezoid(values, cycle.times) / cycle.period)


def neighborhood_radius(
    x_star: Sequence[float], cycle: LimitCycle, fraction: float = 0.1
) -> float:
    """``fraction`` of the distance from ``x_star`` to the nearest cycle sample."""
    gaps = np.linalg.norm(cycle.points - np.asarray(x_star, dtype=float), axis=1)
    return float(fraction * gaps.min())


def hopf_field(omega: float = 1.0) -> VectorField:
    """Hopf normal form ``r' = r (1 - r^2)``, ``theta' = omega`` in Cartesian form."""

    def func(x: np.ndarray) -> np.ndarray:
        radial = 1.0 - x[0] * x[0] - x[1] * x[1]
        return np.array([x[0] * radial - omega * x[1], x[1] * radial + omega * x[0]])

    return VectorField(2, func, name="hopf")
