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
Hybrid switching diffusions.

A :class:`HybridModel` describes ``dX = f(X, a) dt + sqrt(delta) s(X, a) dW``
where the regime ``a`` follows a Markov chain with generator ``Q / eps``.
:func:`simulate` integrates one path with Euler-Maruyama, cutting every step
at the chain's jump times so that a substep never straddles a regime change.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from ordered_set import OrderedSet

from switchdiff.base import (
    BlowupError,
    InvalidBudget,
    InvalidModel,
    InvalidSpan,
    InvalidStep,
    ScheduleError,
    state_columns,
)
from switchdiff.ctmc import ChainClock, Generator, SwitchingPath, as_generator
from switchdiff.streams import Stream

LOG = logging.getLogger(__name__)

CASES = OrderedSet(["case1", "case2", "case3"])
_BLOCK = 4096

DriftFn = Callable[[np.ndarray, int], np.ndarray]
DiffusionFn = Callable[[np.ndarray, int], np.ndarray]
Observer = Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], None]


@dataclass(frozen=True, eq=False)
class HybridModel:
    """Regime-switching SDE coefficients together with the switching chain.

    Parameters
    ----------
    d : int
        State dimension
    m_w : int
        Dimension of the driving Brownian motion
    generator : Generator
        Generator ``Q`` of the switching chain (simulated as ``Q / eps``)
    drift : callable
        ``drift(x, i)`` returning a length ``d`` array
    diffusion : callable
        ``diffusion(x, i)`` returning a ``d x m_w`` array
    positive : tuple of bool, optional
        Coordinates constrained to stay positive.  Their drift row and
        diffusion row must carry the factor ``x_k``; they are integrated in
        log coordinates.
    name : str, optional
        Label used in logs and reports
    """

    d: int
    m_w: int
    generator: Generator
    drift: DriftFn
    diffusion: DiffusionFn
    positive: Tuple[bool, ...] = ()
    name: str = "custom"

    def __post_init__(self) -> None:
        if self.d < 1 or self.m_w < 1:
            raise InvalidModel(f"dimensions must be positive, got d={self.d}, m_w={self.m_w}")
        object.__setattr__(self, "generator", as_generator(self.generator))
        positive = tuple(bool(p) for p in self.positive) or (False,) * self.d
        if len(positive) != self.d:
            raise InvalidModel(f"{len(positive)} positivity flags for d={self.d}")
        object.__setattr__(self, "positive", positive)

    @property
    def m0(self) -> int:
        """Number of regimes."""
        return self.generator.m0

    @property
    def positive_mask(self) -> np.ndarray:
        return np.array(self.positive, dtype=bool)

    def check(self, x: Sequence[float]) -> None:
        """Evaluate every regime at ``x`` and validate shapes and finiteness.

        Raises
        ------
        InvalidModel
            If a coefficient has the wrong shape or is not finite at ``x``.
        """
        point = np.asarray(x, dtype=float)
        for i in range(self.m0):
            f = np.asarray(self.drift(point, i), dtype=float)
            g = np.asarray(self.diffusion(point, i), dtype=float)
            if f.shape != (self.d,):
                raise InvalidModel(f"drift of regime {i} has shape {f.shape}, expected ({self.d},)")
            if g.shape != (self.d, self.m_w):
                raise InvalidModel(
                    f"diffusion of regime {i} has shape {g.shape}, expected ({self.d}, {self.m_w})"
                )
            if not (np.all(np.isfinite(f)) and np.all(np.isfinite(g))):
                raise InvalidModel(f"coefficients of regime {i} are not finite at {point}")


@dataclass(frozen=True)
class ScaleSchedule:
    """Sequence of ``(eps, delta)`` pairs realizing one of the three limits.

    ``case1`` keeps ``delta / eps = l``; ``case2`` uses ``delta = eps**2`` so
    that ``delta / eps -> 0``; ``case3`` uses ``delta = sqrt(eps)`` capped at
    ``delta_cap`` so that ``delta / eps -> infinity``.

    Parameters
    ----------
    case_id : str
        One of ``case1``, ``case2``, ``case3``
    eps_list : tuple of float
        Strictly decreasing positive values of ``eps``; the induced ``delta``
        values must strictly decrease too, so ``case3`` entries cannot both
        sit at the cap
    l : float, optional
        Ratio ``delta / eps`` in ``case1``
    delta_cap : float, optional
        Upper bound on ``delta`` in ``case3``
    """

    case_id: str
    eps_list: Tuple[float, ...]
    l: float = 1.0  # noqa: E741
    delta_cap: float = 0.25

    def __post_init__(self) -> None:
        if self.case_id not in CASES:
            raise ScheduleError(f"unknown case {self.case_id!r}, expected one of {list(CASES)}")
        eps = tuple(float(e) for e in self.eps_list)
        object.__setattr__(self, "eps_list", eps)
        if not eps:
            raise ScheduleError("schedule needs at least one eps")
        if any(e <= 0 for e in eps):
            raise ScheduleError("eps values must be positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ScheduleError("eps values must be strictly decreasing")
        if not self.l > 0:
            raise ScheduleError(f"l must be positive, got {self.l}")
        deltas = [self.delta_of_eps(e) for e in eps]
        if any(b >= a for a, b in zip(deltas, deltas[1:])):
            raise ScheduleError(f"delta must strictly decrease along the schedule, got {deltas}")

    def delta_of_eps(self, eps: float) -> float:
        """The ``delta`` paired with ``eps`` under this case."""
        if self.case_id == "case1":
            return self.l * eps
        if self.case_id == "case2":
            return eps * eps
        return min(math.sqrt(eps), self.delta_cap)

    def pairs(self) -> List[Tuple[float, float]]:
        """``(eps, delta)`` pairs in schedule order (decreasing ``eps``)."""
        return [(e, self.delta_of_eps(e)) for e in self.eps_list]


@dataclass(frozen=True)
class SimulationConfig:
    """Run parameters shared by the long-horizon experiments."""

    T: float
    dt: float
    burn_in: Optional[float] = None
    n: int = 1
    seed: int = 0
    x0: Tuple[float, ...] = ()
    i0: int = 0


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled path of a hybrid SDE or of an ODE.

    ``states[k]`` and ``regimes[k]`` are the state and regime at
    ``times[k]``; the regime is right-continuous.  ODE trajectories carry
    regime 0 and ``eps = delta = 0``.
    """

    times: np.ndarray
    states: np.ndarray
    regimes: np.ndarray
    eps: float
    delta: float
    dt: float
    seed: Optional[int] = None
    stream_key: Tuple[int, ...] = ()
    path: Optional[SwitchingPath] = None
    stopped_at: Optional[float] = None

    @property
    def d(self) -> int:
        return int(self.states.shape[1])

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def to_frame(self) -> pd.DataFrame:
        """Frame with columns ``t, x1, ..., xd, regime``."""
        frame = pd.DataFrame(self.states, columns=state_columns(self.d))
        frame.insert(0, "t", self.times)
        frame["regime"] = self.regimes.astype("int64")
        return frame

    def to_csv(self, path: Any) -> None:
        """Write :meth:`to_frame` with 17 significant digits."""
        self.to_frame().to_csv(path, index=False, float_format="%.17g")


def _step_count(T: float, dt: float) -> int:
    if not T > 0:
        raise InvalidSpan(f"horizon must be positive, got {T}")
    if not dt > 0:
        raise InvalidStep(f"dt must be positive, got {dt}")
    if dt > T:
        raise InvalidStep(f"dt={dt} exceeds the horizon T={T}")
    return max(1, int(math.ceil(round(T / dt, 9))))


def _grow(buffer: np.ndarray, size: int) -> np.ndarray:
    bigger = np.empty((size,) + buffer.shape[1:], dtype=buffer.dtype)
    bigger[: buffer.shape[0]] = buffer
    return bigger


def time_grid(T: float, dt: float, t0: float = 0.0) -> np.ndarray:
    """Sampling grid ``t0, t0 + dt, ...`` ending exactly at ``t0 + T``.

    The last interval is shortened when ``T`` is not a multiple of ``dt``.
    """
    n = _step_count(T, dt)
    times = t0 + dt * np.arange(n + 1, dtype=float)
    times[-1] = t0 + T
    return times


def simulate(
    model: HybridModel,
    eps: float,
    delta: float,
    x0: Sequence[float],
    i0: int,
    T: float,
    dt: float,
    stream: Stream,
    *,
    keep_path: bool = False,
    observer: Optional[Observer] = None,
    stop: Optional[Callable[[np.ndarray], bool]] = None,
) -> Trajectory:
    """Simulate one path with Euler-Maruyama and exact regime switching.

    Steps have size ``min(dt, time to next jump)`` so the regime is constant
    on each substep; Brownian increments have variance equal to the substep
    length.  Coordinates flagged positive are integrated in log coordinates
    with the ``-delta |s_k|^2 / 2`` Ito correction.

    Parameters
    ----------
    model : HybridModel
        Coefficients and switching chain
    eps : float
        Switching time scale (rates ``Q / eps``)
    delta : float
        Noise intensity; ``delta = 0`` gives the switching ODE
    x0 : sequence of float
        Initial state
    i0 : int
        Initial regime (0-based)
    T : float
        Horizon
    dt : float
        Maximal step and sampling interval
    stream : Stream
        Random stream; its ``chain`` and ``noise`` purposes are used
    keep_path : bool, optional
        Attach the sampled :class:`SwitchingPath` to the result
    observer : callable, optional
        Receives blocks ``(t_start, h, x_start, regime)`` of substeps as they
        are taken; used to build time-weighted statistics without storing
        every substep
    stop : callable, optional
        Predicate on the state evaluated after every substep; the path ends at
        the first substep where it returns ``True`` (``stopped_at`` records
        the time)

    Returns
    -------
    Trajectory
    """
    if delta < 0:
        raise ValueError(f"delta must be non-negative, got {delta}")
    n = _step_count(T, dt)
    x = np.array(x0, dtype=float).reshape(-1)
    if x.shape != (model.d,):
        raise InvalidModel(f"initial state has dimension {x.size}, model expects {model.d}")
    flags = model.positive_mask
    if np.any(x[flags] <= 0):
        raise InvalidModel(f"initial state {x} leaves the positive domain")
    model.check(x)

    use_log = bool(flags.any())
    logmask = flags.astype(float)
    z = np.where(flags, np.log(np.where(flags, x, 1.0)), x) if use_log else x.copy()
    clock = ChainClock(model.generator, eps, i0, 0.0, stream.generator("chain"))
    noise = stream.generator("noise") if delta > 0 else None
    sqrt_delta = math.sqrt(delta)
    half_delta = 0.5 * delta
    drift, diffusion = model.drift, model.diffusion
    normals = np.empty((0, model.m_w))
    npos = 0

    # stopped paths usually end early, so their buffers grow on demand
    size = n + 1 if stop is None else min(n + 1, _BLOCK)
    times = np.empty(size)
    states = np.empty((size, model.d))
    regimes = np.empty(size, dtype=np.int64)
    times[0] = 0.0
    states[0] = x
    regimes[0] = clock.state

    if observer is not None:
        buf_t = np.empty(_BLOCK)
        buf_h = np.empty(_BLOCK)
        buf_x = np.empty((_BLOCK, model.d))
        buf_r = np.empty(_BLOCK, dtype=np.int64)
    filled = 0

    jump_times: List[float] = []
    jump_states = [clock.state]
    jumps = 0
    t = 0.0
    last = n
    stopped_at: Optional[float] = None
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n):
            t_right = T if k + 1 == n else dt * (k + 1)
            halted = False
            while True:
                jumping = clock.next_jump <= t_right
                t_next = clock.next_jump if jumping else t_right
                h = t_next - t
                if h > 0:
                    regime = clock.state
                    a = np.asarray(drift(x, regime), dtype=float)
                    if use_log:
                        scale = np.where(flags, x, 1.0)
                        a = a / scale
                    if noise is not None:
                        b = np.asarray(diffusion(x, regime), dtype=float)
                        if use_log:
                            b = b / scale[:, None]
                            a = a - half_delta * logmask * np.einsum("ij,ij->i", b, b)
                        if npos == normals.shape[0]:
                            normals = noise.standard_normal((_BLOCK, model.m_w))
                            npos = 0
                        z = z + a * h + (sqrt_delta * math.sqrt(h)) * (b @ normals[npos])
                        npos += 1
                    else:
                        z = z + a * h
                    if observer is not None:
                        buf_t[filled] = t
                        buf_h[filled] = h
                        buf_x[filled] = x
                        buf_r[filled] = regime
                        filled += 1
                        if filled == _BLOCK:
                            observer(buf_t.copy(), buf_h.copy(), buf_x.copy(), buf_r.copy())
                            filled = 0
                    x = np.where(flags, np.exp(z), z) if use_log else z
                    if not np.all(np.isfinite(x)):
                        raise BlowupError(float(t_next))
                    if stop is not None and stop(x):
                        halted = True
                t = t_next
                if halted or not jumping:
                    break
                jumps += 1
                if keep_path:
                    jump_times.append(t)
                    jump_states.append(clock.jump())
                else:
                    clock.jump()
            if k + 1 == size:
                size = min(n + 1, 2 * size)
                times, states, regimes = (_grow(b, size) for b in (times, states, regimes))
            times[k + 1] = t_right
            if halted:
                stopped_at = float(t)
                times[k + 1] = t
                last = k + 1
            states[k + 1] = x
            regimes[k + 1] = clock.state
            if halted:
                break

    if observer is not None and filled:
        observer(buf_t[:filled].copy(), buf_h[:filled].copy(), buf_x[:filled].copy(), buf_r[:filled].copy())

    path = None
    if keep_path:
        path = SwitchingPath(
            0.0, float(times[last]), np.array(jump_times), np.array(jump_states), model.m0
        )
    LOG.debug(
        f"{model.name}: simulated {jumps} jumps, "
        f"{last} samples at eps={eps}, delta={delta}, dt={dt}"
    )
    return Trajectory(
        times=times[: last + 1],
        states=states[: last + 1],
        regimes=regimes[: last + 1],
        eps=eps,
        delta=delta,
        dt=dt,
        seed=stream.seed,
        stream_key=stream.key,
        path=path,
        stopped_at=stopped_at,
    )


def exit_budget(
    case_id: str, eps: float, delta: float, H: float = 10.0, Delta: float = 0.01
) -> float:
    """Exit-time horizon ``H exp(Delta / eps)`` in case 2, ``H exp(Delta / delta)`` otherwise.

    Raises
    ------
    InvalidBudget
        If the budget is not a finite positive time.
    """
    if case_id not in CASES:
        raise ScheduleError(f"unknown case {case_id!r}")
    scale = eps if case_id == "case2" else delta
    if not scale > 0 or not H > 0:
        raise InvalidBudget(f"budget undefined for H={H}, scale={scale}")
    try:
        budget = H * math.exp(Delta / scale)
    except OverflowError as exc:
        raise InvalidBudget(f"budget H*exp({Delta}/{scale}) overflows") from exc
    return budget


@dataclass(frozen=True)
class Nondegeneracy:
    """Regimes in which drift or diffusion fail to vanish at a critical point."""

    location: Tuple[float, ...]
    drift_regimes: Tuple[int, ...]
    diffusion_regimes: Tuple[int, ...]

    def admits(self, case_id: str) -> bool:
        """Whether the exit condition required in ``case_id`` holds here."""
        if case_id == "case1":
            return bool(self.drift_regimes or self.diffusion_regimes)
        if case_id == "case2":
            return bool(self.drift_regimes)
        if case_id == "case3":
            return bool(self.diffusion_regimes)
        raise ScheduleError(f"unknown case {case_id!r}")


def nondegeneracy(
    model: HybridModel, x_star: Sequence[float], tol: float = 1e-12
) -> Nondegeneracy:
    """Check which regimes move or shake the state at ``x_star``."""
    point = np.asarray(x_star, dtype=float)
    drift_regimes = tuple(
        i for i in range(model.m0) if np.linalg.norm(model.drift(point, i)) > tol
    )
    diffusion_regimes = tuple(
        i for i in range(model.m0) if np.linalg.norm(model.diffusion(point, i)) > tol
    )
    return Nondegeneracy(tuple(point.tolist()), drift_regimes, diffusion_regimes)


def ornstein_uhlenbeck(theta: float = 1.0, sigma: float = 1.0) -> HybridModel:
    """One-regime scalar model ``dX = -theta X dt + sqrt(delta) sigma dW``."""
    noise = np.array([[sigma]], dtype=float)
    return HybridModel(
        d=1,
        m_w=1,
        generator=Generator(np.zeros((1, 1))),
        drift=lambda x, i: -theta * x,
        diffusion=lambda x, i: noise,
        name="ornstein-uhlenbeck",
    )


def switching_hopf(
    omegas: Sequence[float] = (0.5, 1.5),
    generator: Union[Generator, Any] = ((-1.0, 1.0), (1.0, -1.0)),
    sigma: float = 1.0,
) -> HybridModel:
    """Hopf normal form whose rotation speed switches with the regime.

    Regime ``i`` has ``r' = r (1 - r^2)`` and ``theta' = omegas[i]``, with
    additive noise ``sigma I``.  The averaged field is the Hopf normal form
    rotating at the stationary mean of ``omegas``.
    """
    speeds = tuple(float(w) for w in omegas)
    gen = as_generator(np.array(generator, dtype=float))
    if len(speeds) != gen.m0:
        raise InvalidModel(f"{len(speeds)} rotation speeds for {gen.m0} regimes")
    noise = sigma * np.eye(2)

    def drift(x: np.ndarray, i: int) -> np.ndarray:
        radial = 1.0 - x[0] * x[0] - x[1] * x[1]
        w = speeds[i]
        return np.array([x[0] * radial - w * x[1], x[1] * radial + w * x[0]])

    return HybridModel(
        d=2,
        m_w=2,
        generator=gen,
        drift=drift,
        diffusion=lambda x, i: noise,
        name="switching-hopf",
    )
