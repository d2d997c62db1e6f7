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
Finite-state continuous-time Markov chains.

The switching process of a hybrid diffusion is a chain with generator
``Q / eps``.  Paths are simulated exactly, event by event, from the
holding-time / embedded-chain decomposition; nothing is discretized.
"""

import bisect
import logging
from collections import deque
from dataclasses import dataclass
from typing import Any, List, Optional, Union

import numpy as np

from switchdiff.base import InvalidGenerator, InvalidSpan, IrreducibilityError

LOG = logging.getLogger(__name__)

_ROW_TOL = 1e-12
_BLOCK = 4096


@dataclass(frozen=True)
class Generator:
    """Rate matrix of an irreducible finite-state Markov chain.

    Parameters
    ----------
    q : array-like
        Square matrix of transition rates.  Off-diagonal entries must be
        non-negative and every row must sum to zero.

    Raises
    ------
    InvalidGenerator
        If the matrix is not square, has negative off-diagonal rates or
        non-conservative rows.
    IrreducibilityError
        If some state cannot reach some other state.
    """

    q: np.ndarray

    def __post_init__(self) -> None:
        q = np.array(self.q, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1] or q.shape[0] < 1:
            raise InvalidGenerator(f"generator must be square, got shape {q.shape}")
        if not np.all(np.isfinite(q)):
            raise InvalidGenerator("generator has non-finite rates")
        off = q - np.diag(np.diag(q))
        if np.any(off < 0):
            raise InvalidGenerator("off-diagonal rates must be non-negative")
        scale = max(1.0, float(np.abs(q).max()))
        if np.any(np.abs(q.sum(axis=1)) > _ROW_TOL * scale):
            raise InvalidGenerator("generator rows must sum to zero")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)
        _check_irreducible(q)

    @property
    def m0(self) -> int:
        """Number of states."""
        return int(self.q.shape[0])

    def embedded_chain(self) -> np.ndarray:
        """Jump matrix ``q_ij / |q_ii|`` with a zero diagonal."""
        rates = -np.diag(self.q)
        jump = np.zeros_like(self.q)
        for i in range(self.m0):
            if rates[i] > 0:
                jump[i] = self.q[i] / rates[i]
                jump[i, i] = 0.0
        return jump

    def __eq__(self, other: Any) -> bool:
        return isinstance(other, Generator) and np.array_equal(self.q, other.q)

    def __hash__(self) -> int:
        return hash(self.q.tobytes())


def _check_irreducible(q: np.ndarray) -> None:
    m0 = q.shape[0]
    adjacency = (q > 0) & ~np.eye(m0, dtype=bool)
    for start in range(m0):
        seen = {start}
        queue = deque([start])
        while queue:
            i = queue.popleft()
            for j in np.flatnonzero(adjacency[i]):
                if int(j) not in seen:
                    seen.add(int(j))
                    queue.append(int(j))
        if len(seen) < m0:
            missing = sorted(set(range(m0)) - seen)
            raise IrreducibilityError(
                f"state {start} cannot reach states {missing}"
            )


def as_generator(q: Union[Generator, Any]) -> Generator:
    """Wrap an array-like rate matrix, passing a ``Generator`` through."""
    return q if isinstance(q, Generator) else Generator(q)


@dataclass(frozen=True, eq=False)
class StationaryDist:
    """Stationary probability vector ``nu`` with ``nu Q = 0``."""

    nu: np.ndarray

    def __post_init__(self) -> None:
        nu = np.array(self.nu, dtype=float)
        if nu.ndim != 1 or np.any(nu <= 0) or abs(nu.sum() - 1.0) > 1e-12:
            raise ValueError(f"not a positive probability vector: {nu}")
        nu.setflags(write=False)
        object.__setattr__(self, "nu", nu)

    @property
    def m0(self) -> int:
        return int(self.nu.shape[0])

    def __getitem__(self, i: int) -> float:
        return float(self.nu[i])


def stationary_distribution(q: Union[Generator, Any]) -> StationaryDist:
    """Stationary distribution of an irreducible generator.

    Solves the augmented system ``[Q^T; 1^T] nu = [0; 1]`` by least squares.

    Parameters
    ----------
    q : Generator or array-like
        The generator

    Returns
    -------
    StationaryDist
    """
    gen = as_generator(q)
    m0 = gen.m0
    lhs = np.vstack([gen.q.T, np.ones((1, m0))])
    rhs = np.zeros(m0 + 1)
    rhs[-1] = 1.0
    nu, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    if np.any(nu <= 0):
        raise IrreducibilityError(f"stationary solution is not positive: {nu}")
    nu = nu / nu.sum()
    residual = np.abs(nu @ gen.q).max()
    LOG.debug(f"stationary distribution {nu} (residual {residual:.3g})")
    return StationaryDist(nu)


@dataclass(frozen=True, eq=False)
class SwitchingPath:
    """Piecewise-constant, right-continuous path of the switching chain.

    Parameters
    ----------
    t0, t_end : float
        Span of the path
    jump_times : numpy.ndarray
        Strictly increasing jump times in ``(t0, t_end]``
    states : numpy.ndarray
        Regime sequence, one longer than ``jump_times``
    m0 : int
        Number of regimes of the generating chain
    """

    t0: float
    t_end: float
    jump_times: np.ndarray
    states: np.ndarray
    m0: int

    def __post_init__(self) -> None:
        if not self.t_end > self.t0:
            raise InvalidSpan(f"empty span [{self.t0}, {self.t_end}]")
        times = np.asarray(self.jump_times, dtype=float)
        states = np.asarray(self.states, dtype=int)
        if states.shape[0] != times.shape[0] + 1:
            raise ValueError("states must have exactly one more entry than jumps")
        if times.size and (
            times[0] <= self.t0 or times[-1] > self.t_end or np.any(np.diff(times) <= 0)
        ):
            raise ValueError("jump times must increase strictly within (t0, t_end]")
        if np.any(states[1:] == states[:-1]):
            raise ValueError("consecutive states must differ")
        object.__setattr__(self, "jump_times", times)
        object.__setattr__(self, "states", states)

    @property
    def jumps(self) -> int:
        return int(self.jump_times.shape[0])

    def regime_at(self, t: Union[float, np.ndarray]) -> Union[int, np.ndarray]:
        """Regime at time(s) ``t``; the value at a jump time is the new regime."""
        idx = np.searchsorted(self.jump_times, t, side="right")
        out = self.states[idx]
        return int(out) if np.ndim(out) == 0 else out


class ChainClock:
    """Event clock that advances the switching chain one jump at a time.

    Holding times and embedded-chain choices are drawn in blocks from a
    single generator, so the sequence of events depends only on that
    generator.

    Parameters
    ----------
    gen : Generator
        Generator ``Q`` of the chain
    eps : float
        Time-scale parameter; rates are ``Q / eps``
    i0 : int
        Initial regime
    t0 : float
        Initial time
    rng : numpy.random.Generator
        Source of randomness, conventionally the ``chain`` purpose stream
    """

    def __init__(
        self, gen: Generator, eps: float, i0: int, t0: float, rng: np.random.Generator
    ) -> None:
        if not eps > 0:
            raise ValueError(f"eps must be positive, got {eps}")
        if not 0 <= i0 < gen.m0:
            raise ValueError(f"initial regime {i0} outside 0..{gen.m0 - 1}")
        self.state = int(i0)
        self._rates = (-np.diag(gen.q) / eps).tolist()
        jump = gen.embedded_chain()
        self._cum: List[List[float]] = []
        for row in jump:
            cum = np.cumsum(row)
            self._cum.append((cum / cum[-1]).tolist() if cum[-1] > 0 else cum.tolist())
        self._rng = rng
        self._holds: List[float] = []
        self._uniforms: List[float] = []
        self._h = 0
        self._u = 0
        self.next_jump = t0 + self._hold()

    def _hold(self) -> float:
        rate = self._rates[self.state]
        if rate <= 0:
            return np.inf
        if self._h == len(self._holds):
            self._holds = self._rng.standard_exponential(_BLOCK).tolist()
            self._h = 0
        value = self._holds[self._h]
        self._h += 1
        return value / rate

    def _uniform(self) -> float:
        if self._u == len(self._uniforms):
            self._uniforms = self._rng.random(_BLOCK).tolist()
            self._u = 0
        value = self._uniforms[self._u]
        self._u += 1
        return value

    def jump(self) -> int:
        """Move to the next regime at ``next_jump`` and schedule the following jump."""
        now = self.next_jump
        self.state = bisect.bisect_right(self._cum[self.state], self._uniform())
        self.next_jump = now + self._hold()
        return self.state


def sample_path(
    q: Union[Generator, Any],
    eps: float,
    i0: int,
    t0: float,
    t_end: float,
    stream: np.random.Generator,
) -> SwitchingPath:
    """Sample the chain with generator ``Q / eps`` over ``[t0, t_end]``.

    Holding time in state ``i`` is exponential with rate ``|q_ii| / eps`` and
    the next state is ``j`` with probability ``q_ij / |q_ii|``.

    Parameters
    ----------
    q : Generator or array-like
        Generator of the chain
    eps : float
        Time-scale parameter
    i0 : int
        Initial regime (0-based)
    t0, t_end : float
        Span of the path
    stream : numpy.random.Generator
        Random source; the same generator state gives the same path

    Returns
    -------
    SwitchingPath
    """
    gen = as_generator(q)
    if not t_end > t0:
        raise InvalidSpan(f"empty span [{t0}, {t_end}]")
    clock = ChainClock(gen, eps, i0, t0, stream)
    times: List[float] = []
    states = [clock.state]
    while clock.next_jump <= t_end:
        times.append(clock.next_jump)
        states.append(clock.jump())
    LOG.debug(f"sampled {len(times)} jumps over [{t0}, {t_end}] at eps={eps}")
    return SwitchingPath(t0, t_end, np.array(times), np.array(states), gen.m0)


def occupation_fractions(path: SwitchingPath, m0: Optional[int] = None) -> np.ndarray:
    """Fraction of the span spent in each regime.

    Parameters
    ----------
    path : SwitchingPath
        A sampled path
    m0 : int, optional
        Length of the result; defaults to the regime count of the path

    Returns
    -------
    numpy.ndarray
        Entry ``i`` is the total time in regime ``i`` over ``t_end - t0``
    """
    span = path.t_end - path.t0
    if not span > 0:
        raise InvalidSpan(f"empty span [{path.t0}, {path.t_end}]")
    bounds = np.concatenate([[path.t0], path.jump_times, [path.t_end]])
    durations = np.diff(bounds)
    size = path.m0 if m0 is None else m0
    return np.bincount(path.states, weights=durations, minlength=size) / span
