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
Stochastic predator-prey systems with regime switching.

Prey ``x`` and predator ``y`` follow

    dx = x (a - b x - y h) dt + sqrt(delta) lambda x dW1
    dy = y (-c - d y + f x h) dt + sqrt(delta) rho y dW2

with every coefficient and the functional response ``h`` depending on the
regime.  Both coordinates are integrated in log coordinates, so simulated
populations never leave the positive quadrant.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from switchdiff.averaging import VectorField
from switchdiff.base import InvalidModel, InvalidTrajectory
from switchdiff.ctmc import Generator, StationaryDist, as_generator, stationary_distribution
from switchdiff.grid import GridSpec
from switchdiff.hybrid_sde import HybridModel, ScaleSchedule, Trajectory

LOG = logging.getLogger(__name__)

Number = Union[float, np.ndarray]
REFERENCE_EQUILIBRIUM = (1.836, 1.795)
REFERENCE_CONVERSION = 1.6


def _floats(values: Sequence[float]) -> Tuple[float, ...]:
    return tuple(float(v) for v in values)


class FunctionalResponse(ABC):
    """Per-regime predation rate ``h(x, y, i)``."""

    kind: str = ""

    @abstractmethod
    def __call__(self, x: Number, y: Number, i: int) -> Number:
        """Evaluate the response in regime ``i``."""
        pass

    @abstractmethod
    def numerator(self, i: int) -> float:
        """Coefficient multiplying the response, e.g. ``m(i)`` for Holling type II."""
        pass

    @abstractmethod
    def validate(self, m0: int) -> None:
        """Raise :class:`InvalidModel` unless ``h`` is positive and bounded on the open quadrant."""
        pass

    @abstractmethod
    def to_config(self) -> Dict[str, Any]:
        pass

    @staticmethod
    def from_config(cfg: Dict[str, Any]) -> "FunctionalResponse":
        """Build a response from ``{"kind": ..., <parameters>}``."""
        kinds = {
            ConstantResponse.kind: ConstantResponse,
            HollingII.kind: HollingII,
            BeddingtonDeAngelis.kind: BeddingtonDeAngelis,
        }
        params = dict(cfg)
        kind = params.pop("kind", None)
        if kind not in kinds:
            raise InvalidModel(f"unknown functional response {kind!r}, expected one of {list(kinds)}")
        try:
            return kinds[kind](**{k: _floats(v) for k, v in params.items()})
        except TypeError as exc:
            raise InvalidModel(f"bad parameters for {kind}: {exc}") from exc


def _lengths(name: str, m0: int, **series: Tuple[float, ...]) -> None:
    for key, values in series.items():
        if len(values) != m0:
            raise InvalidModel(f"{name}.{key} has {len(values)} entries for {m0} regimes")


@dataclass(frozen=True)
class ConstantResponse(FunctionalResponse):
    """``h = m(i)``."""

    m: Tuple[float, ...]
    kind = "constant"

    def __call__(self, x: Number, y: Number, i: int) -> Number:
        return self.m[i] + 0.0 * x

    def numerator(self, i: int) -> float:
        return self.m[i]

    def validate(self, m0: int) -> None:
        _lengths(self.kind, m0, m=self.m)
        if any(v <= 0 for v in self.m):
            raise InvalidModel("constant response needs m > 0")

    def to_config(self) -> Dict[str, Any]:
        return {"kind": self.kind, "m": list(self.m)}


@dataclass(frozen=True)
class HollingII(FunctionalResponse):
    """``h = m(i) / (a(i) + b(i) x)``."""

    m: Tuple[float, ...]
    a: Tuple[float, ...]
    b: Tuple[float, ...]
    kind = "holling-ii"

    def __call__(self, x: Number, y: Number, i: int) -> Number:
        return self.m[i] / (self.a[i] + self.b[i] * x)

    def numerator(self, i: int) -> float:
        return self.m[i]

    def validate(self, m0: int) -> None:
        _lengths(self.kind, m0, m=self.m, a=self.a, b=self.b)
        if any(v <= 0 for v in self.m + self.a) or any(v < 0 for v in self.b):
            raise InvalidModel("Holling type II response needs m > 0, a > 0, b >= 0")

    def to_config(self) -> Dict[str, Any]:
        return {"kind": self.kind, "m": list(self.m), "a": list(self.a), "b": list(self.b)}


@dataclass(frozen=True)
class BeddingtonDeAngelis(FunctionalResponse):
    """``h = m1(i) / (m2(i) + m3(i) x + m4(i) y)``."""

    m1: Tuple[float, ...]
    m2: Tuple[float, ...]
    m3: Tuple[float, ...]
    m4: Tuple[float, ...]
    kind = "beddington-deangelis"

    def __call__(self, x: Number, y: Number, i: int) -> Number:
        return self.m1[i] / (self.m2[i] + self.m3[i] * x + self.m4[i] * y)

    def numerator(self, i: int) -> float:
        return self.m1[i]

    def validate(self, m0: int) -> None:
        _lengths(self.kind, m0, m1=self.m1, m2=self.m2, m3=self.m3, m4=self.m4)
        if any(v <= 0 for v in self.m1 + self.m2) or any(v < 0 for v in self.m3 + self.m4):
            raise InvalidModel(
                "Beddington-DeAngelis response needs m1 > 0, m2 > 0, m3 >= 0, m4 >= 0"
            )

    def to_config(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "m1": list(self.m1),
            "m2": list(self.m2),
            "m3": list(self.m3),
            "m4": list(self.m4),
        }


@dataclass(frozen=True, eq=False)
class PredPreyParams:
    """Per-regime coefficients of the switching predator-prey system.

    Parameters
    ----------
    a, b : tuple of float
        Prey growth rate and logistic coefficient
    c, d : tuple of float
        Predator death rate and self-limitation
    f : tuple of float
        Conversion efficiency
    lam, rho : tuple of float
        Noise intensities of prey and predator (zero switches the noise off)
    response : FunctionalResponse
        Predation rate
    generator : Generator
        Generator of the switching chain
    """

    a: Tuple[float, ...]
    b: Tuple[float, ...]
    c: Tuple[float, ...]
    d: Tuple[float, ...]
    f: Tuple[float, ...]
    lam: Tuple[float, ...]
    rho: Tuple[float, ...]
    response: FunctionalResponse
    generator: Generator = field(default_factory=lambda: Generator(np.zeros((1, 1))))

    def __post_init__(self) -> None:
        gen = as_generator(self.generator)
        object.__setattr__(self, "generator", gen)
        for name in ("a", "b", "c", "d", "f", "lam", "rho"):
            object.__setattr__(self, name, _floats(getattr(self, name)))
        _lengths(
            "params", gen.m0, a=self.a, b=self.b, c=self.c, d=self.d, f=self.f,
            lam=self.lam, rho=self.rho,
        )
        if any(v <= 0 for v in self.a + self.b + self.c + self.d + self.f):
            raise InvalidModel("rates a, b, c, d, f must be positive")
        if any(v < 0 for v in self.lam + self.rho):
            raise InvalidModel("noise intensities must be non-negative")
        self.response.validate(gen.m0)

    @property
    def m0(self) -> int:
        return self.generator.m0

    @property
    def carrying_capacity(self) -> Tuple[float, ...]:
        """``K(i) = a(i) / b(i)``."""
        return tuple(a / b for a, b in zip(self.a, self.b))

    def to_config(self) -> Dict[str, Any]:
        return {
            "a": list(self.a),
            "b": list(self.b),
            "c": list(self.c),
            "d": list(self.d),
            "f": list(self.f),
            "lambda": list(self.lam),
            "rho": list(self.rho),
            "response": self.response.to_config(),
        }

    @classmethod
    def from_config(cls, cfg: Dict[str, Any], generator: Any) -> "PredPreyParams":
        """Build from a config block; ``K`` may replace ``b`` (``b = a / K``)."""
        params = dict(cfg)
        if "b" not in params and "K" in params:
            params["b"] = [a / k for a, k in zip(params["a"], params.pop("K"))]
        missing = [k for k in ("a", "b", "c", "d", "f", "lambda", "rho", "response") if k not in params]
        if missing:
            raise InvalidModel(f"predator-prey parameters missing {missing}")
        return cls(
            a=params["a"],
            b=params["b"],
            c=params["c"],
            d=params["d"],
            f=params["f"],
            lam=params["lambda"],
            rho=params["rho"],
            response=FunctionalResponse.from_config(params["response"]),
            generator=as_generator(generator),
        )


def build_model(p: PredPreyParams) -> HybridModel:
    """Hybrid model with drift ``(x phi, y psi)`` and diffusion ``diag(lambda x, rho y)``.

    ``phi = a - b x - y h`` and ``psi = -c - d y + f x h``; both coordinates
    carry the positivity flag.
    """
    a, b, c, d, f = p.a, p.b, p.c, p.d, p.f
    lam, rho = p.lam, p.rho
    response = p.response

    def drift(z: np.ndarray, i: int) -> np.ndarray:
        x, y = z[0], z[1]
        h = response(x, y, i)
        return np.array([x * (a[i] - b[i] * x - y * h), y * (-c[i] - d[i] * y + f[i] * x * h)])

    def diffusion(z: np.ndarray, i: int) -> np.ndarray:
        return np.array([[lam[i] * z[0], 0.0], [0.0, rho[i] * z[1]]])

    return HybridModel(
        d=2,
        m_w=2,
        generator=p.generator,
        drift=drift,
        diffusion=diffusion,
        positive=(True, True),
        name=f"predprey/{response.kind}",
    )


def _nu(p: PredPreyParams, nu: Optional[Union[StationaryDist, Sequence[float]]]) -> np.ndarray:
    if nu is None:
        return stationary_distribution(p.generator).nu
    w = np.asarray(nu.nu if isinstance(nu, StationaryDist) else nu, dtype=float)
    if w.shape != (p.m0,):
        raise InvalidModel(f"{w.size} weights for {p.m0} regimes")
    return w


def averaged_predprey(
    p: PredPreyParams, nu: Optional[Union[StationaryDist, Sequence[float]]] = None
) -> VectorField:
    """Averaged system ``(x [abar - bbar x - y h1], y [-cbar - dbar y + x h2])``.

    ``h1 = sum_i h(., i) nu_i`` and ``h2 = sum_i f(i) h(., i) nu_i``.
    """
    w = _nu(p, nu).tolist()
    abar, bbar, cbar, dbar = (float(np.dot(w, v)) for v in (p.a, p.b, p.c, p.d))
    response, f = p.response, p.f

    def func(z: np.ndarray) -> np.ndarray:
        x, y = z[0], z[1]
        h1 = 0.0
        h2 = 0.0
        for i, wi in enumerate(w):
            h = response(x, y, i)
            h1 += wi * h
            h2 += wi * f[i] * h
        return np.array([x * (abar - bbar * x - y * h1), y * (-cbar - dbar * y + x * h2)])

    return VectorField(2, func, name="averaged predprey")


def reference_holling_field() -> VectorField:
    """Published averaged Holling system with the ``+1.6 x / (1 + x)`` predator term."""

    def func(z: np.ndarray) -> np.ndarray:
        x, y = z[0], z[1]
        return np.array(
            [x * (1.0 - x / 5.0) - x * y / (1.0 + x), y * (-1.0 + 1.6 * x / (1.0 + x) - 0.02 * y)]
        )

    return VectorField(2, func, name="reference holling")


def boundary_equilibrium(
    p: PredPreyParams, nu: Optional[Union[StationaryDist, Sequence[float]]] = None
) -> Tuple[float, float]:
    """Predator-free equilibrium ``(abar / bbar, 0)`` of the averaged system."""
    w = _nu(p, nu)
    return float(w @ np.array(p.a)) / float(w @ np.array(p.b)), 0.0


def predator_invasion_rate(
    p: PredPreyParams, nu: Optional[Union[StationaryDist, Sequence[float]]] = None
) -> float:
    """Per-capita predator growth ``-cbar + xbar h2(xbar, 0)`` at the predator-free equilibrium.

    A positive rate makes that equilibrium unstable, which the persistence of
    the averaged cycle requires.
    """
    w = _nu(p, nu)
    xbar, _ = boundary_equilibrium(p, w)
    h2 = sum(w[i] * p.f[i] * p.response(xbar, 0.0, i) for i in range(p.m0))
    return float(-(w @ np.array(p.c)) + xbar * h2)


def averaging_discrepancy(
    p: PredPreyParams,
    nu: Optional[Union[StationaryDist, Sequence[float]]] = None,
    reference: float = REFERENCE_CONVERSION,
) -> Dict[str, float]:
    """Averaged predator conversion ``sum_i nu_i f(i) m(i)`` next to the published one."""
    w = _nu(p, nu)
    built = float(sum(w[i] * p.f[i] * p.response.numerator(i) for i in range(p.m0)))
    if abs(built - reference) > 1e-12:
        LOG.warning(
            f"averaged predator conversion from components is {built:.6g}, "
            f"published averaged system uses {reference:.6g}"
        )
    return {"component": built, "reference": reference, "difference": built - reference}


@dataclass(frozen=True, eq=False)
class HollingExample:
    """The two-regime Holling type II example with its run configuration.

    ``grid`` is left unset: histograms use the default grid around the
    averaged cycle.
    """

    params: PredPreyParams
    model: HybridModel
    reference_field: VectorField
    reference_equilibrium: Tuple[float, float]
    schedule: ScaleSchedule
    config: Dict[str, Any]
    grid: Optional[GridSpec] = None

    @property
    def generator(self) -> Generator:
        return self.params.generator

    @property
    def averaged_field(self) -> VectorField:
        """Averaged field built from the regime components."""
        return averaged_predprey(self.params)


def holling_example() -> HollingExample:
    """Two-regime Holling example.

    ``Q = [[-1, 1], [1, -1]]``, ``r = (0.9, 1.1)``, logistic coefficients
    ``r / K = (0.19, 0.21)`` (``K = (4.737, 5.238)`` to three decimals),
    ``m = (1.2, 0.8)``, half-saturation ``a = b = (1, 1)``, predator death
    ``(0.85, 1.15)``, conversion ``e = (1.5, 2)``, self-limitation
    ``(0.03, 0.01)``, noise ``lambda = (1, 2)``, ``rho = (3, 1)``.
    """
    generator = Generator(np.array([[-1.0, 1.0], [1.0, -1.0]]))
    params = PredPreyParams(
        a=(0.9, 1.1),
        b=(0.19, 0.21),
        c=(0.85, 1.15),
        d=(0.03, 0.01),
        f=(1.5, 2.0),
        lam=(1.0, 2.0),
        rho=(3.0, 1.0),
        response=HollingII(m=(1.2, 0.8), a=(1.0, 1.0), b=(1.0, 1.0)),
        generator=generator,
    )
    schedule = ScaleSchedule("case1", (0.1, 0.01, 0.001), l=1.0)
    config: Dict[str, Any] = {
        "name": "holling-example",
        "model": {"predprey": params.to_config()},
        "generator": generator.q.tolist(),
        "schedule": {"case": schedule.case_id, "l": schedule.l, "eps": list(schedule.eps_list)},
        "simulation": {
            "T": 20000.0,
            "dt": 0.01,
            "burn_in": 1000.0,
            "n": 500,
            "seed": 0,
            "x0": [1.0, 1.0],
            "i0": 0,
        },
        "grid": None,
        "test_functions": ["x", "y", "x^2", "xy"],
        "exit": {
            "H": 10.0,
            "Delta": 0.01,
            "radius": 0.2,
            "center": list(REFERENCE_EQUILIBRIUM),
            "n": 200,
        },
        "deviation": {"gamma": 0.5, "T": 10.0, "n": 500},
        "figures": {"T": 100.0, "dt": 0.01, "pairs": [[0.01, 0.01], [0.001, 0.001]]},
        "reference": {"field": "holling-nex2", "equilibrium": list(REFERENCE_EQUILIBRIUM)},
        "tightness": {"lo": [0.05, 0.05], "hi": [20.0, 20.0]},
    }
    return HollingExample(
        params=params,
        model=build_model(params),
        reference_field=reference_holling_field(),
        reference_equilibrium=REFERENCE_EQUILIBRIUM,
        schedule=schedule,
        config=config,
    )


@dataclass(frozen=True)
class MomentDiagnostics:
    """Time-averaged ``|Z|^2``, its running maximum, and time share in ``[1/L, L]^2``."""

    mean_square: float
    sup_square: float
    box_fraction: float


def moment_diagnostics(
    traj: Trajectory, L: float, window: Optional[Tuple[float, float]] = None
) -> MomentDiagnostics:
    """Moment and tightness diagnostics of a positive planar trajectory.

    Sample ``k`` stands for the interval ``[t_k, t_{k+1})`` of the window.

    Raises
    ------
    InvalidTrajectory
        If the trajectory is not planar, not positive, or too short.
    """
    if not L > 1:
        raise ValueError(f"L must exceed 1, got {L}")
    if traj.d != 2:
        raise InvalidTrajectory(f"expected a planar trajectory, got d={traj.d}")
    if np.any(traj.states <= 0):
        raise InvalidTrajectory("trajectory leaves the positive quadrant")
    times, states = traj.times, traj.states
    if window is not None:
        keep = (times >= window[0]) & (times <= window[1])
        times, states = times[keep], states[keep]
    if times.shape[0] < 2:
        raise InvalidTrajectory("window holds fewer than two samples")
    weights = np.diff(times)
    square = np.sum(states**2, axis=1)
    inside = np.all((states >= 1.0 / L) & (states <= L), axis=1)
    span = weights.sum()
    return MomentDiagnostics(
        mean_square=float(square[:-1] @ weights / span),
        sup_square=float(square.max()),
        box_fraction=float(inside[:-1] @ weights / span),
    )
