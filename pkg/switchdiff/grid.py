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
Rectangular histogram grids and the probability measures living on them.

Both the empirical invariant measures and the occupation measure of a limit
cycle are stored as :class:`GridMeasure` objects.  On disk a measure is a
pair of files: ``<stem>.json`` with the grid, regime count and overflow mass,
and ``<stem>.csv`` with one row ``cell_1, ..., cell_d, regime, weight`` per
non-empty (cell, regime) pair.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
import pandas as pd

from switchdiff.base import InvalidGrid, InvalidMeasure

LOG = logging.getLogger(__name__)

_MASS_TOL = 1e-9


@dataclass(frozen=True)
class GridSpec:
    """Box ``[lo, hi]`` split into ``n`` equal cells per axis.

    Parameters
    ----------
    lo, hi : tuple of float
        Box corners, ``lo < hi`` componentwise
    n : int
        Cells per axis, at least 2
    """

    lo: Tuple[float, ...]
    hi: Tuple[float, ...]
    n: int

    def __post_init__(self) -> None:
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi) or not lo:
            raise InvalidGrid(f"corner dimensions differ: {lo} vs {hi}")
        if any(a >= b for a, b in zip(lo, hi)):
            raise InvalidGrid(f"lo must be below hi componentwise: {lo} vs {hi}")
        if int(self.n) < 2:
            raise InvalidGrid(f"need at least 2 cells per axis, got {self.n}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def around(cls, points: np.ndarray, scale: float = 1.5, n: int = 200) -> "GridSpec":
        """Grid on the bounding box of ``points`` enlarged ``scale`` times about its center."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        low, high = pts.min(axis=0), pts.max(axis=0)
        center = 0.5 * (low + high)
        half = 0.5 * scale * np.maximum(high - low, 1e-12)
        return cls(tuple(center - half), tuple(center + half), n)

    @property
    def d(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def cells(self) -> int:
        return int(self.n**self.d)

    @property
    def widths(self) -> np.ndarray:
        return (np.array(self.hi) - np.array(self.lo)) / self.n

    @property
    def cell_diagonal(self) -> float:
        return float(np.linalg.norm(self.widths))

    def axis_centers(self, axis: int) -> np.ndarray:
        return self.lo[axis] + (np.arange(self.n) + 0.5) * self.widths[axis]

    def centers(self) -> np.ndarray:
        """Cell centers, one row per flat cell index (C order)."""
        axes = np.meshgrid(*[self.axis_centers(k) for k in range(self.d)], indexing="ij")
        return np.stack([a.reshape(-1) for a in axes], axis=1)

    def locate(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Flat cell index of each point and a mask of points inside the box.

        A point on a cell boundary belongs to the lower-index cell; the lower
        box face belongs to cell 0.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        lo = np.array(self.lo)
        hi = np.array(self.hi)
        inside = np.all((pts >= lo) & (pts <= hi), axis=1)
        idx = np.ceil((pts - lo) / self.widths).astype(np.int64) - 1
        idx = np.clip(idx, 0, self.n - 1)
        flat = np.ravel_multi_index(tuple(idx.T), self.shape)
        return flat, inside

    def to_config(self) -> Dict[str, Any]:
        return {"lo": list(self.lo), "hi": list(self.hi), "n": self.n}


@dataclass(frozen=True, eq=False)
class GridMeasure:
    """Probability measure on the cells of a grid, optionally per regime.

    Parameters
    ----------
    spec : GridSpec
        The grid
    weights : numpy.ndarray
        Array of shape ``(cells, m)``; ``m = 1`` for regime-blind measures
    overflow : float, optional
        Fraction of mass that fell outside the grid and was discarded before
        normalization
    box_fraction : float, optional
        Share of time the sampled path spent in a reference box, measured on
        the raw states rather than the cells
    """

    spec: GridSpec
    weights: np.ndarray
    overflow: float = 0.0
    box_fraction: Optional[float] = None

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=float)
        if w.ndim == 1:
            w = w[:, None]
        if w.ndim != 2 or w.shape[0] != self.spec.cells:
            raise InvalidMeasure(
                f"weights shape {w.shape} does not match {self.spec.cells} cells"
            )
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InvalidMeasure("weights must be finite and non-negative")
        if abs(w.sum() - 1.0) > _MASS_TOL:
            raise InvalidMeasure(f"total mass is {w.sum()!r}, expected 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def point_mass(cls, spec: GridSpec, x: np.ndarray, regimes: int = 1) -> "GridMeasure":
        """Unit mass in the cell containing ``x`` (regime 0)."""
        flat, inside = spec.locate(np.asarray(x, dtype=float))
        if not inside[0]:
            raise InvalidMeasure(f"{x} lies outside the grid")
        w = np.zeros((spec.cells, regimes))
        w[flat[0], 0] = 1.0
        return cls(spec, w)

    @property
    def regimes(self) -> int:
        return int(self.weights.shape[1])

    @property
    def cell_weights(self) -> np.ndarray:
        """Cell marginal (summed over regimes)."""
        return self.weights.sum(axis=1)

    @property
    def regime_marginal(self) -> np.ndarray:
        return self.weights.sum(axis=0)

    def to_frame(self) -> pd.DataFrame:
        """Non-zero rows ``cell_1, ..., cell_d, regime, weight``."""
        flat, regime = np.nonzero(self.weights)
        cells = np.unravel_index(flat, self.spec.shape)
        frame = pd.DataFrame({f"cell_{k + 1}": cells[k] for k in range(self.spec.d)})
        frame["regime"] = regime
        frame["weight"] = self.weights[flat, regime]
        return frame


def write_measure(mu: GridMeasure, stem: Union[str, Path]) -> Tuple[Path, Path]:
    """Write ``<stem>.json`` (header) and ``<stem>.csv`` (body)."""
    stem = Path(stem)
    header = {
        "grid": mu.spec.to_config(),
        "regimes": mu.regimes,
        "overflow": mu.overflow,
        "box_fraction": mu.box_fraction,
    }
    json_path = stem.with_name(stem.name + ".json")
    csv_path = stem.with_name(stem.name + ".csv")
    json_path.write_text(json.dumps(header, indent=2) + "\n")
    mu.to_frame().to_csv(csv_path, index=False, float_format="%.17g")
    LOG.debug(f"wrote measure to {json_path} and {csv_path}")
    return json_path, csv_path


def read_measure(stem: Union[str, Path]) -> GridMeasure:
    """Read a measure written by :func:`write_measure`."""
    stem = Path(stem)
    header = json.loads(stem.with_name(stem.name + ".json").read_text())
    spec = GridSpec(**header["grid"])
    body = pd.read_csv(stem.with_name(stem.name + ".csv"))
    weights = np.zeros((spec.cells, int(header["regimes"])))
    if len(body):
        cells = tuple(body[f"cell_{k + 1}"].to_numpy() for k in range(spec.d))
        flat = np.ravel_multi_index(cells, spec.shape)
        weights[flat, body["regime"].to_numpy()] = body["weight"].to_numpy()
    return GridMeasure(spec, weights, float(header["overflow"]), header.get("box_fraction"))
