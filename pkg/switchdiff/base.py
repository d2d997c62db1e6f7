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
Shared plumbing for switchdiff.

Holds the exception hierarchy used across the package, the plain-text
template renderer for reports, and a couple of naming helpers for tabular
exports.
"""

import logging
import os
from typing import Any, List, Optional, Tuple, Union

LOG = logging.getLogger(__name__)


class SwitchDiffError(Exception):
    """Root of every error raised by switchdiff."""

    pass


class InvalidGenerator(SwitchDiffError, ValueError):
    """Rate matrix is not a valid Markov chain generator."""

    pass


class IrreducibilityError(SwitchDiffError, ValueError):
    """Generator has more than one communicating class."""

    pass


class InvalidSpan(SwitchDiffError, ValueError):
    """Time span is empty or reversed."""

    pass


class InvalidStep(SwitchDiffError, ValueError):
    """Step size is not positive or exceeds the horizon."""

    pass


class InvalidModel(SwitchDiffError, ValueError):
    """Model coefficients are malformed or leave the declared domain."""

    pass


class InvalidBudget(SwitchDiffError, ValueError):
    """Exit-time budget cannot be sampled on the requested grid."""

    pass


class ScheduleError(SwitchDiffError, ValueError):
    """Scale schedule violates the ordering required by its case."""

    pass


class BlowupError(SwitchDiffError, ArithmeticError):
    """A simulated state became non-finite.

    Parameters
    ----------
    time : float
        Time at which the non-finite state was produced.
    replicate : int, optional
        Index of the ensemble replicate that failed, when known.
    """

    def __init__(self, time: float, replicate: Optional[int] = None) -> None:
        self.time = time
        self.replicate = replicate
        where = "" if replicate is None else f" in replicate {replicate}"
        super().__init__(f"non-finite state at t={time:.6g}{where}")

    def __reduce__(self) -> Tuple[Any, ...]:
        return (BlowupError, (self.time, self.replicate))


class NoCycleError(SwitchDiffError, RuntimeError):
    """No closed orbit was found within the allotted integration time."""

    pass


class ConvergesToEquilibrium(SwitchDiffError, RuntimeError):
    """The flow settles on a critical point instead of a cycle."""

    pass


class GridCoverageError(SwitchDiffError, ValueError):
    """Too much mass falls outside the histogram grid."""

    pass


class SpecMismatch(SwitchDiffError, ValueError):
    """Two measures live on different grids."""

    pass


class InvalidTrajectory(SwitchDiffError, ValueError):
    """Trajectory does not satisfy the requirements of a diagnostic."""

    pass


class InvalidGrid(SwitchDiffError, ValueError):
    """Grid corners or resolution are invalid."""

    pass


class InvalidMeasure(SwitchDiffError, ValueError):
    """Weights do not form a probability measure."""

    pass


class ConfigError(SwitchDiffError, ValueError):
    """Scenario configuration problem tied to a key.

    Parameters
    ----------
    key : str
        Dotted path of the offending configuration key.
    message : str, optional
        Extra detail, usually the violated invariant.
    """

    def __init__(self, key: str, message: Optional[str] = None) -> None:
        self.key = key
        super().__init__(key if message is None else f"{key}: {message}")


def render(filename: str, *fields: Union[int, float, str]) -> str:
    """Render out an individual template.

    This basically just reads in a
    template file, and applies ``.format()`` on the fields.

    Parameters
    ----------
    filename : str
        The file that contains the template.  Will automagically prepend the
        templates directory before opening
    fields : list
        Fields to be rendered out in the template

    Returns
    -------
    str
        The fully rendered out file.
    """
    this_dir = os.path.dirname(os.path.realpath(__file__))
    with open(os.path.join(this_dir, "templates", filename)) as file_open:
        return file_open.read().format(*fields)


def state_columns(d: int, prefix: str = "x") -> List[str]:
    """Column names for a ``d``-dimensional state, ``x1`` through ``xd``.

    Parameters
    ----------
    d : int
        State dimension
    prefix : str, optional
        Leading letter of each name

    Returns
    -------
    list of str
    """
    return [f"{prefix}{k + 1}" for k in range(d)]


def format_tag(value: float) -> str:
    """Short, file-name friendly rendering of a scale parameter."""
    return f"{value:g}"
