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

"""Reproducible random streams keyed by seed, replicate and purpose."""

import logging
import zlib
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

LOG = logging.getLogger(__name__)

Key = Union[int, str]


def _word(key: Key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    if key < 0:
        raise ValueError(f"stream keys must be non-negative, got {key}")
    return int(key)


@dataclass(frozen=True)
class Stream:
    """Splittable counter-based random stream.

    A stream is a value: the pair ``(seed, key)`` fully determines every
    number drawn from it.  Child streams are derived with :meth:`split`, and
    a numpy ``Generator`` on a Philox bit generator is produced for a named
    purpose with :meth:`generator`.  Distinct keys give statistically
    independent streams, so replicates can be evaluated in any order.

    Parameters
    ----------
    seed : int
        Top-level unsigned seed
    key : tuple of int, optional
        Path of split keys below the seed
    """

    seed: int
    key: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")
        object.__setattr__(self, "key", tuple(int(k) for k in self.key))

    def split(self, *keys: Key) -> "Stream":
        """Derive a child stream; text keys are hashed to 32-bit words."""
        return Stream(self.seed, self.key + tuple(_word(k) for k in keys))

    def generator(self, purpose: str = "noise") -> np.random.Generator:
        """Generator for one purpose, e.g. ``chain``, ``noise`` or ``init``."""
        seq = np.random.SeedSequence(
            entropy=self.seed, spawn_key=self.key + (_word(purpose),)
        )
        return np.random.Generator(np.random.Philox(seq))
