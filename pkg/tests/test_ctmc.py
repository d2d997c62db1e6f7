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
Testing out the switching chain
"""

import logging
import sys

import numpy as np
import pytest
from pytest import raises
from switchdiff.base import InvalidGenerator, InvalidSpan, IrreducibilityError
from switchdiff.ctmc import (
    Generator,
    SwitchingPath,
    occupation_fractions,
    sample_path,
    stationary_distribution,
)
from switchdiff.streams import Stream

logging.basicConfig(stream=sys.stdout, level=logging.DEBUG)


@pytest.mark.parametrize(
    "q, expected",
    [
        ([[-1.0, 1.0], [1.0, -1.0]], [0.5, 0.5]),
        ([[-2.0, 2.0], [3.0, -3.0]], [0.6, 0.4]),
        ([[-1.0, 1.0, 0.0], [0.0, -1.0, 1.0], [1.0, 0.0, -1.0]], [1 / 3, 1 / 3, 1 / 3]),
        ([[0.0]], [1.0]),
    ],
)
def test_stationary_distribution(q, expected):
    nu = stationary_distribution(q)
    np.testing.assert_allclose(nu.nu, expected, atol=1e-12)
    assert abs(nu.nu.sum() - 1.0) < 1e-12
    np.testing.assert_allclose(nu.nu @ np.array(q), 0.0, atol=1e-12)


def test_stationary_distribution_accepts_generator(two_state):
    nu = stationary_distribution(two_state)
    assert nu.m0 == 2
    assert nu[1] == pytest.approx(0.5)


def test_reducible_generator():
    with raises(IrreducibilityError):
        Generator([[-1.0, 1.0], [0.0, 0.0]])
    with raises(IrreducibilityError):
        Generator([[-1.0, 1.0, 0.0, 0.0], [1.0, -1.0, 0.0, 0.0], [0.0, 0.0, -1.0, 1.0], [0.0, 0.0, 1.0, -1.0]])


@pytest.mark.parametrize(
    "q",
    [
        [[-1.0, 2.0], [1.0, -1.0]],
        [[1.0, -1.0], [1.0, -1.0]],
        [[-1.0, 1.0, 0.0], [1.0, -1.0, 0.0]],
        [[-np.inf, np.inf], [1.0, -1.0]],
    ],
)
def test_invalid_generator(q):
    with raises(InvalidGenerator):
        Generator(q)


def test_invalid_generator_is_value_error():
    with raises(ValueError):
        Generator([[-1.0, 2.0], [1.0, -1.0]])


def test_generator_equality(two_state):
    assert two_state == Generator([[-1, 1], [1, -1]])
    assert two_state != Generator([[-2, 2], [1, -1]])
    assert hash(two_state) == hash(Generator([[-1, 1], [1, -1]]))


def test_embedded_chain():
    gen = Generator([[-2.0, 2.0], [3.0, -3.0]])
    np.testing.assert_array_equal(gen.embedded_chain(), [[0.0, 1.0], [1.0, 0.0]])
    gen = Generator([[-2.0, 1.0, 1.0], [0.0, -1.0, 1.0], [4.0, 0.0, -4.0]])
    np.testing.assert_allclose(
        gen.embedded_chain(), [[0.0, 0.5, 0.5], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]
    )


def test_single_state_has_no_jumps(single_state):
    path = sample_path(single_state, 0.01, 0, 0.0, 100.0, Stream(0).generator("chain"))
    assert path.jumps == 0
    assert path.regime_at(50.0) == 0


def test_sample_path_is_reproducible(two_state):
    a = sample_path(two_state, 0.1, 0, 0.0, 10.0, Stream(3).generator("chain"))
    b = sample_path(two_state, 0.1, 0, 0.0, 10.0, Stream(3).generator("chain"))
    np.testing.assert_array_equal(a.jump_times, b.jump_times)
    np.testing.assert_array_equal(a.states, b.states)


def test_sample_path_alternates(two_state):
    path = sample_path(two_state, 0.1, 1, 2.0, 12.0, Stream(0).generator("chain"))
    assert path.states[0] == 1
    assert np.all(path.states[1:] != path.states[:-1])
    assert np.all(path.jump_times > 2.0)
    assert np.all(path.jump_times <= 12.0)


def test_empty_span(two_state):
    with raises(InvalidSpan):
        sample_path(two_state, 0.1, 0, 1.0, 1.0, Stream(0).generator("chain"))


def test_bad_eps_or_state(two_state):
    with raises(ValueError):
        sample_path(two_state, 0.0, 0, 0.0, 1.0, Stream(0).generator("chain"))
    with raises(ValueError):
        sample_path(two_state, 0.1, 2, 0.0, 1.0, Stream(0).generator("chain"))


def test_mean_jump_count(two_state):
    # jumps form a Poisson process of rate 1 / eps
    root = Stream(11)
    counts = np.array(
        [
            sample_path(two_state, 0.01, 0, 0.0, 100.0, root.split(k).generator("chain")).jumps
            for k in range(200)
        ]
    )
    assert abs(counts.mean() - 1e4) < 4 * np.sqrt(1e4 / 200)


def test_occupation_of_long_path(two_state):
    path = sample_path(two_state, 0.01, 0, 0.0, 1000.0, Stream(5).generator("chain"))
    fractions = occupation_fractions(path)
    assert abs(fractions[1] - 0.5) < 0.01
    assert abs(fractions.sum() - 1.0) < 1e-12


def test_occupation_fractions_by_hand():
    path = SwitchingPath(0.0, 2.0, np.array([1.0]), np.array([0, 1]), 2)
    np.testing.assert_allclose(occupation_fractions(path), [0.5, 0.5])
    path = SwitchingPath(0.0, 5.0, np.array([]), np.array([0]), 1)
    np.testing.assert_allclose(occupation_fractions(path), [1.0])
    np.testing.assert_allclose(occupation_fractions(path, m0=3), [1.0, 0.0, 0.0])


def test_regime_is_right_continuous():
    path = SwitchingPath(0.0, 3.0, np.array([1.0, 2.0]), np.array([0, 1, 0]), 2)
    assert path.regime_at(0.999) == 0
    assert path.regime_at(1.0) == 1
    assert path.regime_at(2.0) == 0
    np.testing.assert_array_equal(path.regime_at(np.array([0.5, 1.5, 2.5])), [0, 1, 0])


def test_invalid_switching_path():
    with raises(InvalidSpan):
        SwitchingPath(1.0, 1.0, np.array([]), np.array([0]), 1)
    with raises(ValueError):
        SwitchingPath(0.0, 2.0, np.array([1.0]), np.array([0, 0]), 2)
    with raises(ValueError):
        SwitchingPath(0.0, 2.0, np.array([3.0]), np.array([0, 1]), 2)
    with raises(ValueError):
        SwitchingPath(0.0, 2.0, np.array([1.0]), np.array([0]), 2)


def test_faster_chain_jumps_twice_as_often(two_state):
    root = Stream(21)
    slow = np.array(
        [sample_path(two_state, 0.02, 0, 0.0, 100.0, root.split("slow", k).generator("chain")).jumps for k in range(200)]
    )
    fast = np.array(
        [sample_path(two_state, 0.01, 0, 0.0, 100.0, root.split("fast", k).generator("chain")).jumps for k in range(200)]
    )
    se = np.sqrt(fast.var(ddof=1) / 200 + 4 * slow.var(ddof=1) / 200)
    assert abs(fast.mean() - 2 * slow.mean()) < 3 * se


@pytest.mark.integration
def test_occupation_settles_with_horizon(two_state):
    root = Stream(8)
    medians = []
    for horizon in (1e2, 1e3, 1e4):
        gaps = [
            abs(
                occupation_fractions(
                    sample_path(two_state, 1.0, 0, 0.0, horizon, root.split(int(horizon), k).generator("chain"))
                )[0]
                - 0.5
            )
            for k in range(50)
        ]
        medians.append(np.median(gaps))
    assert medians[0] > medians[1] > medians[2]
