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
Testing out the random streams
"""

import logging
import sys
import zlib

import numpy as np
from pytest import raises
from switchdiff.streams import Stream

logging.basicConfig(stream=sys.stdout, level=logging.DEBUG)


def test_same_key_same_numbers():
    first = Stream(7).split("ensemble", 3).generator("noise").standard_normal(10)
    second = Stream(7).split("ensemble", 3).generator("noise").standard_normal(10)
    np.testing.assert_array_equal(first, second)


def test_purposes_are_distinct():
    stream = Stream(7).split(1)
    chain = stream.generator("chain").random(10)
    noise = stream.generator("noise").random(10)
    assert not np.array_equal(chain, noise)


def test_split_keys_are_distinct():
    root = Stream(0)
    a = root.split("converge", 0).generator().random(5)
    b = root.split("converge", 1).generator().random(5)
    c = root.split("exit", 0).generator().random(5)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_seeds_are_distinct():
    a = Stream(1).generator().random(5)
    b = Stream(2).generator().random(5)
    assert not np.array_equal(a, b)


def test_text_keys_hash_to_words():
    assert Stream(1).split("x") == Stream(1).split(zlib.crc32(b"x"))
    assert Stream(1).split("a", 2).key == (zlib.crc32(b"a"), 2)


def test_split_is_cumulative():
    assert Stream(5).split("a").split(1) == Stream(5).split("a", 1)


def test_negative_values():
    with raises(ValueError, match="seed"):
        Stream(-1)
    with raises(ValueError, match="non-negative"):
        Stream(1).split(-3)
