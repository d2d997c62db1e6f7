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


import numpy as np
import pytest
from switchdiff.ctmc import Generator
from switchdiff.hybrid_sde import HybridModel, ornstein_uhlenbeck, switching_hopf
from switchdiff.predprey import holling_example


@pytest.fixture
def two_state():
    return Generator(np.array([[-1.0, 1.0], [1.0, -1.0]]))


@pytest.fixture
def single_state():
    return Generator(np.zeros((1, 1)))


@pytest.fixture
def ou_model():
    return ornstein_uhlenbeck(theta=1.0, sigma=1.0)


@pytest.fixture
def brownian(single_state):
    noise = np.ones((1, 1))
    return HybridModel(
        d=1,
        m_w=1,
        generator=single_state,
        drift=lambda x, i: np.zeros(1),
        diffusion=lambda x, i: noise,
        name="brownian",
    )


@pytest.fixture
def frozen(single_state):
    return HybridModel(
        d=2,
        m_w=2,
        generator=single_state,
        drift=lambda x, i: np.zeros(2),
        diffusion=lambda x, i: np.zeros((2, 2)),
        name="frozen",
    )


@pytest.fixture
def hopf_model():
    return switching_hopf()


@pytest.fixture(scope="session")
def holling():
    return holling_example()
