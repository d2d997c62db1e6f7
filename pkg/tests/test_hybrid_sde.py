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
Testing out the hybrid SDE simulator
"""

import logging
import math
import sys

import numpy as np
import pytest
from pytest import raises
from scipy.integrate import solve_ivp
from switchdiff.base import (
    BlowupError,
    InvalidBudget,
    InvalidModel,
    InvalidSpan,
    InvalidStep,
    ScheduleError,
)
from switchdiff.ctmc import Generator
from switchdiff.hybrid_sde import (
    HybridModel,
    ScaleSchedule,
    exit_budget,
    nondegeneracy,
    simulate,
    time_grid,
)
from switchdiff.streams import Stream

logging.basicConfig(stream=sys.stdout, level=logging.DEBUG)


def _decay(generator, rates=(1.0, 2.0)):
    return HybridModel(
        d=1,
        m_w=1,
        generator=generator,
        drift=lambda x, i: -rates[i] * x - x**3,
        diffusion=lambda x, i: np.zeros((1, 1)),
        name="decay",
    )


def test_time_grid():
    np.testing.assert_allclose(time_grid(1.0, 0.3), [0.0, 0.3, 0.6, 0.9, 1.0])
    grid = time_grid(1.0, 0.1)
    assert grid.shape == (11,)
    assert grid[-1] == 1.0
    np.testing.assert_allclose(time_grid(2.0, 0.5, t0=1.0), [1.0, 1.5, 2.0, 2.5, 3.0])


def test_time_grid_errors():
    with raises(InvalidSpan):
        time_grid(0.0, 0.1)
    with raises(InvalidStep):
        time_grid(1.0, 0.0)
    with raises(InvalidStep):
        time_grid(1.0, 2.0)


def test_linear_ode_euler(single_state):
    model = HybridModel(
        d=1,
        m_w=1,
        generator=single_state,
        drift=lambda x, i: -x,
        diffusion=lambda x, i: np.zeros((1, 1)),
    )
    traj = simulate(model, 1.0, 0.0, [1.0], 0, 1.0, 1e-4, Stream(0))
    assert traj.times[-1] == 1.0
    assert abs(traj.final[0] - math.exp(-1.0)) < 5e-4


def test_brownian_variance(brownian):
    root = Stream(2024)
    finals = np.array(
        [simulate(brownian, 1.0, 0.04, [0.0], 0, 1.0, 0.1, root.split(k)).final[0] for k in range(10_000)]
    )
    se = 0.04 * math.sqrt(2.0 / (finals.size - 1))
    assert abs(finals.var(ddof=1) - 0.04) < 4 * se


@pytest.mark.integration
def test_ornstein_uhlenbeck_law(ou_model):
    # X(1) ~ N(exp(-1), delta (1 - exp(-2)) / 2) from X(0) = 1
    n, delta = 10_000, 0.04
    root = Stream(77)
    finals = np.array(
        [simulate(ou_model, 1.0, delta, [1.0], 0, 1.0, 0.002, root.split(k)).final[0] for k in range(n)]
    )
    mean = math.exp(-1.0)
    var = 0.5 * delta * (1.0 - math.exp(-2.0))
    assert abs(finals.mean() - mean) < 3 * math.sqrt(var / n)
    assert abs(finals.var(ddof=1) - var) < 3 * var * math.sqrt(2.0 / (n - 1))


def test_switching_ode_against_oracle(two_state):
    model = _decay(two_state)
    stream = Stream(8)
    errors = []
    for dt in (0.01, 0.005):
        traj = simulate(model, 1.0, 0.0, [1.0], 0, 5.0, dt, stream, keep_path=True)
        path = traj.path
        bounds = np.concatenate([[0.0], path.jump_times, [5.0]])
        y = np.array([1.0])
        for regime, (a, b) in zip(path.states, zip(bounds[:-1], bounds[1:])):
            if b > a:
                sol = solve_ivp(
                    lambda t, x, i=int(regime): -(1.0, 2.0)[i] * x - x**3,
                    (a, b),
                    y,
                    method="DOP853",
                    rtol=1e-12,
                    atol=1e-14,
                )
                y = sol.y[:, -1]
        errors.append(abs(traj.final[0] - y[0]))
    assert errors[0] < 0.05
    assert 1.8 < errors[0] / errors[1] < 2.5


def test_chain_does_not_depend_on_dt(two_state):
    model = _decay(two_state)
    coarse = simulate(model, 0.5, 0.0, [1.0], 0, 5.0, 0.1, Stream(1), keep_path=True)
    fine = simulate(model, 0.5, 0.0, [1.0], 0, 5.0, 0.01, Stream(1), keep_path=True)
    np.testing.assert_array_equal(coarse.path.jump_times, fine.path.jump_times)


def test_regimes_are_right_continuous(hopf_model):
    traj = simulate(hopf_model, 0.05, 0.01, [1.0, 0.0], 0, 5.0, 0.01, Stream(3), keep_path=True)
    np.testing.assert_array_equal(traj.regimes, traj.path.regime_at(traj.times))
    assert traj.path.m0 == 2


def test_geometric_brownian_motion(single_state):
    model = HybridModel(
        d=1,
        m_w=1,
        generator=single_state,
        drift=lambda x, i: np.zeros(1),
        diffusion=lambda x, i: x.reshape(1, 1),
        positive=(True,),
        name="gbm",
    )
    root = Stream(6)
    finals = np.array(
        [simulate(model, 1.0, 0.25, [1.0], 0, 1.0, 0.25, root.split(k)).final[0] for k in range(2000)]
    )
    assert np.all(finals > 0)
    # log X(1) ~ N(-delta / 2, delta)
    assert abs(np.log(finals).mean() + 0.125) < 4 * 0.5 / math.sqrt(2000)


def test_determinism(hopf_model):
    a = simulate(hopf_model, 0.1, 0.1, [1.0, 0.0], 0, 10.0, 0.01, Stream(4).split("a"))
    b = simulate(hopf_model, 0.1, 0.1, [1.0, 0.0], 0, 10.0, 0.01, Stream(4).split("a"))
    c = simulate(hopf_model, 0.1, 0.1, [1.0, 0.0], 0, 10.0, 0.01, Stream(5).split("a"))
    np.testing.assert_array_equal(a.states, b.states)
    np.testing.assert_array_equal(a.regimes, b.regimes)
    assert not np.array_equal(a.states, c.states)
    assert a.seed == 4
    assert a.stream_key == Stream(4).split("a").key
    again = simulate(hopf_model, 0.1, 0.1, [1.0, 0.0], 0, 10.0, 0.01, Stream(a.seed, a.stream_key))
    np.testing.assert_array_equal(again.states, a.states)


def test_observer_sees_every_substep(hopf_model):
    seen = []

    def _observe(t, h, x, r):
        assert t.shape == h.shape == r.shape
        assert x.shape == (t.shape[0], 2)
        seen.append((t, h))

    simulate(hopf_model, 0.01, 0.01, [1.0, 0.0], 0, 50.0, 0.01, Stream(0), observer=_observe)
    steps = np.concatenate([h for _, h in seen])
    starts = np.concatenate([t for t, _ in seen])
    assert len(seen) > 1
    assert steps.sum() == pytest.approx(50.0, abs=1e-9)
    assert np.all(steps > 0)
    assert np.all(np.diff(starts) > 0)


def test_stop_predicate(brownian):
    traj = simulate(
        brownian, 1.0, 1.0, [0.0], 0, 100.0, 0.01, Stream(9), stop=lambda x: abs(x[0]) > 0.5
    )
    assert traj.stopped_at is not None
    assert traj.times[-1] == traj.stopped_at
    assert abs(traj.final[0]) > 0.5
    assert np.all(np.abs(traj.states[:-1, 0]) <= 0.5)


def test_stopped_path_matches_full_path(single_state):
    climb = HybridModel(
        d=1,
        m_w=1,
        generator=single_state,
        drift=lambda x, i: np.ones(1),
        diffusion=lambda x, i: np.zeros((1, 1)),
        name="climb",
    )
    full = simulate(climb, 1.0, 0.0, [0.0], 0, 60.0, 0.01, Stream(2))
    stopped = simulate(climb, 1.0, 0.0, [0.0], 0, 60.0, 0.01, Stream(2), stop=lambda x: x[0] > 50.0)
    k = stopped.times.shape[0]
    # more samples than one buffer block
    assert k > 4096
    assert stopped.stopped_at == pytest.approx(50.0, abs=0.011)
    np.testing.assert_array_equal(stopped.times, full.times[:k])
    np.testing.assert_array_equal(stopped.states, full.states[:k])
    np.testing.assert_array_equal(stopped.regimes, full.regimes[:k])


def test_stop_on_long_horizon(brownian):
    traj = simulate(
        brownian, 1.0, 1.0, [0.0], 0, 1e6, 0.01, Stream(9), stop=lambda x: abs(x[0]) > 0.5
    )
    assert traj.stopped_at is not None
    assert traj.stopped_at < 100.0
    np.testing.assert_allclose(traj.times[:-1], 0.01 * np.arange(traj.times.shape[0] - 1))


def test_blowup(single_state):
    model = HybridModel(
        d=1,
        m_w=1,
        generator=single_state,
        drift=lambda x, i: x**2,
        diffusion=lambda x, i: np.zeros((1, 1)),
    )
    with raises(BlowupError) as err:
        simulate(model, 1.0, 0.0, [1.0], 0, 10.0, 0.01, Stream(0))
    assert 0.5 < err.value.time < 2.0
    assert isinstance(err.value, ArithmeticError)


def test_invalid_inputs(hopf_model):
    with raises(InvalidStep):
        simulate(hopf_model, 0.1, 0.1, [1.0, 0.0], 0, 1.0, 0.0, Stream(0))
    with raises(InvalidSpan):
        simulate(hopf_model, 0.1, 0.1, [1.0, 0.0], 0, 0.0, 0.01, Stream(0))
    with raises(InvalidModel):
        simulate(hopf_model, 0.1, 0.1, [1.0], 0, 1.0, 0.01, Stream(0))
    with raises(ValueError):
        simulate(hopf_model, 0.1, -0.1, [1.0, 0.0], 0, 1.0, 0.01, Stream(0))


def test_positive_start_required(holling):
    with raises(InvalidModel, match="positive"):
        simulate(holling.model, 0.1, 0.1, [1.0, 0.0], 0, 1.0, 0.01, Stream(0))


def test_model_check(single_state):
    with raises(InvalidModel, match="shape"):
        HybridModel(
            d=2,
            m_w=1,
            generator=single_state,
            drift=lambda x, i: np.zeros(3),
            diffusion=lambda x, i: np.zeros((2, 1)),
        ).check([0.0, 0.0])
    with raises(InvalidModel):
        HybridModel(
            d=2,
            m_w=1,
            generator=single_state,
            drift=lambda x, i: x,
            diffusion=lambda x, i: np.zeros((2, 1)),
            positive=(True,),
        )


def test_trajectory_frame(hopf_model, tmp_path):
    traj = simulate(hopf_model, 0.1, 0.1, [1.0, 0.0], 0, 1.0, 0.1, Stream(0))
    frame = traj.to_frame()
    assert list(frame.columns) == ["t", "x1", "x2", "regime"]
    assert frame.shape == (11, 4)
    traj.to_csv(tmp_path / "trajectory.csv")
    assert (tmp_path / "trajectory.csv").read_text().startswith("t,x1,x2,regime\n0,1,0,0\n")


@pytest.mark.parametrize(
    "case_id, expected",
    [
        ("case1", [(0.1, 0.2), (0.01, 0.02)]),
        ("case2", [(0.1, 0.1**2), (0.01, 0.01**2)]),
        ("case3", [(0.1, 0.25), (0.01, 0.1)]),
    ],
)
def test_schedule_pairs(case_id, expected):
    schedule = ScaleSchedule(case_id, (0.1, 0.01), l=2.0)
    for (eps, delta), (e, d) in zip(schedule.pairs(), expected):
        assert eps == e
        assert delta == pytest.approx(d)


def test_schedule_errors():
    with raises(ScheduleError):
        ScaleSchedule("case4", (0.1,))
    with raises(ScheduleError):
        ScaleSchedule("case1", (0.01, 0.1))
    with raises(ScheduleError):
        ScaleSchedule("case1", ())
    with raises(ScheduleError):
        ScaleSchedule("case1", (0.1,), l=0.0)


def test_schedule_needs_decreasing_delta():
    with raises(ScheduleError):
        ScaleSchedule("case3", (1.0, 0.5))
    with raises(ScheduleError):
        ScaleSchedule("case3", (0.1, 0.01), delta_cap=0.05)
    capped = ScaleSchedule("case3", (1.0, 0.01))
    assert [delta for _, delta in capped.pairs()] == pytest.approx([0.25, 0.1])


def test_exit_budget():
    assert exit_budget("case2", 0.01, 1e-4) == pytest.approx(10 * math.e)
    assert exit_budget("case1", 0.5, 0.01) == pytest.approx(10 * math.e)
    assert exit_budget("case3", 0.01, 0.1, H=2.0, Delta=0.1) == pytest.approx(2 * math.e)
    with raises(InvalidBudget):
        exit_budget("case1", 1e-6, 1e-6)
    with raises(InvalidBudget):
        exit_budget("case1", 0.1, 0.0)


def test_nondegeneracy_at_hopf_origin(hopf_model):
    check = nondegeneracy(hopf_model, [0.0, 0.0])
    assert check.drift_regimes == ()
    assert check.diffusion_regimes == (0, 1)
    assert check.admits("case1")
    assert not check.admits("case2")
    assert check.admits("case3")


def test_generator_is_coerced():
    model = HybridModel(
        d=1,
        m_w=1,
        generator=[[-1.0, 1.0], [1.0, -1.0]],
        drift=lambda x, i: -x,
        diffusion=lambda x, i: np.ones((1, 1)),
    )
    assert model.generator == Generator([[-1.0, 1.0], [1.0, -1.0]])
    assert model.m0 == 2
    assert model.positive == (False,)
