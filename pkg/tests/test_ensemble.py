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
Testing out replicate ensembles, deviation probabilities and exit times
"""

import logging
import math
import pickle
import sys

import numpy as np
import pytest
from pytest import raises
from switchdiff.base import BlowupError, InvalidBudget
from switchdiff.ensemble import (
    ExitTimeStats,
    exit_time_experiment,
    map_replicates,
    proportion_interval,
    simulate_ensemble,
    sup_deviation_probability,
)
from switchdiff.hybrid_sde import exit_budget, simulate
from switchdiff.streams import Stream

logging.basicConfig(stream=sys.stdout, level=logging.DEBUG)


def _fails_at(bad):
    def _body(k):
        if k in bad:
            raise BlowupError(0.5)
        return k * k

    return _body


def test_map_replicates_local():
    assert map_replicates(lambda k: 2 * k, 5) == [0, 2, 4, 6, 8]


def test_map_replicates_fugue():
    assert map_replicates(lambda k: 2 * k, 7, parallelism=3) == [0, 2, 4, 6, 8, 10, 12]


@pytest.mark.parametrize("parallelism", [None, 2])
def test_map_replicates_reports_first_failure(parallelism):
    with raises(BlowupError) as err:
        map_replicates(_fails_at({4, 2}), 6, parallelism=parallelism)
    assert err.value.replicate == 2
    assert err.value.time == 0.5


def test_map_replicates_needs_work():
    with raises(ValueError):
        map_replicates(lambda k: k, 0)


def test_blowup_error_pickles():
    error = pickle.loads(pickle.dumps(BlowupError(1.25, replicate=3)))
    assert error.time == 1.25
    assert error.replicate == 3
    assert "replicate 3" in str(error)


def test_single_replicate_summary(hopf_model):
    summary = simulate_ensemble(hopf_model, 0.1, 0.1, [1.0, 0.0], 0, 2.0, 0.1, 1, base_seed=3, keep=True)
    single = simulate(hopf_model, 0.1, 0.1, [1.0, 0.0], 0, 2.0, 0.1, Stream(3).split("ensemble", 0))
    np.testing.assert_array_equal(summary.mean, single.states)
    np.testing.assert_allclose(summary.variance, 0.0, atol=1e-12)
    assert summary.n == 1
    assert len(summary.trajectories) == 1


def test_replicates_can_be_replayed(hopf_model):
    summary = simulate_ensemble(hopf_model, 0.1, 0.1, [1.0, 0.0], 0, 2.0, 0.1, 4, base_seed=3, keep=True)
    for traj in summary.trajectories:
        again = simulate(
            hopf_model, 0.1, 0.1, [1.0, 0.0], 0, 2.0, 0.1, Stream(traj.seed, traj.stream_key)
        )
        np.testing.assert_array_equal(again.states, traj.states)
        np.testing.assert_array_equal(again.regimes, traj.regimes)
    assert len({traj.stream_key for traj in summary.trajectories}) == 4


def test_martingale_mean(brownian):
    n, T, delta = 200, 10.0, 0.01
    summary = simulate_ensemble(brownian, 1.0, delta, [0.0], 0, T, 0.1, n, base_seed=1)
    assert summary.trajectories is None
    assert np.all(np.abs(summary.mean[:, 0]) < 4 * math.sqrt(delta * T / n))
    assert summary.variance[-1, 0] == pytest.approx(delta * T, rel=0.4)


def test_ensemble_is_independent_of_partitioning(hopf_model):
    local = simulate_ensemble(hopf_model, 0.05, 0.05, [1.0, 0.0], 0, 1.0, 0.05, 6, base_seed=9)
    spread = simulate_ensemble(
        hopf_model, 0.05, 0.05, [1.0, 0.0], 0, 1.0, 0.05, 6, base_seed=9, parallelism=3
    )
    np.testing.assert_array_equal(local.mean, spread.mean)
    np.testing.assert_array_equal(local.second_moment, spread.second_moment)


def test_proportion_interval():
    estimate = proportion_interval(50, 100)
    assert estimate.p_hat == 0.5
    assert estimate.ci_low == pytest.approx(0.5 - 1.959964 * 0.05, abs=1e-6)
    assert estimate.ci_high == pytest.approx(0.5 + 1.959964 * 0.05, abs=1e-6)
    edge = proportion_interval(0, 10)
    assert (edge.ci_low, edge.ci_high) == (0.0, 0.0)


def test_deviation_of_deterministic_path(ou_model):
    estimate = sup_deviation_probability(ou_model, 1.0, 0.0, [1.0], 0, 0.01, 1.0, 0.01, 5)
    assert estimate.p_hat == 0.0
    assert estimate.n == 5


def test_deviation_beyond_reach(hopf_model):
    estimate = sup_deviation_probability(
        hopf_model, 0.1, 0.01, [1.0, 0.0], 0, 100.0, 2.0, 0.01, 20, base_seed=4
    )
    assert estimate.p_hat == 0.0


def test_deviation_certain(brownian):
    estimate = sup_deviation_probability(brownian, 1.0, 1.0, [0.0], 0, 1e-6, 1.0, 0.1, 10)
    assert estimate.p_hat == 1.0


def test_frozen_dynamics_never_exit(frozen):
    stats = exit_time_experiment(frozen, 1.0, 0.1, [0.0, 0.0], 1.0, 1.0, 0.1, 5)
    assert stats.fraction_exited == 0.0
    assert np.all(stats.censored)
    np.testing.assert_array_equal(stats.samples, 1.0)


def test_brownian_exit(brownian):
    # E tau = radius^2 / delta = 25
    stats = exit_time_experiment(brownian, 1.0, 0.04, [0.0], 1.0, 100.0, 0.05, 200, base_seed=2)
    assert stats.fraction_exited > 0.5
    exited = stats.samples[~stats.censored]
    assert np.all(exited <= 100.0)
    assert 15.0 < exited.mean() < 35.0


def test_exit_frame_and_report(hopf_model):
    stats = exit_time_experiment(hopf_model, 0.1, 0.5, [0.0, 0.0], 0.3, 5.0, 0.01, 4, base_seed=7)
    frame = stats.to_frame()
    assert list(frame.columns) == ["replicate", "exit_time", "censored"]
    assert frame.shape == (4, 3)
    text = stats.report()
    assert "Exit Times" in text
    assert "Replicates: 4" in text


def test_exit_is_reproducible(hopf_model):
    a = exit_time_experiment(hopf_model, 0.1, 0.5, [0.0, 0.0], 0.3, 5.0, 0.01, 4, base_seed=7)
    b = exit_time_experiment(
        hopf_model, 0.1, 0.5, [0.0, 0.0], 0.3, 5.0, 0.01, 4, base_seed=7, parallelism=2
    )
    np.testing.assert_array_equal(a.samples, b.samples)


def test_exit_budget_checks(brownian):
    with raises(InvalidBudget):
        exit_time_experiment(brownian, 1.0, 0.04, [0.0], 1.0, 1e7, 0.01, 1)
    with raises(InvalidBudget):
        exit_time_experiment(brownian, 1.0, 0.04, [0.0], 1.0, 0.0, 0.01, 1)
    with raises(InvalidBudget):
        exit_time_experiment(brownian, 1.0, 0.04, [0.0], 1.0, math.inf, 0.01, 1)


def test_exit_stats_validation():
    with raises(ValueError):
        ExitTimeStats(np.zeros(1), 1.0, np.array([2.0]), np.array([False]), 1.0)


@pytest.mark.integration
def test_holling_deviation_shrinks(holling):
    estimates = [
        sup_deviation_probability(
            holling.model, eps, delta, [1.0, 1.0], 0, 0.5, 10.0, 0.01, 500, base_seed=1
        )
        for eps, delta in holling.schedule.pairs()
    ]
    p_hats = [e.p_hat for e in estimates]
    # one confidence-interval width of slack per step
    for before, after in zip(estimates, estimates[1:]):
        assert after.p_hat <= before.p_hat + (before.ci_high - before.ci_low)
    assert p_hats[-1] <= p_hats[0]
    assert p_hats[-1] < 0.1


@pytest.mark.integration
def test_holling_equilibrium_is_left(holling):
    budget = exit_budget("case1", 0.01, 0.01)
    stats = exit_time_experiment(
        holling.model, 0.01, 0.01, holling.reference_equilibrium, 0.2, budget, 0.01, 200,
        base_seed=0,
    )
    assert stats.fraction_exited > 0.5
    assert np.all(stats.samples[~stats.censored] <= budget)
