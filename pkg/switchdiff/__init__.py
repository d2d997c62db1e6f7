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

"""SwitchDiff simulates multi-scale switching diffusions.

A diffusion whose coefficients follow a fast continuous-time Markov chain is
compared with its averaged ordinary differential equation: trajectories,
limit cycles, empirical invariant measures and their bounded-Lipschitz
distance to the cycle's occupation measure.  A two-regime Holling type II
predator-prey system ships as the worked example.
"""

__version__ = "0.1.0"

from switchdiff.averaging import (
    CriticalPoint,
    CycleOptions,
    LimitCycle,
    VectorField,
    averaged_field,
    cycle_average,
    cycle_measure,
    detect_limit_cycle,
    find_critical_points,
    integrate_ode,
)
from switchdiff.base import (
    BlowupError,
    ConfigError,
    ConvergesToEquilibrium,
    GridCoverageError,
    InvalidGenerator,
    InvalidModel,
    IrreducibilityError,
    NoCycleError,
    SwitchDiffError,
)
from switchdiff.ctmc import (
    Generator,
    StationaryDist,
    SwitchingPath,
    occupation_fractions,
    sample_path,
    stationary_distribution,
)
from switchdiff.ensemble import (
    exit_time_experiment,
    simulate_ensemble,
    sup_deviation_probability,
)
from switchdiff.grid import GridMeasure, GridSpec
from switchdiff.hybrid_sde import (
    HybridModel,
    ScaleSchedule,
    SimulationConfig,
    Trajectory,
    exit_budget,
    simulate,
)
from switchdiff.measures import (
    Observable,
    bl_distance,
    convergence_sweep,
    empirical_measure,
    integrate_test_function,
)
from switchdiff.predprey import (
    BeddingtonDeAngelis,
    ConstantResponse,
    HollingII,
    PredPreyParams,
    averaged_predprey,
    build_model,
    holling_example,
    moment_diagnostics,
)
from switchdiff.streams import Stream

__all__ = [
    "BeddingtonDeAngelis",
    "BlowupError",
    "ConfigError",
    "ConstantResponse",
    "ConvergesToEquilibrium",
    "CriticalPoint",
    "CycleOptions",
    "Generator",
    "GridCoverageError",
    "GridMeasure",
    "GridSpec",
    "HollingII",
    "HybridModel",
    "InvalidGenerator",
    "InvalidModel",
    "IrreducibilityError",
    "LimitCycle",
    "NoCycleError",
    "Observable",
    "PredPreyParams",
    "ScaleSchedule",
    "SimulationConfig",
    "StationaryDist",
    "Stream",
    "SwitchDiffError",
    "SwitchingPath",
    "Trajectory",
    "VectorField",
    "averaged_field",
    "averaged_predprey",
    "bl_distance",
    "build_model",
    "convergence_sweep",
    "cycle_average",
    "cycle_measure",
    "detect_limit_cycle",
    "empirical_measure",
    "exit_budget",
    "exit_time_experiment",
    "find_critical_points",
    "holling_example",
    "integrate_ode",
    "integrate_test_function",
    "moment_diagnostics",
    "occupation_fractions",
    "sample_path",
    "simulate",
    "simulate_ensemble",
    "stationary_distribution",
    "sup_deviation_probability",
]
