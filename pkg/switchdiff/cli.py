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
Configuration-driven command line.

One JSON document describes a scenario: the model (a builtin name or a
predator-prey parameter block), the switching generator, the scale schedule,
the simulation settings and the experiment sections.  Defaults come from the
named builtin and then from :data:`DEFAULTS`; the fully defaulted document is
kept on the :class:`Scenario` and echoed back by ``reproduce-example``.
"""

import argparse
import copy
import json
import logging
import os
import sys
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from ordered_set import OrderedSet

from switchdiff.averaging import (
    CriticalPoint,
    CycleOptions,
    LimitCycle,
    VectorField,
    averaged_field,
    cycle_measure,
    detect_limit_cycle,
    find_critical_points,
    hopf_field,
    integrate_ode,
)
from switchdiff.base import ConfigError, SwitchDiffError, format_tag, render, state_columns
from switchdiff.ctmc import Generator, as_generator, stationary_distribution
from switchdiff.ensemble import exit_time_experiment, sup_deviation_probability
from switchdiff.grid import GridSpec, write_measure
from switchdiff.hybrid_sde import (
    CASES,
    HybridModel,
    ScaleSchedule,
    SimulationConfig,
    exit_budget,
    simulate,
    switching_hopf,
)
from switchdiff.measures import (
    Observable,
    convergence_sweep,
    default_burn_in,
    empirical_measure,
    observable,
)
from switchdiff.predprey import (
    PredPreyParams,
    averaged_predprey,
    build_model,
    holling_example,
    reference_holling_field,
)
from switchdiff.streams import Stream

LOG = logging.getLogger(__name__)

OUTPUT_ENV = "SWITCHDIFF_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "switchdiff-out"

COMMANDS = OrderedSet(
    [
        "simulate",
        "average",
        "cycle",
        "invariant",
        "exit-time",
        "deviation",
        "converge",
        "reproduce-example",
    ]
)

DEFAULTS: Dict[str, Any] = {
    "name": "custom",
    "model": None,
    "generator": None,
    "schedule": {"case": "case1", "l": 1.0, "eps": [0.1, 0.01, 0.001]},
    "simulation": {
        "T": 1000.0,
        "dt": 0.01,
        "burn_in": None,
        "n": 100,
        "seed": 0,
        "x0": None,
        "i0": 0,
    },
    "grid": None,
    "test_functions": None,
    "exit": {"H": 10.0, "Delta": 0.01, "radius": 0.1, "center": None, "n": 100},
    "deviation": {"gamma": 0.5, "T": 10.0, "n": 100},
    "cycle": {
        "transient": 100.0,
        "dt": 0.01,
        "closure_tol": 1e-6,
        "max_time": 1e4,
        "source": "model",
    },
    "figures": {"T": 100.0, "dt": 0.01, "pairs": [[0.01, 0.01], [0.001, 0.001]]},
    "reference": {"field": None, "equilibrium": None},
    "tightness": None,
    "output_dir": None,
}

CYCLE_SOURCES = OrderedSet(["model", "reference"])
REFERENCE_FIELDS: Dict[str, Callable[[], VectorField]] = {
    "holling-nex2": reference_holling_field,
    "hopf": hopf_field,
}


def _hopf_config() -> Dict[str, Any]:
    return {
        "name": "switching-hopf",
        "model": {"switching-hopf": {"omegas": [0.5, 1.5], "sigma": 1.0}},
        "generator": [[-1.0, 1.0], [1.0, -1.0]],
        "schedule": {"case": "case1", "l": 1.0, "eps": [0.1, 0.01]},
        "simulation": {
            "T": 2000.0,
            "dt": 0.01,
            "burn_in": 100.0,
            "n": 100,
            "seed": 0,
            "x0": [1.0, 0.0],
            "i0": 0,
        },
        "test_functions": ["x^2", "y^2", "xy"],
        "exit": {"radius": 0.2, "center": [0.0, 0.0]},
        "reference": {"field": "hopf", "equilibrium": [0.0, 0.0]},
        "tightness": {"lo": [-1.5, -1.5], "hi": [1.5, 1.5]},
    }


BUILTINS: Dict[str, Callable[[], Dict[str, Any]]] = {
    "holling-example": lambda: holling_example().config,
    "switching-hopf": _hopf_config,
}


@contextmanager
def _section(key: str) -> Iterator[None]:
    """Report invalid values inside a config section as :class:`ConfigError`."""
    try:
        yield
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(key, f"{type(exc).__name__}: {exc}") from exc


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Section-wise merge; dict sections merge key by key, anything else replaces."""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict) and key != "model":
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _floats(values: Optional[Sequence[Any]]) -> Optional[Tuple[float, ...]]:
    return None if values is None else tuple(float(v) for v in values)


@dataclass(frozen=True)
class ExitConfig:
    H: float
    Delta: float
    radius: float
    center: Optional[Tuple[float, ...]]
    n: int


@dataclass(frozen=True)
class DeviationConfig:
    gamma: float
    T: float
    n: int


@dataclass(frozen=True)
class FigureConfig:
    T: float
    dt: float
    pairs: Tuple[Tuple[float, float], ...]


@dataclass(frozen=True, eq=False)
class Scenario:
    """Validated scenario.  Two scenarios are equal when their defaulted configs are."""

    config: Dict[str, Any]
    model: HybridModel
    params: Optional[PredPreyParams]
    schedule: ScaleSchedule
    simulation: SimulationConfig
    grid: Optional[GridSpec]
    observables: List[Observable]
    cycle_options: CycleOptions
    cycle_source: str
    exit: ExitConfig
    deviation: DeviationConfig
    figures: FigureConfig
    reference_field: Optional[VectorField]
    reference_equilibrium: Optional[Tuple[float, ...]]
    tight_box: Optional[Tuple[Tuple[float, ...], Tuple[float, ...]]]

    def __eq__(self, other: Any) -> bool:
        return isinstance(other, Scenario) and self.config == other.config

    @property
    def name(self) -> str:
        return str(self.config["name"])

    @property
    def output_dir(self) -> Optional[str]:
        return self.config["output_dir"]

    @property
    def x0(self) -> Tuple[float, ...]:
        """Configured start, or the point with all coordinates 1."""
        return self.simulation.x0 or (1.0,) * self.model.d

    def to_config(self) -> Dict[str, Any]:
        return copy.deepcopy(self.config)

    def with_overrides(
        self, seed: Optional[int] = None, output_dir: Optional[str] = None
    ) -> "Scenario":
        """Copy with the seed and output directory replaced (command-line overrides)."""
        cfg = self.to_config()
        if seed is not None:
            cfg["simulation"]["seed"] = int(seed)
        if output_dir is not None:
            cfg["output_dir"] = str(output_dir)
        return Scenario.from_dict(cfg)

    def averaged(self) -> VectorField:
        """Averaged field of the simulated model under the stationary distribution."""
        if self.params is not None:
            return averaged_predprey(self.params)
        return averaged_field(self.model, stationary_distribution(self.model.generator))

    def cycle_field(self) -> VectorField:
        if self.cycle_source == "reference":
            return self.reference_field  # type: ignore[return-value]
        return self.averaged()

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "Scenario":
        """Fill defaults and validate.

        Raises
        ------
        ConfigError
            Naming the missing or invalid key.
        """
        if not isinstance(raw, dict):
            raise ConfigError("<document>", "expected a JSON object")
        if raw.get("model") is None:
            raise ConfigError("model", "missing model")
        model_spec = raw["model"]
        if isinstance(model_spec, str):
            if model_spec not in BUILTINS:
                raise ConfigError("model", f"unknown builtin {model_spec!r}, known: {list(BUILTINS)}")
            base = _merge(DEFAULTS, BUILTINS[model_spec]())
            override = {k: v for k, v in raw.items() if k != "model"}
        else:
            base, override = DEFAULTS, raw
        unknown = [k for k in override if k not in DEFAULTS]
        if unknown:
            raise ConfigError(unknown[0], "unknown section")
        cfg = _merge(base, override)
        return cls._build(cfg)

    @classmethod
    def _build(cls, cfg: Dict[str, Any]) -> "Scenario":
        if cfg["generator"] is None:
            raise ConfigError("generator", "a generator matrix is required")
        with _section("generator"):
            generator = as_generator(np.array(cfg["generator"], dtype=float))
        model, params = _build_model(cfg["model"], generator)

        sched = cfg["schedule"]
        if sched.get("case") not in CASES:
            raise ConfigError("schedule.case", f"unknown case {sched.get('case')!r}, expected one of {list(CASES)}")
        with _section("schedule"):
            schedule = ScaleSchedule(sched["case"], tuple(float(e) for e in sched["eps"]), l=float(sched["l"]))

        sim = cfg["simulation"]
        with _section("simulation"):
            simulation = SimulationConfig(
                T=float(sim["T"]),
                dt=float(sim["dt"]),
                burn_in=None if sim["burn_in"] is None else float(sim["burn_in"]),
                n=int(sim["n"]),
                seed=int(sim["seed"]),
                x0=_floats(sim["x0"]) or (),
                i0=int(sim["i0"]),
            )
            if not (simulation.T > 0 and simulation.dt > 0):
                raise ValueError(f"T and dt must be positive, got T={simulation.T}, dt={simulation.dt}")
            if simulation.x0 and len(simulation.x0) != model.d:
                raise ValueError(f"x0 has {len(simulation.x0)} entries for d={model.d}")
            if not 0 <= simulation.i0 < model.m0:
                raise ValueError(f"i0={simulation.i0} outside 0..{model.m0 - 1}")
            Stream(simulation.seed)

        grid = None
        if cfg["grid"] is not None:
            with _section("grid"):
                grid = GridSpec(tuple(cfg["grid"]["lo"]), tuple(cfg["grid"]["hi"]), int(cfg["grid"]["n"]))
                if grid.d != model.d:
                    raise ValueError(f"grid has dimension {grid.d} for d={model.d}")

        names = cfg["test_functions"] or [f"x{k + 1}" for k in range(model.d)]
        with _section("test_functions"):
            observables = [observable(name, model.d) for name in names]

        cyc = dict(cfg["cycle"])
        source = cyc.pop("source")
        if source not in CYCLE_SOURCES:
            raise ConfigError("cycle.source", f"expected one of {list(CYCLE_SOURCES)}")
        with _section("cycle"):
            cycle_options = CycleOptions(**{k: float(v) for k, v in cyc.items()})

        ex = cfg["exit"]
        with _section("exit"):
            exit_cfg = ExitConfig(
                float(ex["H"]), float(ex["Delta"]), float(ex["radius"]), _floats(ex["center"]), int(ex["n"])
            )
        dev = cfg["deviation"]
        with _section("deviation"):
            deviation = DeviationConfig(float(dev["gamma"]), float(dev["T"]), int(dev["n"]))
        fig = cfg["figures"]
        with _section("figures"):
            figures = FigureConfig(
                float(fig["T"]), float(fig["dt"]), tuple((float(e), float(d)) for e, d in fig["pairs"])
            )

        ref = cfg["reference"] or {}
        reference_field = None
        if ref.get("field") is not None:
            if ref["field"] not in REFERENCE_FIELDS:
                raise ConfigError("reference.field", f"unknown field {ref['field']!r}, known: {list(REFERENCE_FIELDS)}")
            reference_field = REFERENCE_FIELDS[ref["field"]]()
            if reference_field.d != model.d:
                raise ConfigError("reference.field", f"dimension {reference_field.d} for d={model.d}")
        if source == "reference" and reference_field is None:
            raise ConfigError("reference.field", "cycle.source 'reference' needs a reference field")
        with _section("reference.equilibrium"):
            equilibrium = _floats(ref.get("equilibrium"))

        tight_box = None
        if cfg["tightness"] is not None:
            with _section("tightness"):
                tight_box = (_floats(cfg["tightness"]["lo"]), _floats(cfg["tightness"]["hi"]))

        return cls(
            config=cfg,
            model=model,
            params=params,
            schedule=schedule,
            simulation=simulation,
            grid=grid,
            observables=observables,
            cycle_options=cycle_options,
            cycle_source=source,
            exit=exit_cfg,
            deviation=deviation,
            figures=figures,
            reference_field=reference_field,
            reference_equilibrium=equilibrium,
            tight_box=tight_box,  # type: ignore[arg-type]
        )


def _build_model(spec: Any, generator: Generator) -> Tuple[HybridModel, Optional[PredPreyParams]]:
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ConfigError("model", "expected a builtin name or a single-key parameter block")
    ((kind, block),) = spec.items()
    if kind == "predprey":
        with _section("model.predprey"):
            params = PredPreyParams.from_config(block, generator)
        return build_model(params), params
    if kind == "switching-hopf":
        with _section("model.switching-hopf"):
            return switching_hopf(generator=generator.q, **(block or {})), None
    raise ConfigError("model", f"unknown model kind {kind!r}")


def parse_config(path: Union[str, Path]) -> Scenario:
    """Read and validate a scenario file.

    Parameters
    ----------
    path : str or Path
        JSON document

    Returns
    -------
    Scenario

    Raises
    ------
    ConfigError
        If the document is not valid JSON, misses a required key or violates
        a model, schedule or grid constraint.
    """
    with open(path) as handle:
        try:
            raw = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ConfigError("<document>", str(exc)) from exc
    scenario = Scenario.from_dict(raw)
    LOG.info(f"scenario {scenario.name}: model {scenario.model.name}, {scenario.schedule.case_id}")
    return scenario


def _resolve_output(scenario: Scenario, out_dir: Optional[Union[str, Path]]) -> Path:
    out = Path(out_dir or scenario.output_dir or os.environ.get(OUTPUT_ENV, DEFAULT_OUTPUT_DIR))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _find_cycle(scenario: Scenario) -> LimitCycle:
    return detect_limit_cycle(scenario.cycle_field(), scenario.x0, opts=scenario.cycle_options)


def _critical_points(scenario: Scenario, cycle: LimitCycle) -> List[CriticalPoint]:
    """Critical points of the cycle's field in the box around the cycle, off the invariant axes."""
    box = GridSpec.around(cycle.samples, 1.5, 2)
    lo = np.array(box.lo)
    positive = scenario.model.positive_mask
    lo[positive] = np.maximum(lo[positive], 1e-6)
    return find_critical_points(scenario.cycle_field(), (lo, np.array(box.hi)))


def _exit_center(scenario: Scenario) -> Tuple[float, ...]:
    if scenario.exit.center is not None:
        return scenario.exit.center
    if scenario.reference_equilibrium is not None:
        return scenario.reference_equilibrium
    points = _critical_points(scenario, _find_cycle(scenario))
    if not points:
        raise ConfigError("exit.center", "no critical point found to center the exit ball on")
    return tuple(points[0].location)


def _run_simulate(scenario: Scenario, out: Path, parallelism: Optional[int]) -> List[Path]:
    eps, delta = scenario.schedule.pairs()[0]
    sim = scenario.simulation
    traj = simulate(
        scenario.model, eps, delta, scenario.x0, sim.i0, sim.T, sim.dt,
        Stream(sim.seed).split("simulate"),
    )
    path = out / "trajectory.csv"
    traj.to_csv(path)
    return [path]


def _run_average(scenario: Scenario, out: Path, parallelism: Optional[int]) -> List[Path]:
    field = scenario.averaged()
    traj = integrate_ode(field, scenario.x0, scenario.figures.T, scenario.figures.dt)
    if scenario.grid is not None:
        sample = GridSpec(scenario.grid.lo, scenario.grid.hi, 20)
    else:
        sample = GridSpec.around(traj.states, 1.2, 20)
    centers = sample.centers()
    values = np.array([field(x) for x in centers])
    frame = pd.DataFrame(centers, columns=state_columns(field.d))
    for k, column in enumerate(state_columns(field.d, "f")):
        frame[column] = values[:, k]
    field_path = out / "averaged_field.csv"
    traj_path = out / "averaged_trajectory.csv"
    frame.to_csv(field_path, index=False, float_format="%.17g")
    traj.to_csv(traj_path)
    return [field_path, traj_path]


def _run_cycle(scenario: Scenario, out: Path, parallelism: Optional[int]) -> List[Path]:
    cycle = _find_cycle(scenario)
    points = _critical_points(scenario, cycle)
    LOG.info(
        render(
            "cycle_summary.txt",
            scenario.cycle_field().name,
            len(points),
            "\n".join(repr(p) for p in points),
            cycle.period,
            cycle.closure_error,
            ", ".join(f"{v:.6g}" for v in cycle.section_point),
        )
    )
    cycle_path = out / "cycle.csv"
    period_path = out / "period.txt"
    cycle.to_frame().to_csv(cycle_path, index=False, float_format="%.17g")
    period_path.write_text(f"{cycle.period:.17g}\n")
    return [cycle_path, period_path]


def _run_invariant(scenario: Scenario, out: Path, parallelism: Optional[int]) -> List[Path]:
    cycle = _find_cycle(scenario)
    grid = scenario.grid or GridSpec.around(cycle.samples, 1.5, 200)
    sim = scenario.simulation
    burn_in = sim.burn_in if sim.burn_in is not None else default_burn_in(cycle)
    x0 = sim.x0 or tuple(cycle.points[0])
    paths = list(write_measure(cycle_measure(cycle, grid), out / "mu0"))
    root = Stream(sim.seed)
    for k, (eps, delta) in enumerate(scenario.schedule.pairs()):
        mu = empirical_measure(
            scenario.model, eps, delta, x0, sim.i0, sim.T, sim.dt, burn_in, grid,
            root.split("invariant", k),
        )
        stem = out / f"measure_eps{format_tag(eps)}_delta{format_tag(delta)}"
        paths.extend(write_measure(mu, stem))
    return paths


def _run_exit_time(scenario: Scenario, out: Path, parallelism: Optional[int]) -> List[Path]:
    eps, delta = scenario.schedule.pairs()[0]
    ex = scenario.exit
    budget = exit_budget(scenario.schedule.case_id, eps, delta, ex.H, ex.Delta)
    stats = exit_time_experiment(
        scenario.model, eps, delta, _exit_center(scenario), ex.radius, budget,
        scenario.simulation.dt, ex.n, base_seed=scenario.simulation.seed,
        parallelism=parallelism,
    )
    LOG.info(stats.report())
    path = out / "exit_times.csv"
    stats.to_frame().to_csv(path, index=False, float_format="%.17g")
    return [path]


def _run_deviation(scenario: Scenario, out: Path, parallelism: Optional[int]) -> List[Path]:
    dev = scenario.deviation
    sim = scenario.simulation
    field = scenario.averaged()
    records = []
    for eps, delta in scenario.schedule.pairs():
        estimate = sup_deviation_probability(
            scenario.model, eps, delta, scenario.x0, sim.i0, dev.gamma, dev.T, sim.dt, dev.n,
            base_seed=sim.seed, field=field, parallelism=parallelism,
        )
        records.append(
            {
                "eps": eps,
                "delta": delta,
                "p_hat": estimate.p_hat,
                "ci_low": estimate.ci_low,
                "ci_high": estimate.ci_high,
                "n": estimate.n,
            }
        )
    path = out / "deviation.csv"
    pd.DataFrame.from_records(records).to_csv(path, index=False, float_format="%.17g")
    return [path]


def _run_converge(scenario: Scenario, out: Path, parallelism: Optional[int]) -> List[Path]:
    cycle = _find_cycle(scenario)
    references: List[Tuple[Tuple[float, ...], float]] = []
    if scenario.reference_equilibrium is not None:
        references.append((scenario.reference_equilibrium, scenario.exit.radius))
    report = convergence_sweep(
        scenario.model,
        scenario.schedule,
        cycle,
        _critical_points(scenario, cycle),
        scenario.observables,
        scenario.simulation,
        grid=scenario.grid,
        tight_box=scenario.tight_box,
        reference_points=references,
    )
    csv_path = out / "convergence.csv"
    text_path = out / "convergence_report.txt"
    report.to_csv(csv_path)
    text_path.write_text(report.report())
    return [csv_path, text_path]


def _run_reproduce(scenario: Scenario, out: Path, parallelism: Optional[int]) -> List[Path]:
    if scenario.model.d != 2:
        raise ConfigError("figures", f"phase portraits need a planar model, got d={scenario.model.d}")
    fig = scenario.figures
    sim = scenario.simulation
    root = Stream(sim.seed)
    paths = []
    series = {}
    for k, (eps, delta) in enumerate(fig.pairs):
        traj = simulate(scenario.model, eps, delta, scenario.x0, sim.i0, fig.T, fig.dt, root.split("figures", k))
        label = f"eps{format_tag(eps)}_delta{format_tag(delta)}"
        path = out / f"trajectory_{label}.csv"
        traj.to_csv(path)
        paths.append(path)
        series[label] = traj
    averaged = integrate_ode(scenario.averaged(), scenario.x0, fig.T, fig.dt)
    path = out / "averaged_trajectory.csv"
    averaged.to_csv(path)
    paths.append(path)
    series["averaged"] = averaged

    times = averaged.times
    for axis, name in ((0, "figure1_prey.csv"), (1, "figure2_predator.csv")):
        frame = pd.DataFrame({"t": times})
        for label, traj in series.items():
            frame[label] = traj.states[:, axis]
        frame.to_csv(out / name, index=False, float_format="%.17g")
        paths.append(out / name)
    phase = pd.concat(
        [
            pd.DataFrame(
                {"series": label, "t": traj.times, "x1": traj.states[:, 0], "x2": traj.states[:, 1]}
            )
            for label, traj in series.items()
        ],
        ignore_index=True,
    )
    phase.to_csv(out / "figure3_phase.csv", index=False, float_format="%.17g")
    paths.append(out / "figure3_phase.csv")

    scenario_path = out / "scenario.json"
    scenario_path.write_text(json.dumps(scenario.to_config(), indent=2, sort_keys=True) + "\n")
    paths.append(scenario_path)
    return paths


_RUNNERS: Dict[str, Callable[[Scenario, Path, Optional[int]], List[Path]]] = {
    "simulate": _run_simulate,
    "average": _run_average,
    "cycle": _run_cycle,
    "invariant": _run_invariant,
    "exit-time": _run_exit_time,
    "deviation": _run_deviation,
    "converge": _run_converge,
    "reproduce-example": _run_reproduce,
}


def execute(
    scenario: Scenario,
    command: str,
    out_dir: Optional[Union[str, Path]] = None,
    parallelism: Optional[int] = None,
) -> List[Path]:
    """Run ``command`` on ``scenario`` and return the written files.

    Parameters
    ----------
    scenario : Scenario
        Validated scenario
    command : str
        One of :data:`COMMANDS`
    out_dir : str or Path, optional
        Output directory; falls back to the scenario's ``output_dir``, then
        to ``$SWITCHDIFF_OUTPUT_DIR``, then to ``switchdiff-out``
    parallelism : int, optional
        Number of Fugue partitions for replicate ensembles

    Returns
    -------
    list of Path
    """
    if command not in COMMANDS:
        raise ConfigError("command", f"unknown command {command!r}, expected one of {list(COMMANDS)}")
    out = _resolve_output(scenario, out_dir)
    LOG.info(f"{command} on {scenario.name} into {out}")
    paths = _RUNNERS[command](scenario, out, parallelism)
    LOG.info(f"{command} wrote {len(paths)} files")
    return paths


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point of the ``switchdiff`` command."""
    parser = argparse.ArgumentParser(
        prog="switchdiff",
        description="Simulate multi-scale switching diffusions and compare them with their averaged systems.",
    )
    parser.add_argument("command", choices=list(COMMANDS))
    parser.add_argument("--config", required=True, help="scenario JSON file")
    parser.add_argument("--out", default=None, help=f"output directory (default ${OUTPUT_ENV} or {DEFAULT_OUTPUT_DIR})")
    parser.add_argument("--seed", type=int, default=None, help="overrides simulation.seed")
    parser.add_argument("--threads", type=int, default=None, help="Fugue partitions for replicate ensembles")
    parser.add_argument("--log-level", default="INFO")
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=args.log_level.upper(), format="%(asctime)s %(name)s %(levelname)s %(message)s"
    )
    try:
        scenario = parse_config(args.config).with_overrides(seed=args.seed)
        paths = execute(scenario, args.command, out_dir=args.out, parallelism=args.threads)
    except (SwitchDiffError, OSError) as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        return 1
    for path in paths:
        sys.stdout.write(f"{path}\n")
    return 0
