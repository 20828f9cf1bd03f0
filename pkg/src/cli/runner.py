"""
Experiment runner module for the bdris-wideband project.
This module runs the Monte-Carlo capacity sweeps: scenario draw, channel
construction, every configuration scheme and water-filling capacity, reduced
into one result row per sweep value and scheme.
"""

import argparse
import csv
import datetime
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from src.baselines.benchmarks import diagonal_power_iteration, random_bd, strongest_tap
from src.capacity.waterfilling import capacity
from src.channel.frequency import build_channel, total_gain
from src.channel.models import SystemParams
from src.channel.pathfile import write_paths
from src.channel.taps import choose_clock_and_length
from src.cli.config import FIGURES, ExperimentConfig, figure_preset, load_config
from src.cli.plotdata import emit_plot_data
from src.db.models import Experiment, ResultRecord, get_session, init_db
from src.scenario.generator import generate
from src.settings import CODE_VERSION, get_env_workers, get_log_level
from src.solver.optimizer import optimize, write_diagnostics

logger = logging.getLogger(__name__)

RESULT_FIELDS = ["sweep_value", "scheme", "mean_capacity", "std_error",
                 "num_realizations", "num_failed", "runtime_s"]
# relative slack before the diagonal baseline beating the BD optimizer is reported
REGRESSION_TOL = 1e-9


@dataclass(frozen=True)
class ResultRow:
    """Mean capacity of one scheme at one sweep point."""

    sweep_value: float
    scheme: str
    mean_capacity: float
    std_error: float
    num_realizations: int
    num_failed: int
    runtime_s: float

    def as_dict(self):
        return {name: getattr(self, name) for name in RESULT_FIELDS}


@dataclass
class RealizationOutcome:
    """Per-scheme capacities of one realization; None marks a failed scheme."""

    sweep_value: float
    index: int
    seed: int
    capacities: Dict[str, Optional[float]] = field(default_factory=dict)
    runtimes: Dict[str, float] = field(default_factory=dict)
    errors: Dict[str, str] = field(default_factory=dict)
    residuals: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    report: object = None


def system_params(config: ExperimentConfig, realization, bandwidth):
    """SystemParams of one realization at one bandwidth; T is capped at S - 1."""
    scenario = config.scenario
    num_subcarriers = config.num_subcarriers(bandwidth)
    clock_delay, num_taps = choose_clock_and_length(
        realization.paths, bandwidth, config.energy_tol, max_taps=num_subcarriers - 1
    )
    return SystemParams(
        carrier_freq=scenario.carrier_freq_hz,
        bandwidth=bandwidth,
        num_subcarriers=num_subcarriers,
        num_taps=num_taps,
        clock_delay=clock_delay,
        noise_psd=config.noise_power(bandwidth),
        num_elements=scenario.num_elements,
        element_spacing=scenario.element_spacing_wavelengths * scenario.wavelength,
    )


def evaluate_realization(task):
    """Run every scheme on realization `index` of sweep point `value`."""
    config, value, index = task
    scenario = config.scenario_at(value)
    bandwidth = config.bandwidth_at(value)

    try:
        realization = generate(scenario, index)
        params = system_params(config, realization, bandwidth)
        taps, chan, tx_responses, rx_responses = build_channel(realization.paths, params, scenario.element_grid())
    except ValueError as e:
        logger.error(f"Realization {index} at {config.sweep_axis}={value}: channel construction failed: {e}")
        outcome = RealizationOutcome(value, index, None)
        for scheme in config.schemes:
            outcome.capacities[scheme] = None
            outcome.errors[scheme] = str(e)
        return outcome

    outcome = RealizationOutcome(value, index, realization.seed)

    power = config.subcarrier_power(bandwidth)
    gains = {}
    for scheme in config.schemes:
        start = time.perf_counter()
        try:
            if scheme == "algorithm1":
                outcome.report = optimize(chan, iterations=config.iterations)
                reflection = outcome.report.reflection
            elif scheme == "diagonal":
                reflection = diagonal_power_iteration(chan, config.iterations)
            elif scheme == "strongest_tap":
                reflection = strongest_tap(taps, tx_responses, rx_responses, chan,
                                           selection=config.strongest_tap_selection)
            else:
                stream = np.random.SeedSequence(realization.seed).spawn(1)[0]
                reflection = random_bd(chan, stream, config.iterations)
            outcome.capacities[scheme] = capacity(reflection, chan, params, power).capacity
            outcome.residuals[scheme] = (reflection.symmetry_residual, reflection.unitarity_residual)
            gains[scheme] = total_gain(reflection, chan)
        except (ValueError, RuntimeError) as e:
            logger.error(f"Realization {index} at {config.sweep_axis}={value}: {scheme} failed: {e}")
            outcome.capacities[scheme] = None
            outcome.errors[scheme] = str(e)
        outcome.runtimes[scheme] = time.perf_counter() - start

    if "algorithm1" in gains and "diagonal" in gains:
        if gains["algorithm1"] < gains["diagonal"] * (1 - REGRESSION_TOL):
            logger.warning(
                f"Realization {index} at {config.sweep_axis}={value}: BD total gain "
                f"{gains['algorithm1']:.6e} below diagonal baseline {gains['diagonal']:.6e}"
            )
    logger.debug(f"Realization {index} at {config.sweep_axis}={value} done")
    return outcome


def reduce_outcomes(config: ExperimentConfig, value, outcomes):
    """One ResultRow per scheme, averaging in realization order."""
    rows = []
    for scheme in config.schemes:
        values = [o.capacities[scheme] for o in outcomes if o.capacities.get(scheme) is not None]
        count = len(values)
        failed = len(outcomes) - count
        if count:
            mean = float(np.mean(values))
            std_error = float(np.std(values, ddof=1) / math.sqrt(count)) if count > 1 else 0.0
        else:
            mean = std_error = float("nan")
        runtime = float(np.mean([o.runtimes.get(scheme, 0.0) for o in outcomes])) if outcomes else 0.0
        rows.append(ResultRow(float(value), scheme, mean, std_error, count, failed, runtime))
    return rows


def export_paths(config: ExperimentConfig, directory):
    """Write the PathSet of every realization at every sweep point as text files."""
    os.makedirs(directory, exist_ok=True)
    written = []
    for value in config.sweep_values:
        scenario = config.scenario_at(value)
        for index in range(config.num_realizations):
            try:
                realization = generate(scenario, index)
            except ValueError as e:
                logger.error(f"Realization {index} at {config.sweep_axis}={value}: not exported: {e}")
                continue
            filename = os.path.join(directory, f"{config.sweep_axis}_{value:g}_{index:04d}.paths")
            write_paths(realization.paths, filename)
            written.append(filename)
    logger.info(f"Exported {len(written)} path sets to {directory}")
    return written


def _tasks(config: ExperimentConfig, value):
    return [(config, value, index) for index in range(config.num_realizations)]


def run(config: ExperimentConfig, workers=1, write=True):
    """
    Evaluate every sweep point and write the result table.

    Realizations are mapped over a process pool when workers > 1; results come
    back in index order, so the table does not depend on the worker count.
    Returns (rows, outcomes).
    """
    rows, all_outcomes = [], []
    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for value in config.sweep_values:
            start = time.perf_counter()
            tasks = _tasks(config, value)
            mapped = executor.map(evaluate_realization, tasks) if executor else map(evaluate_realization, tasks)
            outcomes = list(mapped)
            point_rows = reduce_outcomes(config, value, outcomes)
            summary = ", ".join(f"{r.scheme}={r.mean_capacity / 1e6:.3f} Mbit/s" for r in point_rows)
            logger.info(f"{config.sweep_axis}={value:g}: {summary} ({time.perf_counter() - start:.1f}s)")
            rows.extend(point_rows)
            all_outcomes.extend(outcomes)
    finally:
        if executor:
            executor.shutdown()

    if write:
        write_results(rows, config.output_path, config)
        if config.diagnostics_path:
            reports = [o for o in all_outcomes if o.report is not None]
            write_diagnostics(
                [o.report for o in reports], config.diagnostics_path,
                labels=[{"sweep_value": o.sweep_value, "realization": o.index} for o in reports],
            )
    return rows, all_outcomes


def metadata(config: ExperimentConfig):
    return {
        "experiment": config.name,
        "config_hash": config.config_hash(),
        "master_seed": config.scenario.master_seed,
        "code_version": CODE_VERSION,
        "sweep_axis": config.sweep_axis,
    }


def write_results(rows, filename, config: ExperimentConfig):
    """CSV table with a '#' metadata header block."""
    directory = os.path.dirname(os.path.abspath(filename))
    os.makedirs(directory, exist_ok=True)
    with open(filename, "w", newline="") as f:
        for key, value in metadata(config).items():
            f.write(f"# {key}: {value}\n")
        writer = csv.DictWriter(f, fieldnames=RESULT_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row.as_dict())


def read_results(filename):
    """Rows and metadata of a table written by write_results."""
    meta, lines = {}, []
    with open(filename) as f:
        for line in f:
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                meta[key.strip()] = value.strip()
            else:
                lines.append(line)
    rows = []
    for record in csv.DictReader(lines):
        rows.append(ResultRow(
            sweep_value=float(record["sweep_value"]),
            scheme=record["scheme"],
            mean_capacity=float(record["mean_capacity"]),
            std_error=float(record["std_error"]),
            num_realizations=int(record["num_realizations"]),
            num_failed=int(record["num_failed"]),
            runtime_s=float(record["runtime_s"]),
        ))
    return rows, meta


def store_run(config: ExperimentConfig, rows, session=None, experiment=None):
    """Persist a finished run as one Experiment and its ResultRecords."""
    session = session or get_session()
    if experiment is None:
        experiment = Experiment(
            name=config.name,
            sweep_axis=config.sweep_axis,
            config_json=config.model_dump_json(),
            config_hash=config.config_hash(),
            master_seed=str(config.scenario.master_seed),
            code_version=CODE_VERSION,
        )
        session.add(experiment)
    for row in rows:
        experiment.results.append(ResultRecord(
            sweep_value=row.sweep_value,
            scheme=row.scheme,
            mean_capacity=None if math.isnan(row.mean_capacity) else row.mean_capacity,
            std_error=None if math.isnan(row.std_error) else row.std_error,
            num_realizations=row.num_realizations,
            num_failed=row.num_failed,
            runtime_s=row.runtime_s,
        ))
    experiment.status = "completed" if all(r.num_realizations for r in rows) else "failed"
    experiment.completed_at = datetime.datetime.utcnow()
    session.commit()
    logger.info(f"Stored experiment {experiment.id} ({len(rows)} result rows)")
    return experiment


def resolve_workers(cli_workers, config: ExperimentConfig):
    """--workers, then RIS_WORKERS, then the config file, then 1."""
    if cli_workers is not None:
        return cli_workers
    env_workers = get_env_workers()
    if env_workers is not None:
        return env_workers
    return config.workers or 1


def build_config(args) -> ExperimentConfig:
    """Preset or file, with the command-line overrides applied and validated."""
    figure = args.figure or ("custom" if args.config else "1")
    if figure == "custom":
        if not args.config:
            raise ValueError("--figure custom requires --config")
        config = load_config(args.config)
    elif args.config:
        raise ValueError("--config can only be combined with --figure custom")
    else:
        config = figure_preset(figure)

    data = config.model_dump()
    if args.seed is not None:
        data["scenario"]["master_seed"] = args.seed
    if args.realizations is not None:
        data["num_realizations"] = args.realizations
    if args.output is not None:
        data["output_path"] = args.output
    if args.diagnostics is not None:
        data["diagnostics_path"] = args.diagnostics
    return ExperimentConfig.model_validate(data)


def _print_validation_error(e: ValidationError):
    print("Configuration error:", file=sys.stderr)
    for error in e.errors():
        location = ".".join(str(part) for part in error["loc"]) or "<root>"
        print(f"  {location}: {error['msg']}", file=sys.stderr)


def main(argv=None):
    parser = argparse.ArgumentParser(description="Run BD-RIS wideband capacity experiments")
    parser.add_argument("--config", help="JSON experiment file (with --figure custom)")
    parser.add_argument("--figure", choices=FIGURES, help="Built-in experiment preset")
    parser.add_argument("--seed", type=int, help="Master seed (unsigned 64-bit)")
    parser.add_argument("--workers", type=int, help="Worker processes")
    parser.add_argument("--output", help="Result table path")
    parser.add_argument("--realizations", type=int, help="Monte-Carlo realizations per sweep point")
    parser.add_argument("--diagnostics", help="Write per-realization optimizer stage objectives to this file")
    parser.add_argument("--store", action="store_true", help="Persist the run in the results database")
    parser.add_argument("--export-paths", metavar="DIR", help="Also write every realization's paths as text files to DIR")
    args = parser.parse_args(argv)

    # Set up logging
    logging.basicConfig(level=get_log_level())

    try:
        config = build_config(args)
        workers = resolve_workers(args.workers, config)
        if workers < 1:
            raise ValueError(f"--workers must be >= 1, got {workers}")
    except ValidationError as e:
        _print_validation_error(e)
        return 2
    except (ValueError, OSError) as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return 2

    logger.info(f"Running {config.name}: {len(config.sweep_values)} sweep points x "
                f"{config.num_realizations} realizations, {workers} worker(s)")
    if args.export_paths:
        export_paths(config, args.export_paths)
    rows, _ = run(config, workers=workers)
    plot_path = emit_plot_data(rows, config.output_path, config.schemes)
    print(config.output_path)
    print(plot_path)

    if args.store:
        init_db()
        store_run(config, rows)

    failed = [r for r in rows if r.num_realizations == 0]
    if failed:
        for row in failed:
            logger.error(f"Every realization failed for {row.scheme} at {config.sweep_axis}={row.sweep_value:g}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
