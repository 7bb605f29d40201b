"""Command-line front end: ``phases``, ``signal``, ``scan`` and ``verify``."""
from __future__ import annotations

import argparse
import itertools
import logging
import sys
from dataclasses import replace
from typing import Sequence

from core_model import DomainError, compton_modulation_amplitude, transition_modulation_amplitude
from gradiometer import (
    CATALOGED_PAIRS,
    AveragingMode,
    Regime,
    coupling_ratio_map,
    differential_phase,
    dominance_ranking,
    frequency_scales,
    next_order_ratio,
    reduced_correlation,
    regime_amplitude,
    regime_applies,
    signal_amplitude_catalog,
    signal_amplitude_numeric,
    uncataloged_remainder,
)
from logging_utils import LOG_LEVEL_ENV, configure_logging, resolve_level
from phase_catalog import LABELS, phase_contribution, standard_phase
from quadrature import QuadratureError
from reporting import open_output, render_table, write_csv
from scan_scheduler import ScanScheduler
from scenario_config import (
    ConfigError,
    ScenarioConfig,
    load_scenario,
    parse_axis,
    reference_scenario,
    resolve_threads,
)
from verification import EXIT_NOT_CONVERGED, run_verification

LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1

PHASES_HEADER = ("label", "phi_lower_rad", "phi_upper_rad", "delta_phi_rad")
SIGNAL_HEADER = ("quantity", "i", "j", "numeric", "catalog", "catalog_reduced")
VERIFY_HEADER = ("gate", "name", "worst_residual", "tolerance", "worst_trial", "status")
RATIO_AXES = ("ratio.omega_over_omegac", "ratio.deltaeps_over_bareps")
DOMINANT_PAIRS = 3


def _load(args: argparse.Namespace, *, fixed_phase: bool) -> ScenarioConfig:
    if args.config:
        scenario = load_scenario(args.config)
    elif fixed_phase:
        scenario = reference_scenario(phi_rho=0.0)
    else:
        scenario = reference_scenario()
    if args.tolerance is not None:
        if not args.tolerance > 0:
            raise ConfigError("tolerance must be positive", field="--tolerance")
        scenario = replace(scenario, numerics=scenario.numerics.with_tolerance(args.tolerance))
    LOGGER.info("Scenario %s: %s, %s", scenario.source, scenario.species.name,
                scenario.geometry.diffraction.value)
    return scenario


def _emit(args: argparse.Namespace, header, rows, table_rows=None) -> None:
    with open_output(args.out) as stream:
        write_csv(stream, header, rows)
    if args.out is not None:
        print(render_table(header, table_rows if table_rows is not None else rows))


def cmd_phases(args: argparse.Namespace) -> int:
    scenario = _load(args, fixed_phase=True)
    if args.phi_rho is not None:
        scenario = replace(
            scenario, dilaton=scenario.dilaton.with_phase(args.phi_rho), phi_rho_averaged=False
        )
    scenario.require_fixed_phase()
    grad, species, dilaton = scenario.gradiometer, scenario.species, scenario.dilaton
    pert = scenario.perturbation()
    upper = grad.upper_geometry()

    LOGGER.info(
        "transition modulation %.6e rad/s, Compton modulation %.6e rad/s, standard phase %.6e rad",
        transition_modulation_amplitude(species, dilaton.rho_0),
        compton_modulation_amplitude(species, dilaton.rho_0),
        standard_phase(scenario.geometry),
    )
    rows = []
    for label in LABELS:
        rows.append(
            (
                label,
                phase_contribution(label, scenario.geometry, species, dilaton, pert),
                phase_contribution(label, upper, species, dilaton, pert),
                differential_phase(label, grad, species, dilaton, pert),
            )
        )
    _emit(args, PHASES_HEADER, rows)
    return EXIT_OK


def _signal_rows(scenario: ScenarioConfig) -> list[tuple]:
    grad, species, dilaton = scenario.gradiometer, scenario.species, scenario.dilaton
    pert = scenario.perturbation()
    numerics = scenario.numerics
    mode = scenario.averaging_mode
    numeric = signal_amplitude_numeric(
        grad, species, dilaton, pert, mode,
        nodes=numerics.phi_nodes, phi_s_nodes=numerics.phi_s_nodes,
    )
    catalog = signal_amplitude_catalog(
        grad, species, dilaton, pert, mode, phi_s_nodes=numerics.phi_s_nodes
    )
    rows: list[tuple] = [
        ("signal_amplitude", None, None, numeric.total, catalog.total, None),
        ("uncataloged_remainder", None, None, uncataloged_remainder(numeric, catalog), None, None),
    ]
    try:
        rows.append(("next_order_ratio", None, None, None,
                     next_order_ratio(grad, species, dilaton, pert), None))
    except DomainError:
        LOGGER.debug("next-order ratio undefined for this scenario")
    for regime in Regime:
        if regime_applies(regime, grad, species):
            value = regime_amplitude(regime, grad, species, dilaton, pert)
            rows.append((f"regime:{regime.value}", None, None, None, value, None))
    for name, value in frequency_scales(species, scenario.geometry).items():
        rows.append((f"frequency:{name}", None, None, value, None, None))

    cataloged = set(CATALOGED_PAIRS)
    for i, j in numeric.pairs():
        value = catalog.value(i, j) if (i, j) in cataloged else None
        reduced = None
        if value is not None and mode is AveragingMode.COHERENT:
            reduced = reduced_correlation(i, j, grad, species, dilaton, pert)
        rows.append(("correlation", i, j, numeric.value(i, j), value, reduced))
    return rows


def cmd_signal(args: argparse.Namespace) -> int:
    scenario = _load(args, fixed_phase=False)
    scenario.require_averaged_phase()
    rows = _signal_rows(scenario)
    LOGGER.info("signal amplitude %.6e rad^2 (catalog %.6e)", rows[0][3], rows[0][4])
    _emit(args, SIGNAL_HEADER, rows, [row for row in rows if row[0] != "correlation"])
    return EXIT_OK


def _scan_point(scenario: ScenarioConfig, paths: Sequence[str], values: Sequence[float]) -> tuple:
    for path, value in zip(paths, values):
        scenario = scenario.with_value(path, value)
    grad, species, dilaton = scenario.gradiometer, scenario.species, scenario.dilaton
    pert = scenario.perturbation()
    numerics = scenario.numerics
    mode = scenario.averaging_mode
    numeric = signal_amplitude_numeric(
        grad, species, dilaton, pert, mode,
        nodes=numerics.phi_nodes, phi_s_nodes=numerics.phi_s_nodes,
    )
    catalog = signal_amplitude_catalog(
        grad, species, dilaton, pert, mode, phi_s_nodes=numerics.phi_s_nodes
    )
    regimes = [
        regime_amplitude(regime, grad, species, dilaton, pert)
        if regime_applies(regime, grad, species)
        else None
        for regime in Regime
    ]
    ranking = dominance_ranking(catalog)[:DOMINANT_PAIRS]
    dominant = ";".join(f"{i},{j}" for (i, j), _ in ranking)
    row = [*values, numeric.total, catalog.total, *regimes, dominant]
    if tuple(paths) == RATIO_AXES:
        row.append(float(coupling_ratio_map([values[0]], [values[1]])[0, 0]))
    elif tuple(paths) == RATIO_AXES[::-1]:
        row.append(float(coupling_ratio_map([values[1]], [values[0]])[0, 0]))
    return tuple(row)


def cmd_scan(args: argparse.Namespace) -> int:
    scenario = _load(args, fixed_phase=False)
    scenario.require_averaged_phase()
    axes = [parse_axis(text) for text in args.axis] if args.axis else list(scenario.scan_axes)
    if not 1 <= len(axes) <= 2:
        raise ConfigError("a scan needs one or two axes", field="scan")
    paths = [axis.path for axis in axes]
    grid = list(itertools.product(*(axis.values() for axis in axes)))
    threads = resolve_threads(args.threads)
    LOGGER.info("Scanning %d point(s) over %s with %d thread(s)", len(grid), ", ".join(paths), threads)

    with ScanScheduler(threads) as scheduler:
        rows = scheduler.map(lambda values: _scan_point(scenario, paths, values), grid)

    header = [
        *paths,
        "phi_s2_numeric",
        "phi_s2_catalog",
        *(f"regime_{regime.value}" for regime in Regime),
        "dominant_pairs",
    ]
    if set(paths) == set(RATIO_AXES):
        header.append("coupling_ratio")
    _emit(args, header, rows)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    scenario = _load(args, fixed_phase=False)
    if args.trials < 1:
        raise ConfigError("trials must be at least 1", field="--trials")
    threads = resolve_threads(args.threads)
    report = run_verification(scenario, trials=args.trials, seed=args.seed, threads=threads)
    for index, message in report.failures:
        LOGGER.error("Trial %d: %s", index, message)
    for item in report.failing():
        LOGGER.error("%s %s: residual %.3e exceeds %.1e (trial %s)",
                     item.gate, item.name, item.worst, item.tolerance, item.worst_trial)
    rows = [
        (item.gate, item.name, item.worst, item.tolerance, item.worst_trial,
         "pass" if item.passed else "FAIL")
        for item in report.residuals
    ]
    _emit(args, VERIFY_HEADER, rows)
    return report.exit_code


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario file (default: built-in reference scenario)")
    common.add_argument("--out", help="write CSV here instead of standard output")
    common.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")
    common.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker threads (default: $DILATON_MONITOR_THREADS or 1)",
    )
    common.add_argument("--tolerance", type=float, default=None,
                        help="override every verification tolerance")
    common.add_argument(
        "--log-level",
        default=None,
        choices=("DEBUG", "INFO", "WARNING", "ERROR"),
        help="log level (default: $DILATON_MONITOR_LOG_LEVEL or INFO)",
    )

    parser = argparse.ArgumentParser(
        prog="dilaton-monitor",
        description="Dilaton dark-matter phases and signal amplitudes of atom gradiometers.",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    phases = commands.add_parser("phases", parents=[common], help="per-label phase contributions")
    phases.add_argument(
        "--phi-rho",
        type=float,
        default=None,
        help="fix the dilaton phase (rad), overriding the scenario",
    )
    phases.set_defaults(handler=cmd_phases)
    signal = commands.add_parser("signal", parents=[common], help="signal amplitude breakdown")
    signal.set_defaults(handler=cmd_signal)
    scan = commands.add_parser("scan", parents=[common], help="signal amplitude over a grid")
    scan.add_argument(
        "--axis",
        action="append",
        help="PATH:START:STOP:POINTS[:log|linear], SI units; give once or twice",
    )
    scan.set_defaults(handler=cmd_scan)
    verify = commands.add_parser("verify", parents=[common], help="closed forms against oracles")
    verify.add_argument("--trials", type=int, default=100, help="random scenarios (default: 100)")
    verify.set_defaults(handler=cmd_verify)
    return parser


def _log_level(flag: str | None) -> int:
    try:
        return resolve_level(flag)
    except ValueError as exc:
        raise ConfigError(str(exc), field=LOG_LEVEL_ENV) from None


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        configure_logging(_log_level(args.log_level))
        return args.handler(args)
    except (ConfigError, DomainError) as exc:
        LOGGER.error("配置无效: %s", exc)
        return EXIT_INVALID
    except QuadratureError as exc:
        LOGGER.error("数值积分未收敛: %s", exc)
        return EXIT_NOT_CONVERGED
    except OSError as exc:
        LOGGER.error("无法写入结果: %s", exc)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
