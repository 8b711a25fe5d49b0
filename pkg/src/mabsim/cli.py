"""Command-line front end: steady-state reports, mode comparisons, dynamics, sweeps.

Subcommands
    steady   per-port instant currents, ZVS statuses, RMS, powers at one point
    compare  SPS vs online-ZVS side by side at the same loads
    dynamic  closed-loop run of the scenario's events, settling summary
    sweep    both modes across a load range, one CSV row per (point, mode)
    verify   randomized equivalence and identity campaigns

Exit status: 0 success, 1 validation error, 2 runtime failure,
3 verification failure.  All CSV output is written only after the
computation finished, so a failing run never leaves partial files.
"""

from __future__ import annotations

import argparse
import csv
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .core import ConfigError, LoadModel, derive_params
from .control import (MODE_ONLINE_ZVS, MODE_SPS, VoltageCollapseError, find_equilibrium,
                      load_power_targets, run_scenario)
from .oracle import compare_closed_form, random_operating_point
from .scenario import Scenario, ScenarioError, parse_scenario
from .waveforms import (PhaseShiftSet, current_matrix, sample_waveforms,
                        steady_state_report, switching_instant_currents)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_VERIFY = 3


def _load_scenario(args) -> Scenario:
    scenario = parse_scenario(Path(args.config))
    if getattr(args, "mode", None):
        scenario = replace(scenario, mode=args.mode)
    if getattr(args, "eps_current", None) is not None:
        scenario = replace(scenario, analysis=replace(scenario.analysis,
                                                      eps_current=args.eps_current))
    return scenario


def _apply_load_overrides(scenario: Scenario, overrides) -> list:
    """Current load list with --load PORT=VALUE overrides applied."""
    loads = [p.load for p in scenario.config.ports]
    for spec in overrides or []:
        try:
            port_s, value_s = spec.split("=", 1)
            port, value = int(port_s), float(value_s)
        except ValueError:
            raise ScenarioError(f"--load expects PORT=VALUE, got {spec!r}") from None
        if not 2 <= port <= scenario.config.n_ports or loads[port - 1] is None:
            raise ScenarioError(f"--load: port {port} has no adjustable load")
        loads[port - 1] = LoadModel(kind=loads[port - 1].kind, value=value)
    return loads


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_waveforms_csv(path: Path, series):
    """Columns: t, v_s1..v_sN, i_L1..i_LN, v_H (seconds, volts, amperes)."""
    n = series.node_voltages.shape[0]
    header = (["t"] + [f"v_s{i + 1}" for i in range(n)]
              + [f"i_L{i + 1}" for i in range(n)] + ["v_H"])
    rows = np.column_stack([series.times, series.node_voltages.T,
                            series.inductor_currents.T, series.link_voltage])
    _write_csv(path, header, rows.tolist())


def write_scenario_csv(path: Path, result):
    """Columns: t, V_2..V_N, P_1..P_N, d_2..d_N, D_1..D_N, zvs_1..zvs_N."""
    n = result.voltages.shape[1]
    header = (["t"] + [f"V_{i + 1}" for i in range(1, n)]
              + [f"P_{i + 1}" for i in range(n)]
              + [f"d_{i + 1}" for i in range(1, n)]
              + [f"D_{i + 1}" for i in range(n)]
              + [f"zvs_{i + 1}" for i in range(n)])
    rows = []
    for j in range(result.times.size):
        rows.append([result.times[j], *result.voltages[j, 1:], *result.powers[j],
                     *result.outer[j, 1:], *result.inner[j], *result.zvs_status[j]])
    _write_csv(path, header, rows)


def _report_lines(config, shifts, report):
    yield f"{'port':>4} {'d_i':>9} {'D_i':>7} {'i(t_on) A':>11} {'i(t_off) A':>11} {'status':>9} {'RMS A':>8} {'P W':>10}"
    for i in range(config.n_ports):
        yield (f"{i + 1:>4} {shifts.outer[i]:>9.5f} {shifts.inner[i]:>7.4f} "
               f"{report.currents_at_turn_on[i]:>11.4f} {report.currents_at_turn_off[i]:>11.4f} "
               f"{report.zvs_status[i]:>9} {report.rms_currents[i]:>8.3f} {report.dc_powers[i]:>10.2f}")
    yield (f"total RMS (root-sum-square): {report.total_rms:.3f} A   "
           f"sum of squared RMS: {report.rms_square_sum:.2f} A^2")
    yield (f"hard-edge current sum: {report.hard_edge_current:.4f} A   "
           f"link voltage: {report.link_voltage_rms:.2f} V rms / {report.link_voltage_peak:.2f} V peak")


def _parse_shift_list(text, n, what):
    values = np.array([float(v) for v in text.split(",")], dtype=float)
    if values.size != n:
        raise ScenarioError(f"--{what} expects {n} comma-separated values, got {values.size}")
    return values


def cmd_steady(args) -> int:
    scenario = _load_scenario(args)
    config = scenario.config
    loads = _apply_load_overrides(scenario, args.load)
    if args.outer is not None:
        outer = _parse_shift_list(args.outer, config.n_ports, "outer")
        inner = (_parse_shift_list(args.inner, config.n_ports, "inner")
                 if args.inner is not None else np.zeros(config.n_ports))
        shifts = PhaseShiftSet(outer=outer, inner=inner)
    else:
        shifts = find_equilibrium(config, mode=scenario.mode, loads=loads)
    report = steady_state_report(config, shifts, eps_current=scenario.analysis.eps_current)
    print(f"mode: {scenario.mode}   inner ratios: {np.array2string(shifts.inner, precision=6)}")
    for line in _report_lines(config, shifts, report):
        print(line)
    if args.out:
        series = sample_waveforms(config, shifts, scenario.analysis.points_per_period)
        path = Path(args.out) / f"waveforms_{scenario.mode}.csv"
        write_waveforms_csv(path, series)
        print(f"waveforms written to {path}")
    return EXIT_OK


def cmd_compare(args) -> int:
    scenario = _load_scenario(args)
    config = scenario.config
    loads = _apply_load_overrides(scenario, args.load)
    eps = scenario.analysis.eps_current
    reports = {}
    for mode in (MODE_SPS, MODE_ONLINE_ZVS):
        shifts = find_equilibrium(config, mode=mode, loads=loads)
        reports[mode] = (shifts, steady_state_report(config, shifts, eps_current=eps))
    print(f"loads (W at setpoints): {np.array2string(load_power_targets(config, loads), precision=1)}")
    for mode in (MODE_SPS, MODE_ONLINE_ZVS):
        shifts, report = reports[mode]
        print(f"--- mode {mode}")
        for line in _report_lines(config, shifts, report):
            print(line)
    ratio = reports[MODE_ONLINE_ZVS][1].rms_square_sum / reports[MODE_SPS][1].rms_square_sum
    print(f"squared-RMS total ratio zvs/sps: {ratio:.4f} "
          f"(reduction {100.0 * (1.0 - ratio):.2f} %)")
    if args.out:
        rows = []
        for mode in (MODE_SPS, MODE_ONLINE_ZVS):
            _, report = reports[mode]
            rows.append([mode, *report.rms_currents, report.total_rms,
                         report.rms_square_sum, report.hard_edge_current,
                         *report.zvs_status])
        n = config.n_ports
        header = (["mode"] + [f"rms_{i + 1}" for i in range(n)]
                  + ["total_rms", "rms_square_sum", "hard_edge_current"]
                  + [f"zvs_{i + 1}" for i in range(n)])
        path = Path(args.out) / "compare.csv"
        _write_csv(path, header, rows)
        print(f"comparison written to {path}")
    return EXIT_OK


def cmd_dynamic(args) -> int:
    scenario = _load_scenario(args)
    result = run_scenario(
        scenario.config, scenario.controllers, scenario.events, mode=scenario.mode,
        duration=scenario.analysis.duration, control_period=scenario.update_period,
        eps_current=scenario.analysis.eps_current, settle_band=scenario.analysis.settle_band,
    )
    if not scenario.events:
        print("no events in scenario; series reflects initial convergence only")
    for event, settle in result.settling:
        what = f"{event.set} of port {event.port} -> {event.value:g}"
        if settle is None:
            print(f"event t={event.time * 1e3:.2f} ms ({what}): UNSETTLED within the series")
        else:
            print(f"event t={event.time * 1e3:.2f} ms ({what}): settled in {settle * 1e3:.2f} ms "
                  f"(band {scenario.analysis.settle_band * 100:.1f} %)")
    for port, err in sorted(result.steady_state_errors.items()):
        print(f"port {port}: final voltage error {err:.4f} V")
    if args.out:
        path = Path(args.out) / "dynamic.csv"
        write_scenario_csv(path, result)
        print(f"series written to {path}")
    return EXIT_OK


def _sweep_point(config, mode, loads, eps):
    shifts = find_equilibrium(config, mode=mode, loads=loads)
    return steady_state_report(config, shifts, eps_current=eps)


def cmd_sweep(args) -> int:
    scenario = _load_scenario(args)
    config = scenario.config
    sweep = scenario.sweep
    port = args.port if args.port is not None else (sweep.port if sweep else None)
    if port is None:
        raise ScenarioError("sweep: no port given (use --port or a sweep section)")
    pmin = args.pmin if args.pmin is not None else (sweep.power_min if sweep else None)
    pmax = args.pmax if args.pmax is not None else (sweep.power_max if sweep else None)
    steps = args.steps if args.steps is not None else (sweep.steps if sweep else None)
    if pmin is None or pmax is None or steps is None:
        raise ScenarioError("sweep: power range/steps missing (flags or sweep section)")
    if steps < 1 or pmin <= 0 or pmax < pmin:
        raise ScenarioError("sweep: power range must be positive and ordered, steps >= 1")
    base_loads = [p.load for p in config.ports]
    if base_loads[port - 1] is None or base_loads[port - 1].kind == "voltage_source":
        raise ScenarioError(f"sweep: port {port} has no adjustable load")
    powers = np.linspace(pmin, pmax, steps) if steps > 1 else np.array([pmin])
    eps = scenario.analysis.eps_current

    jobs = []
    for p in powers:
        loads = list(base_loads)
        loads[port - 1] = LoadModel(kind="constant_power", value=float(p))
        for mode in (MODE_SPS, MODE_ONLINE_ZVS):
            jobs.append((float(p), mode, loads))
    with ThreadPoolExecutor() as pool:
        reports = list(pool.map(lambda j: _sweep_point(config, j[1], j[2], eps), jobs))

    n = config.n_ports
    header = (["power_w", "mode"] + [f"rms_{i + 1}" for i in range(n)]
              + ["total_rms", "rms_square_sum", "hard_edge_current"]
              + [f"zvs_{i + 1}" for i in range(n)])
    rows = []
    for (p, mode, _), report in zip(jobs, reports):
        rows.append([p, mode, *report.rms_currents, report.total_rms,
                     report.rms_square_sum, report.hard_edge_current, *report.zvs_status])
        print(f"P_{port}={p:7.1f} W  {mode:>4}: total RMS {report.total_rms:7.3f} A, "
              f"hard-edge sum {report.hard_edge_current:8.4f} A, status {'/'.join(report.zvs_status)}")
    if args.out:
        path = Path(args.out) / "sweep.csv"
        _write_csv(path, header, rows)
        print(f"sweep written to {path}")
    return EXIT_OK


def run_verification(seed: int, draws: int, print_fn=print) -> int:
    """Randomized campaigns; returns the exit status."""
    if draws < 1:
        raise ScenarioError(f"verify: draws must be >= 1, got {draws}")
    rng = np.random.default_rng(seed)
    failures = []

    worst_wave = 0.0
    worst_inst = 0.0
    for _ in range(draws):
        config, shifts = random_operating_point(rng)
        worst_wave = max(worst_wave, compare_closed_form(config, shifts))
        i_on, i_off = switching_instant_currents(config, shifts)
        T = config.half_period
        scale = derive_params(config).current_scales
        cf_on = current_matrix(config, shifts, shifts.outer * T).diagonal()
        cf_off = current_matrix(config, shifts, (shifts.outer + shifts.inner) * T).diagonal()
        err = max(np.max(np.abs(i_on - cf_on) / scale), np.max(np.abs(i_off - cf_off) / scale))
        worst_inst = max(worst_inst, err)
    print_fn(f"closed form vs oracle over {draws} draws: worst scaled error {worst_wave:.3e}")
    print_fn(f"instant currents vs waveform over {draws} draws: worst scaled error {worst_inst:.3e}")
    if worst_wave > 1e-9:
        failures.append("closed-form currents disagree with the event-driven reference")
    if worst_inst > 1e-9:
        failures.append("switching-instant currents disagree with the waveform model")

    worst_identity = 0.0
    worst_online = 0.0
    for _ in range(max(draws, 100)):
        n = int(rng.integers(2, 9))
        M = rng.uniform(0.2, 3.0, n)
        w = rng.uniform(0.05, 1.0, n)
        l = w / w.sum()
        dd = rng.uniform(0.0, 1.0, n)
        level = M * (1.0 - dd)
        terms = np.sum(l * level) - level
        worst_identity = max(worst_identity, abs(float(np.sum(l * terms))))
        dd_online = 1.0 - np.min(M) / M
        level_online = M * (1.0 - dd_online)
        terms_online = np.sum(l * level_online) - level_online
        worst_online = max(worst_online, float(np.max(np.abs(terms_online))))
    print_fn(f"weighted-sum identity of the full-ZVS terms: worst |sum l_i T_i| = {worst_identity:.3e}")
    print_fn(f"online rule zeroes every full-ZVS term: worst |T_i| = {worst_online:.3e}")
    if worst_identity > 1e-12:
        failures.append("weighted-sum identity violated")
    if worst_online > 1e-12:
        failures.append("online duty rule leaves a nonzero full-ZVS term")

    if failures:
        for f in failures:
            print_fn(f"FAIL: {f}")
        return EXIT_VERIFY
    print_fn("all verification campaigns passed")
    return EXIT_OK


def cmd_verify(args) -> int:
    return run_verification(args.seed, args.draws)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mabsim",
                                     description="multi-active-bridge steady-state and control studies")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="scenario JSON file")
        p.add_argument("--mode", choices=[MODE_SPS, MODE_ONLINE_ZVS],
                       help="override the scenario's control mode")
        p.add_argument("--out", help="directory for CSV output")
        p.add_argument("--eps-current", type=float, dest="eps_current",
                       help="ZVS classification tolerance in amperes")

    p = sub.add_parser("steady", help="steady-state report at one operating point")
    add_common(p)
    p.add_argument("--load", action="append", metavar="PORT=VALUE",
                   help="override a load value (repeatable)")
    p.add_argument("--outer", help="comma-separated outer ratios (skips the equilibrium solve)")
    p.add_argument("--inner", help="comma-separated inner ratios (with --outer)")
    p.set_defaults(func=cmd_steady)

    p = sub.add_parser("compare", help="SPS vs online-ZVS at the same operating point")
    add_common(p)
    p.add_argument("--load", action="append", metavar="PORT=VALUE",
                   help="override a load value (repeatable)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("dynamic", help="closed-loop run of the scenario events")
    add_common(p)
    p.set_defaults(func=cmd_dynamic)

    p = sub.add_parser("sweep", help="load sweep across both modes")
    add_common(p)
    p.add_argument("--port", type=int, help="swept port (default: sweep section)")
    p.add_argument("--pmin", type=float, help="lowest power in watts")
    p.add_argument("--pmax", type=float, help="highest power in watts")
    p.add_argument("--steps", type=int, help="number of sweep points")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="randomized equivalence and identity campaigns")
    p.add_argument("--seed", type=int, default=0, help="campaign seed")
    p.add_argument("--draws", type=int, default=1000, help="number of random draws")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (VoltageCollapseError, RuntimeError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
