"""Command-line entry point: binds a YAML run configuration to protocol
runs and writes JSON/CSV artifacts into a per-run directory.

Exit codes: 0 success, 2 configuration error, 3 flagged physics violation
under --strict."""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import SWEEP_PARAMS, ConfigError, PAPER_DEFAULTS_YAML, load_config
from .optimizer import optimize_pulse
from .protocols import (
    derive_seed,
    run_fidelity,
    run_postselection,
    run_qnd,
    run_rb,
)
from .reports import (
    fidelity_result_to_dict,
    ga_result_to_dict,
    make_report,
    postselection_result_to_dict,
    qnd_result_to_dict,
    rb_result_to_dict,
    write_csv,
    write_histogram_csv,
    write_report_json,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="readoutsim",
        description="Monte Carlo simulator for single-shot dispersive readout")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="YAML run configuration")
    common.add_argument("--shots", type=int, help="override shot count")
    common.add_argument("--seed", type=int, help="override RNG seed")
    common.add_argument("--threads", type=int, help="worker pool size (0 = cores)")
    common.add_argument("--output-dir", help="override output directory")
    common.add_argument("--strict", action="store_true",
                        help="exit 3 when physics flags are raised")

    sub.add_parser("fidelity", parents=[common],
                   help="single-shot fidelity and histogram")
    sub.add_parser("qnd", parents=[common],
                   help="two-pulse conditional-probability correlation")
    sub.add_parser("postselect", parents=[common],
                   help="ground-state post-selection")
    sub.add_parser("rb", parents=[common],
                   help="randomized benchmarking of the control pulse")
    sub.add_parser("optimize", parents=[common],
                   help="genetic search over the readout envelope")
    sweep = sub.add_parser("sweep", parents=[common],
                           help="1-D parameter sweep of the fidelity run")
    sweep.add_argument("--param", choices=SWEEP_PARAMS)
    sweep.add_argument("--from", dest="sweep_from", type=float)
    sweep.add_argument("--to", dest="sweep_to", type=float)
    sweep.add_argument("--points", type=int)

    defaults = sub.add_parser("paper-defaults",
                              help="emit the reference parameter set")
    defaults.add_argument("--out", help="write to a file instead of stdout")
    return parser


def _overrides(args) -> dict:
    out = {}
    for name, key in (("seed", "seed"), ("shots", "shots"),
                      ("threads", "threads"), ("output_dir", "output_dir")):
        value = getattr(args, name, None)
        if value is not None:
            out[key] = value
    return out


def _run_dir(cfg, protocol: str) -> Path:
    d = Path(cfg.output_dir) / f"{protocol}_seed{cfg.seed}"
    d.mkdir(parents=True, exist_ok=True)
    return d


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2

    if args.command == "paper-defaults":
        if args.out:
            Path(args.out).write_text(PAPER_DEFAULTS_YAML)
            print(f"wrote defaults to {args.out}")
        else:
            sys.stdout.write(PAPER_DEFAULTS_YAML)
        return 0

    try:
        cfg = load_config(args.config, _overrides(args))
        if args.command == "sweep":
            return _cmd_sweep(cfg, args)
        handler = {"fidelity": _cmd_fidelity, "qnd": _cmd_qnd,
                   "postselect": _cmd_postselect, "rb": _cmd_rb,
                   "optimize": _cmd_optimize}[args.command]
        return handler(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


def _finish(cfg, protocol, results_dict, summary, flagged, strict) -> int:
    out = _run_dir(cfg, protocol)
    report = make_report(protocol, cfg.seed, cfg.raw, results_dict)
    write_report_json(out / "report.json", report)
    print(summary + f"  [{out}]")
    if strict and flagged:
        print("strict mode: physics flags raised", file=sys.stderr)
        return 3
    return 0


def _cmd_fidelity(cfg, args) -> int:
    setup = cfg.build_setup()
    res = run_fidelity(setup, cfg.shots, cfg.seed)
    out = _run_dir(cfg, "fidelity")
    write_histogram_csv(out / "histogram.csv", res.histogram)
    r = res.report
    summary = (f"fidelity: F={r.fidelity:.4f} eps_g={r.error_g:.4f} "
               f"eps_e={r.error_e:.4f} SNR={r.snr_meas:.3f} "
               f"({res.n_shots} shots, seed {cfg.seed})")
    flagged = bool(res.flagged_over_ncrit or res.flagged_over_saturation
                   or r.degenerate)
    return _finish(cfg, "fidelity", fidelity_result_to_dict(res), summary,
                   flagged, args.strict)


def _cmd_qnd(cfg, args) -> int:
    setup = cfg.build_setup()
    params = cfg.protocol_params.get("qnd", {})
    delays = [d * 1e-6 for d in params.get("delays_us",
                                           [0.0, 0.3, 0.7, 1.2, 1.8, 2.6, 3.6, 5.0])]
    n = args.shots if args.shots else params.get("shots_per_delay", 10000)
    res = run_qnd(setup, delays, n, cfg.seed)
    out = _run_dir(cfg, "qnd")
    write_csv(out / "correlation.csv",
              ["delay_s", "p_gg", "p_ee", "n_cond_g", "n_cond_e"],
              zip(res.delays, res.p_gg, res.p_ee, res.n_cond_g, res.n_cond_e))
    summary = (f"qnd: P_gg(0)={res.p_gg[0]:.4f} P_ee(0)={res.p_ee[0]:.4f} "
               f"tau_ee={res.fit_ee[1]:.3e}s ({n} shots/delay, seed {cfg.seed})")
    return _finish(cfg, "qnd", qnd_result_to_dict(res), summary,
                   res.low_statistics, args.strict)


def _cmd_postselect(cfg, args) -> int:
    setup = cfg.build_setup()
    params = cfg.protocol_params.get("postselect", {})
    res = run_postselection(setup, cfg.shots, cfg.seed,
                            pre_duration=params.get("pre_pulse_ns", 320.0) * 1e-9,
                            wait=params.get("wait_ns", 300.0) * 1e-9)
    out = _run_dir(cfg, "postselect")
    write_histogram_csv(out / "histogram_raw.csv", res.histogram_raw)
    write_histogram_csv(out / "histogram_selected.csv", res.histogram_selected)
    summary = (f"postselect: F {res.raw.fidelity:.4f} -> "
               f"{res.selected.fidelity:.4f} "
               f"(gain {res.selected.fidelity - res.raw.fidelity:+.4f}, "
               f"discard {res.discard_fraction:.3f}, seed {cfg.seed})")
    return _finish(cfg, "postselect", postselection_result_to_dict(res), summary,
                   res.high_discard, args.strict)


def _cmd_rb(cfg, args) -> int:
    params = cfg.protocol_params.get("rb", {})
    lengths = params.get("lengths", [1, 2, 4, 8, 16, 32, 64, 96, 128, 192, 256])
    res = run_rb(params.get("gate_error", 0.005), lengths,
                 params.get("n_seq", 5000), cfg.seed)
    out = _run_dir(cfg, "rb")
    write_csv(out / "survival.csv", ["length", "survival"],
              zip(res.sequence_lengths, res.survival))
    summary = (f"rb: error_per_gate={res.fitted_error_per_gate:.5f} "
               f"p={res.fit[1]:.5f} (seed {cfg.seed})")
    return _finish(cfg, "rb", rb_result_to_dict(res), summary,
                   res.degenerate_fit, args.strict)


def _cmd_optimize(cfg, args) -> int:
    setup = cfg.build_setup()
    res = optimize_pulse(cfg.ga_config(), setup, cfg.seed)
    out = _run_dir(cfg, "optimize")
    write_csv(out / "fitness_history.csv",
              ["generation", "best", "mean", "best_running"],
              ((h["generation"], h["best"], h["mean"], h["best_running"])
               for h in res.history))
    summary = (f"optimize: best_fitness={res.best_fitness:.4f} "
               f"({res.evaluations} evaluations, seed {cfg.seed})")
    return _finish(cfg, "optimize", ga_result_to_dict(res), summary,
                   res.early_stop, args.strict)


def _sweep_values(cfg, args):
    params = dict(cfg.protocol_params.get("sweep", {}))
    if args.param:
        params["param"] = args.param
    if args.sweep_from is not None:
        params["start"] = args.sweep_from
    if args.sweep_to is not None:
        params["stop"] = args.sweep_to
    if args.points is not None:
        params["points"] = args.points
    for key in ("param", "start", "stop"):
        if key not in params:
            raise ConfigError(f"sweep needs protocol.sweep.{key} or the CLI flag")
    if params["param"] not in SWEEP_PARAMS:
        raise ConfigError(f"sweep param must be one of {', '.join(SWEEP_PARAMS)}")
    points = int(params.get("points", 12))
    if points < 2:
        raise ConfigError("sweep needs at least 2 points")
    return params["param"], np.linspace(params["start"], params["stop"], points)


def _cmd_sweep(cfg, args) -> int:
    param, values = _sweep_values(cfg, args)
    rows = []
    any_flagged = False
    for value in values:
        if param == "n_bar":
            if cfg.n_bar is None:
                raise ConfigError("n_bar sweep requires an n_bar-based readout")
            sub = replace(cfg, n_bar=float(value))
        elif param == "drive_freq_ghz":
            sub = replace(cfg, drive_freq=float(value) * 1e9)
        else:
            sub = replace(cfg, window_length=float(value) * 1e-9,
                          pulse_duration=cfg.window_start + float(value) * 1e-9)
        setup = sub.build_setup()
        res = run_fidelity(setup, cfg.shots, cfg.seed)
        r = res.report
        flagged = bool(res.flagged_over_ncrit or res.flagged_over_saturation)
        any_flagged = any_flagged or flagged
        rows.append((param, float(value), r.fidelity, r.error_g, r.error_e,
                     r.snr_meas, res.flagged_over_ncrit,
                     res.flagged_over_saturation))
    out = _run_dir(cfg, "sweep")
    write_csv(out / "sweep.csv",
              ["param", "value", "fidelity", "error_g", "error_e", "snr_meas",
               "n_over_ncrit", "n_over_saturation"], rows)
    best = max(rows, key=lambda r: r[2])
    results = {"param": param,
               "values": [r[1] for r in rows],
               "fidelity": [r[2] for r in rows],
               "best_value": best[1], "best_fidelity": best[2]}
    summary = (f"sweep {param}: best F={best[2]:.4f} at {best[1]:g} "
               f"({len(rows)} points, seed {cfg.seed})")
    return _finish(cfg, "sweep", results, summary, any_flagged, args.strict)


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
