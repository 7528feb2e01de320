"""Report and data-file serialization.

JSON reports round-trip exactly (Python float repr is shortest round-trip
decimal); CSV files are comma-separated with a header row, LF endings and
the same float formatting.  Timestamps appear only inside the report's
"meta" entry so seeded runs are otherwise byte-identical.
"""
from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .cavity import FieldTrajectory, ReadoutPulse
from .discrimination import DiscriminationReport, Histogram
from .optimizer import GaResult
from .protocols import (
    FidelityResult,
    PostSelectionResult,
    QndResult,
    RbResult,
)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def trajectory_rows(traj: FieldTrajectory):
    for k, a in enumerate(traj.samples):
        yield (k * traj.sample_dt, a.real, a.imag)


def write_trajectory_csv(path, traj: FieldTrajectory) -> None:
    write_csv(path, ["t_s", "re_alpha", "im_alpha"], trajectory_rows(traj))


def write_histogram_csv(path, hist: Histogram) -> None:
    rows = zip(hist.bin_centers, hist.counts_g, hist.counts_e)
    write_csv(path, ["bin_center", "count_g", "count_e"], rows)


def write_shots_csv(path, run, scores=None) -> None:
    header = ["index", "intent", "initial_state", "first_jump_time_s",
              "over_ncrit", "over_saturation"]
    columns = [run.indices, run.intents, run.initial_states,
               run.first_jump_times, run.over_ncrit, run.over_saturation]
    if scores is not None:
        header.append("score")
        columns.append(scores)
    write_csv(path, header, zip(*columns))


# ---------------------------------------------------------------------------
# JSON dict forms (to_dict / from_dict pairs round-trip exactly)

def discrimination_report_to_dict(r: DiscriminationReport) -> dict:
    return {"threshold": r.threshold, "snr_meas": r.snr_meas,
            "error_g": r.error_g, "error_e": r.error_e,
            "fidelity": r.fidelity, "degenerate": r.degenerate}


def discrimination_report_from_dict(d: dict) -> DiscriminationReport:
    return DiscriminationReport(**d)


def histogram_to_dict(h: Histogram) -> dict:
    return {"bin_edges": h.bin_edges.tolist(),
            "counts_g": h.counts_g.tolist(),
            "counts_e": h.counts_e.tolist(),
            "degenerate": h.degenerate}


def histogram_from_dict(d: dict) -> Histogram:
    return Histogram(bin_edges=np.asarray(d["bin_edges"], dtype=float),
                     counts_g=np.asarray(d["counts_g"], dtype=int),
                     counts_e=np.asarray(d["counts_e"], dtype=int),
                     degenerate=d["degenerate"])


def fidelity_result_to_dict(r: FidelityResult) -> dict:
    return {"report": discrimination_report_to_dict(r.report),
            "histogram": histogram_to_dict(r.histogram),
            "n_shots": r.n_shots,
            "flagged_over_ncrit": r.flagged_over_ncrit,
            "flagged_over_saturation": r.flagged_over_saturation}


def fidelity_result_from_dict(d: dict) -> FidelityResult:
    return FidelityResult(report=discrimination_report_from_dict(d["report"]),
                          histogram=histogram_from_dict(d["histogram"]),
                          n_shots=d["n_shots"],
                          flagged_over_ncrit=d["flagged_over_ncrit"],
                          flagged_over_saturation=d["flagged_over_saturation"])


def qnd_result_to_dict(r: QndResult) -> dict:
    return {"delays_s": r.delays.tolist(),
            "p_gg": r.p_gg.tolist(), "p_ee": r.p_ee.tolist(),
            "fit_gg": list(r.fit_gg) if r.fit_gg is not None else None,
            "fit_ee": list(r.fit_ee) if r.fit_ee is not None else None,
            "n_cond_g": r.n_cond_g.tolist(), "n_cond_e": r.n_cond_e.tolist(),
            "low_statistics": r.low_statistics}


def qnd_result_from_dict(d: dict) -> QndResult:
    return QndResult(delays=np.asarray(d["delays_s"], dtype=float),
                     p_gg=np.asarray(d["p_gg"], dtype=float),
                     p_ee=np.asarray(d["p_ee"], dtype=float),
                     fit_gg=tuple(d["fit_gg"]) if d["fit_gg"] is not None else None,
                     fit_ee=tuple(d["fit_ee"]) if d["fit_ee"] is not None else None,
                     n_cond_g=np.asarray(d["n_cond_g"], dtype=int),
                     n_cond_e=np.asarray(d["n_cond_e"], dtype=int),
                     low_statistics=d["low_statistics"])


def postselection_result_to_dict(r: PostSelectionResult) -> dict:
    return {"raw": discrimination_report_to_dict(r.raw),
            "selected": discrimination_report_to_dict(r.selected),
            "discard_fraction": r.discard_fraction,
            "histogram_raw": histogram_to_dict(r.histogram_raw),
            "histogram_selected": histogram_to_dict(r.histogram_selected),
            "high_discard": r.high_discard}


def postselection_result_from_dict(d: dict) -> PostSelectionResult:
    return PostSelectionResult(
        raw=discrimination_report_from_dict(d["raw"]),
        selected=discrimination_report_from_dict(d["selected"]),
        discard_fraction=d["discard_fraction"],
        histogram_raw=histogram_from_dict(d["histogram_raw"]),
        histogram_selected=histogram_from_dict(d["histogram_selected"]),
        high_discard=d["high_discard"])


def rb_result_to_dict(r: RbResult) -> dict:
    return {"sequence_lengths": r.sequence_lengths.tolist(),
            "survival": r.survival.tolist(),
            "fitted_error_per_gate": r.fitted_error_per_gate,
            "fit": list(r.fit), "degenerate_fit": r.degenerate_fit}


def rb_result_from_dict(d: dict) -> RbResult:
    return RbResult(sequence_lengths=np.asarray(d["sequence_lengths"], dtype=int),
                    survival=np.asarray(d["survival"], dtype=float),
                    fitted_error_per_gate=d["fitted_error_per_gate"],
                    fit=tuple(d["fit"]), degenerate_fit=d["degenerate_fit"])


def ga_result_to_dict(r: GaResult) -> dict:
    env = r.best_envelope
    return {"best_envelope": {"drive_freq_hz": env.drive_freq,
                              "sample_dt_s": env.sample_dt,
                              "samples_re": env.envelope.real.tolist(),
                              "samples_im": env.envelope.imag.tolist()},
            "best_fitness": r.best_fitness,
            "history": r.history,
            "evaluations": r.evaluations,
            "early_stop": r.early_stop}


def ga_result_from_dict(d: dict) -> GaResult:
    env = d["best_envelope"]
    samples = (np.asarray(env["samples_re"], dtype=float)
               + 1j * np.asarray(env["samples_im"], dtype=float))
    pulse = ReadoutPulse(env["drive_freq_hz"], samples, env["sample_dt_s"])
    return GaResult(best_envelope=pulse, best_fitness=d["best_fitness"],
                    history=d["history"], evaluations=d["evaluations"],
                    early_stop=d["early_stop"])


def make_report(protocol: str, seed: int, config_echo: dict, results: dict) -> dict:
    """Report envelope; timestamps live only under 'meta'."""
    return {"protocol": protocol,
            "seed": seed,
            "config": config_echo,
            "results": results,
            "meta": {"created_utc": datetime.now(timezone.utc).isoformat()}}


def write_report_json(path, report: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")


def read_report_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
