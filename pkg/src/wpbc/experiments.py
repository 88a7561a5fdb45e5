"""Figure-reproduction experiments: each runs a sweep, writes one CSV with a
documented header, and finishes with a run manifest carrying checksums of
every output. Identical specs reproduce byte-identical CSVs.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .analytics import benchmark_omni, closed_form_report
from .montecarlo import gap_sweep, mc_incident_power
from .optimizer import (DesignVariables, SolverParams, solve_maxmin_energy,
                        solve_maxmin_perfect, solve_maxmin_rate)
from .scenario import load_pinned_design, load_scenario

_GRID_KEYS = {"m_values", "r_values", "snr_db_values", "esnr_db_values",
              "eta_values", "delta_values"}


class ExperimentError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    """One figure-reproduction job."""

    figure_id: str
    scenario: str
    out_dir: str
    n_draws: int = 10000
    seed: int = 1234
    overrides: dict = field(default_factory=dict)
    optimize_ce: bool = False
    receiver: str = "mrc"
    estimator: str = "ls"

    def __post_init__(self):
        if self.figure_id not in FIGURES:
            raise ExperimentError(f"unknown figure id {self.figure_id!r}; "
                                  f"choose from {sorted(FIGURES)}")
        if self.n_draws < 1000 and self.figure_id in _MC_FIGURES:
            raise ExperimentError(
                f"figure {self.figure_id} is Monte-Carlo backed; need n_draws >= 1000")


def _split_overrides(overrides):
    scenario_ov, grids = {}, {}
    for key, val in overrides.items():
        if key in _GRID_KEYS:
            grids[key] = tuple(float(v) for v in str(val).split(","))
        else:
            scenario_ov[key] = val
    return scenario_ov, grids


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".10g")
    return str(v)


def _write_csv(path, columns, rows, provenance):
    lines = [f"# {line}" for line in provenance]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(row.get(col, "nan")) for col in columns))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()


def _tag_cols(prefix, values):
    return {f"{prefix}_tag{j + 1}": float(v) for j, v in enumerate(values)}


def _grid(grids, key, default):
    return grids.get(key, default)


def _run_f2(config, stats, zeta, alpha, p_ce, spec, grids):
    """Harvest-rate bounds and their gap vs transmit antennas, single tag."""
    cfg1 = config.single_tag(0)
    rows = []
    for m in _grid(grids, "m_values", (4, 8, 12, 16, 20)):
        cfg = replace(cfg1, M=int(m))
        st = cfg.link_stats()
        row = {"m_antennas": int(m)}
        for est in ("ls", "mmse"):
            rep = closed_form_report(cfg, st, np.ones(1), alpha, p_ce, est)
            mc = mc_incident_power(cfg, st, np.ones(1), alpha, p_ce, est,
                                   spec.n_draws, spec.seed)
            harvest = cfg.eta * (1 - cfg.delta[0])
            row[f"{est}_harvest_lower_w"] = float(rep.harvest_lower[0])
            row[f"{est}_harvest_upper_w"] = float(rep.harvest_upper[0])
            row[f"{est}_gap_ratio"] = float(
                rep.harvest_upper[0] / rep.harvest_lower[0] - 1.0)
            row[f"{est}_mc_harvest_w"] = float(harvest * mc.mean[0])
            row[f"{est}_mc_harvest_se_w"] = float(harvest * mc.std_error[0])
            inside = (harvest * mc.mean[0] >= rep.harvest_lower[0] - 3 * harvest * mc.std_error[0]
                      and harvest * mc.mean[0] <= rep.harvest_upper[0] + 3 * harvest * mc.std_error[0])
            row[f"{est}_mc_inside"] = int(inside)
        rows.append(row)
    cols = ["m_antennas"] + [f"{e}_{s}" for e in ("ls", "mmse") for s in (
        "harvest_lower_w", "harvest_upper_w", "gap_ratio", "mc_harvest_w",
        "mc_harvest_se_w", "mc_inside")]
    return cols, rows, ["axis: transmit antennas M (K=1 tag)"]


def _run_f3(config, stats, zeta, alpha, p_ce, spec, grids):
    """Bound-gap ratio vs estimation SNR, single tag."""
    cfg1 = config.single_tag(0)
    values = _grid(grids, "snr_db_values", tuple(np.arange(0.0, 41.0, 2.0)))
    report = gap_sweep(cfg1, cfg1.link_stats(), np.ones(1), alpha, p_ce,
                       "snr", values, spec.n_draws, spec.seed)
    rows = [{"gamma_bar_db": r["snr"], **{k: v for k, v in r.items() if k != "snr"}}
            for r in report.rows]
    cols = ["gamma_bar_db"] + [k for k in rows[0] if k != "gamma_bar_db"]
    return cols, rows, ["axis: estimation SNR (dB); delta_p is P_upper/P_lower"]


def _run_f4(config, stats, zeta, alpha, p_ce, spec, grids):
    """Simulated-rate over bound ratio vs receive antennas."""
    values = _grid(grids, "r_values", tuple(range(4, 21, 2)))
    report = gap_sweep(config, stats, zeta, alpha, p_ce, "R", values,
                       spec.n_draws, spec.seed)
    rows = [{"r_antennas": int(r["R"]), **{k: v for k, v in r.items() if k != "R"}}
            for r in report.rows]
    cols = ["r_antennas"] + [k for k in rows[0] if k != "r_antennas"]
    return cols, rows, ["axis: receive antennas R; delta_r is rate_sim/rate_bound"]


def _run_f5(config, stats, zeta, alpha, p_ce, spec, grids):
    """Simulated-rate over bound ratio vs average effective SNR."""
    values = _grid(grids, "esnr_db_values", tuple(np.arange(0.0, 41.0, 5.0)))
    report = gap_sweep(config, stats, zeta, alpha, p_ce, "effective_snr",
                       values, spec.n_draws, spec.seed)
    rows = [{"gamma_e_db": r["effective_snr"],
             **{k: v for k, v in r.items() if k != "effective_snr"}}
            for r in report.rows]
    cols = ["gamma_e_db"] + [k for k in rows[0] if k != "gamma_e_db"]
    return cols, rows, ["axis: average effective SNR (dB), swept via noise power"]


def _maxmin_rate(config, stats, recv, est, base, spec):
    return solve_maxmin_rate(config, stats, recv, est, base,
                             optimize_ce=spec.optimize_ce,
                             params=SolverParams(seed=spec.seed))


def _run_f6(config, stats, zeta, alpha, p_ce, spec, grids):
    """Max-min rate vs receive antennas for proposed/perfect/omni schemes."""
    base = DesignVariables(zeta=zeta, alpha=alpha, p_ce=p_ce)
    rows = []
    for r in _grid(grids, "r_values", tuple(range(4, 21, 2))):
        cfg = replace(config, R=int(r))
        st = cfg.link_stats()
        row = {"r_antennas": int(r)}
        for recv in ("mrc", "zf"):
            for est in ("ls", "mmse"):
                res = _maxmin_rate(cfg, st, recv, est, base, spec)
                row[f"proposed_{est}_{recv}_bps"] = res.objective
                _, rate_mrc, rate_zf = benchmark_omni(cfg, st, est, alpha, p_ce)
                omni = rate_mrc if recv == "mrc" else rate_zf
                row[f"omni_{est}_{recv}_bps"] = float(np.min(omni))
            perf = solve_maxmin_perfect(cfg, st, recv,
                                        params=SolverParams(seed=spec.seed))
            row[f"perfect_{recv}_bps"] = perf.objective
        rows.append(row)
    cols = ["r_antennas"] + [f"proposed_{e}_{r}_bps" for r in ("mrc", "zf")
                             for e in ("ls", "mmse")] + \
           ["perfect_mrc_bps", "perfect_zf_bps"] + \
           [f"omni_{e}_{r}_bps" for r in ("mrc", "zf") for e in ("ls", "mmse")]
    return cols, rows, ["axis: receive antennas R; max-min achievable rate (bits/symbol)"]


def _run_f7(config, stats, zeta, alpha, p_ce, spec, grids):
    """Minimum harvested power vs transmit antennas for the three schemes."""
    base = DesignVariables(zeta=zeta, alpha=alpha, p_ce=p_ce)
    rows = []
    for m in _grid(grids, "m_values", tuple(range(4, 21, 2))):
        cfg = replace(config, M=int(m))
        st = cfg.link_stats()
        row = {"m_antennas": int(m)}
        for est in ("ls", "mmse"):
            res = _maxmin_rate(cfg, st, spec.receiver, est, base, spec)
            row[f"proposed_{est}_w"] = float(np.min(res.per_tag_pe_lower))
            P_o, _, _ = benchmark_omni(cfg, st, est, alpha, p_ce)
            harvest = cfg.eta * (1 - np.asarray(cfg.delta))
            row[f"omni_{est}_w"] = float(np.min(harvest * P_o))
        perf = solve_maxmin_perfect(cfg, st, spec.receiver,
                                    params=SolverParams(seed=spec.seed))
        row["perfect_w"] = float(np.min(perf.per_tag_pe_lower))
        rows.append(row)
    cols = ["m_antennas", "proposed_ls_w", "proposed_mmse_w", "perfect_w",
            "omni_ls_w", "omni_mmse_w"]
    return cols, rows, [f"axis: transmit antennas M; min-tag harvested power (W); "
                        f"receiver={spec.receiver}"]


def _run_f8(config, stats, zeta, alpha, p_ce, spec, grids):
    """Per-tag rates vs receive antennas for rate- and energy-optimal designs."""
    base = DesignVariables(zeta=zeta, alpha=alpha, p_ce=p_ce)
    rows = []
    for r in _grid(grids, "r_values", tuple(range(4, 21, 2))):
        cfg = replace(config, R=int(r))
        st = cfg.link_stats()
        row = {"r_antennas": int(r)}
        for recv in ("mrc", "zf"):
            rate_res = _maxmin_rate(cfg, st, recv, spec.estimator, base, spec)
            energy_res = solve_maxmin_energy(cfg, st, spec.estimator, base,
                                             receiver=recv,
                                             optimize_ce=spec.optimize_ce,
                                             params=SolverParams(seed=spec.seed))
            row.update(_tag_cols(f"rate_design_{recv}_bps", rate_res.per_tag_rates))
            row.update(_tag_cols(f"energy_design_{recv}_bps", energy_res.per_tag_rates))
        rows.append(row)
    cols = ["r_antennas"]
    for recv in ("mrc", "zf"):
        for design in ("rate", "energy"):
            cols += [f"{design}_design_{recv}_bps_tag{j + 1}" for j in range(config.K)]
    return cols, rows, [f"axis: receive antennas R; per-tag rate (bits/symbol); "
                        f"estimator={spec.estimator}"]


def _run_f9(config, stats, zeta, alpha, p_ce, spec, grids):
    """Per-tag harvested power vs transmit antennas for the two designs."""
    base = DesignVariables(zeta=zeta, alpha=alpha, p_ce=p_ce)
    rows = []
    for m in _grid(grids, "m_values", tuple(range(4, 21, 2))):
        cfg = replace(config, M=int(m))
        st = cfg.link_stats()
        rate_res = _maxmin_rate(cfg, st, spec.receiver, spec.estimator, base, spec)
        energy_res = solve_maxmin_energy(cfg, st, spec.estimator, base,
                                         receiver=spec.receiver,
                                         optimize_ce=spec.optimize_ce,
                                         params=SolverParams(seed=spec.seed))
        row = {"m_antennas": int(m)}
        row.update(_tag_cols("rate_design_w", rate_res.per_tag_pe_lower))
        row.update(_tag_cols("energy_design_w", energy_res.per_tag_pe_lower))
        rows.append(row)
    cols = ["m_antennas"]
    for design in ("rate", "energy"):
        cols += [f"{design}_design_w_tag{j + 1}" for j in range(config.K)]
    return cols, rows, [f"axis: transmit antennas M; per-tag harvested power (W); "
                        f"receiver={spec.receiver}, estimator={spec.estimator}"]


def _run_f10(config, stats, zeta, alpha, p_ce, spec, grids):
    """Max-min rate vs rectifier efficiency and vs reflection coefficient."""
    base = DesignVariables(zeta=zeta, alpha=alpha, p_ce=p_ce)
    rows = []
    sweeps = [("eta", _grid(grids, "eta_values", tuple(np.arange(0.05, 1.001, 0.05)))),
              ("delta", _grid(grids, "delta_values", tuple(np.arange(0.05, 0.951, 0.025))))]
    for param, values in sweeps:
        for v in values:
            if param == "eta":
                cfg = replace(config, eta=float(v))
            else:
                cfg = replace(config, delta=tuple(float(v) for _ in range(config.K)))
            st = cfg.link_stats()
            row = {"param": param, "value": float(v)}
            for recv in ("mrc", "zf"):
                res = _maxmin_rate(cfg, st, recv, spec.estimator, base, spec)
                row[f"maxmin_{recv}_bps"] = res.objective if res.feasible else float("nan")
                row[f"feasible_{recv}"] = int(res.feasible)
            rows.append(row)
    cols = ["param", "value", "maxmin_mrc_bps", "maxmin_zf_bps",
            "feasible_mrc", "feasible_zf"]
    return cols, rows, [f"axis: param in (eta, delta); max-min rate (bits/symbol); "
                        f"estimator={spec.estimator}"]


FIGURES = {"F2": _run_f2, "F3": _run_f3, "F4": _run_f4, "F5": _run_f5,
           "F6": _run_f6, "F7": _run_f7, "F8": _run_f8, "F9": _run_f9,
           "F10": _run_f10}
_MC_FIGURES = {"F2", "F3", "F4", "F5"}


def run_experiment(spec):
    """Run one figure job; returns the manifest dict (also written to disk)."""
    t0 = time.monotonic()
    scenario_ov, grids = _split_overrides(spec.overrides)
    config = load_scenario(spec.scenario, scenario_ov)
    zeta, alpha, p_ce = load_pinned_design(spec.scenario, config, scenario_ov)
    stats = config.link_stats()
    os.makedirs(spec.out_dir, exist_ok=True)

    provenance = [
        f"wpbc {__version__} figure {spec.figure_id}",
        f"scenario: {os.path.basename(spec.scenario)} sha256={_sha256(spec.scenario)}",
        f"seed={spec.seed} draws={spec.n_draws} optimize_ce={spec.optimize_ce}",
        f"pinned alpha={alpha:g} p_ce={p_ce:g} (alpha*p_ce={alpha * p_ce:g})",
    ]
    cols, rows, extra = FIGURES[spec.figure_id](
        config, stats, zeta, alpha, p_ce, spec, grids)
    csv_path = os.path.join(spec.out_dir, f"{spec.figure_id}.csv")
    _write_csv(csv_path, cols, rows, provenance + extra)

    manifest = {
        "tool": "wpbc",
        "version": __version__,
        "figure": spec.figure_id,
        "scenario": {"path": spec.scenario, "sha256": _sha256(spec.scenario)},
        "resolved_config": {
            "M": config.M, "R": config.R, "K": config.K, "T": config.T,
            "w": config.w, "noise_power": config.noise_power, "eta": config.eta,
            "delta": list(config.delta), "rho": config.rho,
            "distances": list(config.distances),
            "carrier_freq": config.carrier_freq, "tau": config.tau,
        },
        "design": {"zeta": [float(z) for z in zeta], "alpha": alpha, "p_ce": p_ce,
                   "alpha_pce_product": alpha * p_ce},
        "overrides": dict(spec.overrides),
        "optimize_ce": spec.optimize_ce,
        "receiver": spec.receiver,
        "estimator": spec.estimator,
        "seed": spec.seed,
        "n_draws": spec.n_draws,
        "wall_seconds": round(time.monotonic() - t0, 3),
        "outputs": {os.path.basename(csv_path): _sha256(csv_path)},
    }
    manifest_path = os.path.join(spec.out_dir, f"{spec.figure_id}_manifest.json")
    tmp = manifest_path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, manifest_path)
    return manifest
