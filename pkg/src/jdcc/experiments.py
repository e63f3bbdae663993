"""Named experiments: each subcommand evaluates one figure-style sweep and writes CSV.

Every file starts with a comment block carrying the scenario hash, the seed
and the code version, then a header row. All values are formatted with
round-trip repr so identical runs produce byte-identical files; unbounded
metrics appear as the literal token `inf`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import control, montecarlo, outage, pareto
from .channel import downlink_sinrs, uplink_snr
from .config import dbm_to_watt
from .errors import DomainError, InfeasibleTarget, UnstableLoop
from .scenario import Scenario, channel_for


def _fmt(value) -> str:
    if isinstance(value, (np.floating, np.integer)):
        value = value.item()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, header: list[str], rows, meta: dict) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for key, value in meta.items():
            fh.write(f"# {key}: {value}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def _meta(scn: Scenario, **extra) -> dict:
    meta = {"scenario_hash": scn.hash(), "seed": scn.seed, "code_version": __version__}
    meta.update(extra)
    return meta


def _control_beams(scn: Scenario, ch):
    return pareto._mrt_beams(scn.cfg, ch, scn.cfg.p_dn, 0.0)


def run_trajectory(scn: Scenario, out_dir: Path) -> list[Path]:
    """Analytic variance recursion vs its Monte Carlo sampling, interval by interval."""
    cfg = scn.cfg
    ch = channel_for(scn)
    bf = _control_beams(scn, ch)
    n_steps = scn["trajectory.n_steps"]
    v0 = scn["trajectory.v0"]
    s_alpha = (1.0 + uplink_snr(cfg, ch)) ** cfg.alpha_up
    _, sinr_d = downlink_sinrs(ch, bf, cfg.sigma_dn2)
    q = control.LinkQuality(s_alpha, (1.0 + sinr_d) ** cfg.alpha_dn)
    analytic = control.variance_trajectory(v0, n_steps, cfg.plant, q)
    sim = montecarlo.simulate_closed_loop(cfg, ch, bf, n_steps, scn.trials, scn.seed, v0)
    rows = [[n, analytic[n], sim.values[n], sim.std_errors[n]] for n in range(n_steps + 1)]
    path = write_csv(out_dir / "trajectory.csv",
                     ["n", "v_analytic", "v_mc", "v_mc_stderr"], rows,
                     _meta(scn, trials=scn.trials, diverged=sim.diverged,
                           s_alpha=_fmt(q.s_alpha), gamma_alpha=_fmt(q.gamma_alpha)))
    return [path]


def run_stability_map(scn: Scenario, out_dir: Path) -> list[Path]:
    """Steady-state variance over an uplink-SNR x downlink-SINR grid, plus the boundary curve."""
    cfg = scn.cfg
    n = scn.grid
    snr_db = np.linspace(scn["stability.snr_db_min"], scn["stability.snr_db_max"], n)
    sinr_db = np.linspace(scn["stability.sinr_db_min"], scn["stability.sinr_db_max"], n)
    rows = []
    for s_db in snr_db:
        for g_db in sinr_db:
            q = control.link_quality(10.0 ** (s_db / 10.0), 10.0 ** (g_db / 10.0),
                                     cfg.alpha_up, cfg.alpha_dn)
            stable = control.is_stable(cfg.plant, q)
            v = control.steady_state_variance(cfg.plant, q) if stable else math.inf
            rows.append([s_db, g_db, int(stable), v])
    map_path = write_csv(out_dir / "stability_map.csv",
                         ["snr_up_db", "sinr_dn_db", "stable", "v_inf"], rows, _meta(scn))

    boundary = []
    for s_db in np.linspace(scn["stability.snr_db_min"], scn["stability.snr_db_max"], 10 * n):
        s_alpha = (1.0 + 10.0 ** (s_db / 10.0)) ** cfg.alpha_up
        if s_alpha <= cfg.plant.a2:
            continue
        gamma_min = control.min_stabilizing_sinr(s_alpha, cfg.plant, cfg.alpha_dn)
        boundary.append([s_db, 10.0 * math.log10(gamma_min)])
    b_path = write_csv(out_dir / "stability_boundary.csv",
                       ["snr_up_db", "sinr_dn_boundary_db"], boundary, _meta(scn))
    return [map_path, b_path]


def run_asymptotics(scn: Scenario, out_dir: Path) -> list[Path]:
    """Exact steady state against its three high-quality limits."""
    cfg = scn.cfg
    plant = cfg.plant
    fixed = 10.0 ** (scn["asymptotics.fixed_quality_db"] / 10.0)
    fixed_up = (1.0 + fixed) ** cfg.alpha_up
    fixed_dn = (1.0 + fixed) ** cfg.alpha_dn
    rows = []
    for g_db in np.linspace(scn["asymptotics.gamma_db_min"], scn["asymptotics.gamma_db_max"],
                            scn.grid):
        g = 10.0 ** (g_db / 10.0)
        cases = {
            "both-high": (control.LinkQuality((1.0 + g) ** cfg.alpha_up,
                                              (1.0 + g) ** cfg.alpha_dn),
                          control.asymptotic_variance("both-high", plant)),
            "uplink-high": (control.LinkQuality((1.0 + g) ** cfg.alpha_up, fixed_dn),
                            control.asymptotic_variance("uplink-high", plant, fixed_dn)),
            "downlink-high": (control.LinkQuality(fixed_up, (1.0 + g) ** cfg.alpha_dn),
                              control.asymptotic_variance("downlink-high", plant, fixed_up)),
        }
        for regime, (q, limit) in cases.items():
            v = (control.steady_state_variance(plant, q)
                 if control.is_stable(plant, q) else math.inf)
            rows.append([regime, g_db, v, limit])
    path = write_csv(out_dir / "asymptotics.csv",
                     ["regime", "gamma_db", "v_inf_exact", "v_inf_asymptotic"], rows,
                     _meta(scn, fixed_quality_db=scn["asymptotics.fixed_quality_db"]))
    return [path]


def run_regions(scn: Scenario, out_dir: Path) -> list[Path]:
    """Trade-off sweeps for the three schemes plus the two single-function endpoints."""
    cfg = scn.cfg
    ch = channel_for(scn)
    s_alpha = pareto.s_alpha_of(cfg, ch)
    rows = []

    rows.append(_point_row(pareto.comm_only_point(cfg, ch)))
    try:
        rows.append(_point_row(pareto.control_only_point(cfg, ch)))
    except InfeasibleTarget as exc:
        rows.append(["ctrl-only", math.inf, "", "", "", "", f"InfeasibleTarget: {exc}"])

    if s_alpha > cfg.plant.a2:
        g_min = control.min_stabilizing_sinr(s_alpha, cfg.plant, cfg.alpha_dn)
        for scheme, g_max in (("pareto", pareto.gamma_d_max(cfg, ch)),
                              ("mrt", pareto.gamma_d_max(cfg, ch)),
                              ("zf", pareto.gamma_d_max_zf(cfg, ch))):
            if g_max <= g_min:
                continue
            grid = pareto.gamma_d_grid(g_min * (1.0 + 1e-3), g_max, scn.grid)
            for entry in pareto.sweep_boundary(scheme, grid, cfg, ch, s_alpha):
                if entry.point is not None:
                    rows.append(_point_row(entry.point))
                else:
                    rows.append([scheme, entry.gamma_d, "", "", "", "", entry.error])
    path = write_csv(out_dir / "regions.csv",
                     ["scheme", "gamma_d", "tau_u", "v_inf", "p_d", "p_u", "error"], rows,
                     _meta(scn, rho=_fmt(ch.rho), s_alpha=_fmt(s_alpha)))
    return [path]


def _point_row(point: pareto.TradeoffPoint) -> list:
    return [point.scheme, point.gamma_d, point.tau_u, point.v_inf,
            point.power_split[0], point.power_split[1], ""]


def run_crossover(scn: Scenario, out_dir: Path) -> list[Path]:
    """Delay vs downlink budget for all schemes at a fixed device-SINR target."""
    cfg = scn.cfg
    ch = channel_for(scn)
    gamma_d = 10.0 ** (scn["sweep.gamma_d_db"] / 10.0)
    p_star = pareto.mrt_zf_crossover_power(gamma_d, ch, cfg.sigma_dn2)
    s_alpha = pareto.s_alpha_of(cfg, ch)
    rows = []
    for p_dbm in np.linspace(scn["sweep.p_dn_dbm_min"], scn["sweep.p_dn_dbm_max"],
                             scn.grid):
        c = replace(cfg, p_dn=dbm_to_watt(float(p_dbm)))
        taus = {}
        for scheme, fn in (("mrt", pareto.mrt_region_point),
                           ("zf", pareto.zf_region_point)):
            try:
                taus[scheme] = fn(gamma_d, c, ch, s_alpha).tau_u
            except (InfeasibleTarget, UnstableLoop, DomainError):
                taus[scheme] = math.inf
        try:
            taus["pareto"] = pareto.pareto_point(gamma_d, c, ch, s_alpha)[0].tau_u
        except (InfeasibleTarget, DomainError):
            taus["pareto"] = math.inf
        rows.append([p_dbm, taus["mrt"], taus["zf"], taus["pareto"]])
    meta = _meta(scn, gamma_d=_fmt(gamma_d), rho=_fmt(ch.rho),
                 crossover_p_dbm=_fmt(10.0 * math.log10(p_star) + 30.0)
                 if p_star is not None else "none")
    path = write_csv(out_dir / "crossover.csv",
                     ["p_dn_dbm", "tau_mrt", "tau_zf", "tau_pareto"], rows, meta)
    return [path]


def run_outage_single(scn: Scenario, out_dir: Path) -> list[Path]:
    """Single-function outage vs downlink budget for each antenna count, with sampling."""
    base = scn.cfg
    spec = outage.OutageSpec(scn.tau_req, scn.v_req)
    rows = []
    seed_counter = 0
    for m in scn["outage.m_list"]:
        for p_dbm in np.linspace(scn["outage.p_dn_dbm_min"], scn["outage.p_dn_dbm_max"],
                                 scn["outage.p_dn_points"]):
            cfg = replace(base, m=m, p_dn=dbm_to_watt(float(p_dbm)))
            comm = outage.comm_only_outage(spec, cfg)
            ctrl = outage.control_only_outage(spec, cfg)
            comm_mc = montecarlo.estimate_comm_outage(spec, cfg, scn.trials,
                                                      scn.seed + seed_counter)
            ctrl_mc = montecarlo.estimate_control_outage(spec, cfg, scn.trials,
                                                         scn.seed + seed_counter + 1)
            seed_counter += 2
            rows.append([m, p_dbm, comm, comm_mc.value, comm_mc.std_error,
                         ctrl, ctrl_mc.value, ctrl_mc.std_error])
    path = write_csv(out_dir / "outage_single.csv",
                     ["m", "p_dn_dbm", "comm_analytic", "comm_mc", "comm_mc_stderr",
                      "ctrl_analytic", "ctrl_mc", "ctrl_mc_stderr"], rows,
                     _meta(scn, tau_req_s=_fmt(spec.tau_req), v_req=_fmt(spec.v_req),
                           trials=scn.trials))
    return [path]


def run_outage_joint(scn: Scenario, out_dir: Path) -> list[Path]:
    """Joint outage surfaces over the requirement grid for both beam schemes, with sampling."""
    cfg = scn.cfg
    n = scn["joint.grid"]
    taus = np.exp(np.linspace(math.log(scn["joint.tau_min_s"]),
                              math.log(scn["joint.tau_max_s"]), n))
    v_reqs = cfg.plant.sigma_w2 * np.exp(np.linspace(
        math.log(scn["joint.v_mult_min"]), math.log(scn["joint.v_mult_max"]), n))
    rows = []
    seed_counter = 0
    for scheme, analytic_fn in (("mrt", outage.joint_outage_mrt),
                                ("zf", outage.joint_outage_zf)):
        for tau in taus:
            for v_req in v_reqs:
                spec = outage.OutageSpec(float(tau), float(v_req))
                p_out = analytic_fn(spec, cfg)
                est = montecarlo.estimate_joint_outage(scheme, spec, cfg, scn.trials,
                                                       scn.seed + seed_counter)
                seed_counter += 1
                rows.append([scheme, tau, v_req, p_out, est.value, est.std_error])
    path = write_csv(out_dir / "outage_joint.csv",
                     ["scheme", "tau_req_s", "v_req", "p_out_analytic", "p_out_mc",
                      "p_out_mc_stderr"], rows, _meta(scn, trials=scn.trials))
    return [path]


def write_validation_report(results, scn: Scenario, out_dir: Path) -> Path:
    from .validate import csv_rows
    return write_csv(out_dir / "validation_report.csv",
                     ["criterion", "description", "status", "observed", "expected",
                      "tolerance", "margin"],
                     csv_rows(results), _meta(scn))
