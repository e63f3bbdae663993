"""Acceptance suite: every shipped claim re-checked against an independent route.

Closed forms are checked against direct iteration, bisection, angle-grid
search over the beam subspace, power sweeps, and million-trial Monte Carlo.
Each criterion returns a pass/fail record with its observed worst case; the
suite serializes to a CSV body that must be byte-identical across reruns
with the same seed (criterion 10 re-runs the whole computation to prove it).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from . import channel as chan
from . import control, montecarlo, outage, pareto
from .config import Plant, SystemConfig
from .errors import InfeasibleTarget
from .scenario import Scenario

_RUNTIME_LIMITS = {1: 5.0, 2: 10.0, 5: 120.0, 8: 600.0}


@dataclass(frozen=True)
class CriterionResult:
    cid: int
    description: str
    passed: bool
    observed: str
    expected: str
    tolerance: str
    margin: float  # headroom fraction; >= 0 means inside tolerance
    runtime_s: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} criterion-{self.cid:<2d} {self.description}: "
                f"observed {self.observed}, expected {self.expected} "
                f"(tol {self.tolerance}, margin {self.margin:.3f}, {self.runtime_s:.2f}s)")


def _result(cid: int, description: str, worst: float, tol: float, expected: str,
            t0: float, extra_ok: bool = True, observed: str | None = None) -> CriterionResult:
    runtime = time.perf_counter() - t0
    limit = _RUNTIME_LIMITS.get(cid)
    passed = worst <= tol and extra_ok and (limit is None or runtime < limit)
    margin = (tol - worst) / tol if tol > 0 else (1.0 if passed else 0.0)
    return CriterionResult(cid, description, passed,
                           observed or f"worst={worst:.6g}", expected, f"{tol:g}",
                           margin, runtime)


def _rng(scn: Scenario, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=scn.seed).jumped(10_000 + stream))


def _stable_tuples(rng: np.random.Generator, n: int):
    """Random (a2, sigma_w2, s, g) with contraction factor at most 0.999."""
    out = []
    while len(out) < n:
        a2 = rng.uniform(1.05, 3.5) ** 2
        sw2 = 10.0 ** rng.uniform(-4, 0)
        s = a2 * (1.0 + 10.0 ** rng.uniform(-0.5, 2.0))
        g_min = a2 * (s - 1.0) / (s - a2)
        g = g_min * (1.0 + 10.0 ** rng.uniform(-0.3, 2.0))
        c = a2 * (1.0 / s + 1.0 / g - 1.0 / (s * g))
        if c <= 0.999:
            out.append((a2, sw2, s, g))
    return np.array(out).T


def criterion_1(scn: Scenario) -> CriterionResult:
    """Iterated variance recursion agrees with the closed-form fixed point."""
    t0 = time.perf_counter()
    a2, sw2, s, g = _stable_tuples(_rng(scn, 1), 1000)
    c = a2 * (1.0 / s + 1.0 / g - 1.0 / (s * g))
    closed = sw2 / (1.0 - c)
    v = np.ones_like(c)
    for _ in range(60000):
        v_next = c * v + sw2
        if np.max(np.abs(v_next - v) / np.maximum(v_next, sw2)) < 1e-13:
            v = v_next
            break
        v = v_next
    worst = float(np.max(np.abs(v - closed) / closed))
    # spot-check a few tuples through the scalar API as well
    for k in range(0, 1000, 250):
        plant = Plant(math.sqrt(a2[k]), 1.0, sw2[k])
        q = control.LinkQuality(s[k], g[k])
        it = control.iterate_to_steady_state(plant, q)
        worst = max(worst, abs(it - control.steady_state_variance(plant, q))
                    / control.steady_state_variance(plant, q))
    return _result(1, "fixed-point agreement on 1000 stable tuples", worst, 1e-9,
                   "relative gap <= 1e-9", t0)


def criterion_2(scn: Scenario) -> CriterionResult:
    """Classification and empirical contraction both flip across the stability boundary."""
    t0 = time.perf_counter()
    rng = _rng(scn, 2)
    ok = True
    worst_ratio_gap = math.inf
    for _ in range(20):
        a2 = rng.uniform(1.05, 3.0) ** 2
        sw2 = 10.0 ** rng.uniform(-3, -1)
        s = a2 * (1.0 + 10.0 ** rng.uniform(0.0, 1.5))
        g_th = a2 * (s - 1.0) / (s - a2)
        plant = Plant(math.sqrt(a2), 1.0, sw2)
        for side in (-1.0, 1.0):
            q = control.LinkQuality(s, g_th * (1.0 + side * 1e-6))
            stable = control.is_stable(plant, q)
            ok &= stable == (side > 0)
            v_prev2, v_prev = 0.0, sw2
            v = control.variance_step(v_prev, plant, q)
            for _ in range(10_000 - 1):
                v_prev2, v_prev = v_prev, v
                v = control.variance_step(v_prev, plant, q)
            ratio = (v - v_prev) / (v_prev - v_prev2)
            ok &= (ratio < 1.0) == (side > 0)
            worst_ratio_gap = min(worst_ratio_gap, abs(ratio - 1.0))
    return _result(2, "stability classification and recursion flip at the boundary",
                   0.0 if ok else 1.0, 0.5, "both flips consistent", t0,
                   observed=f"flips_ok={ok}, min |ratio-1|={worst_ratio_gap:.3g}")


def criterion_3(scn: Scenario) -> CriterionResult:
    """Steady state at one-sided quality 1e12 matches each asymptotic formula."""
    t0 = time.perf_counter()
    worst = 0.0
    huge = 1e12
    for a2, sw2, fq in [(2.88, 0.01, 10.0), (4.0, 1e-3, 8.0), (1.21, 0.5, 2.0)]:
        plant = Plant(math.sqrt(a2), 1.0, sw2)
        cases = [
            (control.LinkQuality(huge, huge), control.asymptotic_variance("both-high", plant)),
            (control.LinkQuality(huge, fq), control.asymptotic_variance("uplink-high", plant, fq)),
            (control.LinkQuality(fq, huge), control.asymptotic_variance("downlink-high", plant, fq)),
        ]
        for q, limit in cases:
            v = control.steady_state_variance(plant, q)
            worst = max(worst, abs(v - limit) / limit)
    return _result(3, "asymptotic regimes at one-sided quality 1e12", worst, 1e-6,
                   "relative gap <= 1e-6", t0)


def criterion_4(scn: Scenario) -> CriterionResult:
    """Variance target -> threshold quality -> variance round-trips on a 100-point grid."""
    t0 = time.perf_counter()
    plant = scn.cfg.plant
    worst = 0.0
    v_grid = plant.sigma_w2 * np.exp(np.linspace(math.log(1.2), math.log(100.0), 10))
    for v_th in v_grid:
        s_floor = plant.a2 * v_th / (v_th - plant.sigma_w2)
        for mult in np.exp(np.linspace(math.log(1.05), math.log(50.0), 10)):
            s_alpha = s_floor * mult
            g_th, _ = control.control_threshold(v_th, s_alpha, plant, scn.cfg.alpha_dn)
            v_back = control.steady_state_variance(plant, control.LinkQuality(s_alpha, g_th))
            worst = max(worst, abs(v_back - v_th) / v_th)
    return _result(4, "variance-target round-trip over a 100-point grid", worst, 1e-8,
                   "relative gap <= 1e-8", t0)


def subspace_grid_gamma_u(gamma_d: float, cfg: SystemConfig, ch: chan.ChannelPair,
                          points: int = 241, stages: int = 3) -> float:
    """Best user SINR by exhaustive angle-grid search over beams in span{h_d, h_u}.

    Each beam is an angle along the arc between the two channel directions
    (phase-aligned so the signal terms add coherently); the power split is
    pinned by the active constraints. Deliberately a different
    parameterization and code path from the solver it certifies.
    """
    p, s2 = cfg.p_dn, cfg.sigma_dn2
    rho, g_d, g_u = ch.rho, ch.g_d, ch.g_u
    sr, cr = math.sqrt(rho), math.sqrt(1.0 - rho)
    lo_t = lo_p = 0.0
    hi_t = hi_p = math.pi / 2.0
    best = 0.0
    for _ in range(stages):
        th = np.linspace(lo_t, hi_t, points)
        ph = np.linspace(lo_p, hi_p, points)
        sig_d = g_d * (np.cos(th) * sr + np.sin(th) * cr) ** 2   # device beam -> own channel
        leak_d = g_u * np.cos(th) ** 2                            # device beam -> user channel
        sig_u = g_u * (np.cos(ph) * sr + np.sin(ph) * cr) ** 2
        leak_u = g_d * np.cos(ph) ** 2
        p_d = gamma_d * (s2 + p * leak_u[None, :]) / (sig_d[:, None] + gamma_d * leak_u[None, :])
        gu = (p - p_d) * sig_u[None, :] / (p_d * leak_d[:, None] + s2)
        i, j = np.unravel_index(int(np.argmax(gu)), gu.shape)
        best = max(best, float(gu[i, j]))
        dt = (hi_t - lo_t) / (points - 1)
        dp = (hi_p - lo_p) / (points - 1)
        lo_t, hi_t = max(0.0, th[i] - 3 * dt), min(math.pi / 2.0, th[i] + 3 * dt)
        lo_p, hi_p = max(0.0, ph[j] - 3 * dp), min(math.pi / 2.0, ph[j] + 3 * dp)
    return max(best, 0.0)


def _feasible_channel(cfg: SystemConfig, rng: np.random.Generator):
    """Channel draw with a nonempty target interval (resampled as needed)."""
    while True:
        ch = chan.ChannelPair(chan.sample_channel(cfg.m, cfg.beta_d, rng),
                              chan.sample_channel(cfg.m, cfg.beta_u, rng))
        s_alpha = pareto.s_alpha_of(cfg, ch)
        if s_alpha <= cfg.plant.a2:
            continue
        g_min = control.min_stabilizing_sinr(s_alpha, cfg.plant, cfg.alpha_dn)
        g_max = pareto.gamma_d_max(cfg, ch)
        if g_max > g_min * 1.05 and ch.rho < 0.999:
            return ch, s_alpha, g_min, g_max


def criterion_5(scn: Scenario) -> CriterionResult:
    """Boundary solver beats MRT/ZF, matches the subspace grid search, has tight residuals."""
    t0 = time.perf_counter()
    cfg = scn.cfg
    rng = _rng(scn, 5)
    worst_dom = 0.0   # how far below max(MRT, ZF), relative
    worst_grid = 0.0  # relative gap to the exhaustive search
    worst_kkt = 0.0
    for _ in range(100):
        ch, s_alpha, g_min, g_max = _feasible_channel(cfg, rng)
        scale = cfg.p_dn * ch.g_u / cfg.sigma_dn2
        for gamma_d in pareto.gamma_d_grid(g_min * (1.0 + 1e-3), g_max, 20):
            gamma_d = float(min(gamma_d, g_max))
            point, report = pareto.pareto_point(gamma_d, cfg, ch, s_alpha)
            gu_star = report.gamma_u_star
            p_d, p_u = pareto.mrt_power_allocation(gamma_d, cfg, ch)
            ref = p_u * ch.g_u / (p_d * ch.rho * ch.g_u + cfg.sigma_dn2)
            if gamma_d <= pareto.gamma_d_max_zf(cfg, ch):
                p_dz, p_uz = pareto.zf_power_allocation(gamma_d, cfg, ch)
                ref = max(ref, p_uz * ch.g_u * (1.0 - ch.rho) / cfg.sigma_dn2)
            if ref > 0:
                worst_dom = max(worst_dom, (ref - gu_star) / ref)
            brute = subspace_grid_gamma_u(gamma_d, cfg, ch)
            worst_grid = max(worst_grid,
                             abs(gu_star - brute) / max(brute, 1e-9 * scale))
            worst_kkt = max(worst_kkt, *report.kkt_residuals)
    worst = max(worst_dom / 1e-6, worst_grid / 1e-4, worst_kkt / 1e-8)
    return _result(5, "boundary optimality on 100 channels x 20 targets", worst, 1.0,
                   "dominance 1e-6, grid match 1e-4, residuals 1e-8", t0,
                   observed=(f"dom={worst_dom:.3g}, grid={worst_grid:.3g}, "
                             f"kkt={worst_kkt:.3g}"))


def _channel_with_rho(cfg: SystemConfig, rho: float, rng: np.random.Generator) -> chan.ChannelPair:
    """Random pair rescaled so the correlation is exactly rho."""
    h_d = chan.sample_channel(cfg.m, cfg.beta_d, rng)
    raw = chan.sample_channel(cfg.m, cfg.beta_u, rng)
    unit_d = h_d / math.sqrt(chan.vector_power(h_d))
    par = unit_d * chan.inner_product(unit_d, raw)
    perp = raw - par
    n_par = math.sqrt(chan.vector_power(par))
    n_perp = math.sqrt(chan.vector_power(perp))
    n_raw = math.sqrt(chan.vector_power(raw))
    h_u = n_raw * (math.sqrt(rho) * par / n_par + math.sqrt(1.0 - rho) * perp / n_perp)
    return chan.ChannelPair(h_d, h_u)


def criterion_6(scn: Scenario) -> CriterionResult:
    """Closed-form MRT/ZF crossover power agrees with a 1000-point delay sweep."""
    t0 = time.perf_counter()
    cfg = scn.cfg
    rng = _rng(scn, 6)
    gamma_d = 1.0
    worst_db = 0.0
    ok = True
    for _ in range(50):
        ch = _channel_with_rho(cfg, rng.uniform(0.2, 0.8), rng)
        p_star = pareto.mrt_zf_crossover_power(gamma_d, ch, cfg.sigma_dn2)
        powers = p_star * np.logspace(-0.5, 0.5, 1000)

        def delay_gap(p_w: float) -> float:
            c = replace(cfg, p_dn=p_w)
            try:
                p_d, p_u = pareto.mrt_power_allocation(gamma_d, c, ch)
                tau_mrt = pareto.comm_delay(
                    p_u * ch.g_u / (p_d * ch.rho * ch.g_u + c.sigma_dn2), c)
            except InfeasibleTarget:
                tau_mrt = math.inf
            try:
                p_dz, p_uz = pareto.zf_power_allocation(gamma_d, c, ch)
                tau_zf = pareto.comm_delay(p_uz * ch.g_u * (1.0 - ch.rho) / c.sigma_dn2, c)
            except InfeasibleTarget:
                tau_zf = math.inf
            return tau_mrt - tau_zf

        gaps = np.array([delay_gap(p) for p in powers])
        usable = ~np.isnan(gaps)  # nan only where both schemes are infeasible
        p_use, g_use = powers[usable], gaps[usable]
        flips = np.nonzero(np.diff(np.sign(g_use)) != 0)[0]
        if len(flips) != 1:
            ok = False
            continue
        k = flips[0]
        p_cross = math.sqrt(p_use[k] * p_use[k + 1])
        worst_db = max(worst_db, abs(10.0 * math.log10(p_cross / p_star)))
        ok &= g_use[0] < 0 < g_use[-1]  # MRT better below, ZF better above
    return _result(6, "MRT/ZF crossover power vs 1000-point sweep on 50 channels",
                   worst_db, 0.1, "within 0.1 dB, one sign flip", t0, extra_ok=ok,
                   observed=f"worst |gap| = {worst_db:.4g} dB, orientation_ok={ok}")


def criterion_7(scn: Scenario) -> CriterionResult:
    """With orthogonal channels, optimal, MRT and ZF points coincide."""
    t0 = time.perf_counter()
    cfg = scn.cfg
    rng = _rng(scn, 7)
    half = cfg.m // 2
    h_d = np.zeros(cfg.m, dtype=np.complex128)
    h_u = np.zeros(cfg.m, dtype=np.complex128)
    h_d[:half] = chan.sample_channel(half, cfg.beta_d, rng)
    h_u[half:] = chan.sample_channel(cfg.m - half, cfg.beta_u, rng)
    ch = chan.ChannelPair(h_d, h_u)
    s_alpha = pareto.s_alpha_of(cfg, ch)
    g_min = control.min_stabilizing_sinr(s_alpha, cfg.plant, cfg.alpha_dn)
    g_max = pareto.gamma_d_max(cfg, ch)
    worst = 0.0
    for gamma_d in pareto.gamma_d_grid(g_min * 1.01, g_max * 0.9, 5):
        p_point, _ = pareto.pareto_point(float(gamma_d), cfg, ch, s_alpha)
        m_point = pareto.mrt_region_point(float(gamma_d), cfg, ch, s_alpha)
        z_point = pareto.zf_region_point(float(gamma_d), cfg, ch, s_alpha)
        for a, b in ((p_point, m_point), (p_point, z_point), (m_point, z_point)):
            worst = max(worst, abs(a.tau_u - b.tau_u) / b.tau_u,
                        abs(a.v_inf - b.v_inf) / b.v_inf)
    return _result(7, "orthogonal-channel coincidence of all three schemes", worst,
                   1e-10, "relative gap <= 1e-10", t0)


def criterion_8(scn: Scenario, trials: int) -> CriterionResult:
    """Analytic outage formulas match million-trial sampling on the power grid."""
    t0 = time.perf_counter()
    base = scn.cfg
    spec = outage.OutageSpec(scn.tau_req, scn.v_req)
    m_list = scn["outage.m_list"]
    p_grid_dbm = np.linspace(scn["outage.p_dn_dbm_min"], scn["outage.p_dn_dbm_max"],
                             scn["outage.p_dn_points"])
    worst = 0.0   # |analytic - mc| / max(3 se, 5e-3)
    ctrl_end: dict[int, float] = {}
    containment_ok = True
    seed_counter = 0
    for m in m_list:
        for p_dbm in p_grid_dbm:
            cfg = replace(base, m=m, p_dn=10.0 ** ((p_dbm - 30.0) / 10.0))
            analytic = {
                "comm": outage.comm_only_outage(spec, cfg),
                "ctrl": outage.control_only_outage(spec, cfg),
                "mrt": outage.joint_outage_mrt(spec, cfg),
                "zf": outage.joint_outage_zf(spec, cfg),
            }
            estimators = {
                "comm": montecarlo.estimate_comm_outage,
                "ctrl": montecarlo.estimate_control_outage,
                "mrt": lambda s, c, n, sd: montecarlo.estimate_joint_outage("mrt", s, c, n, sd),
                "zf": lambda s, c, n, sd: montecarlo.estimate_joint_outage("zf", s, c, n, sd),
            }
            for name, est_fn in estimators.items():
                est = est_fn(spec, cfg, trials, scn.seed + seed_counter)
                seed_counter += 1
                tol = max(3.0 * est.std_error, 5e-3)
                worst = max(worst, abs(analytic[name] - est.value) / tol)
            floor = max(analytic["comm"], analytic["ctrl"])
            containment_ok &= analytic["mrt"] >= floor - 1e-5
            containment_ok &= analytic["zf"] >= floor - 1e-5
        ctrl_end[m] = outage.control_only_outage(
            spec, replace(base, m=m, p_dn=10.0 ** ((p_grid_dbm[-1] - 30.0) / 10.0)))
    # High-power behavior: M=4 flattens onto the uplink-limited floor,
    # M=6 ends far below that floor.
    th = outage.comm_thresholds(spec, base)
    floor4 = chan.gamma_cdf(min(m_list), th.eta_v)
    quality_ok = (abs(ctrl_end[min(m_list)] - floor4) <= 0.05 * floor4
                  and ctrl_end[max(m_list)] <= 0.1 * floor4)
    return _result(8, "analytic vs Monte Carlo outage on the power grid", worst, 1.0,
                   "each within max(3 se, 5e-3); floor + containment", t0,
                   extra_ok=containment_ok and quality_ok,
                   observed=(f"worst_dev={worst:.3g} of tolerance, "
                             f"floor_ok={quality_ok}, containment_ok={containment_ok}"))


# Spot anchors recomputed by the named independent oracles before freezing:
# quadrature of the gain density for the CDF value, high-precision arithmetic
# for the threshold pair, fixed-point iteration for the variance.
_ANCHOR_CDF_4_4 = 0.566529879633291
_ANCHOR_V_INF = 0.022084805653710247


def criterion_9(scn: Scenario) -> CriterionResult:
    """Frozen numeric anchors at the default scenario."""
    t0 = time.perf_counter()
    cfg = scn.cfg
    worst = 0.0
    worst = max(worst, abs(chan.gamma_cdf(4, 4.0) - _ANCHOR_CDF_4_4) / 1e-5)
    spec = outage.OutageSpec(0.010, 3.0 * cfg.plant.sigma_w2)
    th = outage.comm_thresholds(spec, cfg)
    worst = max(worst, abs(th.gamma_u_req - 31.0) / 31.0 / 1e-9)
    worst = max(worst, abs(th.eta_u - 6.2) / 6.2 / 1e-9)
    plant = Plant(math.sqrt(2.88), 1.0, 0.01)
    v = control.steady_state_variance(plant, control.LinkQuality(10.0, 10.0))
    worst = max(worst, abs(v - _ANCHOR_V_INF) / 1e-6)
    return _result(9, "spot numeric anchors", worst, 1.0,
                   "F_G(4;4), gamma_u_req, eta_u, V_inf anchors", t0)


def _run_once(scn: Scenario, trials: int) -> list[CriterionResult]:
    return [
        criterion_1(scn), criterion_2(scn), criterion_3(scn), criterion_4(scn),
        criterion_5(scn), criterion_6(scn), criterion_7(scn), criterion_8(scn, trials),
        criterion_9(scn),
    ]


def csv_rows(results: list[CriterionResult]) -> list[list[str]]:
    """Deterministic report rows (runtimes deliberately excluded)."""
    return [[str(r.cid), r.description, "PASS" if r.passed else "FAIL",
             r.observed, r.expected, r.tolerance, repr(r.margin)] for r in results]


def _body(results: list[CriterionResult]) -> str:
    return "\n".join(",".join(row) for row in csv_rows(results))


def run_acceptance(scn: Scenario, trials: int | None = None,
                   progress=None) -> list[CriterionResult]:
    """All ten criteria; the tenth recomputes the suite to prove byte-level determinism."""
    trials = trials if trials is not None else 10 ** 6
    first = _run_once(scn, trials)
    if progress:
        for r in first:
            progress(r)
    t0 = time.perf_counter()
    second = _run_once(scn, trials)
    identical = _body(first) == _body(second)
    c10 = CriterionResult(10, "byte-identical report on rerun with the same seed",
                          identical, f"identical={identical}", "identical=True", "exact",
                          1.0 if identical else 0.0, time.perf_counter() - t0)
    if progress:
        progress(c10)
    return first + [c10]
