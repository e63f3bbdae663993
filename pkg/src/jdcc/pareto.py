"""Delay / control-error trade-off: single-function limits, optimal boundary, MRT and ZF regions.

A boundary point fixes a target device SINR gamma_d and asks for the largest
user SINR the downlink can simultaneously deliver under the sum-power budget.
MRT and ZF fix the beam directions and leave only the power split, which has
a closed form. The optimal point additionally searches over beam directions;
the optimum lies in the two-parameter family

    w ~ (I + mu * h_other h_other^H)^{-1} h_own,

which interpolates from MRT (mu = 0) to ZF (mu -> inf), with both constraints
active so the power split is the solution of a 2x2 linear system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import Beamformer, ChannelPair, downlink_sinrs, inner_product, uplink_snr, vector_power
from .config import SystemConfig
from .control import LinkQuality, is_stable, min_stabilizing_sinr, steady_state_variance
from .errors import DomainError, InfeasibleTarget, SolverFailure, UnstableLoop

_NM_MAX_ITER = 600
_NM_BOX = 1e-10  # simplex diameter at which refinement stops


@dataclass(frozen=True)
class TradeoffPoint:
    """One (gamma_d, tau_u, v_inf) operating point; math.inf marks an unbounded metric."""

    gamma_d: float
    tau_u: float
    v_inf: float
    scheme: str  # pareto | mrt | zf | comm-only | ctrl-only
    power_split: tuple[float, float]  # (p_d, p_u) watts
    beams: Beamformer | None = None


@dataclass(frozen=True)
class ParetoSolverReport:
    """Diagnostics for one boundary solve."""

    gamma_u_star: float
    mu_u: float
    mu_d: float
    kkt_residuals: tuple[float, float]  # (power slack, control-SINR slack), relative
    iterations: int
    lambda_star: float = 0.0  # multipliers under the nu_star = 1 normalization
    nu_star: float = 1.0


@dataclass(frozen=True)
class SweepEntry:
    """Result slot for one grid value: either a point or the error that stopped it."""

    gamma_d: float
    point: TradeoffPoint | None
    error: str | None = None


def comm_delay(gamma_u: float, cfg: SystemConfig) -> float:
    """Time to push q_u bits at rate b_dn * log2(1 + gamma_u); inf at zero SINR."""
    if gamma_u < 0:
        raise DomainError(f"gamma_u must be nonnegative, got {gamma_u}")
    if gamma_u == 0.0:
        return math.inf
    return cfg.q_u / (cfg.b_dn * math.log2(1.0 + gamma_u))


def s_alpha_of(cfg: SystemConfig, ch: ChannelPair) -> float:
    """Uplink quality factor (1 + SNR)^alpha_up for this channel draw."""
    return (1.0 + uplink_snr(cfg, ch)) ** cfg.alpha_up


def gamma_d_max(cfg: SystemConfig, ch: ChannelPair) -> float:
    """Largest device SINR, attained with the full budget on an aligned beam."""
    return cfg.p_dn * ch.g_d / cfg.sigma_dn2


def gamma_d_max_zf(cfg: SystemConfig, ch: ChannelPair) -> float:
    """Largest device SINR reachable with the projected (interference-free) beam."""
    return (1.0 - ch.rho) * cfg.p_dn * ch.g_d / cfg.sigma_dn2


def _mrt_beams(cfg: SystemConfig, ch: ChannelPair, p_d: float, p_u: float) -> Beamformer:
    w_d = math.sqrt(p_d / ch.g_d) * ch.h_d if p_d > 0 else np.zeros_like(ch.h_d)
    w_u = math.sqrt(p_u / ch.g_u) * ch.h_u if p_u > 0 else np.zeros_like(ch.h_u)
    return Beamformer(w_d, w_u, cfg.p_dn)


def comm_only_point(cfg: SystemConfig, ch: ChannelPair) -> TradeoffPoint:
    """All power on the user: minimum delay, no control signal, unbounded variance."""
    gamma_u = cfg.p_dn * ch.g_u / cfg.sigma_dn2
    beams = _mrt_beams(cfg, ch, 0.0, cfg.p_dn) if ch.g_u > 0 else None
    return TradeoffPoint(0.0, comm_delay(gamma_u, cfg), math.inf, "comm-only",
                         (0.0, cfg.p_dn), beams)


def control_only_point(cfg: SystemConfig, ch: ChannelPair) -> TradeoffPoint:
    """All power on the device: best reachable variance, no payload delivery."""
    s_alpha = s_alpha_of(cfg, ch)
    gamma_alpha_max = (1.0 + gamma_d_max(cfg, ch)) ** cfg.alpha_dn
    q = LinkQuality(s_alpha, gamma_alpha_max)
    if not is_stable(cfg.plant, q):
        raise InfeasibleTarget(
            "links cannot stabilize the plant even with the full budget on the device "
            f"(S={s_alpha:.4g}, G_max={gamma_alpha_max:.4g}, |a|^2={cfg.plant.a2:.4g})")
    v_min = steady_state_variance(cfg.plant, q)
    return TradeoffPoint(gamma_d_max(cfg, ch), math.inf, v_min, "ctrl-only",
                         (cfg.p_dn, 0.0), _mrt_beams(cfg, ch, cfg.p_dn, 0.0))


def mrt_power_allocation(gamma_d: float, cfg: SystemConfig, ch: ChannelPair) -> tuple[float, float]:
    """Power split meeting the device-SINR target with equality under aligned beams."""
    g_max = gamma_d_max(cfg, ch)
    if not 0.0 < gamma_d <= g_max * (1.0 + 1e-12):
        raise InfeasibleTarget(
            f"gamma_d = {gamma_d:.6g} outside the MRT-feasible interval (0, {g_max:.6g}]")
    p_d = (gamma_d * (cfg.p_dn * ch.rho * ch.g_d + cfg.sigma_dn2)
           / (ch.g_d * (1.0 + gamma_d * ch.rho)))
    p_d = min(p_d, cfg.p_dn)
    return p_d, cfg.p_dn - p_d


def zf_power_allocation(gamma_d: float, cfg: SystemConfig, ch: ChannelPair) -> tuple[float, float]:
    """Power split meeting the device-SINR target with projected (zero-leakage) beams."""
    if ch.rho >= 1.0:
        raise DomainError("ZF undefined for fully correlated channels (rho = 1)")
    g_max = gamma_d_max_zf(cfg, ch)
    if not 0.0 < gamma_d <= g_max * (1.0 + 1e-12):
        raise InfeasibleTarget(
            f"gamma_d = {gamma_d:.6g} outside the ZF-feasible interval (0, {g_max:.6g}]")
    p_d = gamma_d * cfg.sigma_dn2 / (ch.g_d * (1.0 - ch.rho))
    p_d = min(p_d, cfg.p_dn)
    return p_d, cfg.p_dn - p_d


def _check_stability_target(gamma_d: float, cfg: SystemConfig, s_alpha: float) -> LinkQuality:
    q = LinkQuality(s_alpha, (1.0 + gamma_d) ** cfg.alpha_dn)
    if not is_stable(cfg.plant, q):
        raise InfeasibleTarget(
            f"gamma_d = {gamma_d:.6g} is below the stabilizing minimum "
            f"{min_stabilizing_sinr(s_alpha, cfg.plant, cfg.alpha_dn):.6g}"
            if s_alpha > cfg.plant.a2 else
            f"uplink quality {s_alpha:.6g} <= |a|^2, no gamma_d stabilizes the loop")
    return q


def mrt_region_point(gamma_d: float, cfg: SystemConfig, ch: ChannelPair,
                     s_alpha: float) -> TradeoffPoint:
    """Boundary point of the aligned-beam region at the given device-SINR target."""
    q = _check_stability_target(gamma_d, cfg, s_alpha)
    p_d, p_u = mrt_power_allocation(gamma_d, cfg, ch)
    gamma_u = p_u * ch.g_u / (p_d * ch.rho * ch.g_u + cfg.sigma_dn2)
    return TradeoffPoint(gamma_d, comm_delay(gamma_u, cfg),
                         steady_state_variance(cfg.plant, q), "mrt",
                         (p_d, p_u), _mrt_beams(cfg, ch, p_d, p_u))


def _zf_beams(cfg: SystemConfig, ch: ChannelPair, p_d: float, p_u: float) -> Beamformer:
    v_d = regularized_direction(ch.h_d, ch.h_u, math.inf)
    v_u = regularized_direction(ch.h_u, ch.h_d, math.inf)
    return Beamformer(math.sqrt(p_d) * v_d, math.sqrt(p_u) * v_u, cfg.p_dn)


def zf_region_point(gamma_d: float, cfg: SystemConfig, ch: ChannelPair,
                    s_alpha: float) -> TradeoffPoint:
    """Boundary point of the projected-beam region at the given device-SINR target."""
    q = _check_stability_target(gamma_d, cfg, s_alpha)
    p_d, p_u = zf_power_allocation(gamma_d, cfg, ch)
    gamma_u = p_u * ch.g_u * (1.0 - ch.rho) / cfg.sigma_dn2
    return TradeoffPoint(gamma_d, comm_delay(gamma_u, cfg),
                         steady_state_variance(cfg.plant, q), "zf",
                         (p_d, p_u), _zf_beams(cfg, ch, p_d, p_u))


def regularized_direction(h_target: np.ndarray, h_interf: np.ndarray, mu: float) -> np.ndarray:
    """Unit vector along (I + mu h_i h_i^H)^{-1} h_t via the rank-one inverse identity.

    mu = 0 gives the aligned (MRT) direction, mu = inf the exact orthogonal
    projection (ZF); intermediate values trade array gain against leakage.
    """
    h_t = np.asarray(h_target, dtype=np.complex128)
    h_i = np.asarray(h_interf, dtype=np.complex128)
    g_t = vector_power(h_t)
    if g_t == 0.0:
        raise DomainError("h_target must be nonzero")
    if mu < 0:
        raise DomainError(f"mu must be nonnegative, got {mu}")
    g_i = vector_power(h_i)
    if g_i == 0.0:
        d = h_t
    elif math.isinf(mu):
        d = h_t - h_i * (inner_product(h_i, h_t) / g_i)
    else:
        d = h_t - h_i * (mu * inner_product(h_i, h_t) / (1.0 + mu * g_i))
    norm2 = vector_power(d)
    if norm2 <= g_t * 1e-28:
        raise DomainError("direction degenerates: h_target lies in span(h_interf)")
    return d / math.sqrt(norm2)


# --- optimal boundary solver -------------------------------------------------
#
# Directions are parameterized by t = mu / (1 + mu) in [0, 1] per beam. All
# beam-channel powers reduce to scalars in (g_d, g_u, |h_u^H h_d|^2), so the
# objective needs no vector algebra; the final point is rebuilt from explicit
# vectors as a consistency check.

def _direction_gains(t, g_own: float, g_other: float, c2: float):
    """(|h_own^H v|^2, |h_other^H v|^2) for the regularized direction at parameter t.

    t in [0, 1] maps to mu = t / ((1 - t) g_other), so t = 1/2 puts the
    dimensionless knob mu * ||h_other||^2 at 1 regardless of the absolute
    gain scale. Accepts scalar or ndarray t; c2 = |h_other^H h_own|^2.
    """
    t = np.asarray(t, dtype=float)
    k = t / g_other  # mu / (1 + mu g_other)
    norm2 = g_own - 2.0 * k * c2 + k * k * c2 * g_other
    sig = (g_own - k * c2) ** 2 / norm2
    leak = c2 * (1.0 - t) ** 2 / norm2
    return sig, leak


def _gamma_u_of(t_u, t_d, gamma_d: float, p_dn: float, sigma2: float,
                g_d: float, g_u: float, c2: float):
    """User SINR at the active-constraint power split; negative when infeasible."""
    sig_d, leak_d = _direction_gains(t_u, g_d, g_u, c2)   # device beam, regularized vs user
    sig_u, leak_u = _direction_gains(t_d, g_u, g_d, c2)   # user beam, regularized vs device
    p_d = gamma_d * (sigma2 + p_dn * leak_u) / (sig_d + gamma_d * leak_u)
    p_u = p_dn - p_d
    return p_u * sig_u / (p_d * leak_d + sigma2)


def _nelder_mead_2d(fn, x0: np.ndarray, step: float) -> tuple[np.ndarray, float, int]:
    """Maximize fn over [0,1]^2 from x0; returns (best x, best value, evals)."""
    def f(x):
        return fn(np.clip(x, 0.0, 1.0))

    simplex = [np.clip(x0, 0.0, 1.0)]
    for k in range(2):
        v = simplex[0].copy()
        v[k] = v[k] + step if v[k] + step <= 1.0 else v[k] - step
        simplex.append(v)
    values = [f(v) for v in simplex]
    evals = 3
    for _ in range(_NM_MAX_ITER):
        order = np.argsort(values)[::-1]  # descending: best first
        simplex = [simplex[i] for i in order]
        values = [values[i] for i in order]
        diam = max(np.max(np.abs(simplex[i] - simplex[0])) for i in (1, 2))
        if diam < _NM_BOX:
            break
        centroid = (simplex[0] + simplex[1]) / 2.0
        worst = simplex[2]
        refl = centroid + (centroid - worst)
        f_refl = f(refl)
        evals += 1
        if f_refl > values[0]:
            expd = centroid + 2.0 * (centroid - worst)
            f_expd = f(expd)
            evals += 1
            simplex[2], values[2] = (expd, f_expd) if f_expd > f_refl else (refl, f_refl)
        elif f_refl > values[1]:
            simplex[2], values[2] = refl, f_refl
        else:
            contr = centroid + 0.5 * (worst - centroid)
            f_contr = f(contr)
            evals += 1
            if f_contr > values[2]:
                simplex[2], values[2] = contr, f_contr
            else:  # shrink toward the best vertex
                for i in (1, 2):
                    simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0])
                    values[i] = f(simplex[i])
                evals += 2
    best = int(np.argmax(values))
    return np.clip(simplex[best], 0.0, 1.0), values[best], evals


def pareto_point(gamma_d: float, cfg: SystemConfig, ch: ChannelPair, s_alpha: float,
                 coarse: int = 64) -> tuple[TradeoffPoint, ParetoSolverReport]:
    """Boundary point with the best achievable user SINR at the device-SINR target.

    Coarse grid over the direction parameters, then simplex refinement; both
    the power and device-SINR constraints are active at the returned point
    by construction, and the residuals are re-measured from explicit beam
    vectors before returning.
    """
    q = _check_stability_target(gamma_d, cfg, s_alpha)
    g_max = gamma_d_max(cfg, ch)
    if gamma_d > g_max * (1.0 + 1e-12):
        raise InfeasibleTarget(
            f"gamma_d = {gamma_d:.6g} exceeds the full-power maximum {g_max:.6g}")
    if ch.rho >= 1.0 - 1e-14:
        raise DomainError("boundary solver undefined for fully correlated channels")

    p_dn, sigma2 = cfg.p_dn, cfg.sigma_dn2
    c2 = ch.rho * ch.g_d * ch.g_u

    def objective(x) -> float:
        val = _gamma_u_of(x[0], x[1], gamma_d, p_dn, sigma2, ch.g_d, ch.g_u, c2)
        return float(val)

    t = np.linspace(0.0, 1.0, coarse)
    grid = _gamma_u_of(t[:, None], t[None, :], gamma_d, p_dn, sigma2, ch.g_d, ch.g_u, c2)
    i, j = np.unravel_index(int(np.argmax(grid)), grid.shape)
    evals = coarse * coarse
    x, value, nm_evals = _nelder_mead_2d(objective, np.array([t[i], t[j]]), step=1.0 / coarse)
    evals += nm_evals
    gamma_u_star = max(value, 0.0)

    # Rebuild the point from explicit vectors and re-derive the exact split.
    mu_u = x[0] / ((1.0 - x[0]) * ch.g_u) if x[0] < 1.0 else math.inf
    mu_d = x[1] / ((1.0 - x[1]) * ch.g_d) if x[1] < 1.0 else math.inf
    v_d = regularized_direction(ch.h_d, ch.h_u, mu_u)
    v_u = regularized_direction(ch.h_u, ch.h_d, mu_d)
    sig_d = abs(inner_product(ch.h_d, v_d)) ** 2
    leak_u = abs(inner_product(ch.h_d, v_u)) ** 2
    p_d = gamma_d * (sigma2 + p_dn * leak_u) / (sig_d + gamma_d * leak_u)
    p_u = p_dn - p_d
    if p_u < -1e-9 * p_dn:
        raise SolverFailure(
            f"refined optimum infeasible: p_u = {p_u:.3e} W at gamma_d = {gamma_d:.6g}")
    p_u = max(p_u, 0.0)
    beams = Beamformer(math.sqrt(p_d) * v_d, math.sqrt(p_u) * v_u, p_dn)
    sinr_u, sinr_d = downlink_sinrs(ch, beams, sigma2)
    res_power = abs(p_d + p_u - p_dn) / p_dn
    res_sinr = abs(sinr_d - gamma_d) / gamma_d
    if res_power > 1e-8 or res_sinr > 1e-8:
        raise SolverFailure(
            f"active-constraint residuals not met: power {res_power:.3e}, "
            f"device SINR {res_sinr:.3e}")
    gamma_u_star = max(gamma_u_star, sinr_u)

    point = TradeoffPoint(gamma_d, comm_delay(gamma_u_star, cfg),
                          steady_state_variance(cfg.plant, q), "pareto",
                          (p_d, p_u), beams)
    lambda_star = (mu_d * (p_u * leak_u + sigma2) / gamma_d) if math.isfinite(mu_d) else math.inf
    report = ParetoSolverReport(gamma_u_star, mu_u, mu_d, (res_power, res_sinr),
                                evals, lambda_star, 1.0)
    return point, report


def sweep_boundary(scheme: str, gamma_d_grid, cfg: SystemConfig, ch: ChannelPair,
                   s_alpha: float) -> list[SweepEntry]:
    """Evaluate one scheme over a device-SINR grid; failures are recorded, not raised."""
    point_of = {
        "pareto": lambda g: pareto_point(g, cfg, ch, s_alpha)[0],
        "mrt": lambda g: mrt_region_point(g, cfg, ch, s_alpha),
        "zf": lambda g: zf_region_point(g, cfg, ch, s_alpha),
    }
    if scheme not in point_of:
        raise DomainError(f"unknown scheme {scheme!r}")
    entries = []
    for gamma_d in np.asarray(gamma_d_grid, dtype=float):
        try:
            entries.append(SweepEntry(float(gamma_d), point_of[scheme](float(gamma_d))))
        except (InfeasibleTarget, UnstableLoop, SolverFailure, DomainError) as exc:
            entries.append(SweepEntry(float(gamma_d), None, f"{type(exc).__name__}: {exc}"))
    return entries


def gamma_d_grid(lo: float, hi: float, n: int) -> np.ndarray:
    """n targets from lo to hi, log-spaced in (1 + gamma) to match the exponent structure."""
    if not 0 <= lo < hi or n < 1:
        raise DomainError("need 0 <= lo < hi and n >= 1")
    return np.expm1(np.linspace(math.log1p(lo), math.log1p(hi), n))


def mrt_zf_crossover_power(gamma_d: float, ch: ChannelPair, sigma_dn2: float) -> float | None:
    """Budget at which the projected beams overtake the aligned beams on delay.

    None for orthogonal channels (the schemes coincide at every power).
    Below the returned power MRT yields the lower delay, above it ZF does.
    """
    if not gamma_d > 0:
        raise DomainError(f"gamma_d must be positive, got {gamma_d}")
    rho, g_d, g_u = ch.rho, ch.g_d, ch.g_u
    if rho == 0.0:
        return None
    c2 = gamma_d * rho ** 2 * (1.0 - rho) * g_d ** 2 * g_u
    if c2 == 0.0:
        raise DomainError(f"degenerate geometry (rho = {rho}): no finite crossover")
    c1 = sigma_dn2 * g_d * rho * (gamma_d * g_u * (1.0 - rho - gamma_d * rho)
                                  + g_d * (gamma_d - gamma_d * rho - 1.0))
    c0 = -gamma_d ** 2 * sigma_dn2 ** 2 * rho * (g_d + g_u)
    disc = c1 * c1 - 4.0 * c2 * c0
    return (-c1 + math.sqrt(disc)) / (2.0 * c2)
