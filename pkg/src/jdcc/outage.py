"""Outage probabilities over Rayleigh fading: single-function closed/root forms, joint double integrals.

With h ~ CN(0, beta I_M), the normalized gains G = ||h||^2 / beta are
Gamma(M, 1) and the correlation between the two links is Beta(1, M-1); all
outage expressions reduce to integrals against those two densities. The
communication-only outage is a pure CDF evaluation, the control-only outage
needs one root-find (the gain level where the downlink line crosses the
decreasing required-SINR curve), and the joint outages are double integrals
whose inner integrand switches off across an indicator boundary that must be
located before quadrature sees it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate

from .channel import corr_pdf, gamma_cdf, gamma_pdf
from .config import SystemConfig
from .errors import DomainError, QuadratureError

_ROOT_RTOL = 1e-12          # eta_ctrl bisection, relative in x
_DEFAULT_TAIL = 1e-10       # outer truncation: discard gain mass below this
_DEFAULT_TOL = 1e-6         # absolute error target for the double integrals
_INNER_EPSABS = 1e-9


@dataclass(frozen=True)
class OutageSpec:
    """Requirement pair: delay at most tau_req, steady-state variance at most v_req."""

    tau_req: float
    v_req: float

    def __post_init__(self):
        if not self.tau_req > 0:
            raise DomainError(f"tau_req must be positive, got {self.tau_req}")
        if not self.v_req > 0:
            raise DomainError(f"v_req must be positive, got {self.v_req}")


def make_outage_spec(cfg: SystemConfig, tau_req: float, v_req: float) -> OutageSpec:
    """OutageSpec checked against the scenario noise floor at construction."""
    spec = OutageSpec(tau_req, v_req)
    _check_spec(spec, cfg)
    return spec


def _check_spec(spec: OutageSpec, cfg: SystemConfig) -> None:
    if spec.v_req <= cfg.plant.sigma_w2:
        raise DomainError(
            f"v_req = {spec.v_req} is unreachable: steady-state variance always "
            f"exceeds the process-noise floor {cfg.plant.sigma_w2}")


@dataclass(frozen=True)
class OutageThresholds:
    """Normalized-gain thresholds and mean link gains entering the outage integrals.

    gamma_u_req  user SINR needed to finish the payload within tau_req
    eta_u        user gain below which the communication requirement fails
    eta_v        device gain at/below which the uplink alone dooms the variance target
    gbar_up      mean uplink SNR per unit normalized gain, p_up beta_d / sigma_up2
    gbar_d       mean downlink device SNR per unit normalized gain, p_dn beta_d / sigma_dn2
    """

    gamma_u_req: float
    eta_u: float
    eta_v: float
    gbar_up: float
    gbar_d: float


def comm_thresholds(spec: OutageSpec, cfg: SystemConfig) -> OutageThresholds:
    """All normalized thresholds for the given requirement pair."""
    _check_spec(spec, cfg)
    gamma_u_req = 2.0 ** (cfg.q_u / (cfg.b_dn * spec.tau_req)) - 1.0
    eta_u = gamma_u_req * cfg.sigma_dn2 / (cfg.p_dn * cfg.beta_u)
    gbar_up = cfg.p_up * cfg.beta_d / cfg.sigma_up2
    gbar_d = cfg.p_dn * cfg.beta_d / cfg.sigma_dn2
    a2 = cfg.plant.a2
    s_floor = a2 * spec.v_req / (spec.v_req - cfg.plant.sigma_w2)
    eta_v = (s_floor ** (1.0 / cfg.alpha_up) - 1.0) / gbar_up
    return OutageThresholds(gamma_u_req, eta_u, eta_v, gbar_up, gbar_d)


def comm_only_outage(spec: OutageSpec, cfg: SystemConfig) -> float:
    """P(delay requirement fails) with the full budget aligned to the user."""
    th = comm_thresholds(spec, cfg)
    return gamma_cdf(cfg.m, th.eta_u)


def gamma_d_req_of_gain(x: float, spec: OutageSpec, cfg: SystemConfig) -> float:
    """Downlink SINR needed for the variance target when the device gain is x.

    Strictly decreasing in x; blows up as x approaches eta_v from above
    (uplink reporting becomes the binding constraint) and flattens to the
    stability-limited floor as x grows.
    """
    th = comm_thresholds(spec, cfg)
    return _gamma_d_req(x, th, spec, cfg)


def _gamma_d_req(x: float, th: OutageThresholds, spec: OutageSpec, cfg: SystemConfig) -> float:
    if x <= th.eta_v:
        raise DomainError(f"x = {x} must exceed eta_v = {th.eta_v}")
    a2 = cfg.plant.a2
    s_alpha = (1.0 + th.gbar_up * x) ** cfg.alpha_up
    num = a2 * spec.v_req * (s_alpha - 1.0)
    den = s_alpha * (spec.v_req - cfg.plant.sigma_w2) - a2 * spec.v_req
    return (num / den) ** (1.0 / cfg.alpha_dn) - 1.0


def control_gain_threshold(spec: OutageSpec, cfg: SystemConfig) -> float:
    """Device gain eta_ctrl above which full-budget control meets the variance target.

    Unique crossing of the increasing line gbar_d * x with the decreasing
    required-SINR curve; bracketed then bisected to 1e-12 relative in x.
    """
    th = comm_thresholds(spec, cfg)

    def deficit(x: float) -> float:  # negative while the requirement is unmet
        return th.gbar_d * x - _gamma_d_req(x, th, spec, cfg)

    lo = th.eta_v * (1.0 + 1e-9)
    while deficit(lo) > 0.0:  # pole side: step closer to eta_v until unmet
        lo = th.eta_v + (lo - th.eta_v) * 1e-3
        if lo - th.eta_v < th.eta_v * 1e-300:
            return lo
    hi = max(2.0 * th.eta_v, 1.0)
    while deficit(hi) <= 0.0:
        hi *= 2.0
        if hi > 1e300:
            raise DomainError("no crossing found: downlink line never meets the curve")
    while hi - lo > _ROOT_RTOL * hi:
        mid = 0.5 * (lo + hi)
        if deficit(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def control_only_outage(spec: OutageSpec, cfg: SystemConfig) -> float:
    """P(variance requirement fails) with the full budget aligned to the device."""
    return gamma_cdf(cfg.m, control_gain_threshold(spec, cfg))


def _gain_tail_cut(m: int, tail: float) -> float:
    """Smallest x with 1 - F_G(x) < tail, by doubling then bisection."""
    hi = float(m + 10)
    while 1.0 - gamma_cdf(m, hi) >= tail:
        hi *= 2.0
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 1.0 - gamma_cdf(m, mid) < tail:
            hi = mid
        else:
            lo = mid
    return hi


def _success_integral(spec: OutageSpec, cfg: SystemConfig, inner, tail: float,
                      tol: float, breakpoints=()) -> float:
    """Integrate f_G(x) * inner(x) over the gain region where success is possible.

    inner(x) must be the conditional success probability given device gain x;
    it is identically zero at and below the control gain threshold, so the
    outer integral starts there and is truncated where the gain mass drops
    below `tail` (the discarded success mass is bounded by that tail).
    """
    x_lo = control_gain_threshold(spec, cfg)
    x_hi = _gain_tail_cut(cfg.m, tail)
    if x_lo >= x_hi:
        return 0.0
    pts = sorted(p for p in breakpoints if x_lo < p < x_hi)
    value, abserr, info = integrate.quad(
        lambda x: gamma_pdf(cfg.m, x) * inner(x),
        x_lo, x_hi, epsabs=tol * 0.5, epsrel=1e-9, limit=300,
        points=pts or None, full_output=True)[:3]
    achieved = abserr + tail
    if achieved > tol:
        raise QuadratureError("joint outage integral did not converge", achieved)
    return value


def _inner_success_mrt(x: float, th: OutageThresholds, spec: OutageSpec,
                       cfg: SystemConfig) -> float:
    """P(user link supports a feasible power split | device gain x), aligned beams."""
    gd_req = _gamma_d_req(x, th, spec, cfg)
    eta_f = gd_req / th.gbar_d
    if x <= eta_f:
        return 0.0
    prod = th.gamma_u_req * gd_req

    def xi(r: float) -> float:
        den = 1.0 - prod * r * r
        if den <= 0.0:
            return math.inf
        return eta_f * (1.0 + th.gamma_u_req * r) / den

    r_max = min(1.0, 1.0 / math.sqrt(prod)) if prod > 0 else 1.0
    # Split the integration at the indicator boundary xi(r) = x: xi is
    # strictly increasing in r, below x at r = 0 and above it at r_max
    # unless the whole interval is admissible.
    probe = r_max if prod * r_max * r_max < 1.0 else r_max * (1.0 - 1e-12)
    if xi(probe) <= x:
        r_cut = r_max
    else:
        lo, hi = 0.0, probe
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if xi(mid) < x:
                lo = mid
            else:
                hi = mid
        r_cut = lo
    if r_cut <= 0.0:
        return 0.0

    def integrand(r: float) -> float:
        den = x * (1.0 - prod * r * r) - eta_f * (1.0 + th.gamma_u_req * r)
        if den <= 0.0:  # boundary and beyond count as failure
            return 0.0
        psi = th.eta_u * x * (1.0 + gd_req * r) / den
        return corr_pdf(cfg.m, r) * (1.0 - gamma_cdf(cfg.m, psi))

    value, _ = integrate.quad(integrand, 0.0, r_cut,
                              epsabs=_INNER_EPSABS, epsrel=1e-9, limit=200)
    return value


def joint_outage_mrt(spec: OutageSpec, cfg: SystemConfig, *, tail: float = _DEFAULT_TAIL,
                     tol: float = _DEFAULT_TOL) -> float:
    """P(delay or variance requirement fails) under aligned beams with the best split."""
    th = comm_thresholds(spec, cfg)

    # r_max switches from 1/sqrt(prod) to 1 where gamma_u_req * gd_req(x)
    # crosses 1; hand that kink to the outer quadrature when it exists.
    breakpoints = []
    x_lo = control_gain_threshold(spec, cfg)
    x_hi = _gain_tail_cut(cfg.m, tail)
    if th.gamma_u_req > 0:
        def excess(x):
            return th.gamma_u_req * _gamma_d_req(x, th, spec, cfg) - 1.0
        if excess(x_lo * (1.0 + 1e-12)) > 0.0 > excess(x_hi):
            lo, hi = x_lo * (1.0 + 1e-12), x_hi
            for _ in range(100):
                mid = 0.5 * (lo + hi)
                if excess(mid) > 0.0:
                    lo = mid
                else:
                    hi = mid
            breakpoints.append(0.5 * (lo + hi))

    success = _success_integral(
        spec, cfg, lambda x: _inner_success_mrt(x, th, spec, cfg), tail, tol, breakpoints)
    return min(1.0, max(0.0, 1.0 - success))


def _inner_success_zf(x: float, th: OutageThresholds, spec: OutageSpec,
                      cfg: SystemConfig) -> float:
    """P(user link supports a feasible power split | device gain x), projected beams."""
    gd_req = _gamma_d_req(x, th, spec, cfg)
    eta_f = gd_req / th.gbar_d
    r_hi = 1.0 - eta_f / x
    if r_hi <= 0.0:
        return 0.0

    def integrand(r: float) -> float:
        den = (1.0 - r) * x - eta_f
        if den <= 0.0:
            return 0.0
        phi = th.eta_u * x / den
        return corr_pdf(cfg.m, r) * (1.0 - gamma_cdf(cfg.m, phi))

    value, _ = integrate.quad(integrand, 0.0, r_hi,
                              epsabs=_INNER_EPSABS, epsrel=1e-9, limit=200)
    return value


def joint_outage_zf(spec: OutageSpec, cfg: SystemConfig, *, tail: float = _DEFAULT_TAIL,
                    tol: float = _DEFAULT_TOL) -> float:
    """P(delay or variance requirement fails) under projected beams with the best split."""
    th = comm_thresholds(spec, cfg)
    success = _success_integral(
        spec, cfg, lambda x: _inner_success_zf(x, th, spec, cfg), tail, tol)
    return min(1.0, max(0.0, 1.0 - success))
