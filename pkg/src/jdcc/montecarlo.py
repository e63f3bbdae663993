"""Sampling oracles: closed-loop simulation and outage estimation from raw channel draws.

Randomness comes from counter-based Philox streams keyed by a single 64-bit
seed: draw i of the workload lives in the substream jumped(i // CHUNK), so
estimates are bit-identical no matter how chunks would be scheduled, and
reductions accumulate in fixed chunk order. Outage estimators draw full
channel vectors and test the exact per-draw feasibility events, never the
analytic integrands they are meant to check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import Beamformer, ChannelPair, downlink_sinrs, uplink_snr
from .config import SystemConfig
from .control import LinkQuality, variance_trajectory
from .errors import DomainError
from .outage import OutageSpec, comm_thresholds

CHUNK = 1 << 16  # draws per substream; fixed so results never depend on scheduling

_DIVERGENCE_CAP = 1e12  # trial aborts when |x|^2 exceeds this multiple of sigma_w2


@dataclass(frozen=True)
class McEstimate:
    """A sampled value with its standard error and provenance."""

    value: float
    std_error: float
    trials: int
    seed: int


@dataclass(frozen=True)
class ClosedLoopResult:
    """Per-interval empirical variances plus the terminal-variance estimate."""

    values: np.ndarray      # mean |x_n|^2, length n_steps + 1
    std_errors: np.ndarray  # standard error of each mean
    terminal: McEstimate
    diverged: int           # trials that hit the divergence cap


def _stream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed).jumped(index))


def _chunks(trials: int):
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    for index in range(0, (trials + CHUNK - 1) // CHUNK):
        yield index, min(CHUNK, trials - index * CHUNK)


def _draw_gains(rng: np.random.Generator, size: int, m: int) -> np.ndarray:
    """Normalized gains ||h||^2 / beta for CN(0, beta I_m) draws; Gamma(m, 1)."""
    re = rng.standard_normal((size, m))
    im = rng.standard_normal((size, m))
    return 0.5 * ((re * re).sum(axis=1) + (im * im).sum(axis=1))


def _draw_vectors(rng: np.random.Generator, size: int, m: int, beta: float) -> np.ndarray:
    re = rng.standard_normal((size, m))
    im = rng.standard_normal((size, m))
    return math.sqrt(beta / 2.0) * (re + 1j * im)


def _proportion(fails: int, trials: int, seed: int) -> McEstimate:
    p = fails / trials
    return McEstimate(p, math.sqrt(p * (1.0 - p) / trials), trials, seed)


def estimate_comm_outage(spec: OutageSpec, cfg: SystemConfig, trials: int,
                         seed: int) -> McEstimate:
    """Fraction of channel draws whose full-power aligned-beam delay misses tau_req."""
    fails = 0
    for index, size in _chunks(trials):
        g_u = cfg.beta_u * _draw_gains(_stream(seed, index), size, cfg.m)
        gamma_u = cfg.p_dn * g_u / cfg.sigma_dn2
        delay = cfg.q_u / (cfg.b_dn * np.log2(1.0 + gamma_u))
        fails += int((delay > spec.tau_req).sum())
    return _proportion(fails, trials, seed)


def _gamma_d_req_vec(x: np.ndarray, th, spec: OutageSpec, cfg: SystemConfig) -> np.ndarray:
    """Vectorized required downlink SINR; caller guarantees x > eta_v."""
    a2 = cfg.plant.a2
    s_alpha = (1.0 + th.gbar_up * x) ** cfg.alpha_up
    num = a2 * spec.v_req * (s_alpha - 1.0)
    den = s_alpha * (spec.v_req - cfg.plant.sigma_w2) - a2 * spec.v_req
    return (num / den) ** (1.0 / cfg.alpha_dn) - 1.0


def estimate_control_outage(spec: OutageSpec, cfg: SystemConfig, trials: int,
                            seed: int) -> McEstimate:
    """Fraction of draws where full-power device beams cannot hold the variance target.

    Per draw the exact event is checked: the gain must clear the uplink
    floor eta_v and the full-power downlink SINR must reach the required
    curve at that gain.
    """
    th = comm_thresholds(spec, cfg)
    fails = 0
    for index, size in _chunks(trials):
        x = _draw_gains(_stream(seed, index), size, cfg.m)
        ok = x > th.eta_v
        x_ok = x[ok]
        success = np.zeros(size, dtype=bool)
        success[ok] = th.gbar_d * x_ok >= _gamma_d_req_vec(x_ok, th, spec, cfg)
        fails += int(size - success.sum())
    return _proportion(fails, trials, seed)


def estimate_joint_outage(scheme: str, spec: OutageSpec, cfg: SystemConfig, trials: int,
                          seed: int) -> McEstimate:
    """Fraction of draws with no power split meeting both requirements at once.

    Channel vectors are drawn in full so the joint law of the two gains and
    their correlation is exact; the per-draw check is the closed-form
    nonemptiness of the feasible power interval for the scheme.
    """
    if scheme not in ("mrt", "zf"):
        raise DomainError(f"scheme must be 'mrt' or 'zf', got {scheme!r}")
    th = comm_thresholds(spec, cfg)
    fails = 0
    for index, size in _chunks(trials):
        rng = _stream(seed, index)
        h_d = _draw_vectors(rng, size, cfg.m, cfg.beta_d)
        h_u = _draw_vectors(rng, size, cfg.m, cfg.beta_u)
        nd = (h_d.real ** 2 + h_d.imag ** 2).sum(axis=1)
        nu = (h_u.real ** 2 + h_u.imag ** 2).sum(axis=1)
        ip = (h_d.conj() * h_u).sum(axis=1)
        x = nd / cfg.beta_d
        y = nu / cfg.beta_u
        r = (ip.real ** 2 + ip.imag ** 2) / (nd * nu)

        ok = x > th.eta_v
        success = np.zeros(size, dtype=bool)
        xo, yo, ro = x[ok], y[ok], r[ok]
        gd_req = _gamma_d_req_vec(xo, th, spec, cfg)
        if scheme == "mrt":
            p_min = (gd_req * (cfg.p_dn * cfg.beta_d * ro * xo + cfg.sigma_dn2)
                     / (cfg.beta_d * xo * (1.0 + gd_req * ro)))
            p_max = ((cfg.p_dn * cfg.beta_u * yo - th.gamma_u_req * cfg.sigma_dn2)
                     / (cfg.beta_u * yo * (1.0 + th.gamma_u_req * ro)))
            success[ok] = p_min <= p_max
        else:
            eta_f = gd_req / th.gbar_d
            margin = (1.0 - ro) * xo - eta_f
            success[ok] = (margin > 0.0) & (yo * margin >= th.eta_u * xo)
        fails += int(size - success.sum())
    return _proportion(fails, trials, seed)


def simulate_closed_loop(cfg: SystemConfig, ch: ChannelPair, bf: Beamformer,
                         n_steps: int, trials: int, seed: int,
                         v0: float = 1.0) -> ClosedLoopResult:
    """Simulate the reporting/command loop and average |x_n|^2 across trials.

    Each interval draws the reporting error, the command error (both sized
    by the rate-distortion limits at the analytic variance of that interval)
    and the process noise, so the empirical curve is an unbiased sample of
    the analytic recursion. Trials whose |x|^2 passes the divergence cap
    freeze in place and are counted.
    """
    if n_steps < 1:
        raise DomainError(f"n_steps must be >= 1, got {n_steps}")
    plant = cfg.plant
    s_alpha = (1.0 + uplink_snr(cfg, ch)) ** cfg.alpha_up
    _, sinr_d = downlink_sinrs(ch, bf, cfg.sigma_dn2)
    q = LinkQuality(s_alpha, (1.0 + sinr_d) ** cfg.alpha_dn)
    v_analytic = variance_trajectory(v0, n_steps, plant, q)
    cap = _DIVERGENCE_CAP * plant.sigma_w2

    b2 = abs(plant.b) ** 2
    sums = np.zeros(n_steps + 1)
    sumsq = np.zeros(n_steps + 1)
    diverged = 0
    for index, size in _chunks(trials):
        rng = _stream(seed, index)
        scale0 = math.sqrt(v0 / 2.0)
        x = scale0 * (rng.standard_normal(size) + 1j * rng.standard_normal(size))
        alive = np.ones(size, dtype=bool)
        power = x.real ** 2 + x.imag ** 2
        sums[0] += power.sum()
        sumsq[0] += (power * power).sum()
        for n in range(n_steps):
            if not math.isfinite(v_analytic[n]) or not alive.any():
                # all mass frozen; repeat the held values for the rest
                for k in range(n, n_steps):
                    sums[k + 1] += power.sum()
                    sumsq[k + 1] += (power * power).sum()
                break
            d_up = v_analytic[n] / q.s_alpha
            d_dn = (plant.a2 / b2) * (v_analytic[n] - d_up) / q.gamma_alpha
            dx = math.sqrt(d_up / 2.0) * (rng.standard_normal(size)
                                          + 1j * rng.standard_normal(size))
            dd = math.sqrt(d_dn / 2.0) * (rng.standard_normal(size)
                                          + 1j * rng.standard_normal(size))
            w = math.sqrt(plant.sigma_w2 / 2.0) * (rng.standard_normal(size)
                                                   + 1j * rng.standard_normal(size))
            x = np.where(alive, plant.a * dx - plant.b * dd + w, x)
            power = x.real ** 2 + x.imag ** 2
            alive &= power <= cap
            sums[n + 1] += power.sum()
            sumsq[n + 1] += (power * power).sum()
        diverged += int(size - alive.sum())

    values = sums / trials
    var = np.maximum(sumsq / trials - values ** 2, 0.0)
    std_errors = np.sqrt(var / trials)
    terminal = McEstimate(float(values[-1]), float(std_errors[-1]), trials, seed)
    return ClosedLoopResult(values, std_errors, terminal, diverged)
