"""Closed-loop control analysis under rate-limited state reporting and command delivery.

The per-interval bit budget of each link maps to a minimum mean-square
reconstruction distortion of a Gaussian source (rate-distortion limit), which
turns the state-variance evolution into the affine recursion

    V[n+1] = |a|^2 (1/S + 1/G - 1/(S G)) V[n] + sigma_w2,

where S = (1 + uplink SNR)^alpha_up and G = (1 + downlink SINR)^alpha_dn are
the two link-quality factors. Everything here is closed-form consequences of
that recursion: stability, steady state, asymptotics, and the inverse map
from a variance target to a required downlink SINR.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Plant
from .errors import DomainError, InfeasibleTarget, UnstableLoop

# Fixed-point iteration stop rule: relative change below this, or the step cap.
_FIXED_POINT_RTOL = 1e-12
_FIXED_POINT_MAX_STEPS = 10 ** 6


@dataclass(frozen=True)
class LinkQuality:
    """Uplink / downlink quality factors, both >= 1 (zero-rate link gives exactly 1)."""

    s_alpha: float
    gamma_alpha: float

    def __post_init__(self):
        if self.s_alpha < 1.0 or self.gamma_alpha < 1.0:
            raise DomainError(
                f"quality factors must be >= 1, got ({self.s_alpha}, {self.gamma_alpha})")


def link_quality(snr_up: float, sinr_dn: float, alpha_up: float, alpha_dn: float) -> LinkQuality:
    """Quality factors (1+SNR)^alpha_up, (1+SINR)^alpha_dn from raw link ratios."""
    if snr_up < 0 or sinr_dn < 0:
        raise DomainError("link ratios must be nonnegative")
    return LinkQuality((1.0 + snr_up) ** alpha_up, (1.0 + sinr_dn) ** alpha_dn)


def uplink_distortion(v_n: float, s_alpha: float) -> float:
    """Reporting distortion V[n] / S; never exceeds the source variance."""
    if v_n < 0:
        raise DomainError(f"variance must be nonnegative, got {v_n}")
    if s_alpha < 1.0:
        raise DomainError(f"s_alpha must be >= 1, got {s_alpha}")
    return v_n / s_alpha


def downlink_distortion(v_n: float, d_up: float, plant: Plant, gamma_alpha: float) -> float:
    """Command-delivery distortion (|a|^2/|b|^2)(V[n] - D_up) / G."""
    if gamma_alpha < 1.0:
        raise DomainError(f"gamma_alpha must be >= 1, got {gamma_alpha}")
    if not 0.0 <= d_up <= v_n:
        raise DomainError(f"d_up must lie in [0, V], got d_up={d_up}, V={v_n}")
    return (plant.a2 / abs(plant.b) ** 2) * (v_n - d_up) / gamma_alpha


def loop_gain(plant: Plant, q: LinkQuality) -> float:
    """Contraction factor |a|^2 (1/S + 1/G - 1/(S G)) of the variance recursion."""
    s, g = q.s_alpha, q.gamma_alpha
    return plant.a2 * (1.0 / s + 1.0 / g - 1.0 / (s * g))


def variance_step(v_n: float, plant: Plant, q: LinkQuality) -> float:
    """One interval of the variance recursion; |b|^2 cancels exactly."""
    if v_n < 0:
        raise DomainError(f"variance must be nonnegative, got {v_n}")
    return loop_gain(plant, q) * v_n + plant.sigma_w2


def is_stable(plant: Plant, q: LinkQuality) -> bool:
    """Mean-square stability: S G > |a|^2 (S + G - 1). Equality is unstable."""
    s, g = q.s_alpha, q.gamma_alpha
    return s * g > plant.a2 * (s + g - 1.0)


def steady_state_variance(plant: Plant, q: LinkQuality) -> float:
    """Fixed point sigma_w2 * S G / (S G - |a|^2 (S + G - 1)) of the recursion.

    Raises UnstableLoop when the stability condition fails, so instability
    can never leak into later arithmetic as an infinity.
    """
    if not is_stable(plant, q):
        raise UnstableLoop(
            f"loop gain {loop_gain(plant, q):.6g} >= 1 at "
            f"(S={q.s_alpha:.6g}, G={q.gamma_alpha:.6g}, |a|^2={plant.a2:.6g})")
    s, g = q.s_alpha, q.gamma_alpha
    return plant.sigma_w2 * s * g / (s * g - plant.a2 * (s + g - 1.0))


def iterate_to_steady_state(plant: Plant, q: LinkQuality, v0: float = 1.0) -> float:
    """Fixed point by direct iteration (the cross-check against the closed form).

    Stops when the relative change drops below 1e-12 or after 1e6 steps;
    raises UnstableLoop if the iterates grow instead of contracting.
    """
    v = float(v0)
    for _ in range(_FIXED_POINT_MAX_STEPS):
        v_next = variance_step(v, plant, q)
        if abs(v_next - v) <= _FIXED_POINT_RTOL * max(v_next, plant.sigma_w2):
            return v_next
        if not np.isfinite(v_next):
            raise UnstableLoop("variance iteration diverged")
        v = v_next
    if not is_stable(plant, q):
        raise UnstableLoop("variance iteration did not contract")
    return v


def asymptotic_variance(regime: str, plant: Plant, finite_quality: float | None = None) -> float:
    """Limit of the steady state when one or both links become arbitrarily good.

    'both-high'     -> sigma_w2
    'uplink-high'   -> sigma_w2 * G / (G - |a|^2), G = finite_quality
    'downlink-high' -> sigma_w2 * S / (S - |a|^2), S = finite_quality
    """
    if regime == "both-high":
        return plant.sigma_w2
    if regime not in ("uplink-high", "downlink-high"):
        raise DomainError(f"unknown regime {regime!r}")
    if finite_quality is None or finite_quality <= plant.a2:
        raise DomainError(
            f"finite quality must exceed |a|^2 = {plant.a2:.6g}, got {finite_quality}")
    return plant.sigma_w2 * finite_quality / (finite_quality - plant.a2)


def min_stabilizing_sinr(s_alpha: float, plant: Plant, alpha_dn: float) -> float:
    """Smallest downlink SINR keeping the loop stable at the given uplink quality."""
    if s_alpha <= plant.a2:
        raise DomainError(
            f"s_alpha must exceed |a|^2 = {plant.a2:.6g} for any stabilizing SINR, "
            f"got {s_alpha}")
    g_min = plant.a2 * (s_alpha - 1.0) / (s_alpha - plant.a2)
    return g_min ** (1.0 / alpha_dn) - 1.0


def control_threshold(v_th: float, s_alpha: float, plant: Plant,
                      alpha_dn: float) -> tuple[float, float]:
    """Invert the steady state: quality / SINR needed to hold the variance at v_th.

    Returns (gamma_alpha_th, gamma_d_th). Feeding gamma_alpha_th back into
    steady_state_variance reproduces v_th. Raises InfeasibleTarget when the
    uplink alone cannot support the target (v_th <= sigma_w2 or s_alpha too
    small), which is distinct from any numeric failure.
    """
    if v_th <= plant.sigma_w2:
        raise InfeasibleTarget(
            f"variance target {v_th} is at or below the noise floor {plant.sigma_w2}")
    if s_alpha <= plant.a2 * v_th / (v_th - plant.sigma_w2):
        raise InfeasibleTarget(
            f"uplink quality {s_alpha:.6g} cannot reach variance {v_th} "
            f"(needs > {plant.a2 * v_th / (v_th - plant.sigma_w2):.6g})")
    gamma_alpha_th = (plant.a2 * v_th * (s_alpha - 1.0)
                      / (s_alpha * (v_th - plant.sigma_w2) - plant.a2 * v_th))
    gamma_d_th = gamma_alpha_th ** (1.0 / alpha_dn) - 1.0
    return gamma_alpha_th, gamma_d_th


def variance_trajectory(v0: float, n: int, plant: Plant, q: LinkQuality) -> np.ndarray:
    """n+1 values of the variance recursion starting from v0 (may grow without bound)."""
    if v0 < 0:
        raise DomainError(f"v0 must be nonnegative, got {v0}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    c = loop_gain(plant, q)
    out = np.empty(n + 1)
    out[0] = v0
    for k in range(n):
        out[k + 1] = c * out[k] + plant.sigma_w2
    return out
