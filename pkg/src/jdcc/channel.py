"""Physical-layer model: path loss, Rayleigh channels, SNR/SINR, gamma-gain statistics.

Channel vectors are numpy complex128 arrays (interleaved real/imaginary
doubles). Squared norms and inner products go through compensated
summation so the derived gains stay accurate for array sizes up to ~1024.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import SystemConfig
from .errors import DomainError

# gamma_pdf / gamma_cdf build factorials iteratively in plain double
# precision, which is exact up to 20! = 2.4e18 < 2^63; larger antenna
# counts would need the log-domain form.
MAX_GAMMA_SHAPE = 20


def vector_power(h: np.ndarray) -> float:
    """||h||^2 by compensated summation of the per-entry |h_i|^2 terms."""
    h = np.asarray(h)
    return math.fsum((h.real * h.real).tolist()) + math.fsum((h.imag * h.imag).tolist())


def inner_product(x: np.ndarray, y: np.ndarray) -> complex:
    """x^H y with compensated summation of real and imaginary parts."""
    terms = np.conj(np.asarray(x)) * np.asarray(y)
    return complex(math.fsum(terms.real.tolist()), math.fsum(terms.imag.tolist()))


def path_loss(d: float, c0: float, alpha_pl: float) -> float:
    """Distance-power law gain c0 * d^(-alpha_pl)."""
    if not d > 0:
        raise DomainError(f"distance must be positive, got {d}")
    if not (c0 > 0 and alpha_pl > 0):
        raise DomainError("c0 and alpha_pl must be positive")
    return c0 * d ** (-alpha_pl)


def sample_channel(m: int, beta: float, rng: np.random.Generator) -> np.ndarray:
    """Draw h with m i.i.d. CN(0, beta) entries (real/imag parts N(0, beta/2))."""
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    scale = math.sqrt(beta / 2.0)
    return scale * (rng.standard_normal(m) + 1j * rng.standard_normal(m))


def correlation(h_d: np.ndarray, h_u: np.ndarray) -> float:
    """|h_d^H h_u|^2 / (||h_d||^2 ||h_u||^2), in [0, 1]."""
    g_d = vector_power(h_d)
    g_u = vector_power(h_u)
    if g_d == 0.0 or g_u == 0.0:
        raise DomainError("correlation is undefined for a zero vector")
    rho = abs(inner_product(h_d, h_u)) ** 2 / (g_d * g_u)
    return min(rho, 1.0)


@dataclass(frozen=True)
class ChannelPair:
    """One realization of the device (h_d) and user (h_u) channel vectors.

    g_d, g_u and rho are derived once at construction from the vectors.
    """

    h_d: np.ndarray
    h_u: np.ndarray
    g_d: float = field(init=False)
    g_u: float = field(init=False)
    rho: float = field(init=False)

    def __post_init__(self):
        h_d = np.asarray(self.h_d, dtype=np.complex128)
        h_u = np.asarray(self.h_u, dtype=np.complex128)
        if h_d.ndim != 1 or h_u.ndim != 1 or h_d.shape != h_u.shape:
            raise DomainError("h_d and h_u must be 1-D vectors of equal length")
        object.__setattr__(self, "h_d", h_d)
        object.__setattr__(self, "h_u", h_u)
        object.__setattr__(self, "g_d", vector_power(h_d))
        object.__setattr__(self, "g_u", vector_power(h_u))
        object.__setattr__(self, "rho", correlation(h_d, h_u))


@dataclass(frozen=True)
class Beamformer:
    """A downlink beam pair (w_d for the device, w_u for the user) under a sum-power budget."""

    w_d: np.ndarray
    w_u: np.ndarray
    p_budget: float

    def __post_init__(self):
        object.__setattr__(self, "w_d", np.asarray(self.w_d, dtype=np.complex128))
        object.__setattr__(self, "w_u", np.asarray(self.w_u, dtype=np.complex128))
        used = vector_power(self.w_d) + vector_power(self.w_u)
        if used > self.p_budget * (1.0 + 1e-9):
            raise DomainError(
                f"beam powers {used:.6e} W exceed budget {self.p_budget:.6e} W")


def uplink_snr(cfg: SystemConfig, ch: ChannelPair) -> float:
    """Uplink SNR p_up * ||h_d||^2 / sigma_up2 after maximum-ratio combining."""
    return cfg.p_up * ch.g_d / cfg.sigma_up2


def downlink_sinrs(ch: ChannelPair, bf: Beamformer, sigma_dn2: float) -> tuple[float, float]:
    """(user SINR, device SINR) for the given beams, each treating the other beam as noise."""
    if not sigma_dn2 > 0:
        raise DomainError(f"sigma_dn2 must be positive, got {sigma_dn2}")
    s_uu = abs(inner_product(ch.h_u, bf.w_u)) ** 2
    s_ud = abs(inner_product(ch.h_u, bf.w_d)) ** 2
    s_dd = abs(inner_product(ch.h_d, bf.w_d)) ** 2
    s_du = abs(inner_product(ch.h_d, bf.w_u)) ** 2
    gamma_u = s_uu / (s_ud + sigma_dn2)
    gamma_d = s_dd / (s_du + sigma_dn2)
    return gamma_u, gamma_d


def _check_shape(m: int) -> None:
    if not (isinstance(m, (int, np.integer)) and 1 <= m <= MAX_GAMMA_SHAPE):
        raise DomainError(
            f"gamma shape must be an integer in [1, {MAX_GAMMA_SHAPE}], got {m!r}")


def gamma_cdf(m: int, x: float) -> float:
    """CDF of Gamma(m, 1): 1 - exp(-x) * sum_{k<m} x^k / k!, clamped to [0, 1]."""
    _check_shape(m)
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x}")
    if x == 0.0:
        return 0.0
    if x > 745.0:  # exp(-x) underflows; the CDF is 1 to machine precision
        return 1.0
    term = 1.0
    total = 1.0
    for k in range(1, m):
        term *= x / k
        total += term
    value = 1.0 - math.exp(-x) * total
    return min(1.0, max(0.0, value))


def gamma_pdf(m: int, x: float) -> float:
    """Density of Gamma(m, 1): x^(m-1) exp(-x) / (m-1)!."""
    _check_shape(m)
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x}")
    if x > 745.0:
        return 0.0
    fact = 1.0
    for k in range(2, m):
        fact *= k
    return x ** (m - 1) * math.exp(-x) / fact


def corr_pdf(m: int, r: float) -> float:
    """Density of the correlation between an i.i.d. CN vector and a fixed direction.

    Beta(1, m-1): f(r) = (m-1)(1-r)^(m-2) on [0, 1]; uniform when m = 2.
    """
    _check_shape(m)
    if m < 2:
        raise DomainError("corr_pdf requires m >= 2")
    if not 0.0 <= r <= 1.0:
        raise DomainError(f"r must lie in [0, 1], got {r}")
    if m == 2:
        return 1.0
    return (m - 1) * (1.0 - r) ** (m - 2)
