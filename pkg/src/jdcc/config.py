"""Scenario parameters for one base station serving a data user and a controlled device.

All quantities are stored in linear SI units (watts, Hz, seconds, meters).
dB / dBm values are converted exactly once, at ingestion, by the helpers
below; nothing downstream ever sees a logarithmic unit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError


def db_to_linear(x_db: float) -> float:
    """Power ratio from dB."""
    return 10.0 ** (x_db / 10.0)


def dbm_to_watt(x_dbm: float) -> float:
    """Absolute power in watts from dBm."""
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class Plant:
    """Scalar LTI process x[n+1] = a x[n] + b u[n] + w[n] with |a| > 1.

    The open loop is unstable by assumption; sigma_w2 is the variance of
    the circularly symmetric complex process noise w[n].
    """

    a: complex
    b: complex
    sigma_w2: float

    def __post_init__(self):
        if abs(self.a) <= 1.0:
            raise DomainError(f"plant requires |a| > 1, got |a| = {abs(self.a)}")
        if self.b == 0:
            raise DomainError("plant requires b != 0")
        if not self.sigma_w2 > 0.0:
            raise DomainError(f"sigma_w2 must be positive, got {self.sigma_w2}")

    @property
    def a2(self) -> float:
        """|a|^2, the open-loop variance growth factor per interval."""
        return abs(self.a) ** 2


@dataclass(frozen=True)
class SystemConfig:
    """Physical scenario: antennas, powers, bandwidths, noise, geometry, plant.

    M          antennas at the base station (>= 2)
    p_dn, p_up downlink / uplink transmit power [W]
    b_dn, b_up downlink / uplink bandwidth [Hz]
    t_s        control sampling period [s]
    n0         noise power spectral density [W/Hz]
    q_u        communication payload [bits]
    d_u, d_d   distance to the data user / controlled device [m]
    c0         reference path gain at 1 m (linear)
    alpha_pl   path-loss exponent
    """

    m: int
    p_dn: float
    p_up: float
    b_dn: float
    b_up: float
    t_s: float
    n0: float
    q_u: float
    d_u: float
    d_d: float
    c0: float
    alpha_pl: float
    plant: Plant

    def __post_init__(self):
        if self.m < 2:
            raise DomainError(f"antenna count m must be >= 2, got {self.m}")
        for name in ("p_dn", "p_up", "b_dn", "b_up", "t_s", "n0", "q_u",
                     "d_u", "d_d", "c0", "alpha_pl"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be a positive finite number, got {value!r}")

    # Derived link constants; all strictly positive given the invariants above.

    @property
    def sigma_dn2(self) -> float:
        """Downlink noise power n0 * b_dn [W]."""
        return self.n0 * self.b_dn

    @property
    def sigma_up2(self) -> float:
        """Uplink noise power n0 * b_up [W]."""
        return self.n0 * self.b_up

    @property
    def alpha_dn(self) -> float:
        """Downlink bits-per-interval exponent b_dn * t_s."""
        return self.b_dn * self.t_s

    @property
    def alpha_up(self) -> float:
        """Uplink bits-per-interval exponent b_up * t_s."""
        return self.b_up * self.t_s

    @property
    def beta_u(self) -> float:
        """Large-scale gain of the data-user link."""
        return self.c0 * self.d_u ** (-self.alpha_pl)

    @property
    def beta_d(self) -> float:
        """Large-scale gain of the controlled-device link."""
        return self.c0 * self.d_d ** (-self.alpha_pl)
