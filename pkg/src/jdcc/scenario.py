"""Scenario files: line-oriented `section.key = value` text, validated on load.

Logarithmic fields (dBm, dB) carry the unit in their key name and are
converted to linear exactly once here; everything downstream of the loader
works in watts / Hz / seconds. Unknown keys are rejected by name, and every
validation failure names the field and the violated constraint.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelPair, sample_channel
from .config import Plant, SystemConfig, db_to_linear, dbm_to_watt
from .errors import DomainError

_CHANNEL_STREAM = 2 ** 48  # substream index reserved for scenario channel draws


class ScenarioError(ValueError):
    """A scenario file could not be parsed or validated."""


def _parse_complex(text: str) -> complex:
    return complex(text.replace(" ", "").replace("i", "j"))


def _parse_list(text: str, item):
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise ValueError("expected a [..] list")
    body = text[1:-1].strip()
    return [item(part.strip()) for part in body.split(",")] if body else []


_PARSERS = {
    "int": int,
    "float": float,
    "complex": _parse_complex,
    "str": lambda s: s.strip().strip('"'),
    "complex_list": lambda s: _parse_list(s, _parse_complex),
    "int_list": lambda s: _parse_list(s, int),
    "float_list": lambda s: _parse_list(s, float),
}

# key -> (kind, default); None defaults mean "derived or optional".
_SCHEMA: dict[str, tuple[str, object]] = {
    "system.m": ("int", 4),
    "system.p_dn_dbm": ("float", -30.0),
    "system.p_up_dbm": ("float", -30.0),
    "system.b_dn_hz": ("float", 20e3),
    "system.b_up_hz": ("float", 10e3),
    "system.t_s_s": ("float", 1e-4),
    "system.n0_dbm_hz": ("float", -174.0),
    "system.q_u_bits": ("float", 1000.0),
    "system.d_u_m": ("float", 100.0),
    "system.d_d_m": ("float", 120.0),
    "system.c0_db": ("float", -30.0),
    "system.alpha_pl": ("float", 3.2),
    "plant.a": ("complex", 1.2 + 1.2j),
    "plant.b": ("complex", 1.0 + 0.0j),
    "plant.sigma_w2": ("float", 1e-2),
    "run.seed": ("int", 42),
    "run.trials": ("int", 100000),
    "run.grid": ("int", 25),
    "run.out_dir": ("str", "."),
    "channel.h_d": ("complex_list", []),
    "channel.h_u": ("complex_list", []),
    "channel.rho": ("float", None),
    "trajectory.n_steps": ("int", 50),
    "trajectory.v0": ("float", 1.0),
    "requirements.tau_req_s": ("float", 0.01),
    "requirements.v_req": ("float", None),  # defaults to 3 * sigma_w2
    "sweep.p_dn_dbm_min": ("float", -40.0),
    "sweep.p_dn_dbm_max": ("float", -10.0),
    "sweep.gamma_d_db": ("float", 0.0),
    "stability.snr_db_min": ("float", -5.0),
    "stability.snr_db_max": ("float", 30.0),
    "stability.sinr_db_min": ("float", -5.0),
    "stability.sinr_db_max": ("float", 30.0),
    "asymptotics.gamma_db_min": ("float", 0.0),
    "asymptotics.gamma_db_max": ("float", 60.0),
    "asymptotics.fixed_quality_db": ("float", 10.0),
    "outage.m_list": ("int_list", [4, 6]),
    "outage.p_dn_dbm_min": ("float", -30.0),
    "outage.p_dn_dbm_max": ("float", -10.0),
    "outage.p_dn_points": ("int", 5),
    "joint.tau_min_s": ("float", 5e-3),
    "joint.tau_max_s": ("float", 0.05),
    "joint.v_mult_min": ("float", 2.0),
    "joint.v_mult_max": ("float", 10.0),
    "joint.grid": ("int", 4),
}


@dataclass(frozen=True)
class Scenario:
    """A validated scenario: physical config plus experiment knobs."""

    cfg: SystemConfig
    values: dict = field(repr=False)  # resolved key -> value, the hash/echo source

    def __getitem__(self, key: str):
        return self.values[key]

    @property
    def seed(self) -> int:
        return self.values["run.seed"]

    @property
    def trials(self) -> int:
        return self.values["run.trials"]

    @property
    def grid(self) -> int:
        return self.values["run.grid"]

    @property
    def tau_req(self) -> float:
        return self.values["requirements.tau_req_s"]

    @property
    def v_req(self) -> float:
        return self.values["requirements.v_req"]

    def hash(self) -> str:
        text = "\n".join(f"{k} = {self.values[k]!r}" for k in sorted(self.values))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def echo_lines(self) -> list[str]:
        lines = [f"{k} = {_format_value(self.values[k])}" for k in sorted(self.values)]
        cfg = self.cfg
        lines += [
            f"derived.alpha_up = {cfg.alpha_up!r}",
            f"derived.alpha_dn = {cfg.alpha_dn!r}",
            f"derived.sigma_up2_w = {cfg.sigma_up2!r}",
            f"derived.sigma_dn2_w = {cfg.sigma_dn2!r}",
            f"derived.beta_u = {cfg.beta_u!r}",
            f"derived.beta_d = {cfg.beta_d!r}",
        ]
        return lines


def _format_value(v) -> str:
    if isinstance(v, list):
        return "[" + ", ".join(_format_value(x) for x in v) + "]"
    return repr(v)


def _parse_file(path: str) -> dict[str, str]:
    raw: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ScenarioError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, value = text.partition("=")
            key = key.strip()
            if key in raw:
                raise ScenarioError(f"{path}:{lineno}: duplicate key {key!r}")
            raw[key] = value.strip()
    return raw


def load_scenario(path: str | None = None, overrides: dict | None = None) -> Scenario:
    """Read, default-fill and validate a scenario; None loads pure defaults.

    `overrides` maps schema keys to already-typed values (CLI flags) and wins
    over file values.
    """
    raw = _parse_file(path) if path is not None else {}
    unknown = sorted(set(raw) - set(_SCHEMA))
    if unknown:
        raise ScenarioError(f"unknown scenario key(s): {', '.join(unknown)}")

    values: dict = {}
    for key, (kind, default) in _SCHEMA.items():
        if key in raw:
            try:
                values[key] = _PARSERS[kind](raw[key])
            except (ValueError, TypeError) as exc:
                raise ScenarioError(f"{key}: cannot parse {raw[key]!r} as {kind}: {exc}") from None
        else:
            values[key] = default
    for key, value in (overrides or {}).items():
        if key not in _SCHEMA:
            raise ScenarioError(f"unknown override key {key!r}")
        values[key] = value

    _validate(values)
    if values["requirements.v_req"] is None:
        values["requirements.v_req"] = 3.0 * values["plant.sigma_w2"]

    try:
        plant = Plant(values["plant.a"], values["plant.b"], values["plant.sigma_w2"])
        cfg = SystemConfig(
            m=values["system.m"],
            p_dn=dbm_to_watt(values["system.p_dn_dbm"]),
            p_up=dbm_to_watt(values["system.p_up_dbm"]),
            b_dn=values["system.b_dn_hz"],
            b_up=values["system.b_up_hz"],
            t_s=values["system.t_s_s"],
            n0=dbm_to_watt(values["system.n0_dbm_hz"]),
            q_u=values["system.q_u_bits"],
            d_u=values["system.d_u_m"],
            d_d=values["system.d_d_m"],
            c0=db_to_linear(values["system.c0_db"]),
            alpha_pl=values["system.alpha_pl"],
            plant=plant,
        )
    except DomainError as exc:
        raise ScenarioError(str(exc)) from None
    return Scenario(cfg, values)


def _positive(values: dict, key: str) -> None:
    v = values[key]
    if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
        raise ScenarioError(f"{key}: must be a positive finite number, got {v!r}")


def _validate(values: dict) -> None:
    if values["system.m"] < 2:
        raise ScenarioError(f"system.m: antenna count must be >= 2, got {values['system.m']}")
    for key in ("system.b_dn_hz", "system.b_up_hz", "system.t_s_s", "system.q_u_bits",
                "system.d_u_m", "system.d_d_m", "system.alpha_pl", "plant.sigma_w2",
                "trajectory.v0", "requirements.tau_req_s", "joint.tau_min_s",
                "joint.tau_max_s", "joint.v_mult_min", "joint.v_mult_max"):
        _positive(values, key)
    if values["requirements.v_req"] is not None:
        _positive(values, "requirements.v_req")
    if abs(values["plant.a"]) <= 1.0:
        raise ScenarioError(f"plant.a: requires |a| > 1, got |a| = {abs(values['plant.a'])}")
    if values["plant.b"] == 0:
        raise ScenarioError("plant.b: must be nonzero")
    for key in ("run.trials", "run.grid", "trajectory.n_steps", "outage.p_dn_points",
                "joint.grid"):
        if values[key] < 1:
            raise ScenarioError(f"{key}: must be >= 1, got {values[key]}")
    if not 0 <= values["run.seed"] < 2 ** 64:
        raise ScenarioError(f"run.seed: must fit in 64 bits, got {values['run.seed']}")
    rho = values["channel.rho"]
    if rho is not None and not 0.0 <= rho < 1.0:
        raise ScenarioError(f"channel.rho: must lie in [0, 1), got {rho}")
    h_d, h_u = values["channel.h_d"], values["channel.h_u"]
    if bool(h_d) != bool(h_u):
        raise ScenarioError("channel.h_d / channel.h_u: give both vectors or neither")
    if h_d and (len(h_d) != values["system.m"] or len(h_u) != values["system.m"]):
        raise ScenarioError(
            f"channel.h_d / channel.h_u: need length m = {values['system.m']}, "
            f"got {len(h_d)} and {len(h_u)}")
    if h_d and rho is not None:
        raise ScenarioError("channel.rho: cannot combine with explicit channel vectors")
    for mm in values["outage.m_list"]:
        if mm < 2:
            raise ScenarioError(f"outage.m_list: entries must be >= 2, got {mm}")


def channel_for(scn: Scenario) -> ChannelPair:
    """The channel realization the scenario pins down.

    Explicit vectors win; otherwise a prescribed correlation gives a
    deterministic synthetic pair at mean gains, and failing that the pair is
    drawn from the scenario seed's dedicated substream.
    """
    cfg = scn.cfg
    if scn["channel.h_d"]:
        return ChannelPair(np.array(scn["channel.h_d"], dtype=np.complex128),
                           np.array(scn["channel.h_u"], dtype=np.complex128))
    rho = scn["channel.rho"]
    if rho is not None:
        h_d = np.zeros(cfg.m, dtype=np.complex128)
        h_d[0] = math.sqrt(cfg.m * cfg.beta_d)
        h_u = np.zeros(cfg.m, dtype=np.complex128)
        h_u[0] = math.sqrt(cfg.m * cfg.beta_u * rho)
        h_u[1] = math.sqrt(cfg.m * cfg.beta_u * (1.0 - rho))
        return ChannelPair(h_d, h_u)
    rng = np.random.Generator(np.random.Philox(key=scn.seed).jumped(_CHANNEL_STREAM))
    return ChannelPair(sample_channel(cfg.m, cfg.beta_d, rng),
                       sample_channel(cfg.m, cfg.beta_u, rng))
