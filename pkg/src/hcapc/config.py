"""Simulator configuration: a flat ``key = value`` text format.

Unknown keys and malformed values are rejected. Every resolved config can be
written back out with :func:`format_config` and parsed again to an equal
object.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .admission import FixedPower, OptimalPC, ReuseDistance
from .hexgrid import GainModel, build_gain_matrix, build_grid
from .netstate import build_channel_plan, _cluster_multiplier
from .power import QosParams

POLICIES = ("pc", "fp", "rd")


class ConfigError(ValueError):
    pass


def benchmark_rates() -> tuple[float, ...]:
    text = resources.files("hcapc").joinpath("data/benchmark_traffic.txt").read_text("utf-8")
    vals = []
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        vals.extend(float(v) for v in line.split())
    return tuple(vals)


@dataclass(frozen=True)
class TrafficProfile:
    arrival_rates: tuple      # calls/hour per cell at normal load
    mean_holding: float       # seconds
    load_multiplier: float = 1.0

    def rates_per_second(self) -> np.ndarray:
        return np.asarray(self.arrival_rates, dtype=float) * self.load_multiplier / 3600.0

    def offered_load(self) -> np.ndarray:
        """Per-cell offered traffic in Erlangs."""
        return self.rates_per_second() * self.mean_holding


def _ratio_parts(ratio: str) -> tuple[int, int]:
    try:
        fc, dc = (int(x) for x in ratio.split(":"))
    except ValueError:
        raise ConfigError(f"ratio: expected 'FC:DC' with integers, got {ratio!r}") from None
    return fc, dc


@dataclass(frozen=True)
class SimConfig:
    seed: int = 1
    sim_duration: float = 36000.0
    warmup: float = None
    rows: int = 7
    cols: int = 7
    path_loss_exponent: float = 2.0
    min_distance: float = 1.0
    self_gain: float = 1.75
    total_channels: int = 70
    ratio: str = "21:49"
    cluster_size: int = 7
    gamma0: float = 2.0
    noise: float = 0.01
    power_cap: float = 10.0
    policy: str = "pc"
    p_fixed: float = None
    d_reuse: float = 3.0
    mean_holding: float = 180.0
    load_multiplier: float = 1.0
    arrival_rates: tuple = None
    audit: bool = False
    se_batches: int = 20
    load_values: tuple = (0.8, 1.0, 1.2, 1.4, 1.6)
    gamma0_values: tuple = (1.0, 2.0, 4.0, 8.0)

    def __post_init__(self):
        def fix(name, value):
            object.__setattr__(self, name, value)

        if self.warmup is None:
            fix("warmup", 0.1 * self.sim_duration)
        if self.p_fixed is None:
            fix("p_fixed", self.power_cap)
        if self.arrival_rates is None:
            fix("arrival_rates", benchmark_rates())
        fix("arrival_rates", tuple(float(x) for x in self.arrival_rates))
        fix("load_values", tuple(float(x) for x in self.load_values))
        fix("gamma0_values", tuple(float(x) for x in self.gamma0_values))
        self._validate()

    def _validate(self):
        def need(ok, key, msg):
            if not ok:
                raise ConfigError(f"{key}: {msg}")

        need(self.sim_duration > 0, "sim_duration", "must be > 0")
        need(0 <= self.warmup < self.sim_duration, "warmup", "must satisfy 0 <= warmup < sim_duration")
        need(self.rows >= 1, "rows", "must be >= 1")
        need(self.cols >= 1, "cols", "must be >= 1")
        need(self.path_loss_exponent > 0, "path_loss_exponent", "must be > 0")
        need(0 < self.min_distance <= 1, "min_distance", "must lie in (0, 1]")
        need(self.self_gain > 0, "self_gain", "must be > 0")
        # adjacent cells are one unit apart, so their mutual gain is exactly 1
        need(self.rows * self.cols == 1 or self.self_gain > 1, "self_gain",
             "must be > 1 so the own-cell gain exceeds every cross-cell gain")
        need(self.total_channels >= 1, "total_channels", "must be >= 1")
        need(self.cluster_size >= 1 and _cluster_multiplier(self.cluster_size) is not None,
             "cluster_size", "must be a hexagonal cluster size (1, 3, 7, 13, ...)")
        fc, dc = _ratio_parts(self.ratio)
        need(fc >= 0 and dc >= 0, "ratio", "counts must be non-negative")
        need(fc + dc == self.total_channels, "ratio",
             f"FC + DC = {fc + dc} must equal total_channels = {self.total_channels}")
        need(fc % self.cluster_size == 0, "ratio",
             f"FC count {fc} must be a multiple of cluster_size {self.cluster_size} "
             "(cluster divisibility rule)")
        need(self.gamma0 > 0, "gamma0", "must be > 0")
        need(self.noise > 0, "noise", "must be > 0")
        need(self.power_cap > 0, "power_cap", "must be > 0")
        need(self.policy in POLICIES, "policy", f"must be one of {', '.join(POLICIES)}")
        need(0 < self.p_fixed <= self.power_cap, "p_fixed", "must lie in (0, power_cap]")
        need(self.d_reuse > 0, "d_reuse", "must be > 0")
        need(self.mean_holding > 0, "mean_holding", "must be > 0")
        need(self.load_multiplier > 0, "load_multiplier", "must be > 0")
        need(len(self.arrival_rates) == self.rows * self.cols, "arrival_rates",
             f"needs {self.rows * self.cols} values, got {len(self.arrival_rates)}")
        need(all(r >= 0 for r in self.arrival_rates), "arrival_rates", "rates must be >= 0")
        need(self.se_batches >= 2, "se_batches", "must be >= 2")
        need(len(self.load_values) > 0 and all(v > 0 for v in self.load_values),
             "load_values", "must be a non-empty list of positive values")
        need(len(self.gamma0_values) > 0 and all(v > 0 for v in self.gamma0_values),
             "gamma0_values", "must be a non-empty list of positive values")

    # -- derived objects -------------------------------------------------
    @property
    def n_fc(self) -> int:
        return _ratio_parts(self.ratio)[0]

    def geometry(self):
        return build_grid(self.rows, self.cols)

    def gain_model(self) -> GainModel:
        return GainModel(self.path_loss_exponent, self.min_distance, self.self_gain)

    def gains(self, geom=None) -> np.ndarray:
        return build_gain_matrix(geom or self.geometry(), self.gain_model())

    def channel_plan(self, geom=None):
        return build_channel_plan(self.total_channels, self.n_fc, self.cluster_size,
                                  geom or self.geometry())

    def qos(self) -> QosParams:
        return QosParams.uniform(self.gamma0, self.noise, self.power_cap, self.rows * self.cols)

    def make_policy(self):
        if self.policy == "pc":
            return OptimalPC()
        if self.policy == "fp":
            return FixedPower(self.p_fixed)
        return ReuseDistance(self.d_reuse, self.p_fixed)

    def traffic(self) -> TrafficProfile:
        return TrafficProfile(self.arrival_rates, self.mean_holding, self.load_multiplier)

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)


_FIELDS = {f.name: f for f in dataclasses.fields(SimConfig)}
_TUPLE_KEYS = {"arrival_rates", "load_values", "gamma0_values"}
_INT_KEYS = {"seed", "rows", "cols", "total_channels", "cluster_size", "se_batches"}
_FLOAT_KEYS = {k for k in _FIELDS if k not in _TUPLE_KEYS | _INT_KEYS
               | {"ratio", "policy", "audit"}}


def _coerce(key: str, raw: str):
    raw = raw.strip()
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key == "audit":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError
        if key == "arrival_rates":
            if raw == "benchmark":
                return benchmark_rates()
            if raw.startswith("uniform:"):
                return ("uniform", float(raw.split(":", 1)[1]))
            return tuple(float(v) for v in raw.split(","))
        if key in _TUPLE_KEYS:
            return tuple(float(v) for v in raw.split(","))
        if key == "policy":
            return raw.lower()
        return raw
    except ValueError:
        raise ConfigError(f"{key}: malformed value {raw!r}") from None


def read_config_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"{key}: unknown key (line {n})")
        if key in out:
            raise ConfigError(f"{key}: duplicate key (line {n})")
        out[key] = value
    return out


def parse_config(path=None, overrides: dict | None = None, text: str | None = None) -> SimConfig:
    """Build a SimConfig from an optional file/text plus string overrides.

    Overrides (typically CLI flags) win over file values.
    """
    raw: dict[str, str] = {}
    if path is not None:
        raw.update(read_config_text(Path(path).read_text("utf-8")))
    if text is not None:
        raw.update(read_config_text(text))
    for key, value in (overrides or {}).items():
        if key not in _FIELDS:
            raise ConfigError(f"{key}: unknown key")
        if value is not None:
            raw[key] = str(value)
    kwargs = {k: _coerce(k, v) for k, v in raw.items()}
    rates = kwargs.get("arrival_rates")
    if isinstance(rates, tuple) and rates and rates[0] == "uniform":
        n = kwargs.get("rows", 7) * kwargs.get("cols", 7)
        kwargs["arrival_rates"] = (rates[1],) * n
    try:
        return SimConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def format_config(cfg: SimConfig) -> str:
    lines = ["# fully resolved simulator configuration"]
    for name in _FIELDS:
        value = getattr(cfg, name)
        if isinstance(value, tuple):
            text = ", ".join(repr(float(v)) for v in value)
        elif isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{name} = {text}")
    return "\n".join(lines) + "\n"
