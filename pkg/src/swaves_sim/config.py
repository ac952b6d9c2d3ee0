"""Run configuration: flat dotted-namespace key = value files.

One schema drives parsing, defaulting, validation, and the `validate`
subcommand's normalized echo. Unknown keys are an error, not a warning: a
typoed key silently falling back to a default is the worst failure mode a
reproducibility-focused simulator can have.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable


class ConfigError(Exception):
    """Raised with a human-readable list of config problems."""


@dataclass(frozen=True)
class Option:
    typ: type
    default: object
    check: Callable[[object], str | None] | None = None


def _positive(v):
    return None if v > 0 else "must be > 0"


def _nonneg(v):
    return None if v >= 0 else "must be >= 0"


def _unit(v):
    return None if 0.0 <= v <= 1.0 else "must be in [0, 1]"


def _choice(*allowed):
    def check(v):
        return None if v in allowed else f"must be one of {', '.join(allowed)}"

    return check


def _freq_band(v):
    # The empirical path-loss model is only calibrated for this band.
    return None if 1500.0 <= v <= 2000.0 else "must be in [1500, 2000] MHz"


SCHEMA: dict[str, Option] = {
    # --- topology ---
    "topology.n_m2": Option(int, 4, _positive),
    "topology.n_m1": Option(int, 16, _positive),
    "topology.n_bs": Option(int, 64, _positive),
    "topology.area_m": Option(float, 1200.0, _positive),
    "topology.layout": Option(str, "grid", _choice("grid", "uniform")),
    "topology.jitter_m": Option(float, 0.0, _nonneg),
    "topology.packet_size_bits": Option(int, 12_000, _positive),
    "link.rate_bps": Option(float, 1e9, _positive),
    # --- radio ---
    "radio.tx_power_dbm": Option(float, 40.0),
    "radio.freq_mhz": Option(float, 1800.0, _freq_band),
    "radio.bs_height_m": Option(float, 30.0, _positive),
    "radio.ue_height_m": Option(float, 1.5, _positive),
    "radio.bandwidth_hz": Option(float, 20e6, _positive),
    "radio.noise_figure_db": Option(float, 9.0, _nonneg),
    "radio.environment": Option(str, "urban", _choice("urban", "suburban")),
    "radio.min_distance_m": Option(float, 10.0, _positive),
    # --- traffic and delay budget ---
    "traffic.lambda_u_bps": Option(float, 0.2e6, _positive),
    "delay.t_p_s": Option(float, 0.2e-3, _nonneg),
    "service.d_max_ms": Option(float, 1.0, _positive),
    # --- mobility ---
    "mobility.alpha": Option(float, 0.5, _unit),
    "mobility.mean_speed_mps": Option(float, 1.4, _nonneg),
    "mobility.sigma_v": Option(float, 0.5, _nonneg),
    "mobility.sigma_theta": Option(float, 0.3, _nonneg),
    "mobility.hysteresis_db": Option(float, 2.0, _nonneg),
    "mobility.ttr_s": Option(float, 0.5, _nonneg),
    # --- service / resources ---
    "service.n_vnfs": Option(int, 10, _positive),
    "service.v_mem_bits": Option(int, 4_000_000, _positive),
    "service.r_v_cpu": Option(float, 2.0, _nonneg),
    "service.r_v_mem_gb": Option(float, 5.0, _nonneg),
    "service.r_v_disk_gb": Option(float, 1.0, _nonneg),
    "service.r_tot_cpu": Option(float, 8.0, _nonneg),
    "service.r_tot_mem_gb": Option(float, 20.0, _nonneg),
    "service.r_tot_disk_gb": Option(float, 5.0, _nonneg),
    # --- lifecycle timings ---
    "lifecycle.t_download_s": Option(float, 19.2, _nonneg),
    "lifecycle.t_build_s": Option(float, 0.0, _nonneg),
    "lifecycle.t_deploy_s": Option(float, 0.1, _nonneg),
    "lifecycle.t_start_s": Option(float, 0.53, _nonneg),
    "lifecycle.t_stop_s": Option(float, 0.53, _nonneg),
    "lifecycle.t_pause_s": Option(float, 0.096, _nonneg),
    "lifecycle.t_resume_s": Option(float, 0.096, _nonneg),
    # --- forecasting ---
    "forecast.horizon_s": Option(float, 5.0, _positive),
    "forecast.period_s": Option(float, 1.0, _positive),
    "forecast.step_s": Option(float, 1.0, _positive),
    "forecast.n_paths": Option(int, 64, _positive),
    "forecast.n_fading": Option(int, 128, _positive),
    "forecast.grid_n": Option(int, 64, _positive),
    "forecast.oracle_horizon_s": Option(float, 25.0, _positive),
    # --- placement ---
    "placement.strategy": Option(
        str, "swaves", _choice("static", "reactive", "swaves", "oracle")
    ),
    "placement.p_drop": Option(float, 0.05, _unit),
    "placement.epsilon": Option(float, 0.01, _nonneg),
    "placement.use_paused": Option(bool, False),
    "placement.reactive_neighbors": Option(int, 6, _nonneg),
    "placement.reactive_spread_p": Option(float, 0.5, _unit),
    # --- engine ---
    "sim.dt_s": Option(float, 0.1, _positive),
    "sim.duration_s": Option(float, 600.0, _positive),
    "sim.n_users": Option(int, 50, _positive),
    "sim.audit": Option(bool, True),
    "metrics.warmup_s": Option(float, 0.0, _nonneg),
}


def _parse_value(key: str, raw: str, typ: type):
    raw = raw.strip()
    if typ is bool:
        if raw.lower() in ("true", "false"):
            return raw.lower() == "true"
        raise ConfigError(f"{key}: expected true/false, got {raw!r}")
    if typ is int:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected integer, got {raw!r}") from None
    if typ is float:
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected number, got {raw!r}") from None
    return raw


def parse_file(path: str) -> dict:
    """Read a key = value document. Returns raw (unvalidated) typed entries."""
    entries = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = (part.strip() for part in line.split("=", 1))
            if key not in SCHEMA:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            if key in entries:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            entries[key] = _parse_value(key, raw, SCHEMA[key].typ)
    return entries


class RunConfig:
    """Validated, fully-defaulted view of one simulation run's parameters."""

    def __init__(self, entries: dict | None = None):
        entries = dict(entries or {})
        errors = []
        values = {}
        for key, opt in SCHEMA.items():
            if key in entries:
                v = entries.pop(key)
                if not isinstance(v, opt.typ) or (opt.typ is not bool and isinstance(v, bool)):
                    try:
                        v = _parse_value(key, str(v), opt.typ)
                    except ConfigError as exc:
                        errors.append(str(exc))
                        continue
                if opt.check is not None:
                    problem = opt.check(v)
                    if problem:
                        errors.append(f"{key} = {v!r}: {problem}")
                        continue
                values[key] = v
            else:
                values[key] = opt.default
        for key in entries:
            errors.append(f"unknown key {key!r}")
        if not errors:
            errors.extend(self._cross_checks(values))
        if errors:
            raise ConfigError("; ".join(errors))
        self._values = values

    @staticmethod
    def _cross_checks(v: dict) -> list[str]:
        errors = []
        if v["topology.n_bs"] % v["topology.n_m1"] != 0:
            errors.append(
                f"topology.n_bs = {v['topology.n_bs']} is not divisible by "
                f"topology.n_m1 = {v['topology.n_m1']}"
            )
        if v["topology.n_m1"] < v["topology.n_m2"]:
            errors.append("topology.n_m1 must be >= topology.n_m2")
        if v["sim.duration_s"] < v["sim.dt_s"]:
            errors.append("sim.duration_s must be >= sim.dt_s")
        if v["forecast.step_s"] > v["forecast.horizon_s"]:
            errors.append("forecast.step_s must be <= forecast.horizon_s")
        for a, b in (
            ("service.r_v_cpu", "service.r_tot_cpu"),
            ("service.r_v_mem_gb", "service.r_tot_mem_gb"),
            ("service.r_v_disk_gb", "service.r_tot_disk_gb"),
        ):
            if v[a] > v[b]:
                errors.append(f"{a} must be <= {b} (one instance must fit an EC)")
        return errors

    def __getitem__(self, key: str):
        return self._values[key]

    def get(self, key: str, default=None):
        return self._values.get(key, default)

    def replaced(self, **dotted) -> "RunConfig":
        """New config with some keys overridden (names use _ for .)."""
        entries = dict(self._values)
        for name, value in dotted.items():
            entries[name.replace("__", ".")] = value
        return RunConfig(entries)

    def with_overrides(self, overrides: dict) -> "RunConfig":
        entries = dict(self._values)
        entries.update(overrides)
        return RunConfig(entries)

    def dump(self) -> str:
        """Canonical normalized text (sorted keys, typed formatting)."""
        lines = []
        for key in sorted(self._values):
            v = self._values[key]
            if isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{key} = {v}")
        return "\n".join(lines) + "\n"

    def as_dict(self) -> dict:
        return dict(self._values)


def load(path: str | None, overrides: dict | None = None) -> RunConfig:
    entries = parse_file(path) if path else {}
    if overrides:
        entries.update(overrides)
    return RunConfig(entries)
