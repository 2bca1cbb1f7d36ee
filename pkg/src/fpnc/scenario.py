"""Scenario files: human-readable key/value configs for sweeps and trials.

Format: INI with a single [scenario] section. Lists are comma-separated;
complex tap gains accept Python literal forms like `0.5-0.2j`.

    [scenario]
    snr_db = 5, 8, 11, 14, 17, 20
    offsets = 0, 8
    trials = 500
    seed = 7
    channel = two_tap_random
    cfo_a = 0.012
    cfo_b = -0.012
"""
from __future__ import annotations

import configparser
from dataclasses import fields, replace
from pathlib import Path

from .experiments import SchemeId, SweepConfig
from .params import OfdmParams


class ConfigError(ValueError):
    """Unusable scenario file or override set."""


_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def _parse_bool(text: str) -> bool:
    try:
        return _BOOL[text.strip().lower()]
    except KeyError:
        raise ConfigError(f"expected a boolean, got {text!r}") from None


def _parse_list(text: str, conv):
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise ConfigError(f"expected a non-empty list, got {text!r}")
    try:
        return tuple(conv(t) for t in items)
    except ValueError as exc:
        raise ConfigError(f"bad list entry in {text!r}: {exc}") from None


_PARSERS = {
    "snr_db": lambda t: _parse_list(t, float),
    "offsets": lambda t: _parse_list(t, int),
    "trials": int,
    "seed": int,
    "payload_bytes": int,
    "coded": _parse_bool,
    "schemes": lambda t: tuple(SchemeId(s) for s in _parse_list(t, str)),
    "channel_mode": str,
    "taps_a": lambda t: _parse_list(t, complex),
    "taps_b": lambda t: _parse_list(t, complex),
    "max_tap_span": int,
    "cfo_a": float,
    "cfo_b": float,
    "cfo_strategy": str,
    "cfo_estimator": str,
    "mapping_rule": str,
    "sync_threshold": float,
    "noiseless": _parse_bool,
    "lts_outliers": int,
    "lts_outlier_amplitude": float,
    "allow_cp_violation": _parse_bool,
    "genie_sync": _parse_bool,
    "include_downlink": _parse_bool,
}


def load_scenario(path: str | Path) -> dict:
    """Parse a scenario file into SweepConfig field values."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed scenario file {path}: {exc}") from None
    if "scenario" not in parser:
        raise ConfigError(f"{path}: missing [scenario] section")
    section = parser["scenario"]
    values: dict = {}
    for key, raw in section.items():
        if key not in _PARSERS:
            raise ConfigError(f"{path}: unknown scenario key {key!r}")
        try:
            values[key] = _PARSERS[key](raw)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"{path}: bad value for {key}: {exc}") from None
    return values


def build_config(scenario_values: dict, overrides: dict) -> SweepConfig:
    """Merge scenario values with CLI overrides (overrides win) and
    validate the result."""
    merged = dict(scenario_values)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    if "snr_db" not in merged:
        raise ConfigError("no SNR points given (scenario snr_db or --snr)")
    known = {f.name for f in fields(SweepConfig)}
    unknown = set(merged) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = SweepConfig(**merged)
    validate_config(cfg)
    return cfg


def validate_config(cfg: SweepConfig, params: OfdmParams | None = None) -> None:
    params = params or OfdmParams()
    if cfg.trials < 1:
        raise ConfigError("trials must be >= 1")
    if cfg.payload_bytes < 1:
        raise ConfigError("payload_bytes must be >= 1")
    if cfg.channel_mode not in ("flat", "fixed", "two_tap_random"):
        raise ConfigError(f"unknown channel mode {cfg.channel_mode!r}")
    if cfg.cfo_strategy not in ("mean", "a_only", "b_only"):
        raise ConfigError(f"unknown CFO strategy {cfg.cfo_strategy!r}")
    if cfg.cfo_estimator not in ("median", "mean"):
        raise ConfigError(f"unknown CFO estimator {cfg.cfo_estimator!r}")
    if cfg.mapping_rule not in ("logmax", "exact"):
        raise ConfigError(f"unknown mapping rule {cfg.mapping_rule!r}")
    if any(off < 0 for off in cfg.offsets):
        raise ConfigError("arrival offsets must be >= 0")
    spread = worst_delay_spread(cfg, params)
    if spread > params.cp_len and not cfg.allow_cp_violation:
        raise ConfigError(
            f"scenario delay spread {spread} exceeds the CP length {params.cp_len}; "
            "pass --allow-cp-violation to run it as a negative control"
        )


def worst_delay_spread(cfg: SweepConfig, params: OfdmParams) -> int:
    """Largest combined delay spread any trial of this config can see."""
    worst = 0
    for offset in cfg.offsets:
        if cfg.channel_mode == "flat":
            d_a, d_b = 1, offset + 1
        elif cfg.channel_mode == "fixed":
            d_a, d_b = len(cfg.taps_a), offset + len(cfg.taps_b)
        else:
            d_a = 1 + max(0, min(cfg.max_tap_span, params.cp_len - 1))
            d_b = offset + 1 + max(0, min(cfg.max_tap_span, params.cp_len - 1 - offset))
        worst = max(worst, d_a, d_b)
    return worst


def single_trial_config(cfg: SweepConfig, snr_db: float, offset: int) -> SweepConfig:
    return replace(cfg, snr_db=(snr_db,), offsets=(offset,), trials=1)
