"""Experiment configuration files.

A config is a flat YAML mapping of :class:`ExperimentConfig` fields.  The
only nesting is an inline channel::

    channel:
      name: two-ray
      taps:
        - [0.0, 0.0, 0.0]       # delay_us, gain_db, phase_rad
        - [12.5, -3.0, 3.1416]
    snr_grid_db: {start: -4, stop: 2, step: 1}   # or a plain list
    trials: 10000
    min_errors: 100

``channel`` may instead name a built-in profile, or a profile defined in
``channel_file`` (a YAML file with one profile or a ``profiles`` list).
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import yaml

from . import chan
from .errors import ConfigError, PreambleLabError
from .harness import ExperimentConfig, config_fields

EXTRA_KEYS = {"channel_file"}


def parse_snr_grid(value) -> list[float]:
    """Accept a list, a scalar, ``{start, stop, step}`` or ``"start:stop:step"``."""
    if isinstance(value, str) and ":" in value:
        parts = [float(p) for p in value.split(":")]
        if len(parts) != 3:
            raise ValueError("expected start:stop:step")
        value = dict(zip(("start", "stop", "step"), parts))
    if isinstance(value, dict):
        start, stop, step = (float(value[k]) for k in ("start", "stop", "step"))
        if step <= 0:
            raise ValueError("step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [float(round(v, 10)) for v in start + step * np.arange(count)]
    if isinstance(value, (int, float)):
        return [float(value)]
    if isinstance(value, str):
        return [float(v) for v in value.split(",") if v.strip()]
    return [float(v) for v in value]


def _key_lines(text: str) -> dict[str, int]:
    node = yaml.compose(text)
    if not isinstance(node, yaml.MappingNode):
        return {}
    return {k.value: k.start_mark.line + 1 for k, _ in node.value}


def _coerce(key: str, value, base_dir: Path | None, profiles: dict[str, chan.ChannelProfile]):
    if key == "channel":
        if isinstance(value, dict):
            return chan.profile_from_mapping(value)
        name = str(value)
        if name in profiles:
            return profiles[name]
        chan.get_profile(name)
        return name
    if key == "snr_grid_db":
        return parse_snr_grid(value)
    if key == "lfsr_taps":
        return tuple(int(v) for v in (value if isinstance(value, (list, tuple)) else str(value).split(",")))
    if key in {"m_int", "f_frac", "signaling", "min_errors"}:
        if value is None or str(value).lower() in {"random", "none", "null"}:
            return None
        return float(value) if key == "f_frac" else int(value)
    if key in {"channel_estimation", "record_wall_time"}:
        if isinstance(value, str):
            return value.lower() in {"1", "true", "yes", "on"}
        return bool(value)
    if key in {"sample_interval_us", "p_th_rel", "p_th_noise", "detect_threshold"}:
        return float(value)
    return int(value)


def build_config(
    data: dict,
    overrides: dict | None = None,
    lines: dict[str, int] | None = None,
    base_dir: Path | None = None,
) -> ExperimentConfig:
    """Turn raw mappings into a validated config; errors carry line numbers."""
    lines = lines or {}
    merged = dict(data or {})
    merged.update(overrides or {})
    known = set(config_fields()) | EXTRA_KEYS

    def fail(key, message):
        where = "override" if overrides and key in overrides else None
        line = None if where else lines.get(key)
        prefix = f"{where} " if where else ""
        raise ConfigError(f"{prefix}{key}: {message}", key=key, line=line)

    for key in merged:
        if key not in known:
            fail(key, "unknown setting")

    profiles: dict[str, chan.ChannelProfile] = {}
    if merged.get("channel_file"):
        path = Path(str(merged["channel_file"]))
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        try:
            profiles = chan.load_profiles(path)
        except (OSError, yaml.YAMLError, PreambleLabError, AttributeError) as exc:
            fail("channel_file", f"cannot load profiles: {exc}")

    kwargs = {}
    for key, value in merged.items():
        if key in EXTRA_KEYS:
            continue
        try:
            kwargs[key] = _coerce(key, value, base_dir, profiles)
        except chan.UnknownProfile as exc:
            fail(key, str(exc))
        except (TypeError, ValueError, KeyError, PreambleLabError) as exc:
            fail(key, f"bad value {value!r} ({exc})")

    cfg = ExperimentConfig(**kwargs)
    try:
        return cfg.validate()
    except ConfigError as exc:
        fail(exc.key or "config", str(exc))


def load_config(path: str | Path | None, overrides: dict | None = None) -> ExperimentConfig:
    if path is None:
        return build_config({}, overrides)
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = yaml.safe_load(text) or {}
        lines = _key_lines(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"malformed config: {getattr(exc, 'problem', exc)}", line=line) from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping of settings", line=1)
    return build_config(data, overrides, lines, path.parent)


def parse_overrides(items: list[str] | None) -> dict:
    """``["trials=100", "channel=CDT-8"]`` -> typed mapping."""
    out = {}
    for item in items or []:
        key, sep, raw = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"override {item!r} is not key=value")
        key = key.strip()
        if ":" in raw and not raw.lstrip().startswith(("[", "{")):
            # YAML 1.1 would read "-4:2:1" as a base-60 integer
            out[key] = raw.strip()
        else:
            out[key] = yaml.safe_load(raw) if raw.strip() else None
    return out
