"""Run configuration: one INI file with a section per pipeline stage.

Every key has a default, so an empty (or absent) file is a valid
configuration. Unknown sections or keys are rejected rather than ignored;
``--set section.key=value`` overrides take precedence over the file, and
the output directory can additionally come from the ``EDANAV_OUTPUT_DIR``
environment variable (flag > environment > file > default).
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .control import (
    DEFAULT_INTEGRAL_CLAMP,
    DEFAULT_MAX_LONGITUDINAL,
    DEFAULT_MAX_ROTATIONAL,
    GAIN_KEYS,
    AccelLimits,
)
from .errors import ConfigError
from .optimize import MODES, GainRanges
from .scr import METHODS, DetectorParams
from .signals import DecompositionConfig
from .surrogate import DEFAULT_CLIP_LEN_S, DEFAULT_RIDGE_LAMBDA, OracleParams

ENV_OUTPUT_DIR = "EDANAV_OUTPUT_DIR"

# section -> key -> (type tag, default as string). The tags drive both
# parsing and the unknown-key check; "maybe_int" admits an empty value.
_SCHEMA: dict[str, dict[str, tuple[str, str]]] = {
    "run": {
        "seed": ("int", "0"),
        "output_dir": ("str", "out"),
        "workers": ("int", "1"),
    },
    "dataset": {
        "dir": ("str", ""),
        "n_sessions": ("int", "40"),
        "duration_s": ("float", "240"),
        "rate_hz": ("float", "4"),
        "train_frac": ("float", "0.75"),
    },
    "oracle": {
        "baseline_us": ("float", "5.0"),
        "tau_rise_s": ("float", "0.75"),
        "tau_decay_s": ("float", "2.0"),
        "gain": ("float", "0.3"),
        "latency_s": ("float", "1.0"),
        "tonic_drift": ("float", "0.001"),
        "noise_sd": ("float", "0.005"),
    },
    "decomposition": {
        "median_window_s": ("float", "8.0"),
        "average_window_s": ("float", "8.0"),
    },
    "surrogate": {
        "clip_len_s": ("float", str(DEFAULT_CLIP_LEN_S)),
        "stride_samples": ("maybe_int", ""),
        "ridge_lambda": ("float", str(DEFAULT_RIDGE_LAMBDA)),
    },
    "control": {
        "integral_clamp": ("float", str(DEFAULT_INTEGRAL_CLAMP)),
        "max_longitudinal": ("float", str(DEFAULT_MAX_LONGITUDINAL)),
        "max_rotational": ("float", str(DEFAULT_MAX_ROTATIONAL)),
    },
    "detector.kim2004": {
        "min_amplitude": ("float", "0.05"),
        "min_separation_s": ("float", "0.0"),
        "rise_time_min_s": ("float", "0.25"),
        "rise_time_max_s": ("float", "5.0"),
    },
    "detector.gamboa2008": {
        "min_amplitude": ("float", "0.01"),
        "min_separation_s": ("float", "1.0"),
        "rise_time_min_s": ("float", "0.25"),
        "rise_time_max_s": ("float", "5.0"),
    },
    "detector.neurokit": {
        "min_amplitude": ("float", "1e-6"),
        "min_separation_s": ("float", "0.0"),
        "prominence_frac": ("float", "0.1"),
        "rise_time_min_s": ("float", "0.25"),
        "rise_time_max_s": ("float", "5.0"),
    },
    "optimizer": {
        "budget": ("int", "400"),
        "seed": ("int", "0"),
        "mode": ("str", "offline"),
        "explore_frac": ("float", "0.6"),
        "sigma_scale": ("float", "0.2"),
        "halve_after": ("int", "10"),
        "k_lo": ("float", "0.0"),
        "k_hi": ("float", "0.5"),
        "beta_lo": ("float", "0.0"),
        "beta_hi": ("float", "0.01"),
        # optional per-gain bracket overrides (lo_K_Pl = ..., hi_beta_r = ...)
        **{f"{end}_{key}": ("maybe_float", "") for key in GAIN_KEYS for end in ("lo", "hi")},
    },
    "report": {
        "svg": ("bool", "true"),
    },
}


@dataclass(frozen=True)
class RunConfig:
    """Validated knobs for every pipeline command."""

    seed: int
    output_dir: Path
    workers: int
    dataset_dir: Path
    n_sessions: int
    duration_s: float
    rate_hz: float
    train_frac: float
    oracle: OracleParams
    decomposition: DecompositionConfig
    clip_len_s: float
    stride_samples: int | None
    ridge_lambda: float
    limits: AccelLimits
    integral_clamp: float
    detectors: tuple[DetectorParams, ...]
    budget: int
    optimizer_seed: int
    mode: str
    explore_frac: float
    sigma_scale: float
    halve_after: int
    ranges: GainRanges
    svg: bool

    # conventional artifact locations inside output_dir
    @property
    def model_path(self) -> Path:
        return self.output_dir / "model.csv"

    @property
    def gains_path(self) -> Path:
        return self.output_dir / "gains.txt"

    @property
    def history_path(self) -> Path:
        return self.output_dir / "history.csv"

    @property
    def report_path(self) -> Path:
        return self.output_dir / "report.csv"

    @property
    def per_session_path(self) -> Path:
        return self.output_dir / "per_session.csv"

    @property
    def svg_path(self) -> Path:
        return self.output_dir / "msdv.svg"


def _parse_value(section: str, key: str, raw: str):
    tag = _SCHEMA[section][key][0]
    try:
        if tag == "int":
            return int(raw)
        if tag == "float":
            return float(raw)
        if tag == "bool":
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if tag == "maybe_int":
            return int(raw) if raw.strip() else None
        if tag == "maybe_float":
            return float(raw) if raw.strip() else None
        return raw
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} as {tag}") from None


def _read_file(path: Path) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    parser.optionxform = str  # gain names such as hi_K_Il are case-sensitive
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh, source=str(path))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    out: dict[str, dict[str, str]] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, value in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            out.setdefault(section, {})[key] = value
    return out


def _apply_overrides(raw: dict[str, dict[str, str]], overrides) -> None:
    for item in overrides:
        head, eq, value = item.partition("=")
        if not eq:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        section, dot, key = head.partition(".")
        if not dot or section not in _SCHEMA or key not in _SCHEMA[section]:
            raise ConfigError(f"override targets unknown key {head!r}")
        raw.setdefault(section, {})[key] = value


def _detector(method: str, values: dict) -> DetectorParams:
    return DetectorParams(method=method, **values)


def load_config(path=None, overrides=(), output_dir_flag=None) -> RunConfig:
    """Assemble and validate a RunConfig.

    ``path`` is optional (defaults apply); ``overrides`` are
    ``section.key=value`` strings. Raises ConfigError on any unknown name,
    parse failure, or out-of-bounds value.
    """
    raw = _read_file(Path(path)) if path is not None else {}
    _apply_overrides(raw, overrides)

    values: dict[str, dict[str, object]] = {}
    for section, keys in _SCHEMA.items():
        values[section] = {}
        for key, (_tag, default) in keys.items():
            text = raw.get(section, {}).get(key, default)
            values[section][key] = _parse_value(section, key, text)

    output_dir = values["run"]["output_dir"]
    if output_dir_flag is not None:
        output_dir = output_dir_flag
    elif os.environ.get(ENV_OUTPUT_DIR):
        output_dir = os.environ[ENV_OUTPUT_DIR]
    output_dir = Path(output_dir)

    dataset_dir = values["dataset"]["dir"]
    dataset_dir = Path(dataset_dir) if dataset_dir else output_dir / "dataset"

    mode = values["optimizer"]["mode"]
    if mode not in MODES:
        raise ConfigError(f"[optimizer] mode must be one of {MODES}, got {mode!r}")
    o = values["optimizer"]
    try:
        oracle = OracleParams(
            baseline_us=values["oracle"]["baseline_us"],
            tau_rise_s=values["oracle"]["tau_rise_s"],
            tau_decay_s=values["oracle"]["tau_decay_s"],
            gain=values["oracle"]["gain"],
            latency_s=values["oracle"]["latency_s"],
            tonic_drift=values["oracle"]["tonic_drift"],
            noise_sd=values["oracle"]["noise_sd"],
        )
        decomposition = DecompositionConfig(
            median_window_s=values["decomposition"]["median_window_s"],
            average_window_s=values["decomposition"]["average_window_s"],
        )
        limits = AccelLimits(
            max_longitudinal=values["control"]["max_longitudinal"],
            max_rotational=values["control"]["max_rotational"],
        )
        detectors = tuple(
            _detector(method, values[f"detector.{method}"]) for method in METHODS
        )
        k_lo, k_hi = o["k_lo"], o["k_hi"]
        beta_lo, beta_hi = o["beta_lo"], o["beta_hi"]
        lo = np.array([k_lo] * 9 + [beta_lo] * 2)
        hi = np.array([k_hi] * 9 + [beta_hi] * 2)
        for i, key in enumerate(GAIN_KEYS):
            if o[f"lo_{key}"] is not None:
                lo[i] = o[f"lo_{key}"]
            if o[f"hi_{key}"] is not None:
                hi[i] = o[f"hi_{key}"]
        ranges = GainRanges(lo=lo, hi=hi)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    cfg = RunConfig(
        seed=values["run"]["seed"],
        output_dir=output_dir,
        workers=values["run"]["workers"],
        dataset_dir=dataset_dir,
        n_sessions=values["dataset"]["n_sessions"],
        duration_s=values["dataset"]["duration_s"],
        rate_hz=values["dataset"]["rate_hz"],
        train_frac=values["dataset"]["train_frac"],
        oracle=oracle,
        decomposition=decomposition,
        clip_len_s=values["surrogate"]["clip_len_s"],
        stride_samples=values["surrogate"]["stride_samples"],
        ridge_lambda=values["surrogate"]["ridge_lambda"],
        limits=limits,
        integral_clamp=values["control"]["integral_clamp"],
        detectors=detectors,
        budget=o["budget"],
        optimizer_seed=o["seed"],
        mode=mode,
        explore_frac=o["explore_frac"],
        sigma_scale=o["sigma_scale"],
        halve_after=o["halve_after"],
        ranges=ranges,
        svg=values["report"]["svg"],
    )
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    checks = [
        (cfg.n_sessions >= 1, "[dataset] n_sessions must be >= 1"),
        (cfg.duration_s > 0, "[dataset] duration_s must be positive"),
        (cfg.rate_hz > 0, "[dataset] rate_hz must be positive"),
        (0.0 <= cfg.train_frac <= 1.0, "[dataset] train_frac must be in [0, 1]"),
        (cfg.clip_len_s > 0, "[surrogate] clip_len_s must be positive"),
        (
            cfg.stride_samples is None or cfg.stride_samples >= 1,
            "[surrogate] stride_samples must be >= 1 when set",
        ),
        (cfg.ridge_lambda >= 0, "[surrogate] ridge_lambda must be >= 0"),
        (cfg.integral_clamp > 0, "[control] integral_clamp must be positive"),
        (cfg.budget >= 1, "[optimizer] budget must be >= 1"),
        (0.0 < cfg.explore_frac <= 1.0, "[optimizer] explore_frac must be in (0, 1]"),
        (cfg.sigma_scale > 0, "[optimizer] sigma_scale must be positive"),
        (cfg.halve_after >= 1, "[optimizer] halve_after must be >= 1"),
        (cfg.workers >= 1, "[run] workers must be >= 1"),
    ]
    for ok, message in checks:
        if not ok:
            raise ConfigError(message)
