"""Adaptive-navigation control laws.

Three layers:

    pid_step      discrete PID with rectangular integral, anti-windup clamp,
                  and backward-difference derivative.
    adapt_step    bi-channel acceleration update. Each channel gets its own
                  setpoint-tracking PID (setpoint 0), plus a shared
                  phasic-driven PID whose output enters both channels scaled
                  by beta_l / beta_r. Outputs are clamped to comfort limits.
    plouzeau_step prior linear law a' = a - 0.5 * dEDA/dt, kept as baseline;
                  it drifts without bound under monotone EDA, which is the
                  flaw the PID law fixes.

The controller runs at the EDA tick (dt = 1/rate, 0.25 s at 4 Hz).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FileFormatError

DEFAULT_INTEGRAL_CLAMP = 10.0
DEFAULT_MAX_LONGITUDINAL = 5.0  # m/s^2
DEFAULT_MAX_ROTATIONAL = 3.0  # rad/s^2

# canonical coefficient order, also the gains-file key set
GAIN_KEYS = (
    "K_Pl", "K_Il", "K_Dl",
    "K_Pr", "K_Ir", "K_Dr",
    "K_Pf", "K_If", "K_Df",
    "beta_l", "beta_r",
)


@dataclass(frozen=True)
class PidGains:
    """The eleven adaptation coefficients (all non-negative).

    K_*l act on longitudinal acceleration error, K_*r on rotational error,
    K_*f on the phasic-EDA error; beta_l / beta_r weigh the phasic PID
    output per channel.
    """

    K_Pl: float = 0.0
    K_Il: float = 0.0
    K_Dl: float = 0.0
    K_Pr: float = 0.0
    K_Ir: float = 0.0
    K_Dr: float = 0.0
    K_Pf: float = 0.0
    K_If: float = 0.0
    K_Df: float = 0.0
    beta_l: float = 0.0
    beta_r: float = 0.0

    def __post_init__(self):
        for key in GAIN_KEYS:
            value = getattr(self, key)
            if not (math.isfinite(value) and value >= 0.0):
                raise ValueError(f"gain {key} must be finite and >= 0, got {value}")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, key) for key in GAIN_KEYS], dtype=np.float64)

    @classmethod
    def from_array(cls, values) -> "PidGains":
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (len(GAIN_KEYS),):
            raise ValueError(f"expected {len(GAIN_KEYS)} gains, got shape {values.shape}")
        return cls(**{key: float(v) for key, v in zip(GAIN_KEYS, values)})


@dataclass
class PidChannelState:
    """Integral accumulator and previous error of one PID channel."""

    integral: float = 0.0
    prev_error: float = 0.0


@dataclass
class PidState:
    """Mutable controller state: one PID channel per error signal.

    The phasic channel ``f`` is shared between the two acceleration rows:
    the adaptation law applies the same phasic PID output to both channels,
    so it keeps a single accumulator.
    """

    a_l: PidChannelState = field(default_factory=PidChannelState)
    a_r: PidChannelState = field(default_factory=PidChannelState)
    f: PidChannelState = field(default_factory=PidChannelState)
    integral_clamp: float = DEFAULT_INTEGRAL_CLAMP

    def __post_init__(self):
        if not self.integral_clamp > 0:
            raise ValueError("integral_clamp must be positive")

    def reset(self) -> None:
        self.a_l = PidChannelState()
        self.a_r = PidChannelState()
        self.f = PidChannelState()


@dataclass(frozen=True)
class ControlFrame:
    """Inputs to one adaptation step: current accelerations, previous phasic."""

    a_l: float  # m/s^2
    a_r: float  # rad/s^2
    f_prev: float  # normalized phasic at the previous tick
    dt: float  # s

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        for name in ("a_l", "a_r", "f_prev", "dt"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"frame field {name} must be finite")


@dataclass(frozen=True)
class AccelLimits:
    """Magnitude clamps applied to adapted accelerations."""

    max_longitudinal: float = DEFAULT_MAX_LONGITUDINAL
    max_rotational: float = DEFAULT_MAX_ROTATIONAL

    def __post_init__(self):
        if self.max_longitudinal <= 0 or self.max_rotational <= 0:
            raise ValueError("acceleration limits must be positive")


def _pid(integral, prev_error, e, k_p, k_i, k_d, dt, clamp):
    """One scalar PID update; returns (output, integral, new prev_error)."""
    integral = integral + e * dt
    if integral > clamp:
        integral = clamp
    elif integral < -clamp:
        integral = -clamp
    out = k_p * e + k_i * integral + k_d * (e - prev_error) / dt
    return out, integral, e


def pid_step(
    state: PidChannelState,
    e: float,
    k_p: float,
    k_i: float,
    k_d: float,
    dt: float,
    integral_clamp: float = DEFAULT_INTEGRAL_CLAMP,
) -> float:
    """Advance one PID channel by one tick and return its output.

    The integral uses the rectangle rule and is clamped to
    [-integral_clamp, +integral_clamp] before use (anti-windup); the
    derivative is a backward difference over ``dt``. ``state`` is updated
    in place.
    """
    if not math.isfinite(e):
        raise ValueError("PID error input must be finite")
    if not dt > 0:
        raise ValueError("dt must be positive")
    out, state.integral, state.prev_error = _pid(
        state.integral, state.prev_error, e, k_p, k_i, k_d, dt, integral_clamp
    )
    return out


def _clip(value, bound):
    if value > bound:
        return bound
    if value < -bound:
        return -bound
    return value


def adapt_step(
    state: PidState,
    frame: ControlFrame,
    gains: PidGains,
    limits: AccelLimits = AccelLimits(),
) -> tuple[float, float]:
    """One tick of the adaptive acceleration law.

    Error terms: E_a = 0 - a per channel (expected accelerations are zero)
    and E_f = -f_prev. Returns the adapted (a_l', a_r'), each clamped to
    the configured magnitude limit.
    """
    e_l = 0.0 - frame.a_l
    e_r = 0.0 - frame.a_r
    e_f = 0.0 - frame.f_prev
    clamp = state.integral_clamp
    psi_l, state.a_l.integral, state.a_l.prev_error = _pid(
        state.a_l.integral, state.a_l.prev_error, e_l,
        gains.K_Pl, gains.K_Il, gains.K_Dl, frame.dt, clamp,
    )
    psi_r, state.a_r.integral, state.a_r.prev_error = _pid(
        state.a_r.integral, state.a_r.prev_error, e_r,
        gains.K_Pr, gains.K_Ir, gains.K_Dr, frame.dt, clamp,
    )
    psi_f, state.f.integral, state.f.prev_error = _pid(
        state.f.integral, state.f.prev_error, e_f,
        gains.K_Pf, gains.K_If, gains.K_Df, frame.dt, clamp,
    )
    a_l = frame.a_l + psi_l + gains.beta_l * psi_f
    a_r = frame.a_r + psi_r + gains.beta_r * psi_f
    return _clip(a_l, limits.max_longitudinal), _clip(a_r, limits.max_rotational)


def adapt_trace(
    a_l: np.ndarray,
    a_r: np.ndarray,
    f: np.ndarray,
    rate_hz: float,
    gains: PidGains,
    limits: AccelLimits = AccelLimits(),
    integral_clamp: float = DEFAULT_INTEGRAL_CLAMP,
) -> tuple[np.ndarray, np.ndarray]:
    """Run the adaptation law over whole sessions.

    ``f`` holds the normalized phasic feedback aligned with the samples;
    step i reads f[i-1] (0.0 at the first step, idle start). Plain-float
    inner loop, arithmetic identical to repeated `adapt_step` calls.
    """
    n = len(a_l)
    dt = 1.0 / rate_hz
    out_l = np.empty(n)
    out_r = np.empty(n)
    il = pl = ir = pr = if_ = pf = 0.0
    clamp = integral_clamp
    max_l = limits.max_longitudinal
    max_r = limits.max_rotational
    al_list = a_l.tolist()
    ar_list = a_r.tolist()
    f_list = f.tolist()
    for i in range(n):
        f_prev = f_list[i - 1] if i > 0 else 0.0
        e_l = 0.0 - al_list[i]
        e_r = 0.0 - ar_list[i]
        e_f = 0.0 - f_prev
        psi_l, il, pl = _pid(il, pl, e_l, gains.K_Pl, gains.K_Il, gains.K_Dl, dt, clamp)
        psi_r, ir, pr = _pid(ir, pr, e_r, gains.K_Pr, gains.K_Ir, gains.K_Dr, dt, clamp)
        psi_f, if_, pf = _pid(if_, pf, e_f, gains.K_Pf, gains.K_If, gains.K_Df, dt, clamp)
        out_l[i] = _clip(al_list[i] + psi_l + gains.beta_l * psi_f, max_l)
        out_r[i] = _clip(ar_list[i] + psi_r + gains.beta_r * psi_f, max_r)
    return out_l, out_r


def plouzeau_step(a_prev: float, d_eda: float) -> float:
    """Prior linear adaptation law: a' = a_prev - 0.5 * dEDA/dt."""
    if not (math.isfinite(a_prev) and math.isfinite(d_eda)):
        raise ValueError("inputs must be finite")
    return a_prev - 0.5 * d_eda


# ---------------------------------------------------------------------------
# Gains file: flat key-value text, exactly the eleven canonical keys.
# ---------------------------------------------------------------------------

def write_gains(gains: PidGains, path) -> None:
    """Write gains as ``key = value`` lines in canonical order."""
    lines = [f"{key} = {repr(float(getattr(gains, key)))}" for key in GAIN_KEYS]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_gains(path) -> PidGains:
    """Read a gains file; requires exactly the eleven canonical keys."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise FileFormatError(path, f"expected 'key = value', got {line!r}", lineno)
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in GAIN_KEYS:
                raise FileFormatError(path, f"unknown gain key {key!r}", lineno)
            if key in values:
                raise FileFormatError(path, f"duplicate gain key {key!r}", lineno)
            try:
                values[key] = float(value.strip())
            except ValueError:
                raise FileFormatError(path, f"bad value for {key}: {value.strip()!r}", lineno) from None
    missing = [key for key in GAIN_KEYS if key not in values]
    if missing:
        raise FileFormatError(path, f"missing gain keys: {', '.join(missing)}")
    return PidGains(**values)
