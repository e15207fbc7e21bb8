"""Time-series primitives for electrodermal activity (EDA) processing.

Provides the `Trace` container used across the package plus the basic
operations the adaptation pipeline is built from:

    * resample   -- linear interpolation onto a uniform grid
    * normalize  -- invertible min-max scaling to [0, 1]
    * derivative -- causal backward difference
    * decompose  -- split EDA into tonic (SCL) and phasic (SCR) components

The tonic estimator is a moving-median followed by a moving-average with
replicate edge padding; the phasic component is the residual, so
``tonic + phasic`` reconstructs the input exactly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import median_filter, uniform_filter1d

from .errors import DegenerateInputError, FileFormatError


class Unit(str, enum.Enum):
    """Physical unit of a trace's samples."""

    MICROSIEMENS = "microsiemens"
    M_PER_S2 = "m_per_s2"
    RAD_PER_S2 = "rad_per_s2"
    NORMALIZED = "normalized"


@dataclass(frozen=True)
class Trace:
    """Uniformly sampled scalar time series.

    Parameters
    ----------
    samples : array-like
        Sample values; copied to a read-only float64 array.
    rate_hz : float
        Sample rate in Hz, > 0.
    unit : Unit
        Unit of the samples.
    """

    samples: np.ndarray
    rate_hz: float
    unit: Unit = Unit.NORMALIZED

    def __post_init__(self):
        arr = np.array(self.samples, dtype=np.float64, copy=True).ravel()
        if arr.size == 0:
            raise ValueError("trace must contain at least one sample")
        if not np.all(np.isfinite(arr)):
            raise ValueError("trace samples must be finite")
        if not (self.rate_hz > 0 and np.isfinite(self.rate_hz)):
            raise ValueError(f"rate_hz must be a positive finite number, got {self.rate_hz}")
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "rate_hz", float(self.rate_hz))
        object.__setattr__(self, "unit", Unit(self.unit))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        """Time spanned by the samples, (n - 1) / rate."""
        return (self.samples.size - 1) / self.rate_hz

    def times(self) -> np.ndarray:
        """Sample timestamps in seconds, starting at 0."""
        return np.arange(self.samples.size) / self.rate_hz

    def with_samples(self, samples: np.ndarray, unit: Unit | None = None) -> "Trace":
        """New trace with the same rate, different samples."""
        return Trace(samples, self.rate_hz, self.unit if unit is None else unit)


@dataclass(frozen=True)
class NormParams:
    """Min-max scaling parameters; ``vmax > vmin`` so the map is invertible."""

    vmin: float
    vmax: float

    def __post_init__(self):
        if not (np.isfinite(self.vmin) and np.isfinite(self.vmax)):
            raise ValueError("normalization bounds must be finite")
        if not self.vmax > self.vmin:
            raise DegenerateInputError(
                f"normalization range is empty: vmin={self.vmin}, vmax={self.vmax}"
            )

    @property
    def span(self) -> float:
        return self.vmax - self.vmin

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=np.float64) - self.vmin) / self.span

    def invert(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=np.float64) * self.span + self.vmin


@dataclass(frozen=True)
class DecompositionConfig:
    """Window lengths (seconds) for the tonic estimator."""

    median_window_s: float = 8.0
    average_window_s: float = 8.0

    def __post_init__(self):
        if self.median_window_s <= 0 or self.average_window_s <= 0:
            raise ValueError("decomposition windows must be positive")


@dataclass(frozen=True)
class EdaDecomposition:
    """EDA split into tonic (SCL) and phasic (SCR) parts on one time base."""

    original: Trace
    tonic: Trace
    phasic: Trace

    def __post_init__(self):
        n = len(self.original)
        if len(self.tonic) != n or len(self.phasic) != n:
            raise ValueError("decomposition traces must share length")
        if self.tonic.rate_hz != self.original.rate_hz or self.phasic.rate_hz != self.original.rate_hz:
            raise ValueError("decomposition traces must share rate")


def resample(trace: Trace, target_hz: float) -> Trace:
    """Resample a trace onto a uniform grid at ``target_hz`` by linear interpolation.

    The output grid spans the input duration: sample k sits at k / target_hz,
    and the last sample does not pass the input's final timestamp.
    """
    if not target_hz > 0:
        raise ValueError(f"target_hz must be positive, got {target_hz}")
    if trace.rate_hz == target_hz:
        return Trace(trace.samples, trace.rate_hz, trace.unit)
    # tiny relative slack so exact integer boundaries survive float rounding
    n_out = int(np.floor(trace.duration_s * target_hz * (1.0 + 1e-12))) + 1
    t_out = np.arange(n_out) / target_hz
    values = np.interp(t_out, trace.times(), trace.samples)
    return Trace(values, float(target_hz), trace.unit)


def normalize(trace: Trace) -> tuple[Trace, NormParams]:
    """Min-max normalize to [0, 1]; returns the trace and invertible params.

    Raises
    ------
    DegenerateInputError
        If the trace is constant (empty range).
    """
    vmin = float(np.min(trace.samples))
    vmax = float(np.max(trace.samples))
    if vmax == vmin:
        raise DegenerateInputError("cannot min-max normalize a constant trace")
    params = NormParams(vmin, vmax)
    return Trace(params.apply(trace.samples), trace.rate_hz, Unit.NORMALIZED), params


def denormalize(trace: Trace, params: NormParams, unit: Unit = Unit.MICROSIEMENS) -> Trace:
    """Invert `normalize` using the stored parameters."""
    return Trace(params.invert(trace.samples), trace.rate_hz, unit)


def derivative(trace: Trace) -> Trace:
    """Backward-difference derivative scaled by the sample rate.

    out[0] = 0 by convention, so the result is causal and length-preserving.
    """
    if len(trace) < 2:
        raise ValueError("derivative needs at least two samples")
    out = np.empty_like(trace.samples)
    out[0] = 0.0
    out[1:] = np.diff(trace.samples) * trace.rate_hz
    return Trace(out, trace.rate_hz, trace.unit)


def _odd_window(window_s: float, rate_hz: float) -> int:
    w = int(round(window_s * rate_hz))
    w = max(w, 1)
    if w % 2 == 0:
        w += 1
    return w


def decompose(eda: Trace, cfg: DecompositionConfig = DecompositionConfig()) -> EdaDecomposition:
    """Split EDA into tonic and phasic components.

    Tonic is a moving-median (``median_window_s``) followed by a
    moving-average (``average_window_s``), both with replicate edge padding;
    phasic is the residual ``eda - tonic``. Adding a constant to the input
    moves only the tonic part.

    Raises
    ------
    DegenerateInputError
        If the trace is shorter than twice the tonic (median) window.
    """
    if eda.duration_s < 2.0 * cfg.median_window_s:
        raise DegenerateInputError(
            f"trace duration {eda.duration_s:.2f}s is shorter than twice the "
            f"tonic window ({cfg.median_window_s}s)"
        )
    w_med = _odd_window(cfg.median_window_s, eda.rate_hz)
    w_avg = _odd_window(cfg.average_window_s, eda.rate_hz)
    tonic = median_filter(eda.samples, size=w_med, mode="nearest")
    tonic = uniform_filter1d(tonic, size=w_avg, mode="nearest")
    phasic = eda.samples - tonic
    return EdaDecomposition(
        original=eda,
        tonic=Trace(tonic, eda.rate_hz, eda.unit),
        phasic=Trace(phasic, eda.rate_hz, eda.unit),
    )


# ---------------------------------------------------------------------------
# Trace CSV format: one metadata line, a header, then t_s,value rows.
#
#   # unit=microsiemens rate_hz=4.0
#   t_s,value
#   0.000000,5.01233
# ---------------------------------------------------------------------------

def format_float(x: float) -> str:
    """Shortest exact decimal representation (round-trips via float())."""
    return repr(float(x))


def write_trace_csv(trace: Trace, path) -> None:
    """Write a trace in the sidecar-metadata CSV format."""
    lines = [f"# unit={trace.unit.value} rate_hz={format_float(trace.rate_hz)}", "t_s,value"]
    for i, v in enumerate(trace.samples):
        lines.append(f"{i / trace.rate_hz:.6f},{format_float(v)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_meta_line(line: str, path, lineno: int) -> dict:
    if not line.startswith("#"):
        raise FileFormatError(path, "expected metadata line starting with '#'", lineno)
    meta = {}
    for token in line[1:].split():
        if "=" not in token:
            raise FileFormatError(path, f"malformed metadata token {token!r}", lineno)
        key, value = token.split("=", 1)
        meta[key] = value
    return meta


def read_trace_csv(path) -> Trace:
    """Read a trace written by `write_trace_csv`."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if len(lines) < 3:
        raise FileFormatError(path, "trace file needs metadata, header, and at least one row")
    meta = _parse_meta_line(lines[0], path, 1)
    if "unit" not in meta or "rate_hz" not in meta:
        raise FileFormatError(path, "metadata line must define unit and rate_hz", 1)
    try:
        unit = Unit(meta["unit"])
    except ValueError:
        raise FileFormatError(path, f"unknown unit {meta['unit']!r}", 1) from None
    try:
        rate_hz = float(meta["rate_hz"])
    except ValueError:
        raise FileFormatError(path, f"bad rate_hz {meta['rate_hz']!r}", 1) from None
    if lines[1] != "t_s,value":
        raise FileFormatError(path, f"expected header 't_s,value', got {lines[1]!r}", 2)
    values = []
    for lineno, line in enumerate(lines[2:], start=3):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise FileFormatError(path, f"expected two columns, got {len(parts)}", lineno)
        try:
            values.append(float(parts[1]))
        except ValueError:
            raise FileFormatError(path, f"bad value {parts[1]!r}", lineno) from None
    if not values:
        raise FileFormatError(path, "trace file contains no samples")
    return Trace(np.asarray(values), rate_hz, unit)
