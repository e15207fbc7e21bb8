"""Event-related skin-conductance response (ER-SCR) detection.

Three detector styles over a phasic trace:

    kim2004     rising segments of the signal (upward to downward
                zero-crossing of the derivative); amplitude threshold
                relative to the trace's peak-to-peak range.
    gamboa2008  same onset/peak rule with an absolute amplitude threshold;
                events closer than ``min_separation_s`` are merged.
    neurokit    local maxima selected by topographic prominence, onset at
                the preceding local minimum.

All methods discard events whose rise time falls outside
[rise_time_min_s, rise_time_max_s] (defaults 0.25 s and 5 s; SCRs are
expected to reach their peak within one to five seconds of the stimulus).
The ER-SCR count is the detector output length and is the quantity the
coefficient search minimizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signals import Trace, format_float

METHODS = ("kim2004", "gamboa2008", "neurokit")


@dataclass(frozen=True)
class ScrEvent:
    """One detected ER-SCR: onset and peak sample indices with amplitude."""

    onset_idx: int
    peak_idx: int
    amplitude: float
    rise_time_s: float

    def __post_init__(self):
        if not self.onset_idx < self.peak_idx:
            raise ValueError("event onset must precede its peak")
        if not self.amplitude > 0:
            raise ValueError("event amplitude must be positive")


@dataclass(frozen=True)
class DetectorParams:
    """Thresholds for one detector method.

    ``min_amplitude`` is a fraction of the trace's peak-to-peak range for
    kim2004 and an absolute value (normalized units) for the other methods.
    ``prominence_frac`` applies to neurokit only.
    """

    method: str
    min_amplitude: float
    min_separation_s: float = 0.0
    prominence_frac: float = 0.1
    rise_time_min_s: float = 0.25
    rise_time_max_s: float = 5.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown detector method {self.method!r}; expected one of {METHODS}")
        if not self.min_amplitude > 0:
            raise ValueError("min_amplitude must be positive")
        if self.min_separation_s < 0:
            raise ValueError("min_separation_s must be non-negative")
        if not 0 < self.rise_time_min_s < self.rise_time_max_s:
            raise ValueError("rise-time band must satisfy 0 < min < max")


def default_detectors() -> tuple[DetectorParams, DetectorParams, DetectorParams]:
    """The three detectors at their documented default thresholds."""
    return (
        DetectorParams("kim2004", min_amplitude=0.05),
        DetectorParams("gamboa2008", min_amplitude=0.01, min_separation_s=1.0),
        DetectorParams("neurokit", min_amplitude=1e-6),
    )


def _rising_runs(x: np.ndarray) -> list[tuple[int, int]]:
    """(onset, peak) index pairs of maximal strictly-rising segments."""
    d = np.diff(x)
    pos = d > 0
    if not pos.any():
        return []
    starts = pos & ~np.concatenate(([False], pos[:-1]))
    ends = pos & ~np.concatenate((pos[1:], [False]))
    onsets = np.flatnonzero(starts)
    peaks = np.flatnonzero(ends) + 1
    return list(zip(onsets.tolist(), peaks.tolist()))


def _rise_ok(onset: int, peak: int, rate_hz: float, params: DetectorParams) -> bool:
    rise = (peak - onset) / rate_hz
    return params.rise_time_min_s <= rise <= params.rise_time_max_s


def _make_event(x: np.ndarray, onset: int, peak: int, rate_hz: float) -> ScrEvent:
    return ScrEvent(
        onset_idx=int(onset),
        peak_idx=int(peak),
        amplitude=float(x[peak] - x[onset]),
        rise_time_s=(peak - onset) / rate_hz,
    )


def _detect_kim2004(x: np.ndarray, rate_hz: float, params: DetectorParams) -> list[ScrEvent]:
    threshold = params.min_amplitude * float(np.ptp(x))
    events = []
    for onset, peak in _rising_runs(x):
        if x[peak] - x[onset] >= threshold and _rise_ok(onset, peak, rate_hz, params):
            events.append(_make_event(x, onset, peak, rate_hz))
    return events


def _detect_gamboa2008(x: np.ndarray, rate_hz: float, params: DetectorParams) -> list[ScrEvent]:
    kept = [
        (onset, peak)
        for onset, peak in _rising_runs(x)
        if x[peak] - x[onset] >= params.min_amplitude
    ]
    # merge bursts whose onset follows the previous peak too closely
    merged: list[tuple[int, int]] = []
    for onset, peak in kept:
        if merged and (onset - merged[-1][1]) / rate_hz < params.min_separation_s:
            prev_onset, prev_peak = merged.pop()
            best_peak = peak if x[peak] >= x[prev_peak] else prev_peak
            merged.append((prev_onset, best_peak))
        else:
            merged.append((onset, peak))
    return [
        _make_event(x, onset, peak, rate_hz)
        for onset, peak in merged
        if _rise_ok(onset, peak, rate_hz, params)
    ]


def _prominence(x: np.ndarray, i: int) -> float:
    """Topographic prominence of a strict local maximum at index i."""
    n = x.size
    left_min = x[i]
    j = i - 1
    while j >= 0 and x[j] <= x[i]:
        if x[j] < left_min:
            left_min = x[j]
        j -= 1
    right_min = x[i]
    j = i + 1
    while j < n and x[j] <= x[i]:
        if x[j] < right_min:
            right_min = x[j]
        j += 1
    return float(x[i] - max(left_min, right_min))


def _detect_neurokit(x: np.ndarray, rate_hz: float, params: DetectorParams) -> list[ScrEvent]:
    threshold = params.prominence_frac * float(np.ptp(x))
    interior = np.flatnonzero((x[1:-1] > x[:-2]) & (x[1:-1] > x[2:])) + 1
    events = []
    for peak in interior.tolist():
        if _prominence(x, peak) < threshold:
            continue
        onset = peak
        while onset > 0 and x[onset - 1] < x[onset]:
            onset -= 1
        amp = x[peak] - x[onset]
        if amp >= params.min_amplitude and amp > 0 and _rise_ok(onset, peak, rate_hz, params):
            events.append(_make_event(x, onset, peak, rate_hz))
    return events


_DETECTORS = {
    "kim2004": _detect_kim2004,
    "gamboa2008": _detect_gamboa2008,
    "neurokit": _detect_neurokit,
}


def detect_scr(phasic: Trace, params: DetectorParams) -> list[ScrEvent]:
    """Detect ER-SCR events in a phasic trace, ordered by onset."""
    if len(phasic) < 2:
        return []
    return _DETECTORS[params.method](phasic.samples, phasic.rate_hz, params)


def count_er_scr(phasic: Trace, params: DetectorParams) -> int:
    """Number of ER-SCR events under the given detector."""
    return len(detect_scr(phasic, params))


def write_events_csv(events: list[ScrEvent], rate_hz: float, path) -> None:
    """Write detected events as ``onset_s,peak_s,amplitude`` rows."""
    lines = ["onset_s,peak_s,amplitude"]
    for ev in events:
        lines.append(
            f"{ev.onset_idx / rate_hz:.6f},{ev.peak_idx / rate_hz:.6f},{format_float(ev.amplitude)}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
