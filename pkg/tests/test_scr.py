"""Detector tests: agreement with the brute-force oracle plus edge behavior."""

import numpy as np
import pytest

from edanav.scr import (
    METHODS,
    DetectorParams,
    ScrEvent,
    count_er_scr,
    default_detectors,
    detect_scr,
    write_events_csv,
)
from edanav.signals import Trace, Unit

from oracles import bateman_pulse, brute_force_events

RATE = 4.0


def _pulse_train(n, onsets_amps, rate_hz=RATE):
    """Sum of Bateman pulses as a phasic-like numpy array."""
    x = np.zeros(n)
    for onset_s, amp in onsets_amps:
        x += np.asarray(bateman_pulse(n, rate_hz, onset_s, amp))
    return x


def _random_phasic(rng, n=400):
    """Pulse train plus slow wave and mild noise; exercises all code paths."""
    onsets = rng.uniform(2.0, n / RATE - 10.0, rng.integers(2, 7))
    amps = rng.uniform(0.05, 0.8, len(onsets))
    x = _pulse_train(n, zip(onsets, amps))
    t = np.arange(n) / RATE
    x += 0.05 * np.sin(2 * np.pi * t / 37.0)
    x += rng.normal(0.0, rng.choice([0.0, 0.002, 0.01]), n)
    return x


def _params(method, **kw):
    defaults = {m.method: m for m in default_detectors()}[method]
    merged = {
        "min_amplitude": defaults.min_amplitude,
        "min_separation_s": defaults.min_separation_s,
        "prominence_frac": defaults.prominence_frac,
        "rise_time_min_s": defaults.rise_time_min_s,
        "rise_time_max_s": defaults.rise_time_max_s,
    }
    merged.update(kw)
    return DetectorParams(method=method, **merged)


def _oracle(x, params):
    return brute_force_events(
        x,
        RATE,
        params.method,
        params.min_amplitude,
        min_separation_s=params.min_separation_s,
        prominence_frac=params.prominence_frac,
        rise_min_s=params.rise_time_min_s,
        rise_max_s=params.rise_time_max_s,
    )


def _assert_agrees(x, params):
    got = detect_scr(Trace(x, RATE), params)
    expected = _oracle(x, params)
    assert [(e.onset_idx, e.peak_idx) for e in got] == [(o, p) for o, p, _ in expected]
    for ev, (_, _, amp) in zip(got, expected):
        assert abs(ev.amplitude - amp) < 1e-12


# ---------------------------------------------------------------------------
# Oracle agreement
# ---------------------------------------------------------------------------

def test_agrees_with_oracle_on_random_traces():
    rng = np.random.default_rng(42)
    for _ in range(50):
        x = _random_phasic(rng)
        for method in METHODS:
            _assert_agrees(x, _params(method))


def test_agrees_with_oracle_under_varied_thresholds():
    rng = np.random.default_rng(43)
    for _ in range(15):
        x = _random_phasic(rng)
        _assert_agrees(x, _params("kim2004", min_amplitude=float(rng.uniform(0.01, 0.3))))
        _assert_agrees(
            x,
            _params(
                "gamboa2008",
                min_amplitude=float(rng.uniform(0.005, 0.1)),
                min_separation_s=float(rng.uniform(0.0, 3.0)),
            ),
        )
        _assert_agrees(
            x, _params("neurokit", prominence_frac=float(rng.uniform(0.02, 0.4)))
        )


def test_fixture_counts_zero_one_two():
    n = 240
    flat_falling = np.linspace(1.0, 0.0, n)  # no rising segment anywhere
    one = _pulse_train(n, [(10.0, 0.6)])
    two = _pulse_train(n, [(10.0, 0.6), (35.0, 0.5)])
    for method in METHODS:
        params = _params(method)
        for x, expected in ((flat_falling, 0), (one, 1), (two, 2)):
            assert count_er_scr(Trace(x, RATE), params) == expected
            assert len(_oracle(x, params)) == expected


def test_slow_ramp_is_rejected_by_rise_time():
    # a single 8 s rise exceeds the 5 s rise-time ceiling for every method
    x = np.concatenate([np.zeros(20), np.linspace(0.0, 1.0, 33), np.full(20, 1.0)])
    for method in METHODS:
        assert count_er_scr(Trace(x, RATE), _params(method)) == 0


# ---------------------------------------------------------------------------
# Threshold and invariance properties
# ---------------------------------------------------------------------------

def test_count_monotone_in_amplitude_threshold():
    rng = np.random.default_rng(44)
    for _ in range(10):
        x = _random_phasic(rng)
        tr = Trace(x, RATE)
        for method, grid in (
            ("kim2004", np.linspace(0.01, 0.9, 12)),
            ("gamboa2008", np.linspace(0.002, 0.5, 12)),
            ("neurokit", np.linspace(1e-6, 0.5, 12)),
        ):
            counts = [count_er_scr(tr, _params(method, min_amplitude=float(a))) for a in grid]
            assert all(a >= b for a, b in zip(counts, counts[1:])), (method, counts)


def test_count_monotone_in_prominence():
    rng = np.random.default_rng(45)
    for _ in range(10):
        tr = Trace(_random_phasic(rng), RATE)
        counts = [
            count_er_scr(tr, _params("neurokit", prominence_frac=float(f)))
            for f in np.linspace(0.02, 0.8, 10)
        ]
        assert all(a >= b for a, b in zip(counts, counts[1:]))


def test_translation_invariance():
    rng = np.random.default_rng(46)
    for _ in range(10):
        x = _random_phasic(rng)
        for method in METHODS:
            params = _params(method)
            base = detect_scr(Trace(x, RATE), params)
            shifted = detect_scr(Trace(x + 3.7, RATE), params)
            assert [(e.onset_idx, e.peak_idx) for e in base] == [
                (e.onset_idx, e.peak_idx) for e in shifted
            ]
            for a, b in zip(base, shifted):
                assert abs(a.amplitude - b.amplitude) < 1e-9


def test_kim2004_scale_invariance():
    # the kim2004 threshold is relative to peak-to-peak range, so scaling by
    # a power of two (exact in floating point) must not change the events
    rng = np.random.default_rng(47)
    for _ in range(10):
        x = _random_phasic(rng)
        params = _params("kim2004")
        base = detect_scr(Trace(x, RATE), params)
        scaled = detect_scr(Trace(4.0 * x, RATE), params)
        assert [(e.onset_idx, e.peak_idx) for e in base] == [
            (e.onset_idx, e.peak_idx) for e in scaled
        ]


def test_gamboa2008_absolute_threshold_is_scale_sensitive():
    x = _pulse_train(240, [(10.0, 0.016)])
    params = _params("gamboa2008")
    assert count_er_scr(Trace(x, RATE), params) == 1
    assert count_er_scr(Trace(0.5 * x, RATE), params) == 0  # 0.008 < 0.01


def test_gamboa2008_merges_close_events():
    # two pulses whose second onset trails the first peak by < 1 s merge into
    # one event keeping the earlier onset and the higher peak
    x = _pulse_train(200, [(10.0, 0.3), (12.0, 0.5)])
    merged = detect_scr(Trace(x, RATE), _params("gamboa2008", min_separation_s=1.0))
    apart = detect_scr(Trace(x, RATE), _params("gamboa2008", min_separation_s=0.0))
    assert len(apart) == 2
    assert len(merged) == 1
    assert merged[0].onset_idx == apart[0].onset_idx
    assert merged[0].peak_idx == apart[1].peak_idx  # later pulse peaks higher
    _assert_agrees(x, _params("gamboa2008", min_separation_s=1.0))


def test_rise_time_band_is_inclusive():
    def ramp(rise_samples):
        up = np.linspace(0.0, 1.0, rise_samples + 1)
        return np.concatenate([np.zeros(8), up, np.full(8, 1.0)])

    params = _params("kim2004")
    assert count_er_scr(Trace(ramp(1), RATE), params) == 1  # 0.25 s, lower edge
    assert count_er_scr(Trace(ramp(20), RATE), params) == 1  # 5.0 s, upper edge
    assert count_er_scr(Trace(ramp(21), RATE), params) == 0  # 5.25 s, too slow


# ---------------------------------------------------------------------------
# Parameter and event plumbing
# ---------------------------------------------------------------------------

def test_default_detectors_cover_all_methods():
    detectors = default_detectors()
    assert tuple(d.method for d in detectors) == METHODS
    by_method = {d.method: d for d in detectors}
    assert by_method["kim2004"].min_amplitude == 0.05
    assert by_method["gamboa2008"].min_amplitude == 0.01
    assert by_method["gamboa2008"].min_separation_s == 1.0
    assert by_method["neurokit"].min_amplitude == 1e-6


def test_detector_params_validation():
    with pytest.raises(ValueError):
        DetectorParams("unknown", min_amplitude=0.1)
    with pytest.raises(ValueError):
        DetectorParams("kim2004", min_amplitude=0.0)
    with pytest.raises(ValueError):
        DetectorParams("kim2004", min_amplitude=0.1, min_separation_s=-1.0)
    with pytest.raises(ValueError):
        DetectorParams("kim2004", min_amplitude=0.1, rise_time_min_s=6.0, rise_time_max_s=5.0)


def test_scr_event_validation():
    with pytest.raises(ValueError):
        ScrEvent(onset_idx=5, peak_idx=5, amplitude=0.1, rise_time_s=0.0)
    with pytest.raises(ValueError):
        ScrEvent(onset_idx=0, peak_idx=4, amplitude=0.0, rise_time_s=1.0)


def test_short_trace_has_no_events():
    for method in METHODS:
        assert detect_scr(Trace([1.0], RATE), _params(method)) == []


def test_write_events_csv(tmp_path):
    x = _pulse_train(200, [(10.0, 0.6), (30.0, 0.4)])
    events = detect_scr(Trace(x, RATE), _params("kim2004"))
    path = tmp_path / "events.csv"
    write_events_csv(events, RATE, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "onset_s,peak_s,amplitude"
    assert len(lines) == 1 + len(events)
    onset_s, peak_s, amp = lines[1].split(",")
    assert float(onset_s) == events[0].onset_idx / RATE
    assert float(peak_s) == events[0].peak_idx / RATE
    assert float(amp) == events[0].amplitude
