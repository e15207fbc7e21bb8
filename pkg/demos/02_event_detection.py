"""Run the three event detectors over the same phasic trace.

Plants four skin-conductance responses of falling amplitude on a slow
baseline wave and prints what each detector keeps. The two detectors with
range-relative thresholds drop the small responses; the absolute-threshold
one keeps everything that clears 0.01 uS. The responses sit on the falling
half of the baseline wave — on a rising stretch the strictly-rising run
would swallow the whole climb and fail the five-second rise-time cap.
"""

import numpy as np

from edanav import Trace, default_detectors, detect_scr
from edanav.surrogate import bateman_kernel

RATE = 4.0


def main():
    n = int(120.0 * RATE)
    kernel = bateman_kernel(0.75, 2.0, RATE)
    x = np.zeros(n)
    for onset_s, amp in ((20.0, 0.40), (35.0, 0.15), (80.0, 0.05), (95.0, 0.012)):
        i = int(onset_s * RATE)
        take = min(len(kernel), n - i)
        x[i : i + take] += amp * kernel[:take]
    t = np.arange(n) / RATE
    x += 0.01 * np.sin(2 * np.pi * t / 60.0)
    trace = Trace(x, RATE)

    for params in default_detectors():
        events = detect_scr(trace, params)
        print(f"{params.method}: {len(events)} event(s)")
        for ev in events:
            print(f"  onset {ev.onset_idx / RATE:6.2f}s  "
                  f"peak {ev.peak_idx / RATE:6.2f}s  amplitude {ev.amplitude:.3f} uS")


if __name__ == "__main__":
    main()
