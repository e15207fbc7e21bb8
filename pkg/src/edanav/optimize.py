"""Session simulation, the P_pn objective, and gain search.

A simulation replays one recorded session through the adaptation law and
scores the result with the phasic surrogate: ``n_raw`` counts events on
the surrogate's prediction for the unmodified acceleration, ``n_adapted``
on its prediction for the adapted acceleration, so both conditions go
through the identical pipeline and zero gains give identical counts.
``n_recorded`` (events on the recorded, decomposed phasic) is carried
along for reporting only.

The objective P_pn sums, over detectors, the percentage of sessions whose
adapted event count dropped below the raw one; its range is [0, 100 *
n_detectors]. The optimizer is a seeded two-phase random search: uniform
exploration over the gain ranges, then Gaussian sampling around the
incumbent with the step size halved after every
``halve_after`` consecutive non-improving trials.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .control import (
    DEFAULT_INTEGRAL_CLAMP,
    GAIN_KEYS,
    AccelLimits,
    PidGains,
    _clip,
    _pid,
    adapt_trace,
)
from .dataset import SessionRecord
from .metrics import SessionStats, msdv
from .scr import DetectorParams, count_er_scr, default_detectors
from .signals import DecompositionConfig, Trace, Unit, decompose, format_float
from .surrogate import SurrogateModel, predict_clip, predict_session

MODES = ("offline", "closed_loop")


@dataclass(frozen=True)
class SessionContext:
    """Gain-independent precomputation for one session.

    ``f_feedback`` is the recorded phasic in the model's normalized scale,
    clipped to [0, 1]; it drives the controller in offline mode. The raw
    counts and dose values do not change across trials, so a search over
    gains computes them once.
    """

    record: SessionRecord
    f_feedback: np.ndarray
    n_raw: tuple[int, ...]
    n_recorded: tuple[int, ...]
    msdv_raw_l: float
    msdv_raw_r: float


@dataclass(frozen=True)
class SimulationResult:
    """Everything one simulated session produced."""

    session_id: str
    adapted_a_l: Trace
    adapted_a_r: Trace
    predicted_phasic: Trace
    n_raw: tuple[int, ...]
    n_adapted: tuple[int, ...]
    n_recorded: tuple[int, ...]
    msdv_l: tuple[float, float]  # (raw, adapted)
    msdv_r: tuple[float, float]

    @property
    def stats(self) -> SessionStats:
        return SessionStats(
            self.session_id, self.n_raw, self.n_adapted, self.n_recorded,
            self.msdv_l, self.msdv_r,
        )


def _count_all(phasic: Trace, detectors) -> tuple[int, ...]:
    return tuple(count_er_scr(phasic, d) for d in detectors)


def build_context(
    record: SessionRecord,
    model: SurrogateModel,
    detectors=None,
    decomposition: DecompositionConfig = DecompositionConfig(),
) -> SessionContext:
    if detectors is None:
        detectors = default_detectors()
    dec = decompose(record.eda, decomposition)
    phasic_scaled = model.norm.phasic.apply(dec.phasic.samples)
    recorded = Trace(phasic_scaled, record.eda.rate_hz, Unit.NORMALIZED)
    raw_pred = predict_session(model, record.a_l, record.a_r)
    return SessionContext(
        record=record,
        f_feedback=np.clip(phasic_scaled, 0.0, 1.0),
        n_raw=_count_all(raw_pred, detectors),
        n_recorded=_count_all(recorded, detectors),
        msdv_raw_l=msdv(record.a_l),
        msdv_raw_r=msdv(record.a_r),
    )


def build_contexts(records, model, detectors=None,
                   decomposition=DecompositionConfig()) -> list[SessionContext]:
    return [build_context(r, model, detectors, decomposition) for r in records]


def _closed_loop_adapt(
    record: SessionRecord,
    model: SurrogateModel,
    gains: PidGains,
    limits: AccelLimits,
    integral_clamp: float,
) -> tuple[np.ndarray, np.ndarray, Trace]:
    """Clip-granular loop: adapt clip k under the feedback predicted so far.

    The controller holds f at the last predicted sample of clip k-1 while
    adapting clip k; the model then predicts clip k from a window of
    [adapted clip k-1 | adapted clip k | hold of the newest sample], the
    future third being unknowable mid-run. Samples past the last full clip
    are adapted under the final hold but stay unpredicted, matching the
    offline prediction span.
    """
    a_l = record.a_l.samples
    a_r = record.a_r.samples
    rate = record.a_l.rate_hz
    dt = 1.0 / rate
    L = model.L
    n = a_l.size
    n_clips = (n - L) // L + 1
    covered = n_clips * L
    out_l = np.empty(n)
    out_r = np.empty(n)
    preds = np.empty(covered)
    al_list = a_l.tolist()
    ar_list = a_r.tolist()
    il = pl = ir = pr = if_ = pf = 0.0
    f_hold = 0.0
    max_l = limits.max_longitudinal
    max_r = limits.max_rotational

    def step(i: int) -> None:
        nonlocal il, pl, ir, pr, if_, pf
        e_l = 0.0 - al_list[i]
        e_r = 0.0 - ar_list[i]
        e_f = 0.0 - f_hold
        psi_l, il, pl = _pid(il, pl, e_l, gains.K_Pl, gains.K_Il, gains.K_Dl, dt, integral_clamp)
        psi_r, ir, pr = _pid(ir, pr, e_r, gains.K_Pr, gains.K_Ir, gains.K_Dr, dt, integral_clamp)
        psi_f, if_, pf = _pid(if_, pf, e_f, gains.K_Pf, gains.K_If, gains.K_Df, dt, integral_clamp)
        out_l[i] = _clip(al_list[i] + psi_l + gains.beta_l * psi_f, max_l)
        out_r[i] = _clip(ar_list[i] + psi_r + gains.beta_r * psi_f, max_r)

    for k in range(n_clips):
        for i in range(k * L, (k + 1) * L):
            step(i)
        if k == 0:
            prev_l = np.zeros(L)
            prev_r = np.zeros(L)
        else:
            prev_l = out_l[(k - 1) * L : k * L]
            prev_r = out_r[(k - 1) * L : k * L]
        cur_l = out_l[k * L : (k + 1) * L]
        cur_r = out_r[k * L : (k + 1) * L]
        window = np.stack(
            [
                model.norm.a_l.apply(np.concatenate([prev_l, cur_l, np.full(L, cur_l[-1])])),
                model.norm.a_r.apply(np.concatenate([prev_r, cur_r, np.full(L, cur_r[-1])])),
            ]
        )
        clip_pred = predict_clip(model, window)
        preds[k * L : (k + 1) * L] = clip_pred
        f_hold = float(clip_pred[-1])
    for i in range(covered, n):
        step(i)
    return out_l, out_r, Trace(preds, rate, Unit.NORMALIZED)


def _simulate(
    ctx: SessionContext,
    gains: PidGains,
    model: SurrogateModel,
    detectors,
    mode: str,
    limits: AccelLimits,
    integral_clamp: float,
) -> SimulationResult:
    record = ctx.record
    rate = record.a_l.rate_hz
    if mode == "offline":
        out_l, out_r = adapt_trace(
            record.a_l.samples, record.a_r.samples, ctx.f_feedback,
            rate, gains, limits, integral_clamp,
        )
        adapted_l = Trace(out_l, rate, record.a_l.unit)
        adapted_r = Trace(out_r, rate, record.a_r.unit)
        pred = predict_session(model, adapted_l, adapted_r)
    elif mode == "closed_loop":
        out_l, out_r, pred = _closed_loop_adapt(record, model, gains, limits, integral_clamp)
        adapted_l = Trace(out_l, rate, record.a_l.unit)
        adapted_r = Trace(out_r, rate, record.a_r.unit)
    else:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    return SimulationResult(
        session_id=record.session_id,
        adapted_a_l=adapted_l,
        adapted_a_r=adapted_r,
        predicted_phasic=pred,
        n_raw=ctx.n_raw,
        n_adapted=_count_all(pred, detectors),
        n_recorded=ctx.n_recorded,
        msdv_l=(ctx.msdv_raw_l, msdv(adapted_l)),
        msdv_r=(ctx.msdv_raw_r, msdv(adapted_r)),
    )


def simulate_session(
    record: SessionRecord,
    gains: PidGains,
    model: SurrogateModel,
    mode: str = "offline",
    detectors=None,
    limits: AccelLimits = AccelLimits(),
    integral_clamp: float = DEFAULT_INTEGRAL_CLAMP,
    decomposition: DecompositionConfig = DecompositionConfig(),
) -> SimulationResult:
    """Replay one session under ``gains`` and score it with the surrogate."""
    if detectors is None:
        detectors = default_detectors()
    ctx = build_context(record, model, detectors, decomposition)
    return _simulate(ctx, gains, model, detectors, mode, limits, integral_clamp)


def evaluate_sessions(
    records,
    gains: PidGains,
    model: SurrogateModel,
    mode: str = "offline",
    detectors=None,
    limits: AccelLimits = AccelLimits(),
    integral_clamp: float = DEFAULT_INTEGRAL_CLAMP,
    decomposition: DecompositionConfig = DecompositionConfig(),
) -> list[SimulationResult]:
    if detectors is None:
        detectors = default_detectors()
    return [
        _simulate(build_context(r, model, detectors, decomposition),
                  gains, model, detectors, mode, limits, integral_clamp)
        for r in records
    ]


def _objective_from_contexts(
    contexts, gains, model, detectors, mode, limits, integral_clamp
) -> tuple[float, tuple[float, ...]]:
    n = len(contexts)
    positives = [0] * len(detectors)
    for ctx in contexts:
        result = _simulate(ctx, gains, model, detectors, mode, limits, integral_clamp)
        for d in range(len(detectors)):
            if result.n_raw[d] - result.n_adapted[d] > 0:
                positives[d] += 1
    percentages = tuple(100.0 * p / n for p in positives)
    return sum(percentages), percentages


def objective_ppn(
    records,
    gains: PidGains,
    model: SurrogateModel,
    detectors=None,
    mode: str = "offline",
    limits: AccelLimits = AccelLimits(),
    integral_clamp: float = DEFAULT_INTEGRAL_CLAMP,
    decomposition: DecompositionConfig = DecompositionConfig(),
) -> float:
    """P_pn: summed per-detector percentages of sessions with fewer events."""
    records = list(records)
    if not records:
        raise ValueError("objective needs at least one session")
    if detectors is None:
        detectors = default_detectors()
    contexts = build_contexts(records, model, detectors, decomposition)
    total, _ = _objective_from_contexts(
        contexts, gains, model, detectors, mode, limits, integral_clamp
    )
    return total


# ---------------------------------------------------------------------------
# Gain search.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GainRanges:
    """Per-gain search box, aligned with GAIN_KEYS order."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=np.float64)
        hi = np.asarray(self.hi, dtype=np.float64)
        if lo.shape != (len(GAIN_KEYS),) or hi.shape != (len(GAIN_KEYS),):
            raise ValueError(f"ranges must have {len(GAIN_KEYS)} entries")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("ranges must be finite")
        bad = np.nonzero(hi < lo)[0]
        if bad.size:
            raise ValueError(f"empty range for {GAIN_KEYS[bad[0]]}")
        if np.any(lo < 0):
            raise ValueError("gain ranges must be non-negative")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @staticmethod
    def default(k_hi: float = 0.5, beta_hi: float = 0.01) -> "GainRanges":
        hi = np.array([k_hi] * 9 + [beta_hi] * 2)
        return GainRanges(np.zeros(len(GAIN_KEYS)), hi)


@dataclass(frozen=True)
class Trial:
    index: int
    gains: PidGains
    objective: float
    percentages: tuple[float, ...]


@dataclass(frozen=True)
class OptimizeResult:
    best: Trial
    trials: tuple[Trial, ...]
    methods: tuple[str, ...]


def optimize(
    records,
    model: SurrogateModel,
    budget: int,
    seed: int = 0,
    ranges: GainRanges | None = None,
    detectors=None,
    mode: str = "offline",
    explore_frac: float = 0.6,
    sigma_scale: float = 0.2,
    halve_after: int = 10,
    workers: int = 1,
    limits: AccelLimits = AccelLimits(),
    integral_clamp: float = DEFAULT_INTEGRAL_CLAMP,
    decomposition: DecompositionConfig = DecompositionConfig(),
) -> OptimizeResult:
    """Two-phase random search for gains maximizing P_pn.

    Phase one draws max(1, round(budget * explore_frac)) uniform samples
    from the ranges; phase two samples Gaussians centred on the incumbent
    with per-gain sigma = sigma_scale * range width, clipped back into the
    box. Strict improvement moves the incumbent (ties keep the earliest),
    and sigma halves after ``halve_after`` consecutive phase-two trials
    without improvement. ``workers`` > 1 evaluates the independent phase-one
    trials in a thread pool; results are identical for any worker count and
    fully deterministic for a given seed.
    """
    records = list(records)
    if not records:
        raise ValueError("optimize needs at least one session")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if not 0.0 < explore_frac <= 1.0:
        raise ValueError("explore_frac must be in (0, 1]")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if ranges is None:
        ranges = GainRanges.default()
    if detectors is None:
        detectors = default_detectors()
    contexts = build_contexts(records, model, detectors, decomposition)
    rng = np.random.default_rng(seed)
    n_explore = min(budget, max(1, int(round(budget * explore_frac))))
    sigma = sigma_scale * (ranges.hi - ranges.lo)
    best_x: np.ndarray | None = None
    best_obj = -np.inf
    best_index = 0
    stall = 0
    trials: list[Trial] = []

    def evaluate(index: int, x: np.ndarray) -> Trial:
        gains = PidGains.from_array(x)
        obj, pcts = _objective_from_contexts(
            contexts, gains, model, detectors, mode, limits, integral_clamp
        )
        return Trial(index, gains, obj, pcts)

    # phase one: proposals drawn up front (same stream as drawing in-loop),
    # evaluated independently, considered in draw order
    explore_xs = [rng.uniform(ranges.lo, ranges.hi) for _ in range(n_explore)]
    if workers > 1 and n_explore > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            explore_trials = list(pool.map(lambda pair: evaluate(*pair), enumerate(explore_xs)))
    else:
        explore_trials = [evaluate(i, x) for i, x in enumerate(explore_xs)]
    for trial in explore_trials:
        trials.append(trial)
        if trial.objective > best_obj:
            best_obj = trial.objective
            best_x = trial.gains.as_array()
            best_index = trial.index

    # phase two: sequential Gaussian refinement around the incumbent
    for t in range(n_explore, budget):
        x = np.clip(best_x + rng.standard_normal(len(GAIN_KEYS)) * sigma,
                    ranges.lo, ranges.hi)
        trial = evaluate(t, x)
        trials.append(trial)
        if trial.objective > best_obj:
            best_obj = trial.objective
            best_x = x
            best_index = t
            stall = 0
        else:
            stall += 1
            if stall >= halve_after:
                sigma = sigma / 2.0
                stall = 0
    methods = tuple(d.method for d in detectors)
    return OptimizeResult(best=trials[best_index], trials=tuple(trials), methods=methods)


def write_history_csv(result: OptimizeResult, path) -> None:
    header = ["trial", *GAIN_KEYS, "objective"]
    header.extend(f"pct_{m}" for m in result.methods)
    lines = [",".join(header)]
    for trial in result.trials:
        row = [str(trial.index)]
        row.extend(format_float(v) for v in trial.gains.as_array())
        row.append(format_float(trial.objective))
        row.extend(format_float(p) for p in trial.percentages)
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
