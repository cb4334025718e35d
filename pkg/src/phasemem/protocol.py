"""Training and recall experiments: schedules, metrics and seeded batches.

Every run is one coupled Euler system of phases and weights.  Inputs are
clamped to the active pattern; during training the outputs are also
nudged toward it, during recall they run free.  Couplings act on the
phases through ``coupling_gain`` (rad/s per unit weight) so that weights
stay in [-1, 1] while the phase dynamics are fast compared with learning.

Random draws come from one integer seed.  Each purpose gets its own child
stream (``SeedSequence(seed, spawn_key=(i,))``) so that, for example, the
recall initial phases do not depend on how many numbers training used.
"""
from __future__ import annotations

from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _engine
from .encoding import as_pattern, as_pattern_set, outer_product_weights, pattern_to_phases
from .errors import ConfigurationError, DivergenceError
from .plasticity import LearningParams
from .phase import CouplingMatrix, NetworkTopology

TRAIN = "train"
RECALL = "recall"

# child-stream indices under a run seed
_WEIGHTS, _FREQS, _TRAIN_PHASES, _RECALL_PHASES, _PATTERNS = range(5)


def child_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(stream,)))


def derive_seed(master_seed: int, index: int) -> int:
    """Seed of run ``index`` in a batch with ``master_seed`` (63-bit, reproducible)."""
    state = np.random.SeedSequence(int(master_seed), spawn_key=(int(index),)).generate_state(1, np.uint64)
    return int(state[0] >> np.uint64(1))


@dataclass(frozen=True)
class Segment:
    duration: float
    pattern: int
    mode: str = TRAIN

    def __post_init__(self):
        object.__setattr__(self, "duration", float(self.duration))
        object.__setattr__(self, "pattern", int(self.pattern))
        if not self.duration > 0:
            raise ConfigurationError(f"segment duration must be positive, got {self.duration}")
        if self.mode not in (TRAIN, RECALL):
            raise ConfigurationError(f"segment mode must be 'train' or 'recall', got {self.mode!r}")
        if self.pattern < 0:
            raise ConfigurationError(f"pattern index must be non-negative, got {self.pattern}")


@dataclass(frozen=True)
class ExperimentSchedule:
    """Ordered segments; each names a target pattern by index and a mode.

    All training segments come before all recall segments.  Samples less
    than ``settle_time`` after the start of a segment are excluded from
    steady-state metrics.
    """

    segments: tuple[Segment, ...]
    settle_time: float = 0.5

    def __post_init__(self):
        segs = tuple(s if isinstance(s, Segment) else Segment(*s) for s in self.segments)
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "settle_time", float(self.settle_time))
        if not segs:
            raise ConfigurationError("schedule has no segments")
        if self.settle_time < 0:
            raise ConfigurationError(f"settle_time must be non-negative, got {self.settle_time}")
        for s in segs:
            if not self.settle_time < s.duration:
                raise ConfigurationError(
                    f"settle_time {self.settle_time} s is not shorter than a {s.duration} s segment")
        modes = [s.mode for s in segs]
        if RECALL in modes and TRAIN in modes[modes.index(RECALL):]:
            raise ConfigurationError("training segments must all precede recall segments")

    @classmethod
    def alternating(cls, interval: float, duration: float, mode: str = TRAIN, settle_time: float = 0.5,
                    n_patterns: int = 2, half_last: bool = False) -> "ExperimentSchedule":
        """Cycle through patterns ``0..n_patterns-1`` every ``interval`` seconds.

        ``half_last`` shortens the final segment to half an interval, which
        leaves weights that alternate with the pattern near the middle of
        their swing instead of biased toward the last pattern shown.
        """
        if not interval > 0 or not duration > 0:
            raise ConfigurationError("interval and duration must be positive")
        count = duration / interval
        n = int(round(count))
        if n < 1 or abs(count - n) > 1e-9 * max(1.0, count):
            raise ConfigurationError(f"duration {duration} is not a whole number of {interval} s intervals")
        segs = [Segment(interval, i % n_patterns, mode) for i in range(n)]
        if half_last:
            segs[-1] = Segment(interval / 2, segs[-1].pattern, mode)
        return cls(tuple(segs), settle_time)

    def __add__(self, other: "ExperimentSchedule") -> "ExperimentSchedule":
        if self.settle_time != other.settle_time:
            raise ConfigurationError("cannot join schedules with different settle times")
        return ExperimentSchedule(self.segments + other.segments, self.settle_time)

    def part(self, mode: str) -> "ExperimentSchedule | None":
        segs = tuple(s for s in self.segments if s.mode == mode)
        return ExperimentSchedule(segs, self.settle_time) if segs else None

    @property
    def duration(self) -> float:
        return float(sum(s.duration for s in self.segments))


@dataclass(frozen=True, eq=False)
class RunConfig:
    """Everything that determines one run, bit for bit.

    ``freq_dispersion`` is the half-width of the uniform natural-frequency
    spread as a fraction of ``coupling_gain``.
    """

    topology: NetworkTopology
    schedule: ExperimentSchedule
    target_patterns: np.ndarray
    learning: LearningParams = field(default_factory=LearningParams)
    dt: float = 1e-3
    seed: int = 0
    init_weight_range: tuple[float, float] = (-0.25, 0.25)
    freq_dispersion: float = 0.05
    coupling_gain: float = 40.0
    sample_every: int = 10
    plastic_recall: bool = True
    symmetric: bool = True

    def __post_init__(self):
        pats = as_pattern_set(self.target_patterns)
        pats.setflags(write=False)
        object.__setattr__(self, "target_patterns", pats)
        object.__setattr__(self, "init_weight_range", tuple(float(x) for x in self.init_weight_range))
        lo, hi = self.init_weight_range
        if not -1.0 <= lo <= hi <= 1.0:
            raise ConfigurationError(f"init_weight_range {self.init_weight_range} must lie inside [-1, 1]")
        if not self.freq_dispersion >= 0:
            raise ConfigurationError(f"freq_dispersion must be non-negative, got {self.freq_dispersion}")
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if not self.coupling_gain > 0:
            raise ConfigurationError(f"coupling_gain must be positive, got {self.coupling_gain}")
        if int(self.sample_every) != self.sample_every or self.sample_every < 1:
            raise ConfigurationError(f"sample_every must be a positive integer, got {self.sample_every}")
        n_vis = len(self.topology.visible)
        if pats.shape[1] != n_vis:
            raise ConfigurationError(f"patterns have length {pats.shape[1]}, topology has {n_vis} visible oscillators")
        for s in self.schedule.segments:
            if s.pattern >= pats.shape[0]:
                raise ConfigurationError(f"segment refers to pattern {s.pattern}, only {pats.shape[0]} given")
            steps = s.duration / self.dt
            if abs(steps - round(steps)) > 1e-6:
                raise ConfigurationError(f"segment duration {s.duration} is not a multiple of dt={self.dt}")

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, seed=int(seed))

    @property
    def ideal_weights(self) -> CouplingMatrix | None:
        """Outer-product matrix of the targets (flat topologies only)."""
        if self.topology.is_layered:
            return None
        return outer_product_weights(self.target_patterns, mask=self.topology.coupling_mask,
                                     symmetric=self.symmetric)

    def natural_frequencies(self) -> np.ndarray:
        rng = child_rng(self.seed, _FREQS)
        width = self.freq_dispersion * self.coupling_gain
        return width * rng.uniform(-1.0, 1.0, self.topology.n_oscillators)

    def initial_weights(self) -> CouplingMatrix:
        lo, hi = self.init_weight_range
        return CouplingMatrix.random_uniform(self.topology, lo, hi, child_rng(self.seed, _WEIGHTS), self.symmetric)

    def initial_phases(self, mode: str) -> np.ndarray:
        rng = child_rng(self.seed, _TRAIN_PHASES if mode == TRAIN else _RECALL_PHASES)
        return rng.uniform(-np.pi, np.pi, self.topology.n_oscillators)


@dataclass(frozen=True)
class TraceRecord:
    time: float
    phases: np.ndarray
    weights: np.ndarray
    energy: float
    accuracy: np.ndarray
    mse: float


@dataclass(frozen=True, eq=False)
class Trace(Sequence):
    """Columnar run log; indexing yields :class:`TraceRecord` rows.

    ``weights`` holds the masked entries listed in ``pairs``.  ``segment``
    is the segment active during the step that produced each sample, and
    ``steady`` is false inside settle windows.
    """

    times: np.ndarray
    phases: np.ndarray
    weights: np.ndarray
    pairs: tuple[tuple[int, int], ...]
    energy: np.ndarray
    accuracy: np.ndarray
    mse: np.ndarray
    segment: np.ndarray
    steady: np.ndarray
    switch_samples: np.ndarray

    def __len__(self) -> int:
        return self.times.size

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        return TraceRecord(float(self.times[i]), self.phases[i], self.weights[i], float(self.energy[i]),
                           self.accuracy[i], float(self.mse[i]))

    def steady_accuracy(self) -> float:
        """Mean accuracy over outputs and over samples outside settle windows."""
        return float(np.mean(self.accuracy[self.steady]))


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    config: RunConfig
    trained: CouplingMatrix | None
    final: CouplingMatrix
    train_trace: Trace | None
    recall_trace: Trace | None


def pattern_phases_for(topology: NetworkTopology, pattern) -> np.ndarray:
    """Target phases indexed by oscillator (NaN on hidden oscillators)."""
    out = np.full(topology.n_oscillators, np.nan)
    out[list(topology.visible)] = pattern_to_phases(pattern)
    return out


def recall_accuracy(phases, target, output_indices, reference_index: int = 0, visible=None) -> np.ndarray:
    """Per-output ``(cos(dphi* - dphi) + 1) / 2`` with phases taken relative to the reference.

    ``target`` is a +/-1 pattern; entry ``a`` belongs to oscillator
    ``visible[a]`` (identity by default).  Leading axes of ``phases`` are
    batch axes.
    """
    phi = np.asarray(phases, dtype=float)
    t = as_pattern(target)
    vis = list(range(t.size)) if visible is None else [int(v) for v in visible]
    if len(vis) != t.size:
        raise ConfigurationError("visible index list does not match target length")
    n = phi.shape[-1]
    outs = [int(o) for o in output_indices]
    if any(not 0 <= i < n for i in [*outs, reference_index, *vis]):
        raise ConfigurationError("output/reference index out of range")
    star = np.full(n, np.nan)
    star[vis] = pattern_to_phases(t)
    if np.isnan(star[reference_index]) or np.any(np.isnan(star[outs])):
        raise ConfigurationError("reference and outputs must be visible oscillators")
    want = star[outs] - star[reference_index]
    got = phi[..., outs] - phi[..., reference_index, None]
    return 0.5 * (np.cos(want - got) + 1.0)


def weight_mse(k, ideal) -> float:
    """Mean squared difference over the masked (off-diagonal) entries."""
    mask = getattr(k, "mask", None)
    imask = getattr(ideal, "mask", None)
    a = np.asarray(k, dtype=float)
    b = np.asarray(ideal, dtype=float)
    if a.shape != b.shape:
        raise ConfigurationError(f"shape mismatch {a.shape} vs {b.shape}")
    if mask is None:
        mask = imask if imask is not None else ~np.eye(a.shape[0], dtype=bool)
    elif imask is not None and not np.array_equal(mask, imask):
        raise ConfigurationError("coupling masks differ")
    return float(np.mean((a[mask] - b[mask]) ** 2))


def random_pattern_pair(seed, visible_size: int, n_inputs: int | None = None) -> np.ndarray:
    """Two uniform +/-1 patterns, redrawn while equal or antipodal.

    With ``n_inputs`` the pair must also define a non-trivial association.
    The inputs must differ up to a global sign flip (otherwise one input
    would need two answers), and the outputs must differ as given, since
    inputs are clamped to absolute phases and equal outputs never move.
    """
    if visible_size < 2:
        raise ConfigurationError(f"visible_size must be at least 2, got {visible_size}")
    if n_inputs is not None and not 1 <= n_inputs < visible_size:
        raise ConfigurationError(f"n_inputs must lie in [1, {visible_size})")
    if n_inputs == 1:
        raise ConfigurationError("a non-trivial association needs at least two inputs")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    while True:
        p = rng.choice(np.array([-1, 1]), size=(2, visible_size))
        if np.array_equal(p[0], p[1]) or np.array_equal(p[0], -p[1]):
            continue
        if n_inputs is not None:
            g = p[:, :n_inputs] * p[:, :1]
            if np.array_equal(g[0], g[1]) or np.array_equal(p[0, n_inputs:], p[1, n_inputs:]):
                continue
        return p


def _build_trace(config: RunConfig, sched: ExperimentSchedule, phases, weights_full, energy, t0: float) -> Trace:
    topo = config.topology
    dt, se = config.dt, int(config.sample_every)
    steps = np.array([int(round(s.duration / dt)) for s in sched.segments])
    ends = np.cumsum(steps)
    starts = ends - steps
    n_samples = phases.shape[0]
    step_of = np.arange(n_samples) * se
    seg = np.searchsorted(ends, np.maximum(step_of - 1, 0), side="right")
    since = (step_of - starts[seg]) * dt
    steady = since > sched.settle_time + 1e-12
    pairs = tuple(topo.masked_pairs(config.symmetric))
    rows = np.array([p[0] for p in pairs], dtype=int)
    cols = np.array([p[1] for p in pairs], dtype=int)
    weights = weights_full[:, rows, cols]
    acc = np.empty((n_samples, len(topo.outputs)))
    for s, segment in enumerate(sched.segments):
        sel = seg == s
        if sel.any():
            acc[sel] = recall_accuracy(phases[sel], config.target_patterns[segment.pattern], topo.outputs,
                                       topo.inputs[0], topo.visible)
    ideal = config.ideal_weights
    if ideal is None:
        mse = np.full(n_samples, np.nan)
    else:
        mask = topo.coupling_mask
        mse = np.mean((weights_full[:, mask] - ideal.k[mask]) ** 2, axis=1)
    switch_samples = np.array([e // se for e in ends[:-1] if e % se == 0], dtype=int)
    times = t0 + step_of * dt
    for arr in (times, phases, weights, energy, acc, mse, seg, steady, switch_samples):
        arr.setflags(write=False)
    return Trace(times, phases, weights, pairs, energy, acc, mse, seg, steady, switch_samples)


def _simulate(config: RunConfig, sched: ExperimentSchedule, phi0, k0: CouplingMatrix, eta: float,
              plastic: bool, t0: float = 0.0) -> tuple[CouplingMatrix, Trace]:
    topo = config.topology
    n = topo.n_oscillators
    dt = config.dt
    n_seg = len(sched.segments)
    seg_steps = np.array([int(round(s.duration / dt)) for s in sched.segments], dtype=np.int64)
    clamp_on = np.zeros((n_seg, n), dtype=np.bool_)
    clamp_val = np.zeros((n_seg, n))
    nudge_on = np.zeros((n_seg, n), dtype=np.bool_)
    nudge_val = np.zeros((n_seg, n))
    inputs = list(topo.inputs)
    outputs = list(topo.outputs)
    for s, segment in enumerate(sched.segments):
        target = pattern_phases_for(topo, config.target_patterns[segment.pattern])
        clamp_on[s, inputs] = True
        clamp_val[s, inputs] = target[inputs]
        if segment.mode == TRAIN:
            nudge_on[s, outputs] = True
            nudge_val[s, outputs] = target[outputs]
    lp = config.learning
    phases, weights, energy = _engine.simulate(
        np.asarray(phi0, dtype=float).copy(), np.array(k0.k), np.array(topo.coupling_mask),
        config.natural_frequencies(), float(config.coupling_gain), float(dt), seg_steps,
        clamp_on, clamp_val, nudge_on, nudge_val, float(eta), float(lp.lam), float(lp.k_nudge),
        bool(plastic), bool(config.symmetric), int(config.sample_every))
    expected = int(seg_steps.sum()) // int(config.sample_every) + 1
    if phases.shape[0] != expected or not np.all(np.isfinite(phases[-1])):
        last = phases[-1] if phases.shape[0] else phi0
        raise DivergenceError(f"phase integration diverged after {phases.shape[0]} samples",
                              float(np.linalg.norm(np.nan_to_num(last, nan=np.inf))))
    final = CouplingMatrix(weights[-1], topo.coupling_mask, config.symmetric)
    return final, _build_trace(config, sched, phases, weights, energy, t0)


def run_training(config: RunConfig) -> tuple[CouplingMatrix, Trace]:
    """Clamp inputs, nudge outputs and learn over the schedule's training segments."""
    sched = config.schedule.part(TRAIN)
    if sched is None:
        raise ConfigurationError("schedule has no training segments")
    return _simulate(config, sched, config.initial_phases(TRAIN), config.initial_weights(),
                     config.learning.eta, True)


def run_recall(config: RunConfig, k: CouplingMatrix, t0: float = 0.0) -> tuple[CouplingMatrix, Trace]:
    """Clamp inputs only, from random phases, with plasticity per ``plastic_recall``.

    Returns the weights at the end of recall (unchanged when plasticity is
    off) and the trace.
    """
    sched = config.schedule.part(RECALL)
    if sched is None:
        raise ConfigurationError("schedule has no recall segments")
    k = k if isinstance(k, CouplingMatrix) else CouplingMatrix(k, config.topology.coupling_mask, config.symmetric)
    if k.n != config.topology.n_oscillators or not np.array_equal(k.mask, config.topology.coupling_mask):
        raise ConfigurationError("coupling matrix does not match the topology")
    if k.symmetric != config.symmetric:
        k = CouplingMatrix(k.k, k.mask, config.symmetric)
    return _simulate(config, sched, config.initial_phases(RECALL), k,
                     config.learning.effective_recall_eta, config.plastic_recall, t0)


def run_experiment(config: RunConfig, weights: CouplingMatrix | None = None) -> ExperimentResult:
    """Training segments (if any) followed by recall segments (if any).

    Without training segments, ``weights`` supplies the recall couplings.
    """
    train_trace = recall_trace = None
    trained = None
    k = weights
    if config.schedule.part(TRAIN) is not None:
        trained, train_trace = run_training(config)
        k = trained
    if config.schedule.part(RECALL) is not None:
        if k is None:
            raise ConfigurationError("recall without training needs a weight matrix")
        t0 = config.schedule.part(TRAIN).duration if train_trace is not None else 0.0
        k, recall_trace = run_recall(config, k, t0)
    return ExperimentResult(config, trained, k, train_trace, recall_trace)


@dataclass(frozen=True)
class SawtoothReport:
    """Per switch: pre-switch level, next pre-switch level, jump and relaxation flags."""

    pre: np.ndarray
    after: np.ndarray
    jumped: np.ndarray
    relaxed: np.ndarray

    @property
    def ok(self) -> bool:
        return bool(self.jumped.all() and self.relaxed.all())


def energy_sawtooth(trace: Trace, window: int = 5, tolerance: float = 0.05) -> SawtoothReport:
    """Check the jump-and-relax shape of the smoothed energy at every input switch.

    With switch sample ``s`` and half-window ``h``, the pre-switch level is
    the smoothed energy at ``s - h`` (its window sees no post-switch
    sample).  A jump means the smoothed value one sample after the switch
    exceeds it; relaxation means the level at the same offset before the
    following switch (or at the end of the run) lies within
    ``tolerance * |pre|`` of it.
    """
    from .energy import smoothed_energy_trace

    sm = smoothed_energy_trace(trace.energy, window)
    h = window // 2
    sw = [int(s) for s in trace.switch_samples]
    if not sw:
        raise ConfigurationError("trace has no input switches")
    nxt = sw[1:] + [len(sm) - 1 + h]
    pre, after, jumped, relaxed = [], [], [], []
    for s, e in zip(sw, nxt):
        if s - h < 0 or s + 1 >= len(sm):
            raise ConfigurationError("switch too close to the trace edge for this window")
        p = sm[s - h]
        a = sm[min(e - h, len(sm) - 1 - h)]
        pre.append(p)
        after.append(a)
        jumped.append(sm[s + 1] > p)
        relaxed.append(abs(a - p) <= tolerance * abs(p))
    return SawtoothReport(np.array(pre), np.array(after), np.array(jumped), np.array(relaxed))


def switch_dips(trace: Trace) -> np.ndarray:
    """For each switch: did mean accuracy inside the settle window fall below its pre-switch value?"""
    acc = trace.accuracy.mean(axis=1)
    out = []
    for s in trace.switch_samples:
        win = np.nonzero((trace.segment == trace.segment[s + 1]) & ~trace.steady)[0]
        win = win[win > s]
        out.append(bool(win.size and acc[win].min() < acc[s]))
    return np.array(out, dtype=bool)


@dataclass(frozen=True)
class RunSummary:
    seed: int
    initial_mse: float
    final_mse: float
    steady_accuracy: float
    sawtooth: bool | None
    dips: bool | None


@dataclass(frozen=True, eq=False)
class BatchResult:
    metric: str
    times: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    rolling_mean: np.ndarray
    runs: tuple[RunSummary, ...]


def rolling_average(x, window: int) -> np.ndarray:
    """Trailing moving average, truncated at the start."""
    x = np.asarray(x, dtype=float)
    if int(window) != window or window < 1:
        raise ConfigurationError(f"rolling window must be a positive integer, got {window}")
    c = np.cumsum(np.concatenate([[0.0], x]))
    idx = np.arange(1, x.size + 1)
    lo = np.maximum(idx - int(window), 0)
    return (c[idx] - c[lo]) / (idx - lo)


def batch_configs(base: RunConfig, n_runs: int, master_seed: int, random_patterns: bool = True) -> list[RunConfig]:
    """Per-run configs with derived seeds and (optionally) fresh random pattern pairs."""
    if n_runs < 1:
        raise ConfigurationError("a batch needs at least one run")
    out = []
    for i in range(n_runs):
        seed = derive_seed(master_seed, i)
        cfg = base.with_seed(seed)
        if random_patterns:
            n_in = len(base.topology.inputs) if len(base.topology.inputs) >= 2 else None
            pats = random_pattern_pair(child_rng(seed, _PATTERNS), len(base.topology.visible), n_in)
            cfg = replace(cfg, target_patterns=pats)
        out.append(cfg)
    return out


def _summarize(res: ExperimentResult) -> tuple[RunSummary, np.ndarray, np.ndarray]:
    cfg = res.config
    tt, rt = res.train_trace, res.recall_trace
    init_mse = final_mse = float("nan")
    if tt is not None and cfg.ideal_weights is not None:
        init_mse, final_mse = float(tt.mse[0]), float(tt.mse[-1])
    acc = saw = dips = None
    if rt is not None:
        acc = rt.steady_accuracy()
        saw = energy_sawtooth(rt).ok if rt.switch_samples.size else None
        dips = bool(switch_dips(rt).all()) if rt.switch_samples.size else None
    mse_series = tt.mse if tt is not None else None
    acc_series = rt.accuracy.mean(axis=1) if rt is not None else None
    summary = RunSummary(cfg.seed, init_mse, final_mse, float("nan") if acc is None else acc, saw, dips)
    return summary, mse_series, acc_series


def _times(cfg: RunConfig, mode: str) -> np.ndarray:
    sched = cfg.schedule.part(mode)
    steps = sum(int(round(s.duration / cfg.dt)) for s in sched.segments)
    return np.arange(steps // cfg.sample_every + 1) * cfg.sample_every * cfg.dt


def batch_run(configs: Sequence[RunConfig], metric: str = "auto", window: int = 100,
              workers: int = 1) -> BatchResult:
    """Run independent experiments and aggregate one metric pointwise.

    ``metric`` is ``mse`` (training weight error, flat topologies),
    ``accuracy`` (mean output accuracy during recall) or ``auto``.  Runs
    execute on ``workers`` threads; results are reduced in input order, so
    the aggregate does not depend on the worker count.
    """
    configs = list(configs)
    if not configs:
        raise ConfigurationError("batch is empty")
    first = configs[0]
    for c in configs[1:]:
        if (c.schedule != first.schedule or c.dt != first.dt or c.sample_every != first.sample_every
                or c.topology.layer_sizes != first.topology.layer_sizes):
            raise ConfigurationError("all runs in a batch must share schedule, dt, sampling and topology")
    if metric == "auto":
        metric = "accuracy" if first.schedule.part(RECALL) is not None else "mse"
    if metric not in ("mse", "accuracy"):
        raise ConfigurationError(f"unknown batch metric {metric!r}")
    if metric == "mse" and (first.topology.is_layered or first.schedule.part(TRAIN) is None):
        raise ConfigurationError("mse needs a flat topology with training segments")
    if metric == "accuracy" and first.schedule.part(RECALL) is None:
        raise ConfigurationError("accuracy needs recall segments")
    if int(workers) < 1:
        raise ConfigurationError("workers must be at least 1")

    def one(cfg):
        return _summarize(run_experiment(cfg))

    if int(workers) == 1:
        results = [one(c) for c in configs]
    else:
        with ThreadPoolExecutor(max_workers=int(workers)) as pool:
            results = list(pool.map(one, configs))
    series = np.vstack([r[1] if metric == "mse" else r[2] for r in results])
    mean = series.mean(axis=0)
    std = series.std(axis=0)
    if metric == "mse":
        times = _times(first, TRAIN)
    else:
        times = _times(first, RECALL)
        train = first.schedule.part(TRAIN)
        times = times + (train.duration if train is not None else 0.0)
    return BatchResult(metric, times, mean, std, rolling_average(mean, window), tuple(r[0] for r in results))
