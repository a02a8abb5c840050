"""
Experiment protocols: pattern and target generation, batch training and
memory-capacity measurement.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from .kernels import DEFAULT_PARAMS, NeuronParams, filt_window, psp_kernel
from .metrics import classify, performance, vrd
from .neuron import CompiledPatterns, ConfigurationError, InputPattern
from .plasticity import FILT, INST, RULES, TargetSpec, as_train, window_sums

log = logging.getLogger(__name__)

TARGET_LOW = 40.0
TARGET_MIN_ISI = 10.0
MAX_REJECTIONS = 100_000
CRITERION = 90.0

_RULE_KERNELS = {INST: psp_kernel, FILT: filt_window}


class TargetGenerationError(ConfigurationError):
    pass


class TrainingDiverged(RuntimeError):
    def __init__(self, msg, history):
        super().__init__(msg)
        self.history = history


@dataclass(frozen=True)
class TaskConfig:
    """
    Settings for one training task.

    ``fixed_targets`` overrides random target generation with one spike train
    per class. ``divergence_limit`` aborts training once any |w| exceeds it.
    """
    n_inputs: int = 200
    n_patterns: int = 10
    n_classes: int = 5
    n_target_spikes: int = 1
    duration: float = 200.0
    precision: float = 1.0
    epochs: int = 500
    eta: float | None = None
    dt: float = 0.1
    seed: int = 0
    fixed_targets: tuple | None = None
    divergence_limit: float = 1e6
    params: NeuronParams = field(default=DEFAULT_PARAMS)

    def __post_init__(self):
        if self.n_inputs < 1 or self.n_patterns < 1 or self.n_classes < 1:
            raise ConfigurationError('sizes must be positive')
        if self.n_patterns % self.n_classes:
            raise ConfigurationError(
                'n_patterns=%d not divisible by n_classes=%d'
                % (self.n_patterns, self.n_classes))
        if not 0 < self.precision <= 5:
            raise ConfigurationError('precision must lie in (0, 5] ms')
        if self.epochs < 0:
            raise ConfigurationError('epochs must be non-negative')
        if self.n_target_spikes < 1:
            raise ConfigurationError('need at least one target spike')
        if self.fixed_targets is not None:
            fixed = tuple(tuple(float(x) for x in tr) for tr in self.fixed_targets)
            if len(fixed) != self.n_classes:
                raise ConfigurationError('one fixed target train per class')
            object.__setattr__(self, 'fixed_targets', fixed)

    @property
    def learning_rate(self) -> float:
        if self.eta is not None:
            return self.eta
        n_s = (len(self.fixed_targets[0]) if self.fixed_targets
               else self.n_target_spikes)
        return default_eta(self.n_inputs, n_s, self.n_patterns)

    def with_(self, **changes) -> TaskConfig:
        return replace(self, **changes)


@dataclass
class EpochHistory:
    """Per-epoch mean vRD and performance, measured after each update."""
    mean_vrd: list = field(default_factory=list)
    performance: list = field(default_factory=list)
    weights: list | None = None

    def __len__(self):
        return len(self.mean_vrd)

    @property
    def epochs_to_criterion(self):
        """First (1-based) epoch with performance above 90 %, or None."""
        for k, perf in enumerate(self.performance):
            if perf > CRITERION:
                return k + 1
        return None


class CapacityRow(NamedTuple):
    n_patterns: int
    best_performance: float
    epochs_to_criterion: int | None
    final_mean: float
    final_std: float


class CapacityResult(NamedTuple):
    alpha_m: float
    p_max: int
    n_inputs: int
    table: list


def gen_pattern(n_inputs: int, duration: float, rng) -> InputPattern:
    """One spike per input neuron, uniform over the pattern duration."""
    if n_inputs < 1 or duration <= 0:
        raise ValueError('need n_inputs >= 1 and duration > 0')
    return InputPattern.single_spikes(rng.uniform(0.0, duration, n_inputs),
                                      duration)


def gen_targets(n_classes: int, n_spikes: int, rng, high: float = 200.0,
                low: float = TARGET_LOW, tau_q: float = 10.0,
                min_isi: float = TARGET_MIN_ISI,
                max_rejections: int = MAX_REJECTIONS) -> list[TargetSpec]:
    """
    Random target trains, one per class, by rejection sampling.

    Every pair of trains must be at least ``n_spikes / 2`` apart in vRD, and
    spikes within a multi-spike train at least ``min_isi`` apart.
    """
    min_dist = n_spikes / 2.0
    targets: list[np.ndarray] = []
    rejections = 0
    while len(targets) < n_classes:
        times = np.sort(rng.uniform(low, high, n_spikes))
        ok = n_spikes == 1 or np.diff(times).min() >= min_isi
        ok = ok and all(vrd(times, other, tau_q) >= min_dist for other in targets)
        if ok:
            targets.append(times)
            continue
        rejections += 1
        if rejections >= max_rejections:
            raise TargetGenerationError(
                'could not place %d target trains of %d spikes in [%g, %g] ms '
                'with pairwise vRD >= %g and ISI >= %g ms'
                % (n_classes, n_spikes, low, high, min_dist, min_isi))
    isi = min_isi if n_spikes > 1 else 0.0
    return [TargetSpec(tr, isi) for tr in targets]


def init_weights(n_inputs: int, rng) -> np.ndarray:
    """Uniform on [0, 200 / n_inputs]."""
    if n_inputs < 1:
        raise ValueError('n_inputs must be positive')
    return rng.uniform(0.0, 200.0 / n_inputs, n_inputs)


def default_eta(n_inputs: int, n_spikes: int, n_patterns: int) -> float:
    return 600.0 / (n_inputs * n_spikes * n_patterns)


def assign_classes(n_patterns: int, n_classes: int, rng) -> np.ndarray:
    """Seeded random partition into equal-size classes."""
    return rng.permutation(np.repeat(np.arange(n_classes),
                                     n_patterns // n_classes))


class Task(NamedTuple):
    patterns: list
    targets: list
    labels: np.ndarray
    w0: np.ndarray


def run_rng(seed: int, run: int = 0):
    return np.random.default_rng([seed, run])


def make_task(config: TaskConfig, run: int = 0) -> Task:
    """
    Draw patterns, targets, class labels and initial weights for one run.

    Depends only on (seed, run), so both rules see identical tasks.
    """
    rng = run_rng(config.seed, run)
    patterns = [gen_pattern(config.n_inputs, config.duration, rng)
                for _ in range(config.n_patterns)]
    if config.fixed_targets is not None:
        targets = [TargetSpec(tr) for tr in config.fixed_targets]
    else:
        targets = gen_targets(config.n_classes, config.n_target_spikes, rng,
                              high=config.duration, tau_q=config.params.tau_q)
    labels = assign_classes(config.n_patterns, config.n_classes, rng)
    w0 = init_weights(config.n_inputs, rng)
    return Task(patterns, targets, labels, w0)


def _evaluate(actual, targets, labels, config, history):
    tau_q = config.params.tau_q
    dists, outcomes = [], []
    for out, lab in zip(actual, labels):
        tgt = as_train(targets[lab])
        dists.append(vrd(out, tgt, tau_q))
        outcomes.append(classify(out, tgt, config.precision))
    history.mean_vrd.append(float(np.mean(dists)))
    history.performance.append(performance(outcomes))


def train(config: TaskConfig, rule: str, patterns: Sequence[InputPattern],
          targets, w0, labels=None, record_weights: bool = False):
    """
    Batch training: per-trial updates are summed over all patterns in fixed
    order and applied once at the end of each epoch. vRD and performance are
    measured on a fresh pass with the updated weights.

    Returns the final weights and the EpochHistory.
    """
    if rule not in RULES:
        raise ValueError('unknown rule %r' % rule)
    if labels is None:
        if len(targets) == len(patterns):
            labels = np.arange(len(patterns))
        elif len(targets) == 1:
            labels = np.zeros(len(patterns), dtype=int)
        else:
            raise ConfigurationError('labels needed to map patterns to targets')
    p = config.params
    kernel = _RULE_KERNELS[rule]
    eta = config.learning_rate
    w = np.array(w0, dtype=float)
    history = EpochHistory(weights=[] if record_weights else None)
    if config.epochs == 0:
        return w, history

    comp = CompiledPatterns(patterns, p, config.dt)
    # the target term of each trial never changes
    target_term = np.zeros_like(w)
    for pat, lab in zip(patterns, labels):
        target_term += window_sums(kernel, pat, as_train(targets[lab]), p)

    actual = comp.simulate_all(w)
    for epoch in range(config.epochs):
        actual_term = np.zeros_like(w)
        for pat, out in zip(patterns, actual):
            if out.size:
                actual_term += window_sums(kernel, pat, out, p)
        w = w + eta * (target_term - actual_term)
        if not np.all(np.abs(w) <= config.divergence_limit):
            raise TrainingDiverged(
                'weights diverged at epoch %d (max |w| = %.3g > %.3g) under %s'
                % (epoch + 1, np.nanmax(np.abs(w)), config.divergence_limit,
                   rule), history)
        actual = comp.simulate_all(w)
        _evaluate(actual, targets, labels, config, history)
        if record_weights:
            history.weights.append(w.copy())
    return w, history


def train_run(config: TaskConfig, rule: str, run: int = 0,
              record_weights: bool = False):
    """Generate the task for one run and train on it."""
    task = make_task(config, run)
    w, hist = train(config, rule, task.patterns, task.targets, task.w0,
                    task.labels, record_weights)
    return task, w, hist


def _performance_curve(args):
    config, rule, run = args
    try:
        _, _, hist = train_run(config, rule, run)
        perf = hist.performance
    except TrainingDiverged as exc:
        log.warning('%s', exc)
        perf = exc.history.performance
        perf = perf + [0.0] * (config.epochs - len(perf))
    return np.asarray(perf, dtype=float)


def parallel_map(fn, items, jobs: int = 1):
    """Ordered map, optionally over a process pool."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def capacity_sweep(base: TaskConfig, rule: str, p_grid: Sequence[int],
                   runs: int, jobs: int = 1) -> CapacityResult:
    """
    Memory capacity: the largest number of patterns whose run-averaged
    performance exceeds 90 % at some epoch within the epoch cap, per input.

    ``table`` holds one CapacityRow per grid point.
    """
    p_grid = list(p_grid)
    if base.epochs < 1:
        raise ConfigurationError('capacity needs at least one epoch')
    if any(b <= a for a, b in zip(p_grid, p_grid[1:])):
        raise ValueError('p grid must be increasing')
    configs = [base.with_(n_patterns=n) for n in p_grid]
    jobs_list = [(cfg, rule, run) for cfg in configs for run in range(runs)]
    curves = parallel_map(_performance_curve, jobs_list, jobs)
    table = []
    p_max = 0
    for i, n in enumerate(p_grid):
        mean = np.mean(curves[i * runs:(i + 1) * runs], axis=0)
        hit = np.flatnonzero(mean > CRITERION)
        epochs = int(hit[0]) + 1 if hit.size else None
        final = np.array([c[-1] for c in curves[i * runs:(i + 1) * runs]])
        table.append(CapacityRow(n, float(mean.max()), epochs,
                                 float(final.mean()), float(final.std())))
        if epochs is not None:
            p_max = n
    return CapacityResult(p_max / base.n_inputs, p_max, base.n_inputs, table)
