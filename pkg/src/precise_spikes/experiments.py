"""
Experiment protocols behind each CLI kind. Each returns plot-ready tables
plus a summary dict of headline numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import analysis
from .kernels import (DEFAULT_PARAMS, NeuronParams, current_kernel,
                      psp_kernel, reset_kernel)
from .neuron import InputPattern
from .plasticity import FILT, INST, appendix_discrepancy
from .tasks import (TaskConfig, TrainingDiverged, capacity_sweep,
                    parallel_map, train_run)

RULE_NAMES = (INST, FILT)
MAPPING_TARGETS = (40.0, 80.0, 120.0, 160.0)
RATE_TARGET = 100.0
ETA_GRID = (0.05, 0.1, 0.3, 0.6, 1.0)
P_GRID = tuple(range(5, 55, 5))
PRECISION_GRID = (0.5, 1.0)
NS_GRID = (1, 2, 3, 4, 5)
DELTA_T_GRID = (5.0, 2.0, 1.0, 0.5, 0.1)
DELTA_U_GRID = (0.1, 1.0, 10.0)


class Table(NamedTuple):
    header: tuple
    rows: list


@dataclass
class Result:
    tables: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)


def _grid(start, stop, step):
    return start + step * np.arange(int(round((stop - start) / step)) + 1)


def kernels(p: NeuronParams = DEFAULT_PARAMS, start=-5.0, stop=50.0,
            step=0.1) -> Result:
    s = _grid(start, stop, step)
    rows = list(zip(s, current_kernel(s, p), psp_kernel(s, p),
                    reset_kernel(s, p)))
    return Result({'kernels': Table(('s_ms', 'alpha_nA', 'epsilon_mV',
                                     'kappa_mV'), rows)})


def dynamics(p: NeuronParams = DEFAULT_PARAMS, t_ref=4.0) -> Result:
    """Learning windows, single-synapse phase portraits and t_min(tau_q)."""
    inst = analysis.learning_window_curve(INST, -20.0, 50.0, 0.1, p)
    filt = analysis.learning_window_curve(FILT, -20.0, 50.0, 0.1, p)
    window = Table(('lag_ms', 'inst_dw', 'filt_dw'),
                   list(zip(inst[:, 0], inst[:, 1], filt[:, 1])))

    weights = _grid(0.1, 60.0, 0.1)
    rows = []
    for w in weights:
        a = analysis.inst_phase(w, t_ref, p)
        b = analysis.filt_phase(w, t_ref, p)
        rows.append((w, w / p.theta, a.dw, b.dw, int(a.fires)))
    phase = Table(('w', 'w_over_theta', 'inst_dw', 'filt_dw', 'fires'), rows)

    tmin = analysis.tmin_curve(0.0, 40.0, 0.5, p)
    return Result(
        {'learning_window': window, 'phase_portrait': phase,
         'tmin': Table(('tau_q_ms', 't_min_ms'), [tuple(r) for r in tmin])},
        {'fixed_point_weight': analysis.fixed_point_weight(t_ref, p),
         'firing_threshold_weight': analysis.firing_threshold_weight(p)})


def _mapping_run(args):
    cfg, rule, run = args
    task, w, hist = train_run(cfg, rule, run, record_weights=False)
    return (np.asarray(hist.mean_vrd), task.patterns[0].spike_times,
            task.w0, w)


def weight_profile(spike_times, weights, duration, bin_width):
    """Mean weight per presynaptic-spike-time bin; NaN for empty bins."""
    edges = _grid(0.0, duration, bin_width)
    idx = np.clip(np.digitize(spike_times, edges) - 1, 0, edges.size - 2)
    sums = np.bincount(idx, weights, edges.size - 1)
    counts = np.bincount(idx, None, edges.size - 1)
    with np.errstate(invalid='ignore'):
        return edges, sums / counts


def trailing_mean(x, width):
    """Mean over the last ``width`` values up to and including each index."""
    c = np.cumsum(np.insert(np.asarray(x, dtype=float), 0, 0.0))
    idx = np.arange(1, len(x) + 1)
    lo = np.maximum(idx - width, 0)
    return (c[idx] - c[lo]) / (idx - lo)


def mapping(config: TaskConfig, runs: int, rules=RULE_NAMES, jobs: int = 1,
            bin_width: float = 2.0, smooth: int = 5, tail: int = 50) -> Result:
    """
    Single pattern mapped onto a multi-spike target, trained with each rule.

    Emits the vRD learning curve (mean, std across runs, trailing smoothing)
    and chronologically binned mean weights before and after training.
    """
    res = Result()
    vrd_rows, profiles = [], {}
    for rule in rules:
        out = parallel_map(_mapping_run, [(config, rule, r) for r in range(runs)],
                           jobs)
        curves = np.array([o[0] for o in out])
        times = np.concatenate([o[1] for o in out])
        mean, std = curves.mean(axis=0), curves.std(axis=0)
        sm = trailing_mean(mean, smooth)
        for e in range(curves.shape[1]):
            vrd_rows.append((rule, e + 1, mean[e], std[e], sm[e]))
        edges, prof = weight_profile(times, np.concatenate([o[3] for o in out]),
                                     config.duration, bin_width)
        if 'initial' not in profiles:
            profiles['initial'] = weight_profile(
                times, np.concatenate([o[2] for o in out]),
                config.duration, bin_width)[1]
        profiles[rule] = prof
        tail_std = curves[:, -tail:].std(axis=1)
        finite = prof[np.isfinite(prof)]
        res.summary[rule] = {
            'final_mean_vrd': float(curves[:, -1].mean()),
            'final_vrd_std': float(curves[:, -1].std()),
            'tail_vrd_std': float(tail_std.mean()),
            'profile_peak_abs_weight': float(np.abs(finite).max()),
            'profile_min_weight': float(finite.min()),
            'min_weight_any_run': float(min(o[3].min() for o in out)),
        }
    res.tables['mapping_vrd'] = Table(
        ('rule', 'epoch', 'mean_vrd', 'std_vrd', 'smoothed_mean_vrd'), vrd_rows)
    names = list(profiles)
    rows = [(edges[i], edges[i + 1]) + tuple(profiles[n][i] for n in names)
            for i in range(edges.size - 1)]
    res.tables['weight_profile'] = Table(
        ('bin_start_ms', 'bin_end_ms') + tuple('%s_weight' % n for n in names),
        rows)
    return res


def _final_vrd(args):
    cfg, rule, run = args
    try:
        return train_run(cfg, rule, run)[2].mean_vrd[-1]
    except TrainingDiverged:
        return float('nan')


def rate_sweep(config: TaskConfig, runs: int, rules=RULE_NAMES,
               etas=ETA_GRID, jobs: int = 1) -> Result:
    """Final mean vRD (and its standard error across runs) per learning rate."""
    rows = []
    summary = {}
    for rule in rules:
        summary[rule] = {}
        for eta in etas:
            cfg = config.with_(eta=float(eta))
            vals = np.array(parallel_map(
                _final_vrd, [(cfg, rule, r) for r in range(runs)], jobs))
            mean = float(np.mean(vals))
            err = float(np.std(vals, ddof=1) / np.sqrt(runs)) if runs > 1 else 0.0
            rows.append((rule, eta, mean, err))
            summary[rule][float(eta)] = mean
    return Result({'rate_sweep': Table(('rule', 'eta', 'mean_vrd', 'stderr'),
                                       rows)}, summary)


def _capacity_rows(rule, label, result):
    return [(rule, label, r.n_patterns, r.n_patterns / result.n_inputs,
             r.best_performance, r.final_mean, r.final_std,
             '' if r.epochs_to_criterion is None else r.epochs_to_criterion)
            for r in result.table]


_CAPACITY_HEADER = ('best_mean_performance', 'final_mean_performance',
                    'final_std_performance', 'epochs_to_criterion')


def classification(config: TaskConfig, runs: int, rules=RULE_NAMES,
                   p_grid=P_GRID, jobs: int = 1) -> Result:
    """Performance against the number of patterns, at one precision."""
    rows, summary = [], {}
    for rule in rules:
        cap = capacity_sweep(config, rule, p_grid, runs, jobs)
        rows += _capacity_rows(rule, config.n_inputs, cap)
        summary[rule] = {'alpha_m': cap.alpha_m, 'p_max': cap.p_max}
    header = ('rule', 'n_inputs', 'n_patterns', 'load_factor') + _CAPACITY_HEADER
    return Result({'classification': Table(header, rows)}, summary)


def capacity(config: TaskConfig, runs: int, rules=RULE_NAMES, p_grid=P_GRID,
             precisions=PRECISION_GRID, jobs: int = 1) -> Result:
    """Memory capacity per rule and timing precision."""
    cap_rows, sweep_rows, summary = [], [], {}
    for rule in rules:
        summary[rule] = {}
        for prec in precisions:
            cap = capacity_sweep(config.with_(precision=float(prec)), rule,
                                 p_grid, runs, jobs)
            cap_rows.append((rule, prec, cap.n_inputs, cap.p_max, cap.alpha_m))
            sweep_rows += _capacity_rows(rule, prec, cap)
            summary[rule][float(prec)] = cap.alpha_m
    return Result(
        {'capacity': Table(('rule', 'precision_ms', 'n_inputs', 'p_max',
                            'alpha_m'), cap_rows),
         'capacity_sweep': Table(('rule', 'precision_ms', 'n_patterns',
                                  'load_factor') + _CAPACITY_HEADER,
                                 sweep_rows)},
        summary)


def multi_spike(config: TaskConfig, runs: int, rules=RULE_NAMES,
                ns_grid=NS_GRID, jobs: int = 1) -> Result:
    """Performance against the number of target spikes per class."""
    rows, summary = [], {}
    for rule in rules:
        summary[rule] = {}
        for n_s in ns_grid:
            cfg = config.with_(n_target_spikes=int(n_s))
            cap = capacity_sweep(cfg, rule, [cfg.n_patterns], runs, jobs)
            r = cap.table[0]
            rows.append((rule, n_s, r.best_performance, r.final_mean,
                         r.final_std, '' if r.epochs_to_criterion is None
                         else r.epochs_to_criterion))
            summary[rule][int(n_s)] = r.best_performance
    return Result({'multi_spike': Table(('rule', 'n_target_spikes')
                                        + _CAPACITY_HEADER, rows)}, summary)


def verify_appendix(p: NeuronParams = DEFAULT_PARAMS, t_ref=4.0,
                    delta_ts=DELTA_T_GRID, delta_us=DELTA_U_GRID,
                    duration=200.0, dt=0.01) -> Result:
    """
    Clamped-vs-intrinsic discrepancy and its bound for a single synapse
    (input at 0 ms, weight placing the threshold crossing at ``t_ref``),
    with the actual spike displaced by each delta_t.
    """
    pattern = InputPattern.single_spikes([0.0], duration)
    w = [analysis.fixed_point_weight(t_ref, p)]
    rows = []
    for du in delta_us:
        q = p.with_(delta_u=float(du))
        for dt_shift in delta_ts:
            b = appendix_discrepancy(pattern, w, t_ref + dt_shift, t_ref, q, dt)
            rows.append((du, dt_shift, float(b.lhs[0]), float(b.rhs[0]),
                         int(b.holds)))
    holds = all(r[-1] for r in rows)
    return Result({'appendix': Table(('delta_u_mV', 'delta_t_ms', 'lhs', 'rhs',
                                      'holds'), rows)},
                  {'all_hold': holds})
