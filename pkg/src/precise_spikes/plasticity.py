"""
Batch weight updates for a single trial.

INST and FILT are the deterministic rules used for training. The clamped and
intrinsic maximum-likelihood updates work with the stochastic escape-rate
neuron and are evaluated by quadrature on the simulation grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .kernels import (DEFAULT_PARAMS, NeuronParams, filt_window, psp_kernel,
                      psp_peak, reset_kernel)
from .neuron import (InputPattern, check_weights, grid_size, input_potential,
                     membrane_potential, reset_potential, spike_train)

INST = 'inst'
FILT = 'filt'
ML_CLAMPED = 'ml_clamped'
ML_INTRINSIC = 'ml_intrinsic'


@dataclass(frozen=True, eq=False)
class WeightUpdate:
    dw: np.ndarray
    rule: str
    eta: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.dw)):
            raise FloatingPointError('non-finite weight update from %s' % self.rule)


@dataclass(frozen=True, eq=False)
class TargetSpec:
    """
    Target output train, optionally with a minimum inter-spike interval (ms).
    """
    train: np.ndarray
    min_isi: float = 0.0

    def __post_init__(self):
        train = spike_train(self.train)
        if self.min_isi > 0 and train.size > 1 and np.diff(train).min() < self.min_isi:
            raise ValueError('target spikes closer than %g ms' % self.min_isi)
        object.__setattr__(self, 'train', train)

    def __len__(self):
        return self.train.size


def as_train(target) -> np.ndarray:
    """Spike times of a TargetSpec or any array-like."""
    if isinstance(target, TargetSpec):
        return target.train
    return np.asarray(target, dtype=float).reshape(-1)


def window_sums(kernel, pattern: InputPattern, post_times, p: NeuronParams):
    """
    Per-synapse sum of ``kernel(t_post - t_pre)`` over all post/pre spike
    pairs.
    """
    post_times = np.asarray(post_times, dtype=float).reshape(-1)
    pre = pattern.spike_times
    if post_times.size == 0 or pre.size == 0:
        return np.zeros(pattern.n_inputs)
    per_spike = kernel(post_times[:, None] - pre[None, :], p).sum(axis=0)
    return np.bincount(pattern.owners, per_spike, minlength=pattern.n_inputs)


def _pair_rule(kernel, rule, pattern, actual, target, eta, p):
    dw = (window_sums(kernel, pattern, as_train(target), p)
          - window_sums(kernel, pattern, as_train(actual), p))
    return WeightUpdate(eta * dw, rule, eta)


def inst_update(pattern: InputPattern, actual, target, eta: float,
                p: NeuronParams = DEFAULT_PARAMS) -> WeightUpdate:
    """INST update: PSPs sampled at target spikes minus those at actual spikes."""
    return _pair_rule(psp_kernel, INST, pattern, actual, target, eta, p)


def filt_update(pattern: InputPattern, actual, target, eta: float,
                p: NeuronParams = DEFAULT_PARAMS) -> WeightUpdate:
    """FILT update: as INST but with the FILT learning window."""
    return _pair_rule(filt_window, FILT, pattern, actual, target, eta, p)


RULES = {INST: inst_update, FILT: filt_update}


# -- stochastic neuron: likelihood and its gradient --------------------------

def _grid(pattern, dt):
    return np.arange(grid_size(pattern.duration, dt)) * dt


def psp_matrix(pattern: InputPattern, t, p: NeuronParams = DEFAULT_PARAMS):
    """Summed PSP of each synapse at times ``t``, shape (len(t), n_inputs)."""
    t = np.asarray(t, dtype=float).reshape(-1)
    out = np.zeros((t.size, pattern.n_inputs))
    if pattern.spike_times.size:
        eps = psp_kernel(t[:, None] - pattern.spike_times[None, :], p)
        np.add.at(out.T, pattern.owners, eps.T)
    return out


def _log_rate(u, p):
    return np.log(p.rho0) + (u - p.theta) / p.delta_u


def _check_stochastic(p):
    if p.delta_u <= 0:
        raise ValueError('likelihood rules need delta_u > 0')


def log_likelihood(pattern: InputPattern, w, target,
                   p: NeuronParams = DEFAULT_PARAMS, dt: float = 0.1) -> float:
    """
    Log-likelihood of emitting ``target`` with the intensity clamped to the
    target history.

    Log-rates at target spikes use the history strictly before each spike;
    the rate integral uses the trapezoidal rule on the grid.
    """
    _check_stochastic(p)
    w = check_weights(pattern, w)
    tgt = as_train(target)
    t = _grid(pattern, dt)
    u = membrane_potential(t, pattern, w, tgt, p)
    integral = np.trapezoid(np.exp(_log_rate(u, p)), t)
    point = 0.0
    for k, tf in enumerate(tgt):
        u_f = input_potential(tf, pattern, w, p) + reset_potential(tf, tgt[:k], p)
        point += _log_rate(u_f, p)
    return float(point - integral)


def _ml_update(pattern, w, target, conditioning, eta, p, dt, rule):
    _check_stochastic(p)
    w = check_weights(pattern, w)
    tgt = as_train(target)
    t = _grid(pattern, dt)
    rho = np.exp(_log_rate(membrane_potential(t, pattern, w, conditioning, p), p))
    eps = psp_matrix(pattern, t, p)
    dirac = window_sums(psp_kernel, pattern, tgt, p)
    smooth = np.trapezoid(rho[:, None] * eps, t, axis=0)
    return WeightUpdate(eta / p.delta_u * (dirac - smooth), rule, eta)


def ml_clamped_update(pattern: InputPattern, w, target, eta: float,
                      p: NeuronParams = DEFAULT_PARAMS,
                      dt: float = 0.1) -> WeightUpdate:
    """Likelihood gradient step with the intensity conditioned on the target."""
    return _ml_update(pattern, w, target, as_train(target), eta, p, dt,
                      ML_CLAMPED)


def ml_intrinsic_update(pattern: InputPattern, w, actual, target, eta: float,
                        p: NeuronParams = DEFAULT_PARAMS,
                        dt: float = 0.1) -> WeightUpdate:
    """Likelihood-style step with the intensity conditioned on the actual output."""
    return _ml_update(pattern, w, target, as_train(actual), eta, p, dt,
                      ML_INTRINSIC)


class AppendixBound(NamedTuple):
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def holds(self) -> bool:
        return bool(np.all(self.lhs <= self.rhs))


def appendix_discrepancy(pattern: InputPattern, w, t_actual: float,
                         t_ref: float, p: NeuronParams = DEFAULT_PARAMS,
                         dt: float = 0.1, eta: float = 1.0) -> AppendixBound:
    """
    Gap between intrinsic and clamped updates for one displaced output spike,
    and its reset-kernel upper bound.

    ``lhs[j]`` is |intrinsic - clamped| for synapse j, computed from the rate
    difference on the grid. ``rhs[j]`` bounds it using the PSP peak (times the
    number of input spikes at j), the largest rate of the reset-free neuron
    and the integral of |exp(K/du) - 1|, where K is the difference between
    the reset kernels of the two output spikes.
    """
    _check_stochastic(p)
    w = check_weights(pattern, w)
    t = _grid(pattern, dt)
    v = input_potential(t, pattern, w, p)
    rho_act = np.exp(_log_rate(v + reset_kernel(t - t_actual, p), p))
    rho_ref = np.exp(_log_rate(v + reset_kernel(t - t_ref, p), p))
    eps = psp_matrix(pattern, t, p)
    lhs = eta / p.delta_u * np.abs(
        np.trapezoid((rho_act - rho_ref)[:, None] * eps, t, axis=0))

    rho_max = p.rho0 * np.exp((v.max() - p.theta) / p.delta_u)
    k_diff = reset_kernel(t - t_actual, p) - reset_kernel(t - t_ref, p)
    integral = np.trapezoid(np.abs(np.expm1(k_diff / p.delta_u)), t)
    eps_peak = psp_peak(p)[1]
    rhs = (eta * eps_peak * pattern.spike_counts() * rho_max / p.delta_u
           * integral)
    return AppendixBound(lhs, rhs)
