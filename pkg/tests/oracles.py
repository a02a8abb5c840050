"""
Independent numerical references used by the tests.

Nothing here calls the closed-form kernels under test: PSPs come from a
trapezoid convolution of the synaptic current with the membrane filter, and
update integrals are plain trapezoid sums on a fine grid. Jumps on grid
points are given the mean of their one-sided limits so the trapezoid rule
stays second-order.
"""

from functools import lru_cache

import numpy as np
from scipy.signal import fftconvolve

from precise_spikes.kernels import NeuronParams


@lru_cache(maxsize=8)
def psp_table(p: NeuronParams, dt: float, horizon: float) -> np.ndarray:
    """PSP sampled at lags 0, dt, 2 dt, ... by numerical convolution."""
    n = int(round(horizon / dt)) + 1
    s = np.arange(n) * dt
    current = p.charge / p.tau_s * np.exp(-s / p.tau_s)
    membrane = np.exp(-s / p.tau_m)
    full = fftconvolve(current, membrane)[:n] * dt
    # trapezoid end corrections
    full -= 0.5 * dt * (current[0] * membrane + current * membrane[0])
    full[0] = 0.0
    return full / p.capacitance


def summed_psp(table, dt, pre, t):
    """Sum over ``pre`` of PSP(t - t_pre); all times on the dt grid."""
    out = np.zeros_like(t)
    for tp in pre:
        k = np.rint((t - tp) / dt).astype(int)
        ok = k >= 0
        out[ok] += table[k[ok]]
    return out


def filtered(train, tau_q, t, scale, at_zero=0.5):
    """Exponentially filtered train; ``at_zero`` is the Heaviside value at 0."""
    out = np.zeros_like(t)
    for tf in train:
        lag = t - tf
        val = np.where(lag > 0, np.exp(-np.maximum(lag, 0) / tau_q), 0.0)
        out += np.where(np.isclose(lag, 0, atol=1e-9), at_zero, val)
    return scale * out


def inst_by_quadrature(trains, actual, target, eta, p, dt=0.01):
    """Dirac-weighted integral with PSPs from the numerical convolution."""
    horizon = 400.0
    table = psp_table(p, dt, horizon)
    dw = np.zeros(len(trains))
    for j, pre in enumerate(trains):
        dw[j] = (summed_psp(table, dt, pre, np.asarray(target, float)).sum()
                 - summed_psp(table, dt, pre, np.asarray(actual, float)).sum())
    return eta * dw


def filt_by_quadrature(trains, actual, target, eta, p, duration=200.0, dt=0.01):
    """Trapezoid integral of the filtered error times the summed PSP."""
    stop = duration + 20 * p.tau_q
    t = np.arange(int(round(stop / dt)) + 1) * dt
    table = psp_table(p, dt, stop)
    err = (filtered(target, p.tau_q, t, 1 / p.tau_q)
           - filtered(actual, p.tau_q, t, 1 / p.tau_q))
    dw = np.array([np.trapezoid(err * summed_psp(table, dt, pre, t), t)
                   for pre in trains])
    return eta * dw


def vrd_by_quadrature(a, b, tau_q, duration=200.0, dt=0.01):
    """(1/tau_q) times the integral of the squared filtered difference."""
    stop = duration + 20 * tau_q
    t = np.arange(int(round(stop / dt)) + 1) * dt
    diff_hi = filtered(a, tau_q, t, 1.0, 1.0) - filtered(b, tau_q, t, 1.0, 1.0)
    diff_lo = filtered(a, tau_q, t, 1.0, 0.0) - filtered(b, tau_q, t, 1.0, 0.0)
    sq = 0.5 * (diff_hi ** 2 + diff_lo ** 2)
    return np.trapezoid(sq, t) / tau_q


def random_instance(seed, n_inputs=5, duration=200.0, dt=0.01):
    """Random spike trains on the ``dt`` grid: inputs, target, actual."""
    rng = np.random.default_rng(seed)
    n_steps = int(round(duration / dt))

    def draw(lo, hi):
        k = rng.integers(lo, hi + 1)
        return np.sort(rng.choice(n_steps + 1, k, replace=False)) * dt

    trains = [draw(1, 3) for _ in range(n_inputs)]
    return trains, draw(1, 3), draw(0, 3)
