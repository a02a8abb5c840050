"""
Deterministic SRM neuron on a fixed time grid, plus the escape-rate intensity.

Spike trains are 1-D float arrays of strictly increasing times (ms).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np
from scipy.signal import lfilter

from .kernels import DEFAULT_PARAMS, NeuronParams, psp_kernel, reset_kernel

_GRID_TOL = 1e-9


class ConfigurationError(ValueError):
    """Inconsistent inputs, e.g. weights and pattern of different size."""


def spike_train(times, duration: float | None = None) -> np.ndarray:
    """
    Validate and return a spike train as a float array.

    Raises ValueError if times are not strictly increasing, not finite, or
    fall outside ``[0, duration]``.
    """
    arr = np.array(times, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ValueError('spike times must be finite')
    if arr.size > 1 and np.any(np.diff(arr) <= 0):
        raise ValueError('spike times must be strictly increasing')
    if duration is not None and arr.size:
        if arr[0] < 0 or arr[-1] > duration:
            raise ValueError('spike times must lie in [0, %g]' % duration)
    return arr


@dataclass(frozen=True, eq=False)
class InputPattern:
    """
    Spatio-temporal stimulus: one spike train per presynaptic neuron.

    Parameters
    ----------
    trains : sequence of array_like
        Spike times (ms) for each presynaptic neuron.
    duration : float
        Pattern duration T (ms).
    """
    trains: tuple
    duration: float = 200.0

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError('duration must be positive')
        trains = tuple(spike_train(tr, self.duration) for tr in self.trains)
        if not trains:
            raise ValueError('a pattern needs at least one presynaptic neuron')
        object.__setattr__(self, 'trains', trains)

    @classmethod
    def single_spikes(cls, times, duration=200.0) -> InputPattern:
        """One spike per neuron at the given times."""
        return cls(tuple([t] for t in np.asarray(times, dtype=float)), duration)

    @property
    def n_inputs(self) -> int:
        return len(self.trains)

    @cached_property
    def spike_times(self) -> np.ndarray:
        """All presynaptic spike times, flattened."""
        if not any(tr.size for tr in self.trains):
            return np.zeros(0)
        return np.concatenate(self.trains)

    @cached_property
    def owners(self) -> np.ndarray:
        """Presynaptic index of each entry of `spike_times`."""
        return np.repeat(np.arange(self.n_inputs),
                         [tr.size for tr in self.trains])

    def spike_counts(self) -> np.ndarray:
        return np.array([tr.size for tr in self.trains])


class MembraneTrace(NamedTuple):
    dt: float
    u: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.u.size) * self.dt


def check_weights(pattern: InputPattern, w) -> np.ndarray:
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.size != pattern.n_inputs:
        raise ConfigurationError('%d weights for a pattern with %d inputs'
                                 % (w.size, pattern.n_inputs))
    if not np.all(np.isfinite(w)):
        raise ConfigurationError('weights must be finite')
    return w


def grid_size(duration: float, dt: float) -> int:
    """Number of grid points ``floor(T/dt) + 1``; dt must divide T."""
    if dt <= 0:
        raise ValueError('dt must be positive')
    n = int(round(duration / dt))
    if abs(n * dt - duration) > _GRID_TOL:
        raise ValueError('dt=%g does not divide T=%g' % (dt, duration))
    return n + 1


def input_potential(t, pattern: InputPattern, w, p: NeuronParams = DEFAULT_PARAMS):
    """Weighted PSP sum (mV) at time(s) ``t`` by direct summation."""
    w = check_weights(pattern, w)
    t = np.asarray(t, dtype=float)
    if pattern.spike_times.size == 0:
        return np.zeros_like(t)[()]
    lags = t[..., None] - pattern.spike_times
    return (psp_kernel(lags, p) @ w[pattern.owners])[()]


def reset_potential(t, history, p: NeuronParams = DEFAULT_PARAMS):
    """Summed reset kernels (mV) at time(s) ``t`` for output spikes in ``history``."""
    t = np.asarray(t, dtype=float)
    history = np.asarray(history, dtype=float).reshape(-1)
    if history.size == 0:
        return np.zeros_like(t)[()]
    return reset_kernel(t[..., None] - history, p).sum(axis=-1)[()]


def membrane_potential(t, pattern: InputPattern, w, output_history=(),
                       p: NeuronParams = DEFAULT_PARAMS):
    """
    Membrane potential (mV, relative to rest) at time(s) ``t``.

    Output spikes at exactly ``t`` contribute the full reset ``kappa0``.
    """
    return input_potential(t, pattern, w, p) + reset_potential(
        t, output_history, p)


class CompiledPatterns:
    """
    Patterns pre-binned onto a simulation grid for fast repeated simulation.

    Each presynaptic spike is assigned to the first grid point at or after it,
    carrying the exact exponential decay over the sub-step offset, so that a
    first-order recursion reproduces the PSP sum exactly at grid points.
    """

    def __init__(self, patterns: Sequence[InputPattern],
                 p: NeuronParams = DEFAULT_PARAMS, dt: float = 0.1):
        if not patterns:
            raise ValueError('no patterns given')
        self.patterns = list(patterns)
        self.p = p
        self.dt = dt
        self.n_inputs = self.patterns[0].n_inputs
        self.duration = self.patterns[0].duration
        for pat in self.patterns:
            if pat.n_inputs != self.n_inputs or pat.duration != self.duration:
                raise ConfigurationError('patterns differ in size or duration')
        self.n_steps = grid_size(self.duration, dt)
        self.times = np.arange(self.n_steps) * dt

        flat_idx, owners, lag = [], [], []
        K = self.n_steps
        for k, pat in enumerate(self.patterns):
            ts = pat.spike_times
            idx = np.clip(np.ceil(ts / dt - _GRID_TOL).astype(int), 0, K - 1)
            flat_idx.append(idx + k * K)
            owners.append(pat.owners)
            lag.append(np.maximum(idx * dt - ts, 0.0))
        self._flat_idx = np.concatenate(flat_idx)
        self._owners = np.concatenate(owners)
        lag = np.concatenate(lag)
        self._fac_m = np.exp(-lag / p.tau_m)
        self._fac_s = np.exp(-lag / p.tau_s)
        self._decay_m = np.exp(-dt / p.tau_m)
        self._decay_s = np.exp(-dt / p.tau_s)
        # reset kernel sampled at grid lags
        self.reset_profile = p.kappa0 * np.exp(-self.times / p.tau_m)

    def __len__(self):
        return len(self.patterns)

    def input_potentials(self, w) -> np.ndarray:
        """Input-driven potential for every pattern, shape (n_patterns, n_steps)."""
        w = np.asarray(w, dtype=float)
        shape = (len(self.patterns), self.n_steps)
        size = shape[0] * shape[1]
        ww = w[self._owners]
        x_m = np.bincount(self._flat_idx, ww * self._fac_m, size).reshape(shape)
        x_s = np.bincount(self._flat_idx, ww * self._fac_s, size).reshape(shape)
        y_m = lfilter([1.0], [1.0, -self._decay_m], x_m, axis=1)
        y_s = lfilter([1.0], [1.0, -self._decay_s], x_s, axis=1)
        return self.p.eps0 * (y_m - y_s)

    def fire(self, v: np.ndarray, keep_trace=False):
        """
        Threshold crossings of one input-driven trace with resets applied.

        Returns spike grid indices and, if requested, the full membrane trace.
        """
        theta = self.p.theta
        u = v.copy()
        K = u.size
        spikes = []
        start = 0
        while start < K:
            above = np.flatnonzero(u[start:] >= theta)
            if above.size == 0:
                break
            k = start + above[0]
            spikes.append(k)
            u[k:] += self.reset_profile[:K - k]
            start = k + 1
        return np.array(spikes, dtype=int), (u if keep_trace else None)

    def simulate_all(self, w):
        """Output spike trains (ms) for every pattern under weights ``w``."""
        v = self.input_potentials(w)
        return [self.fire(row)[0] * self.dt for row in v]


def simulate(pattern: InputPattern, w, p: NeuronParams = DEFAULT_PARAMS,
             dt: float = 0.1, keep_trace: bool = True):
    """
    Run the deterministic neuron on a grid of step ``dt``.

    A spike is emitted at the first grid point where the potential reaches
    threshold; its reset applies from that grid point onward.

    Returns
    -------
    spikes : ndarray
        Output spike times (ms), on the grid.
    trace : MembraneTrace or None
        Sampled potential including resets, if ``keep_trace``.
    """
    w = check_weights(pattern, w)
    comp = CompiledPatterns([pattern], p, dt)
    idx, u = comp.fire(comp.input_potentials(w)[0], keep_trace)
    trace = MembraneTrace(dt, u) if keep_trace else None
    return idx * dt, trace


def escape_rate(u, p: NeuronParams = DEFAULT_PARAMS):
    """Exponential escape rate (1/ms) at potential ``u`` (mV)."""
    if p.delta_u <= 0:
        raise ValueError('escape rate needs delta_u > 0')
    return p.rho0 * np.exp((np.asarray(u, dtype=float) - p.theta) / p.delta_u)[()]


def intensity_trace(pattern: InputPattern, w, conditioning=(),
                    p: NeuronParams = DEFAULT_PARAMS, dt: float = 0.1):
    """
    Escape-rate intensity sampled on the grid, with resets taken from the
    ``conditioning`` spike train (target for the clamped rule, actual for the
    intrinsic rule).
    """
    t = np.arange(grid_size(pattern.duration, dt)) * dt
    return escape_rate(membrane_potential(t, pattern, w, conditioning, p), p)
