"""
Temporal kernels of the simplified spike response model.

All kernels accept scalars or numpy arrays of lags ``s`` (ms) and return the
same shape. Default constants give a 1 mV PSP peak near 7 ms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

# Relative tolerance for the eps0 <-> (q, C) consistency identity.
_CONSISTENCY_RTOL = 1e-9


@dataclass(frozen=True)
class NeuronParams:
    """
    Model constants for one postsynaptic neuron.

    Parameters
    ----------
    eps0 : float
        PSP coefficient (mV). Derived from ``charge`` and ``capacitance``
        when left as None.
    tau_m : float
        Membrane time constant (ms).
    tau_s : float
        Synaptic time constant (ms).
    theta : float
        Firing threshold above rest (mV).
    u_reset : float
        Reset potential (mV).
    tau_q : float
        Time constant of the output-train filter used by FILT and the van
        Rossum distance (ms).
    capacitance : float or None
        Membrane capacitance (nF).
    charge : float or None
        Charge transferred per presynaptic spike (pC).
    rho0 : float
        Escape rate at threshold (1/ms).
    delta_u : float
        Smoothness of the escape rate around threshold (mV).
    """
    eps0: float | None = None
    tau_m: float = 10.0
    tau_s: float = 5.0
    theta: float = 15.0
    u_reset: float = 0.0
    tau_q: float = 10.0
    capacitance: float | None = 2.5
    charge: float | None = 5.0
    rho0: float = 0.01
    delta_u: float = 1.0

    def __post_init__(self):
        if not (self.tau_m > self.tau_s > 0):
            raise ValueError('require tau_m > tau_s > 0, got tau_m=%g, tau_s=%g'
                             % (self.tau_m, self.tau_s))
        if self.tau_q < 0:
            raise ValueError('tau_q must be non-negative')
        if self.theta <= self.u_reset:
            raise ValueError('theta must exceed u_reset')
        if self.capacitance is not None and self.capacitance <= 0:
            raise ValueError('capacitance must be positive')
        if self.rho0 <= 0:
            raise ValueError('rho0 must be positive')
        if self.delta_u < 0:
            raise ValueError('delta_u must be non-negative')
        derived = self._eps0_from_charge()
        if self.eps0 is None:
            if derived is None:
                raise ValueError('give eps0, or both charge and capacitance')
            object.__setattr__(self, 'eps0', derived)
        elif derived is not None and not math.isclose(
                self.eps0, derived, rel_tol=_CONSISTENCY_RTOL):
            raise ValueError(
                'eps0=%g inconsistent with q/C*tau_m/(tau_m-tau_s)=%g'
                % (self.eps0, derived))
        if self.eps0 <= 0:
            raise ValueError('eps0 must be positive')

    def _eps0_from_charge(self):
        if self.charge is None or self.capacitance is None:
            return None
        return (self.charge / self.capacitance
                * self.tau_m / (self.tau_m - self.tau_s))

    @classmethod
    def from_eps0(cls, eps0, **kwargs):
        """Build from the PSP coefficient alone; charge and capacitance unset."""
        kwargs.setdefault('charge', None)
        kwargs.setdefault('capacitance', None)
        return cls(eps0=eps0, **kwargs)

    def with_(self, **changes) -> NeuronParams:
        """
        Copy with some fields replaced.

        ``eps0`` is re-derived from (q, C) unless given explicitly; charge and
        capacitance are dropped when a new ``eps0`` alone is supplied.
        """
        if 'eps0' in changes:
            changes.setdefault('charge', None)
            changes.setdefault('capacitance', None)
        elif self.charge is not None and self.capacitance is not None:
            changes['eps0'] = None
        return replace(self, **changes)

    @property
    def kappa0(self) -> float:
        """Reset coefficient (mV), always negative."""
        return -(self.theta - self.u_reset)


DEFAULT_PARAMS = NeuronParams()


def current_kernel(s, p: NeuronParams = DEFAULT_PARAMS):
    """Postsynaptic current (nA) at lag ``s`` after a presynaptic spike."""
    if p.charge is None:
        raise ValueError('current kernel needs the charge q')
    s = np.asarray(s, dtype=float)
    out = np.where(s >= 0, p.charge / p.tau_s
                   * np.exp(-np.maximum(s, 0.0) / p.tau_s), 0.0)
    return out[()] if out.ndim == 0 else out


def psp_kernel(s, p: NeuronParams = DEFAULT_PARAMS):
    """PSP kernel (mV): difference of membrane and synaptic exponentials."""
    s = np.asarray(s, dtype=float)
    sp = np.maximum(s, 0.0)
    out = np.where(s >= 0,
                   p.eps0 * (np.exp(-sp / p.tau_m) - np.exp(-sp / p.tau_s)),
                   0.0)
    return out[()] if out.ndim == 0 else out


def reset_kernel(s, p: NeuronParams = DEFAULT_PARAMS):
    """Reset kernel (mV) following an output spike."""
    s = np.asarray(s, dtype=float)
    out = np.where(s >= 0, p.kappa0 * np.exp(-np.maximum(s, 0.0) / p.tau_m),
                   0.0)
    return out[()] if out.ndim == 0 else out


def filt_coefficients(p: NeuronParams = DEFAULT_PARAMS):
    """Membrane and synaptic coefficients (C_m, C_s) of the FILT window."""
    return p.tau_m / (p.tau_m + p.tau_q), p.tau_s / (p.tau_s + p.tau_q)


def filt_window(s, p: NeuronParams = DEFAULT_PARAMS):
    """
    FILT learning window (mV) for lag ``s`` = t_post - t_pre.

    Positive lags follow a rescaled PSP; non-positive lags decay with the
    filter constant. Continuous at ``s = 0``.
    """
    s = np.asarray(s, dtype=float)
    c_m, c_s = filt_coefficients(p)
    sp = np.maximum(s, 0.0)
    causal = p.eps0 * (c_m * np.exp(-sp / p.tau_m) - c_s * np.exp(-sp / p.tau_s))
    if p.tau_q > 0:
        acausal = p.eps0 * (c_m - c_s) * np.exp(np.minimum(s, 0.0) / p.tau_q)
    else:
        # tau_q -> 0 collapses the acausal lobe onto s = 0
        acausal = np.where(s == 0, p.eps0 * (c_m - c_s), 0.0)
    out = np.where(s > 0, causal, acausal)
    return out[()] if out.ndim == 0 else out


def psp_peak(p: NeuronParams = DEFAULT_PARAMS):
    """Return ``(s_peak, eps_peak)``: lag (ms) and height (mV) of the PSP maximum."""
    s_peak = (p.tau_m * p.tau_s / (p.tau_m - p.tau_s)
              * math.log(p.tau_m / p.tau_s))
    return s_peak, float(psp_kernel(s_peak, p))


def filt_min_target_time(tau_q: float, p: NeuronParams = DEFAULT_PARAMS) -> float:
    """
    Smallest target lag (ms) for which FILT converges stably.

    Coincides with the argmax of the FILT window over positive lags, and with
    the PSP peak lag at ``tau_q = 0``.
    """
    if tau_q < 0:
        raise ValueError('tau_q must be non-negative')
    return (p.tau_m * p.tau_s / (p.tau_m - p.tau_s)
            * math.log((p.tau_m + tau_q) / (p.tau_s + tau_q)))
