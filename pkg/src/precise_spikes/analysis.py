"""
Single-synapse analysis: closed-form firing time, phase portraits and the
learning-window curves of the INST and FILT rules.

Everything assumes one input spike at 0 ms and a learning rate of one.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .kernels import (DEFAULT_PARAMS, NeuronParams, filt_min_target_time,
                      filt_window, psp_kernel, psp_peak)
from .plasticity import FILT, INST


class PhasePoint(NamedTuple):
    w: float
    dw: float
    fires: bool


def firing_threshold_weight(p: NeuronParams = DEFAULT_PARAMS) -> float:
    """Smallest weight whose PSP reaches threshold."""
    return p.theta / psp_peak(p)[1]


def fixed_point_weight(t_ref: float, p: NeuronParams = DEFAULT_PARAMS) -> float:
    """Weight whose threshold crossing lands on ``t_ref`` (rising PSP segment)."""
    return p.theta / float(psp_kernel(t_ref, p))


def firing_time(w: float, p: NeuronParams = DEFAULT_PARAMS):
    """
    Output spike lag (ms) for a single input of weight ``w``, or None when
    the PSP never reaches threshold.

    Uses the closed form when tau_s = tau_m / 2, otherwise root-finds on the
    rising segment [0, s_peak].
    """
    s_peak, eps_peak = psp_peak(p)
    if w <= 0 or w * eps_peak < p.theta:
        return None
    if math.isclose(p.tau_s, p.tau_m / 2, rel_tol=1e-12):
        disc = max(1.0 - 4.0 * p.theta / (p.eps0 * w), 0.0)
        return p.tau_m * math.log(2.0 / (1.0 + math.sqrt(disc)))
    f = lambda s: w * float(psp_kernel(s, p)) - p.theta
    if f(s_peak) <= 0:
        return s_peak
    return brentq(f, 0.0, s_peak, xtol=1e-14, rtol=1e-15)


def _phase(window, w, t_ref, p):
    t_i = firing_time(w, p)
    target = float(window(t_ref, p))
    if t_i is None:
        return PhasePoint(w, target, False)
    return PhasePoint(w, target - float(window(t_i, p)), True)


def inst_phase(w: float, t_ref: float,
               p: NeuronParams = DEFAULT_PARAMS) -> PhasePoint:
    """INST weight change as a function of the current weight."""
    # eps(t_i) = theta / w on the rising segment
    fires = w > 0 and w * psp_peak(p)[1] >= p.theta
    target = float(psp_kernel(t_ref, p))
    return PhasePoint(w, target - p.theta / w if fires else target, fires)


def filt_phase(w: float, t_ref: float,
               p: NeuronParams = DEFAULT_PARAMS) -> PhasePoint:
    """FILT weight change as a function of the current weight."""
    return _phase(filt_window, w, t_ref, p)


def phase_portrait(rule: str, weights, t_ref: float,
                   p: NeuronParams = DEFAULT_PARAMS):
    """Phase points over a grid of weights."""
    fn = {INST: inst_phase, FILT: filt_phase}[rule]
    return [fn(float(w), t_ref, p) for w in weights]


def _grid(start, stop, step):
    n = int(round((stop - start) / step))
    return start + step * np.arange(n + 1)


def learning_window_curve(rule: str, start: float, stop: float, step: float,
                          p: NeuronParams = DEFAULT_PARAMS) -> np.ndarray:
    """
    Weight change against ``t_ref - t_pre`` with no actual output spike.

    Returns an array of shape (n, 2) with columns (lag, dw).
    """
    s = _grid(start, stop, step)
    kernel = {INST: psp_kernel, FILT: filt_window}[rule]
    return np.column_stack([s, kernel(s, p)])


def tmin_curve(start: float, stop: float, step: float,
               p: NeuronParams = DEFAULT_PARAMS) -> np.ndarray:
    """Columns (tau_q, minimum stable target lag)."""
    taus = _grid(start, stop, step)
    return np.column_stack(
        [taus, [filt_min_target_time(tq, p) for tq in taus]])
