"""
Supervised INST and FILT learning rules for deterministic spiking neurons.
"""

from .kernels import (NeuronParams, current_kernel, filt_min_target_time,
                      filt_window, psp_kernel, psp_peak, reset_kernel)
from .metrics import classify, performance, vrd
from .neuron import InputPattern, simulate
from .plasticity import filt_update, inst_update

__version__ = '0.1.0'

__all__ = [
    'NeuronParams', 'InputPattern', 'simulate', 'current_kernel',
    'psp_kernel', 'reset_kernel', 'filt_window', 'psp_peak',
    'filt_min_target_time', 'inst_update', 'filt_update', 'vrd', 'classify',
    'performance',
]
