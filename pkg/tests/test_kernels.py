import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.optimize import brentq, minimize_scalar

from precise_spikes.kernels import (NeuronParams, current_kernel,
                                    filt_min_target_time, filt_window,
                                    psp_kernel, psp_peak, reset_kernel)

P = NeuronParams()


def test_default_constants():
    assert P.eps0 == pytest.approx(4.0, rel=1e-12)
    assert P.kappa0 == -15.0
    assert P.tau_q == 10.0


def test_eps0_consistency_enforced():
    NeuronParams(eps0=4.0, charge=5.0, capacitance=2.5)
    with pytest.raises(ValueError):
        NeuronParams(eps0=4.1, charge=5.0, capacitance=2.5)
    p = NeuronParams.from_eps0(4.0)
    assert p.charge is None and p.eps0 == 4.0


@pytest.mark.parametrize('kwargs', [
    dict(tau_m=5.0, tau_s=5.0),
    dict(tau_m=5.0, tau_s=10.0),
    dict(theta=0.0),
    dict(tau_q=-1.0),
    dict(capacitance=0.0),
])
def test_invalid_params_rejected(kwargs):
    with pytest.raises(ValueError):
        NeuronParams(**kwargs)


def test_with_rederives_eps0():
    p = P.with_(tau_m=20.0, tau_s=10.0)
    assert p.eps0 == pytest.approx(5 / 2.5 * 20 / 10)


def test_current_kernel_values():
    assert current_kernel(0.0, P) == pytest.approx(1.0)
    assert current_kernel(-1.0, P) == 0.0
    assert current_kernel(5.0, P) == pytest.approx(math.exp(-1))


def test_psp_kernel_values():
    assert psp_kernel(0.0, P) == 0.0
    assert psp_kernel(10 * math.log(2), P) == pytest.approx(1.0, abs=1e-12)
    assert psp_kernel(10.0, P) == pytest.approx(4 * (math.exp(-1) - math.exp(-2)))
    assert psp_kernel(-3.0, P) == 0.0


def test_reset_kernel_values():
    assert reset_kernel(0.0, P) == -15.0
    assert reset_kernel(-0.1, P) == 0.0
    assert reset_kernel(10.0, P) == pytest.approx(-15 * math.exp(-1))


def test_filt_window_values():
    assert filt_window(0.0, P) == pytest.approx(4 * (0.5 - 1 / 3))
    assert filt_window(10 * math.log(4 / 3), P) == pytest.approx(0.75, abs=1e-12)
    assert filt_window(-10.0, P) == pytest.approx(4 * (0.5 - 1 / 3) * math.exp(-1))


def test_kernels_vectorised():
    s = np.linspace(-5, 50, 11)
    for fn in (current_kernel, psp_kernel, reset_kernel, filt_window):
        out = fn(s, P)
        assert out.shape == s.shape
        assert np.allclose(out, [fn(x, P) for x in s])


def test_continuity_at_zero():
    assert filt_window(-1e-300, P) == pytest.approx(filt_window(1e-300, P), abs=1e-12)
    assert filt_window(0.0, P) == pytest.approx(filt_window(1e-13, P), abs=1e-12)
    # eps vanishes on both sides
    assert abs(psp_kernel(1e-13, P)) < 1e-12


def test_psp_peak():
    s_peak, eps_peak = psp_peak(P)
    assert s_peak == pytest.approx(10 * math.log(2), abs=1e-12)
    assert eps_peak == pytest.approx(1.0, abs=1e-12)
    assert psp_kernel(s_peak - 0.01, P) < eps_peak
    assert psp_kernel(s_peak + 0.01, P) < eps_peak
    assert psp_peak(P.with_(tau_m=20.0, tau_s=10.0))[0] == pytest.approx(20 * math.log(2))


def test_filt_min_target_time():
    assert filt_min_target_time(0.0, P) == pytest.approx(psp_peak(P)[0], abs=1e-12)
    assert filt_min_target_time(10.0, P) == pytest.approx(10 * math.log(4 / 3), abs=1e-12)
    assert filt_min_target_time(40.0, P) == pytest.approx(10 * math.log(50 / 45), abs=1e-12)
    grid = [filt_min_target_time(tq, P) for tq in np.arange(0, 40.5, 0.5)]
    assert np.all(np.diff(grid) < 0)
    assert filt_min_target_time(1e9, P) < 1e-7
    with pytest.raises(ValueError):
        filt_min_target_time(-1.0, P)


# -- independent oracles -----------------------------------------------------

def _psp_by_convolution(s, p):
    """PSP as the membrane-filtered current, integrated numerically."""
    if s <= 0:
        return 0.0
    f = lambda sp: math.exp(-sp / p.tau_m) * float(current_kernel(s - sp, p))
    val, _ = quad(f, 0.0, s, epsabs=1e-14, epsrel=1e-12, limit=200)
    return val / p.capacitance


def test_psp_matches_convolution_integral():
    for s in np.linspace(0.0, 100.0, 41):
        exact = _psp_by_convolution(s, P)
        closed = float(psp_kernel(s, P))
        assert closed == pytest.approx(exact, rel=1e-6, abs=1e-15)


def _window_by_quadrature(s, p):
    """FILT window as the filtered output spike correlated with one PSP."""
    f = lambda t: math.exp(-(t - s) / p.tau_q) / p.tau_q * float(psp_kernel(t, p))
    lo = max(s, 0.0)
    val, _ = quad(f, lo, lo + 60 * max(p.tau_q, p.tau_m),
                  epsabs=1e-14, epsrel=1e-12, limit=400)
    return val


@pytest.mark.parametrize('s', [-30.0, -10.0, -2.0, -0.5, 0.0, 0.5, 2.877, 4.0, 10.0, 40.0])
def test_filt_window_matches_quadrature(s):
    assert filt_window(s, P) == pytest.approx(_window_by_quadrature(s, P), rel=1e-6)


@pytest.mark.parametrize('tau_q', [1.0, 5.0, 10.0, 20.0, 40.0])
def test_filt_window_argmax_is_min_target_time(tau_q):
    p = P.with_(tau_q=tau_q)
    expected = filt_min_target_time(tau_q, p)
    res = minimize_scalar(lambda s: -float(filt_window(s, p)),
                          bracket=(0.01, 1.0, 20.0), method='golden',
                          options={'xtol': 1e-12})
    # a value-comparison search cannot resolve the flat peak beyond ~sqrt(eps)
    assert res.x == pytest.approx(expected, rel=1e-7)
    # derivative of the causal branch vanishes at the analytic argmax
    c_m, c_s = p.tau_m / (p.tau_m + tau_q), p.tau_s / (p.tau_s + tau_q)
    deriv = lambda s: (-c_m / p.tau_m * math.exp(-s / p.tau_m)
                       + c_s / p.tau_s * math.exp(-s / p.tau_s))
    assert abs(deriv(expected)) < 1e-12
    root = brentq(deriv, 1e-6, 50.0, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    assert root == pytest.approx(expected, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.01, 100.0), st.floats(0.5, 30.0))
def test_kernel_properties(s, tau_s):
    p = NeuronParams.from_eps0(4.0, tau_m=tau_s * 2.5, tau_s=tau_s)
    assert psp_kernel(s, p) > 0
    assert psp_kernel(s, p) <= psp_peak(p)[1] + 1e-12
    assert reset_kernel(s, p) < 0
    assert filt_window(s, p) > 0
    assert filt_window(-s, p) > 0
