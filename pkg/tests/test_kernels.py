import math

import numpy as np
import pytest

from isingchain import kernels
from isingchain._accel import NUMBA_AVAILABLE
from isingchain.geodesic import geodesic_field
from isingchain.ode import integrate

needs_numba = pytest.mark.skipif(not NUMBA_AVAILABLE, reason="numba not installed")


def _scan_args(k=2.0):
    return (np.array([0.0, 0.0, 0.0]), np.array([0.3, 0.6, 0.9]), k * k - 1.0, k,
            np.array([1.0, 0.0, 0.0]), 1e-3, 6.0, np.array([1.0, 0.0, 0.0]), 1e-10)


@needs_numba
def test_terminal_scan_backends_agree():
    s_nb, y_nb = kernels.terminal_scan_nb(*_scan_args())
    s_np, y_np = kernels.terminal_scan_np(*_scan_args())
    np.testing.assert_allclose(s_nb, s_np, rtol=0, atol=1e-13)
    np.testing.assert_allclose(y_nb, y_np, rtol=0, atol=1e-13)


@needs_numba
def test_geodesic_dense_backends_agree():
    args = (0.1, 0.7, 3.0, 2.0, np.array([0.9, math.sqrt(0.19), 0.0]), 1e-3, 500)
    np.testing.assert_allclose(kernels.geodesic_dense_nb(*args), kernels.geodesic_dense_np(*args),
                               rtol=0, atol=1e-13)


@needs_numba
def test_chain_segment_backends_agree():
    x0 = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    ks = np.array([6.0, 1.0, 3.5])
    u = np.sin(np.linspace(0.0, 3.0, 301))
    a = kernels.chain_segment_nb(x0, ks, 2, u, 1e-2, 3)
    b = kernels.chain_segment_np(x0, ks, 2, u, 1e-2, 3)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-13)


def test_dense_matches_reference_integrator():
    k = 2.0
    y0 = [0.0, 0.8, 1.0, 0.0, 0.0]
    ref = integrate(geodesic_field(k), y0, 1.0, step=1e-3)
    states = kernels.geodesic_dense_np(0.0, 0.8, k * k - 1.0, k, np.array([1.0, 0.0, 0.0]), 1e-3, 1000)
    np.testing.assert_allclose(states[-1], ref.final, atol=1e-12)


def test_terminal_scan_finds_free_rotation_zero():
    # theta stays 0: r1 = cos t reaches zero at pi/2
    s, y = kernels.terminal_scan_np(np.zeros(1), np.zeros(1), 0.0, 1.0, np.array([1.0, 0.0, 0.0]),
                                    1e-2, 3.0, np.array([1.0, 0.0, 0.0]), 1e-12)
    assert s[0] == pytest.approx(math.pi / 2, abs=1e-9)
    assert y[0, 3] == pytest.approx(1.0, abs=1e-9)


def test_terminal_scan_no_event_gives_nan():
    s, y = kernels.terminal_scan_np(np.zeros(1), np.zeros(1), 0.0, 1.0, np.array([1.0, 0.0, 0.0]),
                                    1e-2, 1.0, np.array([1.0, 0.0, 0.0]), 1e-12)
    assert math.isnan(s[0])
    assert np.all(np.isnan(y[0]))


def test_chain_generators_are_skew():
    coupling, control = kernels.chain_generators([1.0, 2.0, 3.0], 2)
    np.testing.assert_array_equal(coupling, -coupling.T)
    np.testing.assert_array_equal(control, -control.T)
    assert control[3, 4] == -1.0 and control[4, 3] == 1.0


def test_chain_free_evolution_quarter_period():
    x = kernels.chain_segment(np.array([1.0, 0.0, 0.0, 0.0]), np.array([2.0, 1.0]), 0,
                              np.zeros(2), math.pi / 4, 1000)
    np.testing.assert_allclose(x[-1], [0.0, 1.0, 0.0, 0.0], atol=1e-12)
