import math

import numpy as np
import oracles
import pytest
from hypothesis import given
from hypothesis import strategies as st
from strategies import measurement_params, system_params

from nanosphere import MeasurementParams, SystemParams, build_conditional, build_unconditional


def test_free_rotation():
    um = build_unconditional(SystemParams(1.0, 0.0, 0.0, 0.0, 0.0))
    expected = np.zeros((4, 4))
    expected[2:, 2:] = [[0, 1], [-1, 0]]
    np.testing.assert_array_equal(um.a, expected)
    np.testing.assert_array_equal(um.d, np.zeros((4, 4)))


def test_reference_values():
    um = build_unconditional(SystemParams(1.0, -2.0, 1.0, 2.0, 0.1))
    np.testing.assert_array_equal(um.a[1], [-2.0, -1.0, -2.0, 0.0])
    np.testing.assert_allclose(um.d, np.diag([2.0, 2.0, 0.0, 0.4]), rtol=0, atol=1e-16)


@given(system_params())
def test_spectrum_is_conjugate_closed(params):
    ev = np.linalg.eigvals(build_unconditional(params).a)
    np.testing.assert_allclose(np.sort_complex(ev), np.sort_complex(ev.conj()), atol=1e-10)


def test_unmonitored_limit():
    params = SystemParams(1.0, -2.0, 1.0, 2.0, 0.1)
    cm = build_conditional(params, MeasurementParams())
    um = build_unconditional(params)
    assert not cm.b.any() and not cm.n.any()
    assert np.array_equal(cm.a_tilde, um.a) and np.array_equal(cm.d_tilde, um.d)
    assert np.array_equal(cm.a, um.a) and np.array_equal(cm.d, um.d)


def test_homodyne_x_quadrature():
    cm = build_conditional(SystemParams(1.0, 0.0, 1.0, 2.0, 0.1), MeasurementParams(1.0, 0.0, 0.0))
    expected = np.zeros((4, 4))
    expected[0, 0] = math.sqrt(2)
    np.testing.assert_allclose(cm.b, expected, atol=1e-16)


def test_position_channel():
    cm = build_conditional(SystemParams(1.0, 0.0, 1.0, 2.0, 0.1), MeasurementParams(0.0, 1.0, 0.0))
    assert cm.b[3, 2] == pytest.approx(0.6325, abs=1e-4)
    assert cm.b[3, 2] == pytest.approx(math.sqrt(0.4), rel=1e-15)
    assert np.count_nonzero(cm.b) == 1


@given(system_params(), measurement_params())
def test_matches_independent_transcription(params, meas):
    cm = build_conditional(params, meas)
    at, dt_, b = oracles.filter_matrices(
        params.omega_m, params.delta, params.g, params.kappa, params.gamma,
        meas.eta1, meas.eta2, meas.phi,
    )
    np.testing.assert_allclose(cm.a_tilde, at, atol=1e-14)
    np.testing.assert_allclose(cm.d_tilde, dt_, atol=1e-14)
    np.testing.assert_allclose(cm.b, b, atol=1e-14)


@given(system_params(), measurement_params())
def test_structure(params, meas):
    cm = build_conditional(params, meas)
    # monitoring only removes diffusion
    assert np.linalg.eigvalsh(cm.d - cm.d_tilde).min() >= -1e-12
    assert np.linalg.eigvalsh(cm.d_tilde).min() >= -1e-12
    assert not cm.b[2].any() and not cm.n[2].any() and not cm.n[3].any()
    u = np.array([math.cos(meas.phi), -math.sin(meas.phi)])
    np.testing.assert_allclose(cm.b[:2, :2], math.sqrt(meas.eta1 * params.kappa) * np.outer(u, u),
                               atol=1e-14)
    assert np.linalg.matrix_rank(cm.b[:2, :2], tol=1e-12) <= 1


@given(system_params(), measurement_params(), st.integers(-3, 3))
def test_phase_period(params, meas, k):
    from nanosphere.matrices import measurement_matrices

    b0, n0 = measurement_matrices(params.kappa, params.gamma, meas.eta1, meas.eta2, meas.phi)
    b1, n1 = measurement_matrices(params.kappa, params.gamma, meas.eta1, meas.eta2,
                                  meas.phi + k * math.pi)
    np.testing.assert_allclose(b0, b1, atol=1e-12)
    np.testing.assert_allclose(n0, n1, atol=1e-12)


def test_matrices_are_frozen():
    cm = build_conditional(SystemParams(1.0, -2.0, 1.0, 2.0, 0.1), MeasurementParams(1, 1, 0.3))
    with pytest.raises((AttributeError, TypeError)):
        cm.b = np.zeros((4, 4))
