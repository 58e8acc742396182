import numpy as np
import pytest

from phasefield.errors import GridError
from phasefield.grids import Axis, SampledFunction1D
from phasefield.phase_space import s_rho_delta, euclidean
from phasefield.symbols import symbol_preset
from phasefield.weyl import (WeylMatrix, default_axis, matrix_elements_direct, matrix_elements_wigner,
                             metaplectic_dilation, scaling_op, shift_eval, tf_shift, trig_eval, upsample2,
                             weyl_apply)
from phasefield.windows import Window1D

AX = default_axis()


def u_test(t):
    return np.exp(-np.pi * (t - 0.3) ** 2) * np.exp(2j * np.pi * 0.7 * t)


def du_test(t):
    return u_test(t) * (-2 * np.pi * (t - 0.3) + 2j * np.pi * 0.7)


@pytest.fixture(scope="module")
def u():
    return SampledFunction1D.from_callable(AX, u_test)


def test_generator_one_is_identity(u):
    out = weyl_apply(lambda x, xi: np.ones(np.broadcast_shapes(np.shape(x), np.shape(xi))), u)
    assert np.max(np.abs(out.values - u.values)) <= 1e-6


def test_generator_x_is_position(u):
    out = weyl_apply(lambda x, xi: x + 0 * xi, u)
    assert np.max(np.abs(out.values - AX.nodes * u.values)) <= 1e-6


def test_generator_xi_is_spectral_derivative(u):
    out = weyl_apply(lambda x, xi: xi + 0 * x, u)
    ref = du_test(AX.nodes) / (2j * np.pi)
    assert np.max(np.abs(out.values - ref)) <= 1e-6


def test_oversampling_leaves_smooth_symbols_unchanged(u):
    a = symbol_preset("sinsin")
    m1 = WeylMatrix(a, AX).apply(u).values
    m2 = WeylMatrix(a, AX, oversample=2).apply(u).values
    assert np.max(np.abs(m1 - m2)) <= 1e-8


def test_shift_eval_equals_trig_eval(u):
    for x in (0.0, 0.37, -2.5):
        np.testing.assert_allclose(shift_eval(u.values, AX, x), trig_eval(u.values, AX, AX.nodes - x), atol=1e-13)


def test_upsample_interleaves_exact_nodes(u):
    up = upsample2(u.values, AX)
    np.testing.assert_array_equal(up[0::2], u.values)
    np.testing.assert_allclose(up[1::2], u_test(AX.nodes + AX.spacing / 2), atol=1e-12)


def test_tf_shift_closed_form_and_coverage():
    chi = Window1D.gaussian().on_axis(AX)
    s = tf_shift([1.5, -2.0], chi)
    t = AX.nodes
    np.testing.assert_allclose(s.values, np.exp(-4j * np.pi * t) * np.exp(-np.pi * (t - 1.5) ** 2), atol=1e-12)
    with pytest.raises(GridError):
        tf_shift([9.0, 0.0], chi)
    with pytest.raises(GridError):
        tf_shift([0.0, 20.0], chi)


def test_ambiguity_law_for_constant_symbol():
    rng = np.random.default_rng(7)
    X = rng.uniform(-3, 3, (40, 2))
    Xi = X + rng.uniform(-2, 2, (40, 2))
    one = symbol_preset("const1")
    chi = Window1D.gaussian()
    d = matrix_elements_direct(one, X, Xi, chi)
    law = 2**-0.5 * np.exp(-np.pi * np.sum((X - Xi) ** 2, -1) / 2)
    assert np.max(np.abs(np.abs(d) - law)) <= 1e-5


def test_two_routes_agree_on_sinsin():
    rng = np.random.default_rng(8)
    X = rng.uniform(-3, 3, (30, 2))
    Xi = X + rng.uniform(-2, 2, (30, 2))
    a = symbol_preset("sinsin")
    chi = Window1D.gaussian()
    d = np.abs(matrix_elements_direct(a, X, Xi, chi))
    w = matrix_elements_wigner(a, X, Xi, chi)
    m = d > 1e-8
    assert np.max(np.abs(d[m] - w[m]) / d[m]) <= 1e-4


def test_metaplectic_dilation_is_unitary_rescaling():
    g = s_rho_delta(0.5, 0.5)
    chi = Window1D.gaussian().on_axis(AX)
    X = np.array([0.0, 3.0])
    f = float(g.weights(X)[0])
    d = metaplectic_dilation(g, X, chi)
    np.testing.assert_allclose(d.values, f**-0.5 * np.exp(-np.pi * (AX.nodes / f) ** 2), atol=1e-10)
    assert d.l2_norm() == pytest.approx(chi.l2_norm(), rel=1e-10)
    with pytest.raises(ValueError):
        metaplectic_dilation(s_rho_delta(0.5, 0.0), X, chi)


def test_scaling_op_roundtrip():
    g = s_rho_delta(0.5, 0.0)
    X = np.array([0.0, 2.0])
    h = lambda y, eta: np.exp(-np.pi * (y * y + eta * eta))
    fwd = scaling_op(g, X, "fwd", h, pairing=True)
    back = scaling_op(g, X, "inv", fwd, pairing=True)
    y = np.linspace(-1, 1, 5)
    np.testing.assert_allclose(back(y, y), h(y, y), rtol=1e-14)
    with pytest.raises(ValueError):
        scaling_op(euclidean(), X, "sideways", h)


def test_sampled_symbol_grid_mismatch():
    from phasefield.grids import PhaseGrid, SampledPhaseFunction
    bad = SampledPhaseFunction(PhaseGrid.uniform(1, 8.0, 64), np.ones((64, 64)))
    with pytest.raises(GridError):
        WeylMatrix(bad, Axis(0.0, 8.0, 64))
