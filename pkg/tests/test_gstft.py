import numpy as np
import pytest

from phasefield.errors import GridError
from phasefield.grids import PhaseGrid, SampledPhaseFunction
from phasefield.gstft import (GstftField, X_sample_grid, essential_box, gaussian_on, gstft, gstft_adjoint,
                              identity_setup, orthogonality_check, product_integral, reconstruct, selftest,
                              twisted_projection)
from phasefield.io import field_bytes, field_from_bytes
from phasefield.modspace import unit_weight
from phasefield.phase_space import euclidean
from phasefield.windows import make_bump_family, make_translate_family

G = euclidean()
GRID = PhaseGrid.uniform(1, 6.0, 64)


def f_test(P):
    return np.exp(-np.pi * ((P[..., 0] - 0.4) ** 2 + 2 * (P[..., 1] + 0.2) ** 2)) * np.exp(1j * P[..., 0])


@pytest.fixture(scope="module")
def f():
    return SampledPhaseFunction.from_callable(GRID, f_test)


def test_translate_family_gives_classical_stft_at_sigma_xi(f):
    win = lambda P: np.exp(-np.pi * np.sum(P * P, -1) / 0.8)
    fam = make_translate_family(G, win)
    X = np.array([[0.5, -0.25], [-1.0, 1.0]])
    field_ = gstft(f, fam, X)
    P = GRID.mesh()
    xi_nodes = field_.Xi_grid.mesh()
    for i, x in enumerate(X):
        for idx in [(32, 32), (30, 35), (40, 20)]:
            Xi = xi_nodes[idx]
            # classical STFT at frequency sigma Xi = (xi, -x)
            w = np.array([Xi[1], -Xi[0]])
            ref = np.sum(f.values * np.conj(win(P - x)) * np.exp(-2j * np.pi * (P @ w))) * GRID.cell
            assert field_.values[i][idx] == pytest.approx(ref, abs=1e-8)


def test_zero_function_and_bump_self_transform():
    fam = make_bump_family(G, 0.5)
    X0 = np.array([0.3, -0.2])
    zero = SampledPhaseFunction(GRID, np.zeros(GRID.shape))
    assert np.all(gstft(zero, fam, X0[None]).values == 0)
    fine = PhaseGrid.uniform(1, 2.0, 256)
    phi0 = SampledPhaseFunction.from_callable(fine, lambda P: fam(X0, P))
    field_ = gstft(phi0, fam, X0[None])
    centre = tuple(s // 2 for s in field_.Xi_grid.shape)
    v = field_.values[0][centre]
    ref = np.sum(np.abs(phi0.values) ** 2) * fine.cell
    assert abs(v.imag) < 1e-14 and v.real == pytest.approx(ref, rel=1e-12)


def test_coverage_error(f):
    with pytest.raises(GridError):
        gstft(f, make_bump_family(G, 0.5), np.array([[7.0, 0.0]]))


def test_adjointness_and_linearity(f):
    fam = make_bump_family(G, 0.5)
    X, w = X_sample_grid(G, 4.0, 9)
    V = gstft(f, fam, X, X_weights=w)
    rng = np.random.default_rng(4)
    H = GstftField(X, V.Xi_grid, rng.normal(size=V.values.shape) + 1j * rng.normal(size=V.values.shape), w)
    lhs = V.inner(H)
    rhs = f.inner(gstft_adjoint(H, fam, GRID))
    assert abs(lhs - rhs) <= 1e-6 * abs(rhs)
    V2 = gstft(f * (2 - 1j), fam, X, X_weights=w)
    np.testing.assert_allclose(V2.values, (2 - 1j) * V.values, atol=1e-13)
    V3 = gstft(f, fam.scaled(1j), X, X_weights=w)
    np.testing.assert_allclose(V3.values, -1j * V.values, atol=1e-13)
    with pytest.raises(GridError):
        gstft_adjoint(GstftField(X, V.Xi_grid, V.values), fam, GRID)


def test_orthogonality_sesquilinear_swap_and_zero(f):
    fam = make_bump_family(G, 0.5)
    X, w = X_sample_grid(G, 5.0, 21)
    g2 = SampledPhaseFunction.from_callable(GRID, lambda P: np.exp(-np.pi * np.sum(P * P, -1)))
    I = product_integral(fam, fam, GRID.mesh())
    l1, r1 = orthogonality_check(fam, fam, f, g2, X, w, I=I)
    l2, r2 = orthogonality_check(fam, fam, g2, f, X, w, I=I)
    assert l2 == pytest.approx(np.conj(l1), abs=1e-14)
    assert r2 == pytest.approx(np.conj(r1), rel=1e-10)
    zero = SampledPhaseFunction(GRID, np.zeros(GRID.shape))
    assert orthogonality_check(fam, fam, f, zero, X, w, I=I) == (0, 0)


def test_reconstruct_zero_and_scaling(f):
    fam = make_bump_family(G, 0.5)
    X, w = X_sample_grid(G, 5.0, 21)
    I = product_integral(fam, fam, GRID.mesh())
    _, r0 = reconstruct(SampledPhaseFunction(GRID, np.zeros(GRID.shape)), fam, fam, X, w, I=I)
    assert r0 == 0.0
    _, r1 = reconstruct(f, fam, fam, X, w, I=I)
    _, r2 = reconstruct(f * 3.0, fam, fam, X, w, I=I)
    assert r1 == pytest.approx(r2, rel=1e-10)


def test_selftest_level0_passes():
    rep = selftest()
    assert rep["pass"], rep
    assert rep["orthogonality_error"] < 1e-3 and rep["reconstruction_residual"] < 1e-3


def test_identity_setup_refines():
    g0, X0, _, _ = identity_setup(G, 0)
    g1, X1, _, _ = identity_setup(G, 1)
    assert g1.shape[0] == 2 * g0.shape[0]
    assert X1.shape[0] == (2 * 32 + 1) ** 2 and X0.shape[0] == 33**2


def test_essential_box_of_gaussian():
    grid = PhaseGrid.uniform(1, 8.0, 128)
    lo, hi = essential_box(gaussian_on(grid))
    # exp(-pi r^2) = 1e-16 at r = sqrt(16 ln 10 / pi)
    r = np.sqrt(16 * np.log(10) / np.pi)
    assert np.all(np.abs(lo + r) <= grid.spacing) and np.all(np.abs(hi - r) <= grid.spacing)


def test_twisted_projection_ratio_uniform_and_zero(f):
    fam = make_bump_family(G, 0.5)
    X, w = X_sample_grid(G, 4.0, 9)
    rng = np.random.default_rng(9)
    V = gstft(f, fam, X, X_weights=w)
    ratios = []
    for _ in range(10):
        H = GstftField(X, V.Xi_grid, rng.normal(size=V.values.shape) + 1j * rng.normal(size=V.values.shape), w)
        ratios.append(twisted_projection(H, fam, fam, unit_weight(), 2, 2)[1])
    assert max(ratios) / min(ratios) < 2.0
    Z = GstftField(X, V.Xi_grid, np.zeros(V.values.shape), w)
    assert twisted_projection(Z, fam, fam, unit_weight(), 2, 2)[1] == 0.0


def test_field_container_roundtrip_and_errors(f):
    fam = make_bump_family(G, 0.5)
    X, w = X_sample_grid(G, 3.0, 3)
    V = gstft(f, fam, X, X_weights=w)
    data = field_bytes(V)
    back = field_from_bytes(data)
    np.testing.assert_array_equal(back.X_samples, V.X_samples)
    np.testing.assert_array_equal(back.X_weights, V.X_weights)
    assert back.Xi_grid.same_as(V.Xi_grid)
    np.testing.assert_allclose(back.values, V.values, rtol=1e-6, atol=1e-7 * np.max(np.abs(V.values)))
    assert field_bytes(back) == data
    with pytest.raises(ValueError):
        field_from_bytes(b"XXXX" + data[4:])
    with pytest.raises(ValueError):
        field_from_bytes(data[:-3])
    with pytest.raises(ValueError):
        field_from_bytes(data + b"\0")
    bad = bytearray(data)
    bad[4] = 9
    with pytest.raises(ValueError):
        field_from_bytes(bytes(bad))
