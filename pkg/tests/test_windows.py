import math

import numpy as np
import pytest

from phasefield.errors import DegenerateWindowError
from phasefield.grids import Axis, SampledFunction1D
from phasefield.phase_space import euclidean, s_rho_delta
from phasefield.weyl import wigner
from phasefield.windows import (INFINITE_ORDER, Window1D, confinement_seminorm, family_from_spec,
                                family_integral, make_bump_family, make_cutoff, make_wigner_family,
                                mollify_family, nondegeneracy_lower_bound, theta_cutoff)


@pytest.mark.parametrize("name", ["exp_bump", "poly_spline"])
def test_cutoff_profile_plateau_support_monotone(name):
    c = make_cutoff(name)
    s = np.linspace(0, 1.5, 3001)
    v = c(s)
    assert np.all(v[s <= 0.5] == 1.0)
    assert np.all(v[s >= 1.0] == 0.0)
    assert np.all(np.diff(v) <= 1e-15)


def test_cutoff_known_values_and_orders():
    e = make_cutoff("exp_bump")
    # at s = 3/4 both psi terms are equal, so the profile is exactly 1/2
    assert float(e(0.75)) == pytest.approx(0.5, abs=1e-15)
    p = make_cutoff("poly_spline")
    assert float(p(0.75)) == pytest.approx(0.5, abs=1e-15)
    # t = 2s - 1 = 1/4: 1 - t^4 (35 - 84 t + 70 t^2 - 20 t^3)
    t = 0.25
    assert float(p(0.625)) == pytest.approx(1 - t**4 * (35 - 84 * t + 70 * t * t - 20 * t**3), abs=1e-15)
    assert e.smoothness_order == INFINITE_ORDER and p.smoothness_order == 3
    with pytest.raises(ValueError):
        make_cutoff("step")


def test_poly_spline_has_quartic_contact_at_both_joins():
    # C^3 but not C^4: departure from the plateaus is 35 (2 eps)^4 to leading order
    p = make_cutoff("poly_spline")
    for eps in (1e-3, 1e-4):
        u = 2 * eps
        assert 1 - float(p(0.5 + eps)) == pytest.approx(35 * u**4, rel=1e-2)
        assert float(p(1.0 - eps)) == pytest.approx(35 * u**4, rel=1e-2)


def test_theta_cutoff_is_one_near_center():
    g = s_rho_delta(0.5, 0.0)
    X = np.array([0.0, 3.0])
    assert float(theta_cutoff(g, 0.5, X, X)) == 1.0
    f, F = g.weights(X)
    far = X + np.array([0.0, 0.6 * float(F)])
    assert float(theta_cutoff(g, 0.5, X, far)) == 0.0


def test_gaussian_wigner_closed_form_512():
    ax = Axis(0.0, 8.0, 512)
    chi = SampledFunction1D.from_callable(ax, lambda y: np.exp(-np.pi * y * y))
    W = wigner(chi, chi)
    P = W.grid.mesh()
    ref = 2**0.5 * np.exp(-2 * np.pi * (P[..., 0] ** 2 + P[..., 1] ** 2))
    assert np.max(np.abs(W.values - ref)) <= 1e-8
    g = Window1D.gaussian()
    np.testing.assert_allclose(g.wigner(P), ref, atol=1e-15)


def test_sampled_window_wigner_matches_analytic():
    ax = Axis(0.0, 6.0, 256)
    w = Window1D.sampled(SampledFunction1D.from_callable(ax, lambda y: np.exp(-np.pi * y * y)))
    P = np.array([[0.0, 0.0], [0.3, -0.2], [0.7, 0.1]])
    # bicubic interpolation of a table with xi spacing 1/12
    np.testing.assert_allclose(w.wigner(P), Window1D.gaussian().wigner(P), atol=2e-5)
    assert w.wigner_at_zero() == pytest.approx(2**0.5, rel=1e-10)
    assert w.l2_norm_sq() == pytest.approx(2**-0.5, rel=1e-10)


def test_window_with_balanced_parity_is_degenerate():
    # W(chi, chi)(0) = 2 <chi, chi(-.)> vanishes when even and odd parts have equal norms
    ax = Axis(0.0, 6.0, 256)
    chi = SampledFunction1D.from_callable(ax, lambda y: (1 + 2 * math.sqrt(math.pi) * y) * np.exp(-np.pi * y * y))
    w = Window1D.sampled(chi)
    assert abs(w.wigner_at_zero()) < 1e-12
    with pytest.raises(DegenerateWindowError):
        make_wigner_family(euclidean(), chi=w)


def test_bump_family_integrates_to_one():
    for g in (euclidean(), s_rho_delta(0.5, 0.0)):
        fam = make_bump_family(g, min(0.5, g.constants.r0))
        Y = np.array([[0.0, 0.0], [1.0, 2.5], [-2.0, -4.0]])
        np.testing.assert_allclose(family_integral(fam, Y), 1.0, atol=2e-3)
    with pytest.raises(ValueError):
        make_bump_family(euclidean(), 10.0)


def test_bump_nondegeneracy_positive():
    g = s_rho_delta(0.5, 0.0)
    fam = make_bump_family(g, 0.5)
    Y = np.array([[0.0, 0.0], [2.0, 3.0], [-1.0, -6.0]])
    assert nondegeneracy_lower_bound(fam, Y) > 0.0


def test_wigner_family_euclidean_value_and_theta_auto():
    fam = make_wigner_family(euclidean())
    assert not fam.use_theta
    X = np.array([1.0, -0.5])
    Y = np.array([1.2, -0.3])
    assert complex(fam(X, Y)) == pytest.approx(2**0.5 * math.exp(-2 * math.pi * 0.08), rel=1e-14)
    assert make_wigner_family(s_rho_delta(0.5, 0.0)).use_theta
    assert not make_wigner_family(s_rho_delta(0.5, 0.5)).use_theta


def test_confinement_seminorm_order0_is_peak():
    fam = make_wigner_family(euclidean())
    Y = np.stack(np.meshgrid(np.linspace(-2, 2, 21), np.linspace(-2, 2, 21), indexing="ij"), -1).reshape(-1, 2)
    v0 = confinement_seminorm(fam, 0, np.zeros((1, 2)), Y)
    assert v0 == pytest.approx(2**0.5, rel=1e-12)
    assert confinement_seminorm(fam, 2, np.zeros((1, 2)), Y) >= v0


def test_family_from_spec_and_errors():
    g = euclidean()
    assert family_from_spec(g, {"kind": "bump", "r": 0.5}).kind == "bump"
    assert family_from_spec(g, {"kind": "wigner"}).kind == "wigner"
    assert family_from_spec(g, {"kind": "translate", "width": 1.0}).kind == "translate"
    with pytest.raises(ValueError):
        family_from_spec(g, {"kind": "bump", "radius": 0.5})
    with pytest.raises(ValueError):
        family_from_spec(g, {"kind": "other"})


def test_mollify_radius_check():
    g = euclidean()
    a = make_bump_family(g, 0.3)
    b = make_bump_family(g, 0.3)
    m = mollify_family(a, b)
    assert m.r == pytest.approx(math.sqrt(g.constants.C0) * 0.6)
    with pytest.raises(ValueError):
        mollify_family(a, make_wigner_family(g))
