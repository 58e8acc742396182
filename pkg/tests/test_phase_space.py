import math

import numpy as np
import pytest

from phasefield.errors import ConvergenceError
from phasefield.phase_space import (SampleSpec, ball_distance, ball_ball_distance, check_axioms, check_weight,
                                    constant_weight, det_symplectic, dual_metric, ellipsoid_projection,
                                    euclidean, eval_metric, jb_xi_weight, lemma_inequality_suite,
                                    metric_from_tag, s_rho_delta, secular_value, sg, shubin,
                                    weight_from_tag)


def jb(t):
    return np.sqrt(1.0 + t * t)


PRESETS = [euclidean(), s_rho_delta(0.5, 0.0), s_rho_delta(0.25, 0.25), s_rho_delta(1.0, 0.5),
           shubin(0.5), sg()]


def test_srd_weights_match_closed_form():
    g = s_rho_delta(0.75, 0.25)
    P = np.array([[1.3, -2.0], [0.0, 5.0]])
    f, F = g.weights(P)
    np.testing.assert_allclose(f, jb(P[:, 1]) ** -0.25, rtol=1e-14)
    np.testing.assert_allclose(F, jb(P[:, 1]) ** 0.75, rtol=1e-14)
    T = np.array([0.3, -0.7])
    expected = jb(5.0) ** 0.5 * 0.09 + jb(5.0) ** -1.5 * 0.49
    assert eval_metric(g, P[1], T) == pytest.approx(expected, rel=1e-14)


def test_sg_and_shubin_weights():
    P = np.array([2.0, -3.0])
    f, F = sg().weights(P)
    assert (float(f), float(F)) == pytest.approx((jb(2.0), jb(3.0)))
    f, F = shubin(0.5).weights(P)
    r = (1 + 4 + 9) ** 0.25
    assert (float(f), float(F)) == pytest.approx((r, r))


@pytest.mark.parametrize("g", PRESETS, ids=lambda g: g.preset_tag)
def test_dual_matches_matrix_dual_and_determinant_identity(g):
    P = SampleSpec(n_points=64).points(1)
    for X in P[:8]:
        Q = dual_metric(g, X).mat
        np.testing.assert_allclose(np.diag(Q), g.dual_diag(X), rtol=1e-12)
        d, ds = det_symplectic(g, X)
        assert d * ds == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("g", PRESETS, ids=lambda g: g.preset_tag)
def test_uncertainty_principle(g):
    P = SampleSpec(n_points=256).points(1)
    rng = np.random.default_rng(3)
    T = rng.normal(size=P.shape)
    assert np.all(g.eval(P, T) <= g.dual_eval(P, T) * (1 + 1e-12))


def test_symplectic_flags():
    assert euclidean().is_symplectic()
    assert s_rho_delta(0.5, 0.5).is_symplectic()
    assert not s_rho_delta(0.5, 0.25).is_symplectic()


def test_metric_tags_and_errors():
    assert metric_from_tag("srd:1/4:1/4").preset_tag == s_rho_delta(0.25, 0.25).preset_tag
    assert metric_from_tag("euclidean").preset_tag == "euclidean"
    with pytest.raises(ValueError):
        metric_from_tag("srd:1/4")
    with pytest.raises(ValueError):
        metric_from_tag("nope")
    with pytest.raises(ValueError):
        s_rho_delta(0.25, 0.5)
    assert weight_from_tag("jb_xi:2")(np.array([0.0, 1.0])) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        weight_from_tag("bogus")


def _ellipse_oracle(c, lam, rx, rxi, m=400_001):
    """min over the ellipse |u_x/rx|^2 + |u_xi/rxi|^2 <= 1 of lam . (c - u)^2, by dense boundary search."""
    if (c[0] / rx) ** 2 + (c[1] / rxi) ** 2 <= 1:
        return 0.0
    t = np.linspace(0, 2 * np.pi, m)
    u = np.stack([rx * np.cos(t), rxi * np.sin(t)], -1)
    vals = np.sum(lam * (c - u) ** 2, -1)
    k = int(np.argmin(vals))
    # parabolic refinement around the discrete minimum
    tt = np.linspace(t[max(k - 1, 0)], t[min(k + 1, m - 1)], 20001)
    u = np.stack([rx * np.cos(tt), rxi * np.sin(tt)], -1)
    return float(np.min(np.sum(lam * (c - u) ** 2, -1)))


def test_ball_distance_dense_oracle():
    rng = np.random.default_rng(11)
    gs = [s_rho_delta(1.0, 0.0), s_rho_delta(0.75, 0.25), sg(), shubin(0.5)]
    worst = 0.0
    for i in range(40):
        g = gs[i % len(gs)]
        X = rng.uniform(-6, 6, 2)
        P = rng.uniform(-6, 6, 2)
        r = rng.uniform(0.1, 1.0)
        f, F = g.weights(X)
        Y = X + rng.normal(size=2) * np.array([f, F]) * 3
        got = ball_distance(g, X, r, Y, dual_at=P)
        ref = _ellipse_oracle(Y - X, g.dual_diag(P), r * float(f), r * float(F))
        if ref > 0:
            worst = max(worst, abs(got - ref) / ref)
    assert worst <= 1e-6


def test_ball_distance_inside_and_errors():
    g = s_rho_delta(0.5, 0.25)
    X = np.array([1.0, 2.0])
    assert ball_distance(g, X, 0.5, X + 0.01) == 0.0
    with pytest.raises(ValueError):
        ball_distance(g, X, 0.0, X)


def test_secular_value_matches_projection_and_reports_nonconvergence():
    lam = np.array([[4.0, 0.25]])
    c = np.array([[3.0, -2.0]])
    v = secular_value(lam, c, 1.0)
    ref = _ellipse_oracle(c[0], lam[0], 1.0, 1.0)
    assert float(v[0]) == pytest.approx(ref, rel=1e-8)
    with pytest.raises(ConvergenceError) as exc:
        secular_value(np.array([[1e8, 1e-8]]), np.array([[5.0, 5.0]]), 1.0, tol=0.0, maxiter=2)
    assert exc.value.diagnostics


def test_ellipsoid_projection_full_matrices():
    rng = np.random.default_rng(5)
    for _ in range(10):
        A = rng.normal(size=(2, 2))
        Q = A @ A.T + 0.2 * np.eye(2)
        B = rng.normal(size=(2, 2))
        S = B @ B.T + 0.2 * np.eye(2)
        d = rng.normal(size=2) * 4
        r = 0.7
        val, w = ellipsoid_projection(Q, S, d, r)
        assert w @ Q @ w <= r * r * (1 + 1e-8)
        # dense oracle on the boundary in Q-whitened coordinates
        L = np.linalg.cholesky(Q)
        t = np.linspace(0, 2 * np.pi, 200001)
        Z = np.linalg.solve(L.T, r * np.stack([np.cos(t), np.sin(t)]))
        diff = d[:, None] - Z
        ref = float(np.min(np.einsum("im,ij,jm->m", diff, S, diff)))
        if d @ Q @ d <= r * r:
            ref = 0.0
        got = float((d - w) @ S @ (d - w))
        assert got == pytest.approx(ref, rel=1e-6, abs=1e-12)
        assert val == pytest.approx(got, rel=1e-9, abs=1e-12)


def test_ball_ball_distance_concentric_is_zero_and_separated_is_positive():
    g = euclidean()
    X = np.zeros(2)
    assert ball_ball_distance(g, X, 1.0, X, 1.0) == pytest.approx(0.0, abs=1e-12)
    # unit euclidean balls at distance 5: gap 3, dual metric is the identity
    assert ball_ball_distance(g, X, 1.0, np.array([5.0, 0.0]), 1.0) == pytest.approx(9.0, rel=1e-6)


@pytest.mark.parametrize("g", [euclidean(), s_rho_delta(0.5, 0.5), s_rho_delta(1.0, 0.0), sg(), shubin(0.5)],
                         ids=lambda g: g.preset_tag)
def test_axioms_pass_on_presets(g):
    reports = check_axioms(g, SampleSpec(n_points=256, n_pairs=1024))
    assert {r.axiom for r in reports} >= {"uncertainty"}
    failed = [r.to_dict() for r in reports if not r.passed]
    assert not failed


def test_weights_admissible():
    spec = SampleSpec(n_points=256, n_pairs=1024)
    assert check_weight(constant_weight(), euclidean(), spec).passed
    assert check_weight(jb_xi_weight(1.0), s_rho_delta(0.5, 0.5), spec).passed


def test_lemma_suite_reports_all_inequalities():
    reps = lemma_inequality_suite(euclidean(), 1.0, SampleSpec(n_points=128, n_pairs=256))
    assert [r.axiom for r in reps] == ["lemma_p1", "lemma_p2", "lemma_p3", "lemma_p3_1", "lemma_p4",
                                       "lemma_p5", "lemma_p6", "lemma_p7"]
    assert all(r.passed for r in reps)
    with pytest.raises(ValueError):
        lemma_inequality_suite(euclidean(), 10.0)


def test_sample_spec_is_deterministic():
    a = SampleSpec(seed=1).points(1)
    b = SampleSpec(seed=1).points(1)
    c = SampleSpec(seed=2).points(1)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.all(np.abs(a) <= 10.0)
