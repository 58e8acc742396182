import json
import math

import numpy as np
import pytest

from phasefield import modspace as ms
from phasefield.diagnostics import (N_LADDER, DecayReport, DiagField, DiagSampleSpec, calibrated_decay, classify,
                                    decay_fit, diag_field, diag_window, keyidentity_crosscheck, ladder_weight,
                                    metaplectic_crosscheck, modspace_membership, sample_spec_from_dict,
                                    showcase_srd, sup_ladder)
from phasefield.errors import ConvergenceError
from phasefield.phase_space import constant_weight, euclidean, s_rho_delta
from phasefield.symbols import symbol_preset

G = euclidean()
ONE = constant_weight()
SMALL = DiagSampleSpec(mid_extent=2.0, mid_points=3)


def zero(x, xi):
    return 0 * np.asarray(x) + 0 * np.asarray(xi)


def test_sample_spec_geometry():
    spec = DiagSampleSpec()
    assert spec.midpoints().shape == (81, 2)
    Z, dZ = spec.offsets()
    assert Z.shape == (1 + 17 * 12, 2) and dZ is None
    lat = DiagSampleSpec(layout="lattice", lattice_points=8, lattice_extent=2.0)
    Z, dZ = lat.offsets()
    assert Z.shape == (64, 2) and np.sum(dZ) == pytest.approx(16.0)
    assert sample_spec_from_dict({"mid_points": 3, "radii": [1, 2]}).radii == (1.0, 2.0)
    with pytest.raises(ValueError):
        DiagSampleSpec(layout="spiral")
    with pytest.raises(TypeError):
        sample_spec_from_dict({"mid_pts": 3})


def test_metric_distance_equals_radius_squared():
    g = s_rho_delta(0.5, 0.25)
    fld = diag_field(symbol_preset("const1"), g, ONE, sample_spec=SMALL, points=64)
    f, F = g.weights(fld.mid)
    d = fld.Xi - fld.X
    np.testing.assert_allclose((d[:, 0] / f) ** 2 + (d[:, 1] / F) ** 2, fld.gdist, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(0.5 * (fld.X + fld.Xi), fld.mid, atol=1e-14)


def test_zero_symbol_field_and_verdict():
    fld = diag_field(zero, G, ONE, sample_spec=SMALL, points=64)
    assert np.all(fld.modulus == 0)
    rep = decay_fit(fld, ONE)
    assert rep.verdict == "consistent_in_class" and "zero field" in rep.caveats
    v, _ = modspace_membership(zero, ladder_weight(G, 2, ONE), math.inf, G, field_=fld)
    assert v == 0.0


def test_constant_symbol_field_is_ambiguity_gaussian():
    fld = diag_field(symbol_preset("const1"), G, ONE, sample_spec=SMALL)
    ref = 2**-0.5 * np.exp(-np.pi * fld.gdist / 2)
    assert np.max(np.abs(fld.modulus - ref)) <= 1e-12


def test_nonfinite_modulus_raises_convergence_error():
    with pytest.raises(ConvergenceError) as exc:
        DiagField(np.zeros((2, 2)), np.zeros((2, 2)), np.array([1.0, np.nan]), np.zeros((2, 2)), np.zeros(2))
    assert exc.value.diagnostics["non_finite_samples"] == 1


def test_keyidentity_euclidean_and_srd_small():
    for g in (G, s_rho_delta(0.25, 0.25)):
        assert keyidentity_crosscheck(symbol_preset("sinsin"), g, ONE, sample_spec=SMALL) <= 1e-3
    assert keyidentity_crosscheck(zero, G, ONE, sample_spec=SMALL) == 0.0


def test_metaplectic_small_and_nonsymplectic_error():
    assert metaplectic_crosscheck(symbol_preset("sinsin"), s_rho_delta(0.5, 0.5), ONE, sample_spec=SMALL) <= 1e-3
    with pytest.raises(ValueError):
        metaplectic_crosscheck(symbol_preset("sinsin"), s_rho_delta(0.5, 0.0), ONE, sample_spec=SMALL)


def test_p_inf_membership_coincides_with_sup_ladder():
    g = s_rho_delta(0.5, 0.5)
    from phasefield.phase_space import jb_xi_weight
    M = jb_xi_weight(1.0)
    a = symbol_preset("jb_xi")
    fld = diag_field(a, g, M, sample_spec=SMALL)
    sups = sup_ladder(fld, M)
    for N, sv in zip(N_LADDER, sups):
        v, rep = modspace_membership(a, ladder_weight(g, N, M), math.inf, g, M=M, field_=fld)
        assert v == pytest.approx(sv, rel=1e-12)
        assert rep["p"] == "inf"


def test_p2_membership_matches_modulation_norm():
    g = s_rho_delta(0.25, 0.25)
    spec = DiagSampleSpec(mid_extent=2.0, mid_points=3, layout="lattice", lattice_points=48, lattice_extent=4.0)
    a = symbol_preset("gauss")
    v, _ = modspace_membership(a, ms.unit_weight(), 2, g, sample_spec=spec)
    mids = spec.midpoints()
    ref = ms.modulation_norm(a, diag_window(g, ONE), ms.unit_weight(), 2, 2, g, mids,
                             g.volume_density(mids) * spec.mid_cell(), points=256)
    assert v == pytest.approx(ref, rel=1e-3)
    with pytest.raises(ValueError):
        modspace_membership(a, ms.unit_weight(), 2, g, sample_spec=SMALL)


def test_decay_rule_separates_constant_and_chirp():
    spec = DiagSampleSpec(mid_points=5)
    rep1, _ = calibrated_decay(symbol_preset("const1"), G, ONE, sample_spec=spec)
    rep2, _ = calibrated_decay(symbol_preset("chirp"), G, ONE, sample_spec=spec)
    assert rep1.verdict == "consistent_in_class"
    assert rep1.fitted_exponent > max(N_LADDER)
    assert rep2.verdict == "inconsistent"


def test_too_few_annuli_is_indeterminate():
    spec = DiagSampleSpec(mid_points=3, radii=(0.5, 1.0, 2.0))
    rep, _ = calibrated_decay(symbol_preset("const1"), G, ONE, sample_spec=spec, points=64)
    assert rep.verdict == "indeterminate"


def test_decay_report_json_fields():
    rep = DecayReport([0, 1], [1.0, 2.0], None, "indeterminate", ["c"], {"g": math.inf})
    d = rep.to_dict()
    assert set(d) == {"schema_version", "N_ladder", "sup_estimates", "fitted_exponent", "verdict", "caveats",
                      "indicators"}
    json.dumps(d, allow_nan=False)


def test_showcase_zero_parameters_reduce_to_euclidean():
    a = symbol_preset("sinsin")
    rep = showcase_srd(a, 0.0, 0.0, sample_spec=SMALL, points=128)
    ref = decay_fit(diag_field(a, G, ONE, theta_family="none", sample_spec=SMALL, points=128), ONE)
    assert rep.sup_estimates == pytest.approx(ref.sup_estimates, rel=1e-12)
    assert rep.indicators["with_theta"] == rep.indicators["without_theta"]
    fld_srd = diag_field(a, s_rho_delta(0.0, 0.0), ONE, theta_family="none", sample_spec=SMALL, points=128)
    fld_eu = diag_field(a, G, ONE, theta_family="none", sample_spec=SMALL, points=128)
    np.testing.assert_allclose(fld_srd.modulus, fld_eu.modulus, rtol=1e-13, atol=1e-15)


def test_showcase_parameter_errors():
    a = symbol_preset("const1")
    for rho, delta in [(0.25, 0.5), (1.0, 1.0), (-0.1, -0.2), (1.5, 0.0)]:
        with pytest.raises(ValueError):
            showcase_srd(a, rho, delta)


def test_classify_rejects_unknown_keys():
    with pytest.raises(ValueError):
        classify(symbol_preset("const1"), G, ONE, {"nonsense": 1})
