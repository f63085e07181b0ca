import json
import math

import numpy as np
import pytest

from conftest import random_v0_ensemble
from gaussent import detection as dt
from gaussent import scenarios as sc
from gaussent.covariance import (
    QuadratureMatrix,
    StandardFormV0,
    UnphysicalStateError,
    apply,
    beam_splitter,
    tensor,
    thermal,
    to_standard_v0,
    vacuum,
)
from gaussent.separability import lemma1_separability


def tmst(n_tilde, s):
    return sc.two_mode_squeezed_thermal(sc.SqueezedThermalParams(n_tilde, s))


def e_prime_witness():
    # delta1 = 0.1, delta2 = 5 with c1 < 0 < c2 so the state is physical
    return StandardFormV0(n1=1.1, n2=10.0, c1=-1.0, c2=5.0)


# --- efficiency channel -------------------------------------------------------

def test_efficiency_channel_examples():
    V = tmst(1, 0.5).matrix()
    assert dt.efficiency_channel(V, 1.0) == V
    assert dt.efficiency_channel(V, 0.0) == vacuum(2)
    f = to_standard_v0(dt.efficiency_channel(V, dt.EfficiencyModel(0.5)))
    assert f.n1 == pytest.approx(1.2715403174076219, abs=1e-14)
    assert abs(f.c1) == pytest.approx(0.5876005968219007, abs=1e-14)
    with pytest.raises(ValueError):
        dt.EfficiencyModel(1.2)


def test_efficiency_channel_is_beam_splitter_loss():
    V = sc.beam_splitter_entangler(sc.EntanglerParams(1.3, 1.1, 0.6, 0.2)).matrix()
    eta = 0.37
    W = V
    for mode in (0, 1):
        W = sc.thermal_loss_dilation(W, mode, eta, 1.0)
    np.testing.assert_allclose(dt.efficiency_channel(V, eta).entries, W.entries, atol=1e-13)


def test_detected_condition_examples():
    v = dt.detected_entanglement_condition(0.5, 1.5, 0.7)
    assert v.witness_lhs == pytest.approx(0.8775, abs=1e-14)
    assert v.entangled_or_violated
    assert not dt.detected_entanglement_condition(0.1, 5, 0.5).entangled_or_violated
    assert dt.detected_entanglement_condition(0.1, 5, 0.9).entangled_or_violated
    assert dt.detection_threshold(0.1, 5) == pytest.approx(3.1 / 3.6, abs=1e-15)
    with pytest.raises(ValueError):
        dt.detected_entanglement_condition(-0.1, 1, 0.5)


def test_channel_identity_on_random_triples():
    rng = np.random.default_rng(4)
    states = random_v0_ensemble(1000, seed=4)
    for f in states:
        eta = rng.uniform(0, 1)
        g = to_standard_v0(dt.efficiency_channel(f.matrix(), eta))
        direct = g.delta1 * g.delta2
        poly = dt.detected_product(f.delta1, f.delta2, eta)
        assert direct == pytest.approx(poly, abs=1e-11 * max(1, abs(poly)))
        if abs(direct - 1) > 1e-9:
            assert (lemma1_separability(g).entangled_or_violated
                    == dt.detected_entanglement_condition(f.delta1, f.delta2, eta).entangled_or_violated)


def test_robustness_theorem():
    etas = np.arange(0.01, 1.0001, 0.01)
    rng = np.random.default_rng(6)
    n_e = n_ep = 0
    for f in random_v0_ensemble(3000, seed=6):
        d1, d2 = f.delta1, f.delta2
        if d1 * d2 >= 1 - 1e-7:
            continue
        flags = [dt.detected_entanglement_condition(d1, d2, e).entangled_or_violated for e in etas]
        if d1 + d2 < 2:
            n_e += 1
            assert all(flags)
        else:
            n_ep += 1
            star = dt.detection_threshold(d1, d2)
            assert 0 < star < 1
            assert not dt.detected_entanglement_condition(d1, d2, star / 2).entangled_or_violated
    assert n_e > 0 and n_ep > 0


def test_classify_region():
    assert dt.classify_region(StandardFormV0(1, 1, 0, 0)) is dt.RegionLabel.S
    f = tmst(2, 0.5)
    assert f.delta1 == pytest.approx(0.7357588823428847)
    assert dt.classify_region(f) is dt.RegionLabel.E
    w = e_prime_witness()
    assert (w.delta1, w.delta2) == pytest.approx((0.1, 5.0))
    assert dt.classify_region(w) is dt.RegionLabel.E_PRIME
    assert dt.region_of(1, 1) is dt.RegionLabel.S
    assert dt.region_of(0.5, 1.4) is dt.RegionLabel.E
    # 0.3 * 3.5 = 1.05 >= 1, so this point sits just inside S
    assert dt.region_of(0.3, 3.5) is dt.RegionLabel.S
    assert dt.region_of(0.25, 3.5) is dt.RegionLabel.E_PRIME


# --- tap ----------------------------------------------------------------------------

def test_tap_vacuum():
    assert dt.tap_beam_splitter_extend(vacuum(2)) == vacuum(3)


@pytest.mark.parametrize("mode", [0, 1])
def test_tap_matches_embedded_beam_splitter(mode):
    rng = np.random.default_rng(12 + mode)
    from conftest import random_local_symplectic
    V = apply(random_local_symplectic(rng), tmst(1.4, 0.6).matrix())
    T = dt.tap_beam_splitter_extend(V, mode)
    O = apply(beam_splitter(math.pi / 2, 0), tensor(V, vacuum(1)), modes=(2, mode))
    np.testing.assert_allclose(T.entries, O.entries, atol=1e-12)
    np.testing.assert_allclose(T.marginal([1 - mode]).entries, V.marginal([1 - mode]).entries, atol=1e-15)


def test_tap_off_diagonal_element():
    v = np.eye(4) * 2
    v[0, 1] = v[1, 0] = 0.6
    V = QuadratureMatrix(v)
    T = dt.tap_beam_splitter_extend(V)
    # element (q1', p3) is -V12 / 2; true covariance halves it again
    assert T.entries[0, 5] == pytest.approx(-0.3)


# --- sampling ------------------------------------------------------------------------

def test_sample_vacuum_statistics():
    b = dt.sample_homodyne(vacuum(2), dt.HomodyneSetting((0.0, 0.0)), 10**6, seed=1)
    x = b.outcomes
    cov = np.cov(x.T)
    se_var = 0.5 * math.sqrt(2 / 10**6)
    assert abs(cov[0, 0] - 0.5) < 3 * se_var and abs(cov[1, 1] - 0.5) < 3 * se_var
    assert abs(cov[0, 1]) < 3 * 0.5 / 1000


def test_sample_tmsv_cross_covariance():
    b = dt.sample_homodyne(tmst(1, 0.5).matrix(), dt.HomodyneSetting((0.0, 0.0)), 10**6, seed=2)
    x = b.outcomes
    c = np.mean(x[:, 0] * x[:, 1])
    se = np.std(x[:, 0] * x[:, 1]) / 1000
    assert abs(c - (-0.5876005968219007)) < 3 * se


def test_sample_determinism():
    V = tmst(1.2, 0.3).matrix()
    s = dt.HomodyneSetting((0.3, 1.2))
    a = dt.sample_homodyne(V, s, 1000, seed=7)
    b = dt.sample_homodyne(V, s, 1000, seed=7)
    np.testing.assert_array_equal(a.outcomes, b.outcomes)
    assert a.to_csv() == b.to_csv()


def test_sample_rejects_unphysical():
    with pytest.raises(UnphysicalStateError):
        dt.sample_homodyne(QuadratureMatrix(np.eye(4) * 0.5), dt.HomodyneSetting((0.0, 0.0)), 10, 0)


def test_commutation_guard():
    with pytest.raises(dt.NonCommutingMeasurement):
        dt.HomodyneSetting(((0.0, math.pi / 2), 0.0))
    # q and -q commute; allowed
    dt.HomodyneSetting(((0.0, math.pi), 0.0))


def test_sample_export_formats():
    b = dt.sample_homodyne(vacuum(2), dt.HomodyneSetting((0.0, None, 1.5707963267948966), tapped_mode=0),
                           5, seed=3, eta=0.8)
    lines = b.to_csv().splitlines()
    assert lines[0] == "shot,mode0,mode2"
    assert len(lines) == 6
    row = lines[1].split(",")
    assert float(row[1]) == b.outcomes[0, 0]
    side = b.sidecar()
    assert side == {"seed": 3, "setting": {"chi_per_mode": [0.0, None, 1.5707963267948966],
                                           "tapped_mode": 0}, "eta": 0.8, "shots": 5}
    json.dumps(side)


# --- reconstruction ----------------------------------------------------------------------

def test_reconstruct_rejects_few_shots():
    with pytest.raises(ValueError):
        dt.reconstruct_quadrature_matrix(vacuum(2), 99)


def test_reconstruct_tmsv():
    V = tmst(1, 0.5).matrix()
    rec = dt.reconstruct_quadrature_matrix(V, 10**6, 1.0, seed=11)
    z = np.abs(rec.V_hat - V.entries) / rec.se
    assert np.all(z < 4)
    verdicts = {v.test_name: v for v in dt.reconstruction_verdicts(rec)}
    assert verdicts["lemma1"].entangled_or_violated
    assert verdicts["simon_ppt"].entangled_or_violated


def test_reconstruct_vacuum_is_separable_boundary():
    rec = dt.reconstruct_quadrature_matrix(vacuum(2), 10**5, 1.0, seed=5)
    assert np.all(np.abs(rec.V_hat - np.eye(4)) < 4 * rec.se)
    for v in dt.reconstruction_verdicts(rec):
        assert not v.entangled_or_violated
        assert v.boundary_flag


def test_reconstruct_region_e_under_loss():
    V = tmst(2, 0.5).matrix()
    rec = dt.reconstruct_quadrature_matrix(V, 10**5, 0.6, seed=13)
    expected = dt.efficiency_channel(V, 0.6).entries
    assert np.all(np.abs(rec.V_hat - expected) < 4 * rec.se)
    verdicts = {v.test_name: v for v in dt.reconstruction_verdicts(rec)}
    assert verdicts["lemma1"].entangled_or_violated
    corrected, se = rec.corrected()
    assert np.all(np.abs(corrected - V.entries) < 4 * se)


def test_reconstruction_is_deterministic():
    V = tmst(1.3, 0.4).matrix()
    a = dt.reconstruct_quadrature_matrix(V, 1000, 0.9, seed=21)
    b = dt.reconstruct_quadrature_matrix(V, 1000, 0.9, seed=21)
    assert dt.report_json(dt.reconstruction_report(a)) == dt.report_json(dt.reconstruction_report(b))


def test_tap_estimates_local_off_diagonals():
    v = np.eye(4) * 2.0
    v[0, 1] = v[1, 0] = 0.7
    v[2, 3] = v[3, 2] = -0.4
    V = QuadratureMatrix(v)
    rec = dt.reconstruct_quadrature_matrix(V, 10**5, 1.0, seed=17)
    assert abs(rec.V_hat[0, 1] - 0.7) < 4 * rec.se[0, 1]
    assert abs(rec.V_hat[2, 3] + 0.4) < 4 * rec.se[2, 3]


def test_estimator_error_scaling():
    V = tmst(1, 0.5).matrix()
    errs = []
    for shots in (10**4, 10**5, 10**6):
        e = [np.max(np.abs(dt.reconstruct_quadrature_matrix(V, shots, 1.0, seed=k).V_hat - V.entries))
             for k in range(5)]
        errs.append(np.mean(e))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    # ideal ratio is sqrt(10) per decade
    assert np.all(ratios > 1.8) and np.all(ratios < 5.5)


def test_standard_error_calibration():
    V = tmst(1.2, 0.4).matrix()
    inside = total = 0
    for k in range(200):
        rec = dt.reconstruct_quadrature_matrix(V, 2000, 1.0, seed=1000 + k)
        iu = np.triu_indices(4)
        z = np.abs(rec.V_hat - V.entries)[iu] / rec.se[iu]
        inside += int(np.sum(z < 3))
        total += z.size
    frac = inside / total
    # 2000 draws: binomial spread on 2000 elements is ~0.0012 around 0.9973
    assert 0.990 < frac <= 1.0
