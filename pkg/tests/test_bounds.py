import math

import pytest

from chlab import OperatorParams
from chlab.bounds import (BlowupFit, SweepRecord, conjugate_bound_probe,
                          conjugate_probe_function, conjugate_sweep_records,
                          conjugate_upper_bound, default_conjugate_p_list,
                          fit_blowup, gls_transfer_ratio, hardy_convolution_bound,
                          lower_bound_K_empirical, psi_K_transfer, sweep_ratio,
                          upper_bound_K, vs_ratio_record)
from chlab.errors import EmptyIntersectionError, FitError, RangeError
from chlab.exponents import exponent_window, q_of_p
from chlab.functions import indicator, make_f0
from chlab.norms import PsiFunction
from chlab.operators import weight_one
from chlab.quadrature import gamma_fn

P1 = OperatorParams(0.3, 0.2, 0.2)
W1 = exponent_window(P1)

K_AT_1_8 = 3.249386049360857042566931  # independent high-precision value


def test_upper_bound_frozen_value():
    assert upper_bound_K(P1, 1.8) == pytest.approx(K_AT_1_8, rel=1e-12)


def test_upper_bound_blows_up_at_left_edge():
    ks = [upper_bound_K(P1, W1.p_minus + d) for d in (1e-1, 1e-2, 1e-3, 1e-4)]
    assert ks[0] < ks[1] < ks[2] < ks[3]
    # the blow-up is a negative power of the distance (about kappa = 0.7
    # per decade), not just growth
    assert ks[2] / ks[1] > 4.5
    assert upper_bound_K(P1, W1.p_plus) > 0.0  # finite at the right edge


def test_upper_bound_window_enforced():
    with pytest.raises(RangeError):
        upper_bound_K(P1, W1.p_minus)
    with pytest.raises(RangeError):
        upper_bound_K(P1, 2.3)


def test_empirical_ratios_stay_below_K():
    ind = indicator(0.0, 1.0)
    frozen = {1.5: 3.573790374, 1.8: 1.896329679, 2.0: 1.6946646}
    for p, ratio_ref in frozen.items():
        rec = lower_bound_K_empirical(P1, p, ind)
        assert rec.error is None
        assert rec.ratio == pytest.approx(ratio_ref, rel=1e-6)
        assert rec.ratio <= rec.upper_bound
        assert rec.upper_bound == pytest.approx(upper_bound_K(P1, p),
                                                rel=1e-12)
        assert rec.ratio == pytest.approx(rec.image_norm / rec.f_norm,
                                          rel=1e-12)


def test_sweep_ratio_records_errors_per_point():
    f0 = make_f0(P1)
    p_bad = W1.p_minus  # ||f0||_p divergent here
    recs = sweep_ratio(P1, f0, [1.8, p_bad, 1.9])
    assert len(recs) == 3
    assert recs[0].error is None and recs[2].error is None
    assert recs[1].error is not None
    assert math.isnan(recs[1].ratio)
    assert recs[0].ratio == pytest.approx(
        lower_bound_K_empirical(P1, 1.8, f0).ratio, rel=1e-9)


def test_fit_blowup_recovers_synthetic_exponent():
    p_minus = W1.p_minus
    recs = [SweepRecord(p=p_minus + 10.0 ** -k,
                        ratio=2.0 * (10.0 ** -k) ** -0.63)
            for k in range(1, 6)]
    fit = fit_blowup(recs, p_minus)
    assert isinstance(fit, BlowupFit)
    assert fit.fitted_exponent == pytest.approx(-0.63, abs=1e-10)
    assert fit.fitted_constant == pytest.approx(2.0, rel=1e-9)
    assert fit.residual < 1e-10
    assert len(fit.p_points) == 5


def test_fit_blowup_needs_four_usable_points():
    p_minus = W1.p_minus
    good = [SweepRecord(p=p_minus + 10.0 ** -k, ratio=10.0 ** (0.63 * k))
            for k in range(1, 4)]
    with pytest.raises(FitError):
        fit_blowup(good, p_minus)
    # error-annotated points do not count as usable
    padded = good + [SweepRecord(p=p_minus + 1e-4, error="norm: divergent")]
    with pytest.raises(FitError):
        fit_blowup(padded, p_minus)


def test_psi_K_transfer_maps_support_and_values():
    psi = PsiFunction(kind="constant", A=1.5, B=1.9, value=2.0)
    psi_K, psi_ab = psi_K_transfer(P1, psi)
    assert psi_ab.A == pytest.approx(1.5, rel=1e-12)
    assert psi_ab.B == pytest.approx(1.9, rel=1e-12)
    assert psi_K.A == pytest.approx(q_of_p(P1, 1.5), rel=1e-9)
    assert psi_K.B == pytest.approx(q_of_p(P1, 1.9), rel=1e-9)
    p = 1.7
    q = q_of_p(P1, p)
    assert psi_K(q) == pytest.approx(upper_bound_K(P1, p) * psi(p), rel=1e-9)


def test_psi_K_transfer_clips_to_window():
    psi = PsiFunction(kind="constant", A=1.0, B=5.0, value=1.0)
    psi_K, psi_ab = psi_K_transfer(P1, psi)
    assert psi_ab.A == pytest.approx(W1.p_minus, rel=1e-9)
    assert psi_ab.B == pytest.approx(W1.p_plus, rel=1e-9)


def test_psi_K_transfer_empty_overlap():
    with pytest.raises(EmptyIntersectionError):
        psi_K_transfer(P1, PsiFunction(kind="constant", A=3.0, B=4.0,
                                       value=1.0))
    # touching the window at a single boundary point is still empty
    with pytest.raises(EmptyIntersectionError):
        psi_K_transfer(P1, PsiFunction(kind="constant", A=2.0, B=2.5,
                                       value=1.0))


def test_gls_transfer_ratio_single_combo():
    psi = PsiFunction(kind="constant", A=1.5, B=1.9, value=1.0)
    out = gls_transfer_ratio(P1, indicator(0.0, 1.0), psi, p_grid_size=12)
    assert set(out) >= {"lhs", "rhs", "ratio"}
    assert out["ratio"] == pytest.approx(
        out["lhs"].value / out["rhs"].value, rel=1e-12)
    assert out["ratio"] <= 1.0 + 1e-3


def test_hardy_convolution_bound():
    w = weight_one()
    assert hardy_convolution_bound(w, 2.0) == pytest.approx(4.0, rel=1e-14)
    assert hardy_convolution_bound(w, 1.5) == pytest.approx(4.5, rel=1e-14)
    rec = vs_ratio_record(w, indicator(0.0, 1.0), 2.0)
    assert rec.ratio == pytest.approx(math.sqrt(2.0), rel=1e-9)
    assert rec.ratio <= hardy_convolution_bound(w, 2.0)
    # the averaging operator's exact norm p/(p-1) is the sharper ceiling
    assert rec.ratio <= 2.0 + 1e-6


def test_conjugate_upper_bound_duality():
    # the conjugate bound at source exponent p is the swapped-parameter
    # direct bound at the dual of q(p), divided by Gamma(alpha)
    swapped = OperatorParams(P1.beta, P1.alpha, P1.lam)
    for p in (1.6, 1.8, 1.95):
        q_dual = q_of_p(P1, p)
        q_dual = q_dual / (q_dual - 1.0)
        assert conjugate_upper_bound(P1, p) == pytest.approx(
            upper_bound_K(swapped, q_dual) / gamma_fn(P1.alpha), rel=1e-12)


def test_conjugate_probe_recovers_blowup():
    p_list = default_conjugate_p_list(P1)
    assert len(p_list) == 4
    recs = conjugate_sweep_records(P1, p_list)
    assert all(r.error is None for r in recs)
    ratios = [2.32247519581, 11.8141397199, 59.3003568042, 297.250724422]
    for rec, ref in zip(recs, ratios):
        assert rec.ratio == pytest.approx(ref, rel=1e-6)
        assert rec.ratio <= rec.upper_bound
    fit = conjugate_bound_probe(P1, p_list)
    assert fit.fitted_exponent == pytest.approx(-0.7022170716, rel=1e-6)
    assert abs(fit.fitted_exponent - (-0.7)) / 0.7 < 0.15
    assert conjugate_probe_function(P1).pieces  # probe family is non-empty
