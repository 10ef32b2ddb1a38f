import math

import mpmath as mp
import pytest

from chlab import OperatorParams
from chlab.errors import ConfigError, DivergenceError, DomainError
from chlab.functions import (FunctionSpec, Piece, ProductFunctionSpec,
                             indicator, make_f0, power_function)
from chlab.norms import (PsiFunction, anisotropic_norm, clear_caches,
                         gls_image_norm, gls_norm, image_lq_norm, lp_norm,
                         natural_psi, psi_from_json)
from chlab.operators import weight_one
from chlab.exponents import exponent_window, q_of_p

mp.mp.dps = 40

P1 = OperatorParams(0.3, 0.2, 0.2)


def f0_norm(p: float) -> float:
    return (0.7 * p - 1.0) ** (-1.0 / p)


def test_lp_closed_forms():
    f0 = make_f0(P1)
    for p in (1.6, 1.8, 2.0, 3.5):
        assert lp_norm(f0, p).value == pytest.approx(f0_norm(p), rel=1e-12)
    for p in (1.0, 2.0, 7.3):
        assert lp_norm(indicator(0.0, 1.0), p).value == pytest.approx(
            1.0, rel=1e-13)


def test_lp_scaling_homogeneity():
    # single-piece scale factors multiply outside the quadrature, so the
    # homogeneity |c f|_p = |c| |f|_p holds bit-exactly
    base = FunctionSpec((Piece(0.0, 1.0, -0.2, 0.0, 3.0),))
    scaled = FunctionSpec((Piece(0.0, 1.0, -0.2, 0.0, 21.0),))
    for p in (1.0, 1.7, 4.0):
        assert lp_norm(scaled, p).value == 7.0 * lp_norm(base, p).value
    # mixed-coefficient specs recombine p-th powers, costing at most an ulp
    two = FunctionSpec((Piece(0.0, 1.0, -0.2, 0.0, 3.0),
                        Piece(1.0, math.inf, -0.9, 0.0, 5.0)))
    two7 = FunctionSpec((Piece(0.0, 1.0, -0.2, 0.0, 21.0),
                         Piece(1.0, math.inf, -0.9, 0.0, 35.0)))
    assert lp_norm(two7, 1.7).value == pytest.approx(
        7.0 * lp_norm(two, 1.7).value, rel=5e-16)


def test_lp_powerlog_against_gamma_formula():
    # ∫_0^1 y^(-a p) |log y|^(t p) dy = Gamma(t p + 1)/(1 - a p)^(t p + 1)
    a, t = 0.4, 0.3
    f = power_function(-a, lo=0.0, hi=1.0, theta=t)
    for p in (1.3, 2.0):
        ref = float(mp.gamma(t * p + 1) / mp.mpf(1 - a * p) ** (t * p + 1))
        assert lp_norm(f, p).value == pytest.approx(ref ** (1.0 / p),
                                                    rel=1e-10)


def test_lp_divergence_is_raised():
    f0 = make_f0(P1)
    w = exponent_window(P1)
    with pytest.raises(DivergenceError):
        lp_norm(f0, w.p_minus)
    with pytest.raises(DivergenceError):
        lp_norm(f0, 1.2)


def test_image_norm_frozen_value():
    p = 1.0 / 0.7 + 0.1
    q = q_of_p(P1, p)
    res = image_lq_norm(make_f0(P1), q, op="U", params=P1)
    assert res.value == pytest.approx(28.378818315847797792, rel=5e-7)


def test_image_norm_VS_closed_form():
    # V_S[1_(0,1)](x) = min(x,1)/x, so ||.||_q^q = 1 + 1/(q-1)
    ind = indicator(0.0, 1.0)
    for q in (2.0, 3.0):
        res = image_lq_norm(ind, q, op="VS", weight=weight_one())
        assert res.value == pytest.approx(
            (1.0 + 1.0 / (q - 1.0)) ** (1.0 / q), rel=1e-9)


def test_image_norm_cache_consistency():
    f0 = make_f0(P1)
    q = q_of_p(P1, 1.8)
    first = image_lq_norm(f0, q, op="U", params=P1).value
    cached = image_lq_norm(f0, q, op="U", params=P1).value
    assert cached == first
    clear_caches()
    recomputed = image_lq_norm(f0, q, op="U", params=P1).value
    assert recomputed == pytest.approx(first, rel=1e-12)


def test_anisotropic_norm_factorizes():
    P2 = OperatorParams(0.5, 0.1, 0.1)
    pf = ProductFunctionSpec((indicator(0.0, 1.0), make_f0(P2)))
    res = anisotropic_norm(pf, [1.7, 2.2])
    ref = lp_norm(indicator(0.0, 1.0), 1.7).value \
        * lp_norm(make_f0(P2), 2.2).value
    assert res.value == pytest.approx(ref, rel=1e-12)
    with pytest.raises(DomainError):
        anisotropic_norm(pf, [1.7])


def test_psi_validation():
    with pytest.raises(DomainError):
        PsiFunction(kind="constant", A=0.5, B=2.0, value=1.0)  # A < 1
    with pytest.raises(DomainError):
        PsiFunction(kind="constant", A=2.0, B=2.0, value=1.0)
    with pytest.raises(DomainError):
        PsiFunction(kind="constant", A=1.5, B=2.0, value=-1.0)
    with pytest.raises(DomainError):
        PsiFunction(kind="power", A=1.5, B=2.0, expr=(-2.0, 0.5))
    psi = PsiFunction(kind="power", A=1.5, B=3.0, expr=(2.0, -0.5))
    assert psi(2.0) == pytest.approx(2.0 * 2.0 ** -0.5, rel=1e-15)
    with pytest.raises(DomainError):
        psi(3.5)  # outside support


def test_gls_norm_boundary_supremum():
    # ||f0||_p / 1 increases toward the left edge of (1.5, 1.9)
    f0 = make_f0(P1)
    psi = PsiFunction(kind="constant", A=1.5, B=1.9, value=1.0)
    res = gls_norm(f0, psi)
    assert res.value == pytest.approx(f0_norm(1.5), rel=1e-6)
    assert res.achieved_at == pytest.approx(1.5, abs=1e-6)


def test_gls_norm_matches_brute_grid():
    psi = PsiFunction(kind="power", A=1.5, B=3.0, expr=(2.0, -0.5))
    ind = indicator(0.0, 1.0)
    res = gls_norm(ind, psi)
    grid = [1.5 + (3.0 - 1.5) * k / 400.0 for k in range(1, 400)]
    brute = max(lp_norm(ind, p).value / psi(p) for p in grid)
    assert res.value >= brute - 1e-12
    assert res.value == pytest.approx(brute, rel=1e-3)
    # closed form: sup sqrt(p)/2 on (1.5, 3)
    assert res.value == pytest.approx(math.sqrt(3.0) / 2.0, rel=1e-6)


def test_gls_norm_natural_psi_is_one():
    f0 = make_f0(P1)
    psi = natural_psi(f0, 1.5, 1.9)
    res = gls_norm(f0, psi)
    assert res.value == pytest.approx(1.0, rel=1e-8)


def test_gls_norm_divergent_interior_reports_inf():
    # p_minus = 1/0.7 sits inside (1.3, 1.6): the grand norm is infinite,
    # which is an answer rather than an error
    f0 = make_f0(P1)
    psi = PsiFunction(kind="constant", A=1.3, B=1.6, value=1.0)
    res = gls_norm(f0, psi)
    assert math.isinf(res.value)


def test_natural_psi_screens_divergence():
    f0 = make_f0(P1)
    with pytest.raises(DomainError):
        natural_psi(f0, 1.3, 1.6)  # ||f0||_p divergent inside


def test_gls_image_norm_runs():
    # psi for the image norm lives on the image exponent q, here (2.5, 5)
    ind = indicator(0.0, 1.0)
    psi = PsiFunction(kind="constant", A=2.6, B=4.0, value=1.0)
    res = gls_image_norm(P1, ind, psi, op="U", p_grid_size=16)
    assert math.isfinite(res.value)
    assert res.value > 0
    # below q_minus the far-field decay x^(kappa-1) is not q-integrable
    low = PsiFunction(kind="constant", A=2.2, B=2.6, value=1.0)
    assert math.isinf(gls_image_norm(P1, ind, low, op="U",
                                     p_grid_size=16).value)


def test_psi_from_json():
    psi = psi_from_json({"kind": "constant", "support": [1.5, 2.0],
                         "value": 2.5})
    assert psi(1.7) == 2.5
    psi = psi_from_json({"kind": "power", "support": [1.5, "inf"],
                         "expr": [2.0, -0.5]})
    assert math.isinf(psi.B)
    assert psi(4.0) == pytest.approx(1.0, rel=1e-15)
    psi = psi_from_json({"kind": "natural", "support": [1.5, 1.9],
                         "f": {"pieces": [{"lo": 0.0, "hi": 1.0, "a": 0.0,
                                           "theta": 0.0, "c": 1.0}]}})
    assert psi(1.7) == pytest.approx(1.0, rel=1e-9)
    for bad in ({"kind": "constant", "value": 1.0},
                {"kind": "nope", "support": [1.5, 2.0]},
                {"kind": "constant", "support": [2.0, 1.5], "value": 1.0}):
        with pytest.raises(ConfigError):
            psi_from_json(bad)
