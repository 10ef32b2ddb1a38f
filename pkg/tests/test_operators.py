import math
import warnings

import numpy as np
import pytest

from chlab import MultiParams, OperatorParams
from chlab.errors import (ConvergenceError, DomainError, HomogeneityWarning)
from chlab.functions import (FunctionSpec, Piece, ProductFunctionSpec,
                             closed_form_image_U, indicator, make_f0,
                             power_function)
from chlab.operators import (DiscreteKernel, WeightSpec, apply_M_discrete,
                             apply_U, apply_U_log, apply_U_multidim, apply_VS,
                             apply_VS_log, apply_W, apply_W_log,
                             cesaro_kernel, image_info_U, image_info_VS,
                             image_info_W, power_weight, weight_one)
from chlab.quadrature import QuadratureSpec, beta_fn, gamma_fn, tanh_sinh

P1 = OperatorParams(0.3, 0.2, 0.2)
P2 = OperatorParams(0.5, 0.1, 0.1)

# high-precision reference values, computed independently
U_F0_AT_3_7 = 0.9699884603140607688195277
W_RECIP_AT_1 = 0.7685892680099156897932735       # B(0.5, 0.8)/Gamma(0.3)
W_TAIL_RECIP_AT_2 = 0.47312219173363314236
B_07_08 = 1.705245626063331375843917
MD_CALLABLE_REF = 2.225294087720189314524        # f = 1/(1+y1+y2), x=(0.7, 3)


def test_U_frozen_value():
    res = apply_U(P1, make_f0(P1), 3.7)
    assert res.converged
    assert res.value == pytest.approx(U_F0_AT_3_7, rel=1e-11)


def test_U_closed_form_grid():
    for a in (-0.5, -0.2, 0.0, 0.7, 1.5):
        coef, expo = closed_form_image_U(P1, a)
        f = power_function(a)
        for x in (0.02, 0.9, 1.0, 1.1, 37.0):
            res = apply_U(P1, f, x)
            assert res.value == pytest.approx(coef * x ** expo, rel=1e-10)


def test_U_linearity():
    f = FunctionSpec((Piece(0.0, 1.0, -0.2, 0.0, 3.0),))
    g = FunctionSpec((Piece(0.0, 1.0, -0.2, 0.0, 1.0),))
    x = 1.7
    assert apply_U(P1, f, x).value == pytest.approx(
        3.0 * apply_U(P1, g, x).value, rel=1e-12)
    # additivity across pieces
    two = FunctionSpec((Piece(0.0, 1.0, -0.2), Piece(1.0, math.inf, -0.9)))
    left = FunctionSpec((Piece(0.0, 1.0, -0.2),))
    right = FunctionSpec((Piece(1.0, math.inf, -0.9),))
    assert apply_U(P1, two, x).value == pytest.approx(
        apply_U(P1, left, x).value + apply_U(P1, right, x).value, rel=1e-11)


def test_U_log_matches_direct_route():
    cases = [(make_f0(P1), (1.5, 3.7, 40.0)),
             (indicator(0.0, 1.0), (0.5, 1.0 - 1e-9, 1.0 + 1e-9, 2.0)),
             (power_function(-0.4, lo=0.0, hi=1.0, theta=0.3), (0.3, 0.9)),
             # log-power kink strictly inside the panels: the direct route
             # keeps its Jacobi evaluation, so the two engines are
             # genuinely independent here
             (power_function(-0.2, lo=0.5, hi=2.0, theta=0.7), (1.3, 2.0)),
             ]
    for f, xs in cases:
        for x in xs:
            sign, logv, rel, nodes = apply_U_log(P1, f, math.log(x))
            direct = apply_U(P1, f, x)
            assert sign == 1.0
            assert math.exp(logv) == pytest.approx(direct.value, rel=1e-8)


def test_U_log_far_field_power_law():
    # pure powers map to pure powers, even at x = e^50 where x itself
    # overflows no intermediate
    a = -0.2
    coef, expo = closed_form_image_U(P1, a)
    sign, logv, rel, nodes = apply_U_log(P1, power_function(a), 50.0)
    assert sign == 1.0
    assert logv == pytest.approx(math.log(coef) + expo * 50.0, abs=1e-9)


def test_U_log_sign_tracks_negative_scale():
    f = FunctionSpec((Piece(0.0, 1.0, 0.0, 0.0, -2.0),))
    sign, logv, rel, nodes = apply_U_log(P1, f, 0.0)
    assert sign == -1.0
    assert math.exp(logv) == pytest.approx(2.0 * B_07_08, rel=1e-10)


def test_U_near_support_edge_is_continuous():
    ind = indicator(0.0, 1.0)
    lo = apply_U(P1, ind, 1.0 - 1e-9).value
    hi = apply_U(P1, ind, 1.0 + 1e-9).value
    assert lo == pytest.approx(B_07_08, rel=1e-6)
    assert hi == pytest.approx(B_07_08, rel=1e-6)


def test_W_frozen_values():
    res = apply_W(P1, power_function(-1.0), 1.0)
    assert res.value == pytest.approx(W_RECIP_AT_1, rel=1e-11)
    res = apply_W(P1, power_function(-1.0, lo=1.0), 2.0)
    assert res.value == pytest.approx(W_TAIL_RECIP_AT_2, rel=1e-10)


def test_W_log_matches_direct_route():
    f = power_function(-1.0, lo=1.0)
    for x in (0.7, 2.0, 11.0):
        sign, logv, rel, nodes = apply_W_log(P1, f, math.log(x))
        assert math.exp(logv) == pytest.approx(
            apply_W(P1, f, x).value, rel=1e-8)
    fk = power_function(-0.2, lo=0.5, hi=2.0, theta=0.7)
    sign, logv, rel, nodes = apply_W_log(P1, fk, 0.0)
    assert math.exp(logv) == pytest.approx(apply_W(P1, fk, 1.0).value,
                                           rel=1e-8)


def test_image_info_declared_rates():
    # declared tail powers must match numerically measured log-log slopes
    f0 = make_f0(P1)
    info = image_info_U(P1, f0)
    assert info.left[0] == "edge"
    kind, eps, ell = info.right
    assert kind == "tail"
    u1, u2 = 40.0, 50.0
    _, l1, _, _ = apply_U_log(P1, f0, u1)
    _, l2, _, _ = apply_U_log(P1, f0, u2)
    slope = (l2 - l1 - ell * math.log(u2 / u1)) / (u2 - u1)
    assert slope == pytest.approx(eps, abs=5e-3)

    infow = image_info_W(P1, f0)
    kind, eps, ell = infow.left
    assert kind == "tail"
    _, l1, _, _ = apply_W_log(P1, f0, -40.0)
    _, l2, _, _ = apply_W_log(P1, f0, -50.0)
    slope = (l2 - l1 - ell * math.log(50.0 / 40.0)) / (-50.0 + 40.0)
    assert slope == pytest.approx(eps, abs=5e-3)

    ind = indicator(0.0, 1.0)
    infou = image_info_U(P1, ind)
    assert infou.left == ("tail", pytest.approx(1 - 0.7), 0.0)
    assert infou.right == ("tail", pytest.approx(-0.4), 0.0)
    assert 0.0 in infou.breaks


def test_VS_plain_averaging_closed_form():
    w = weight_one()
    ind = indicator(0.0, 1.0)
    for x in (0.25, 1.0, 2.0, 8.0):
        res = apply_VS(w, ind, x)
        assert res.value == pytest.approx(min(x, 1.0) / x, rel=1e-11)
    sign, logv, rel, nodes = apply_VS_log(w, ind, math.log(2.0))
    assert math.exp(logv) == pytest.approx(0.5, rel=1e-10)


def test_VS_power_weight_indicator_closed_form():
    # (1/S(x)) ∫_0^min(x,1) (x-t)^(bw-1) dt = 1 - ((x-1)/x)^bw for x >= 1,
    # and exactly 1 below the support edge
    ind = indicator(0.0, 1.0)
    for bw in (0.15, 0.6, 0.9):
        w = power_weight(bw)
        for x in (1.5, 2.0, 5.0):
            ref = 1.0 - ((x - 1.0) / x) ** bw
            assert apply_VS(w, ind, x).value == pytest.approx(ref, rel=1e-10)
        assert apply_VS(w, ind, 0.5).value == pytest.approx(1.0, rel=1e-10)
    assert apply_VS(power_weight(0.6), ind, 2.0).value == pytest.approx(
        0.3402460446135529, rel=1e-11)


def test_VS_power_weight_general_f_dual_route():
    # independent route for a non-constant f: integrate in r = x - t, where
    # the weight singularity sits on an exact-zero endpoint
    bw = 0.6
    w = power_weight(bw)
    f = power_function(0.5, lo=0.0, hi=math.inf)
    for x in (0.5, 2.0):
        res = apply_VS(w, f, x)
        top = tanh_sinh(
            lambda r: np.power(x - r, 0.5) * np.power(r, bw - 1.0), 0.0, x)
        ref = top.value / (x ** bw / bw)
        assert res.value == pytest.approx(ref, rel=1e-9)


def test_VS_callable_weight():
    # black-box weight with explicit primitive; same averaging as weight_one
    w_cb = WeightSpec(kind="callable", s=lambda z: 1.0,
                      S=lambda x: x, L=1.0, label="flat")
    assert apply_VS(w_cb, indicator(0.0, 1.0), 2.0).value == pytest.approx(
        0.5, rel=1e-9)


def test_multidim_product_factorizes():
    mp_ = MultiParams((P1, P2))
    pf = ProductFunctionSpec((indicator(0.0, 1.0), make_f0(P2)))
    res = apply_U_multidim(mp_, pf, [0.7, 3.0])
    ref = apply_U(P1, indicator(0.0, 1.0), 0.7).value \
        * apply_U(P2, make_f0(P2), 3.0).value
    assert res.value == pytest.approx(ref, rel=1e-12)


def test_multidim_callable_separable_matches_product_path():
    mp_ = MultiParams((P1, P2))
    res_c = apply_U_multidim(mp_, lambda y1, y2: y1 ** 0.5 * y2, [0.7, 3.0])
    pf = ProductFunctionSpec((power_function(0.5), power_function(1.0)))
    res_p = apply_U_multidim(mp_, pf, [0.7, 3.0])
    assert res_c.value == pytest.approx(res_p.value, rel=1e-10)


def test_multidim_callable_frozen_value():
    mp_ = MultiParams((P1, P2))
    res = apply_U_multidim(mp_, lambda y1, y2: 1.0 / (1.0 + y1 + y2),
                           [0.7, 3.0])
    assert res.value == pytest.approx(MD_CALLABLE_REF, rel=1e-9)


def test_multidim_callable_interior_jump_is_out_of_contract():
    # a black-box discontinuity defeats the nested smooth rules; the
    # documented route is ProductFunctionSpec, which factorizes it exactly
    mp_ = MultiParams((P1,))
    spec = QuadratureSpec(max_nodes=256)
    with pytest.raises(ConvergenceError):
        apply_U_multidim(mp_, lambda y: 1.0 if y <= 0.7 else 0.0, [1.0],
                         spec=spec)
    res = apply_U_multidim(mp_, ProductFunctionSpec((indicator(0.0, 0.7),)),
                           [1.0])
    ref = apply_U(P1, indicator(0.0, 0.7), 1.0)
    assert res.value == pytest.approx(ref.value, rel=1e-12)


def test_multidim_validates_dimensions():
    mp_ = MultiParams((P1, P2))
    with pytest.raises(DomainError):
        apply_U_multidim(mp_, lambda y1, y2: 1.0, [1.0])


def test_discrete_cesaro_values():
    k = cesaro_kernel()
    assert k.M(3, 5) == pytest.approx(1.0 / 6.0, rel=1e-15)
    assert k.M(7, 5) == 0.0
    # averaging a constant sequence returns the constant
    assert apply_M_discrete(k, [1.0] * 10, 4) == pytest.approx(1.0, rel=1e-15)
    assert apply_M_discrete(k, [1.0] * 10, 4, cutoff=64) == pytest.approx(
        1.0, rel=1e-15)
    assert apply_M_discrete(k, [2.0, 4.0], 1) == pytest.approx(3.0, rel=1e-15)


def test_discrete_validation():
    k = cesaro_kernel()
    with pytest.raises(DomainError):
        apply_M_discrete(k, [1.0] * 10, -1)
    with pytest.raises(DomainError):
        apply_M_discrete(k, [1.0] * 10, 3, cutoff=4)  # shorter than the data


def test_discrete_homogeneity_probe():
    wrong_degree = DiscreteKernel(lambda m, n: 1.0 / (n + 1.0) ** 2,
                                  label="sq")
    with pytest.warns(HomogeneityWarning):
        apply_M_discrete(wrong_degree, [1.0, 2.0], 3)
    # the probe runs once per kernel instance
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        apply_M_discrete(wrong_degree, [1.0, 2.0], 3)
    # close-to-homogeneous lattice kernels stay quiet, and the check can be
    # switched off entirely
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        apply_M_discrete(cesaro_kernel(), [1.0, 2.0], 3)
        silent = DiscreteKernel(lambda m, n: 1.0 / (n + 1.0) ** 2,
                                homogeneity_check=False, label="sq2")
        apply_M_discrete(silent, [1.0, 2.0], 3)
