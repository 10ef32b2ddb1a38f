"""The weighted averaging operators and their numerical engines.

Four continuous operators share one structure: an integral of f against a
power kernel with endpoint singularities at 0, at the moving point x, and a
possible interior log singularity at y = 1.

Two complementary engines are used.

* For moderate |log x| the defining integral is pulled to z in (0, 1) and
  evaluated with Gauss-Jacobi panels whose weights absorb every endpoint
  power exactly (plain floating point).
* For extreme x (the near-critical image norms place their mass at
  x ~ exp(1e4)) the same integral is computed in v = log(x/y), where each
  piece of f becomes exp(-c v) * (1 - e^{-v})^{-lam} * |v - u0|^theta and the
  result is carried as (sign, log of magnitude).  The kernel factor is
  exactly 1.0 in doubles for v > 41, so the far range reduces to the
  exponential-power primitives from the quadrature module.

Divergence decisions are made from declared exponents before any quadrature
runs; the engines never see a non-integrable configuration.
"""

from __future__ import annotations

import math
import warnings
import weakref
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (ConvergenceError, DivergenceError, DomainError,
                     HomogeneityWarning, UnsupportedError)
from .exponents import MultiParams, OperatorParams
from .functions import FunctionSpec, ProductFunctionSpec, evaluate
from .quadrature import (BOUNDARY_TOL, DEFAULT_SPEC, FLAT_KERNEL_V, NEG_INF,
                         logsumexp, signed_logsumexp,
                         QuadResult, QuadratureSpec, _graded_edges,
                         _near_scale, _panel_log, _panel_plain, _refine_log,
                         _refine_plain, exp_power_integral_log, gamma_fn,
                         tanh_sinh)

#: switch to the log-domain engine beyond this |log x|
_Z_ENGINE_MAX_LOGX = 60.0

#: log of the relative sliver mass below which a kernel knot is snapped onto
#: its singular limit (see _kernel_core_log)
_LOG_SNAP = math.log(1e-18)


# ---------------------------------------------------------------------------
# pointwise divergence screens
# ---------------------------------------------------------------------------

def _div(where: str, detail: str):
    raise DivergenceError(f"operator integral divergent at {where}: {detail}")


def _screen_log_singularity(f: FunctionSpec, x: float, kernel_pow: float,
                            from_below: bool):
    """Reject log-power pieces that make the integral blow up around y = 1.

    `kernel_pow` is the exponent the kernel contributes at y = x (so the
    combined power matters only when x == 1); `from_below` tells which side
    of 1 the operator can reach at x == 1.
    """
    for pc in f.pieces:
        if pc.theta >= 0.0 or not (pc.lo <= 1.0 <= pc.hi):
            continue
        if from_below:
            reached = x > 1.0 or (x == 1.0 and pc.lo < 1.0)
        else:
            reached = x < 1.0 or (x == 1.0 and pc.hi > 1.0)
        if not reached:
            continue
        if pc.theta <= -1.0 + BOUNDARY_TOL:
            _div("1", f"log power {pc.theta} (needs > -1)")
        if x == 1.0 and pc.theta + kernel_pow <= -1.0 + BOUNDARY_TOL:
            _div("1", f"log power {pc.theta} combined with kernel power "
                      f"{kernel_pow} at x = 1")


def _screen_U_pointwise(params: OperatorParams, f: FunctionSpec, x: float):
    zp = f.zero_piece
    if zp is not None:
        cv0 = 1.0 - params.alpha + zp.a
        if cv0 < -BOUNDARY_TOL:
            _div("0", f"piece exponent {zp.a} <= alpha - 1")
        if abs(cv0) <= BOUNDARY_TOL and zp.theta >= -1.0 - BOUNDARY_TOL:
            _div("0", f"marginal piece exponent alpha - 1 with log power "
                      f"{zp.theta} (needs < -1)")
    _screen_log_singularity(f, x, -params.lam, from_below=True)


def _screen_W_pointwise(params: OperatorParams, f: FunctionSpec, x: float):
    ip = f.infinity_piece
    if ip is not None:
        cw = params.alpha + params.lam - 1.0 - ip.a
        if cw < -BOUNDARY_TOL:
            _div("infinity", f"piece exponent {ip.a} >= alpha + lam - 1")
        if abs(cw) <= BOUNDARY_TOL and ip.theta >= -1.0 - BOUNDARY_TOL:
            _div("infinity", f"marginal piece exponent alpha + lam - 1 with "
                             f"log power {ip.theta} (needs < -1)")
    _screen_log_singularity(f, x, -params.lam, from_below=False)


def _screen_VS_pointwise(bw: float, f: FunctionSpec, x: float):
    zp = f.zero_piece
    if zp is not None:
        if zp.a < -1.0 - BOUNDARY_TOL:
            _div("0", f"piece exponent {zp.a} < -1 not locally integrable")
        if abs(zp.a + 1.0) <= BOUNDARY_TOL and zp.theta >= -1.0 - BOUNDARY_TOL:
            _div("0", f"marginal piece exponent -1 with log power {zp.theta}")
    _screen_log_singularity(f, x, bw - 1.0, from_below=True)


# ---------------------------------------------------------------------------
# log-domain kernel core
# ---------------------------------------------------------------------------

def _kernel_core_log(cv: float, lam: float, theta: float, u0: float,
                     v1: float, v2: float, spec: QuadratureSpec,
                     rel_tol: float):
    """log ∫_{v1}^{v2} e^{-cv v} (1-e^{-v})^{-lam} |v-u0|^{theta} dv.

    0 <= v1 < v2 <= inf.  Callers guarantee integrability: cv > 0 (or cv == 0
    with theta < -1) when v2 is infinite, and theta > -1 whenever u0 touches
    the closed interval.  Returns (log_value, rel_err, nodes).
    """
    # Double-exponential probes can land a knot exponentially close to its
    # singular limit (v1 ~ 1e-100 next to the v=0 singularity, or the
    # log-power location u0 next to 0).  When the sliver between the two
    # carries provably negligible mass (bounded by its exponent times the
    # log-distance), snap onto the limit so the endpoint absorption sees the
    # exact singular power instead of grading across hundreds of decades.
    if 0.0 < v1 < 1.0:
        e_min = 1.0 - lam + min(theta, 0.0)
        if e_min > 0.0 and e_min * math.log(v1) <= _LOG_SNAP:
            v1 = 0.0
    if theta != 0.0 and u0 != 0.0 and abs(u0) < 1.0:
        e_c = 1.0 - lam + theta
        if e_c > 0.0 and e_c * math.log(abs(u0)) <= _LOG_SNAP:
            u0 = 0.0
    parts: list[float] = []
    errs: list[float] = []
    nodes = 0
    vb = min(v2, FLAT_KERNEL_V)
    if theta != 0.0 and vb < u0 < min(v2, vb + 15.0):
        # keep the log-power location a panel knot rather than letting it sit
        # just beyond the flat-region boundary
        vb = u0
    if v1 < vb:
        knots = {v1, vb}
        if theta != 0.0 and v1 < u0 < vb:
            knots.add(u0)
        knots = sorted(knots)
        structures = []
        if lam != 0.0:
            structures.append(0.0)
        if theta != 0.0:
            structures.append(u0)
        cap = min(3.0, 8.0 / (1.0 + abs(cv)))

        for ka, kb in zip(knots[:-1], knots[1:]):
            absorbed_a = (ka == 0.0 and lam != 0.0) or (theta != 0.0 and ka == u0)
            absorbed_b = theta != 0.0 and kb == u0
            below = [s for s in structures if s < ka]
            s0 = max(below) if below else None
            if s0 is not None and (kb - s0) > 1e5 * (ka - s0):
                # a singular structure exponentially close below ka (relative
                # to the panel span) defeats geometric grading; walk the
                # sliver in w = log(v - s0), where every power of (v - s0) is
                # analytic, a structure sitting at ka itself becomes an
                # absorbable endpoint power at w_a, and a handful of wide
                # panels span the decades
                d = ka - s0
                mid = s0 + (kb - s0) * 1e-3
                wa = math.log(d)
                wb = math.log(mid - s0)
                w_edges = np.linspace(wa, wb, max(2, int((wb - wa) / 12.0) + 2))
                lam_at_a = ka == 0.0 and lam != 0.0
                for qa, qb in _pairs(list(w_edges)):
                    first = qa == wa
                    le = 0.0
                    if first and absorbed_a:
                        le = -lam if lam_at_a else theta

                    def wlog(w, _first=first):
                        rel_v = d * np.expm1(w - wa)  # v - ka, no cancellation
                        v = ka + rel_v
                        out = -cv * v + w             # + w: dv = e^w dw
                        if theta != 0.0:
                            if u0 == s0:
                                out = out + theta * w  # |v - u0| = e^w exactly
                            elif u0 == ka:
                                t = (np.log(rel_v / (w - wa)) if _first
                                     else np.log(rel_v))
                                out = out + theta * t
                            else:
                                out = out + theta * np.log(np.abs(v - u0))
                        if lam != 0.0:
                            t = np.log(-np.expm1(-v))
                            if _first and lam_at_a:
                                t = t - np.log(w - wa)
                            out = out - lam * t
                        return out

                    logv, relerr, used, ok = _refine_log(
                        lambda n, _qa=qa, _qb=qb, _le=le, _wl=wlog:
                            _panel_log(_wl, _qa, _qb, _le, 0.0, n),
                        spec, rel_tol)
                    nodes += used
                    if not ok:
                        raise ConvergenceError(
                            f"kernel sliver panel did not converge "
                            f"(cv={cv}, lam={lam}, theta={theta}, "
                            f"w-panel=[{qa}, {qb}])",
                            best_estimate=None, error_estimate=relerr)
                    parts.append(logv)
                    errs.append(logv + math.log(max(relerr, 1e-300)))
                ka = mid
                absorbed_a = False
            scale_a = _near_scale(ka, structures, kb - ka, cap)
            scale_b = _near_scale(kb, structures, kb - ka, cap)
            for pa, pb in _pairs(_graded_edges(ka, kb, scale_a, scale_b, cap)):
                le = re_ = 0.0
                lam_absorbed = pa == 0.0 and lam != 0.0
                th_l = theta != 0.0 and pa == u0
                th_r = theta != 0.0 and pb == u0
                if lam_absorbed:
                    le += -lam
                if th_l:
                    le += theta
                if th_r:
                    re_ += theta

                def logg(v, _la=lam_absorbed, _tl=th_l, _tr=th_r):
                    out = -cv * v
                    if lam != 0.0:
                        if _la:
                            # weight took v^-lam; keep the analytic remainder
                            out = out - lam * (np.log(-np.expm1(-v)) - np.log(v))
                        else:
                            out = out - lam * np.log(-np.expm1(-v))
                    if theta != 0.0 and not (_tl or _tr):
                        out = out + theta * np.log(np.abs(v - u0))
                    return out

                logv, relerr, used, ok = _refine_log(
                    lambda n, _pa=pa, _pb=pb, _le=le, _re=re_, _lg=logg:
                        _panel_log(_lg, _pa, _pb, _le, _re, n),
                    spec, rel_tol)
                nodes += used
                if not ok:
                    raise ConvergenceError(
                        f"kernel panel did not converge (cv={cv}, lam={lam}, "
                        f"theta={theta}, panel=[{pa}, {pb}])",
                        best_estimate=None, error_estimate=relerr)
                parts.append(logv)
                errs.append(logv + math.log(max(relerr, 1e-300)))
    if v2 > max(v1, vb):
        a0 = max(v1, vb)
        if theta == 0.0:
            logv, relerr, used = exp_power_integral_log(cv, 0.0, a0, v2, spec, rel_tol)
            nodes += used
            parts.append(logv)
            errs.append(logv + math.log(max(relerr, 1e-300)))
        else:
            segs = []
            if a0 < u0 < v2:
                segs = [(a0, u0), (u0, v2)]
            else:
                segs = [(a0, v2)]
            for sa, sb in segs:
                if u0 <= sa:
                    logv, relerr, used = exp_power_integral_log(
                        cv, theta, sa - u0, (sb - u0) if not math.isinf(sb) else math.inf,
                        spec, rel_tol)
                    logv += -cv * u0
                else:
                    # u0 >= sb, necessarily finite here
                    logv, relerr, used = exp_power_integral_log(
                        -cv, theta, u0 - sb, u0 - sa, spec, rel_tol)
                    logv += -cv * u0
                nodes += used
                parts.append(logv)
                errs.append(logv + math.log(max(relerr, 1e-300)))
    if not parts:
        return NEG_INF, 0.0, nodes
    total = float(logsumexp(parts))
    if total == NEG_INF:
        return total, 0.0, nodes
    rel = math.exp(float(logsumexp(errs)) - total)
    return total, rel, nodes


def _pairs(edges: Sequence[float]):
    return zip(edges[:-1], edges[1:])


# ---------------------------------------------------------------------------
# U: averaging from below
# ---------------------------------------------------------------------------

def apply_U_log(params: OperatorParams, f: FunctionSpec, u: float,
                spec: QuadratureSpec | None = None,
                rel_tol: float | None = None):
    """U[f](e^u) as (sign, log|value|, rel_err, nodes).

    Works for u far outside double range of x itself; each piece of f
    contributes sign(c) * exp(log|c| + (1 - kappa + a) u) * kernel integral.
    """
    spec = spec or DEFAULT_SPEC
    rel = rel_tol if rel_tol is not None else spec.rel_tol
    x = math.exp(u) if abs(u) < 700 else (math.inf if u > 0 else 0.0)
    _screen_U_pointwise(params, f, x if x > 0 else math.exp(min(max(u, -700.0), 700.0)))
    sgns, logs, errs = [], [], []
    nodes = 0
    for pc in f.pieces:
        v1 = 0.0 if math.isinf(pc.hi) else max(0.0, u - math.log(pc.hi))
        v2 = math.inf if pc.lo == 0.0 else u - math.log(pc.lo)
        if v2 <= v1:
            continue
        cv = 1.0 - params.alpha + pc.a
        logS, relerr, used = _kernel_core_log(
            cv, params.lam, pc.theta, u, v1, v2, spec, rel)
        nodes += used
        if logS == NEG_INF:
            continue
        lv = math.log(abs(pc.c)) + u * (1.0 - params.kappa + pc.a) + logS
        sgns.append(1.0 if pc.c > 0 else -1.0)
        logs.append(lv)
        errs.append(lv + math.log(max(relerr, 1e-300)))
    if not logs:
        return 0.0, NEG_INF, 0.0, nodes
    total, sign = signed_logsumexp(logs, sgns)
    total = float(total)
    if total == NEG_INF or sign == 0.0:
        return 0.0, NEG_INF, 0.0, nodes
    rel_out = math.exp(float(logsumexp(errs)) - total)
    return float(sign), total, rel_out, nodes


def _apply_U_z(params: OperatorParams, f: FunctionSpec, x: float,
               spec: QuadratureSpec, rel_tol: float) -> QuadResult:
    """Gauss-Jacobi evaluation of U[f](x) in z = y/x for moderate log x."""
    alpha, lam, kappa = params.alpha, params.lam, params.kappa
    total = 0.0
    abs_err = 0.0
    nodes = 0
    for pc in f.pieces:
        za = pc.lo / x
        zb = min(pc.hi / x, 1.0) if not math.isinf(pc.hi) else 1.0
        if zb <= za:
            continue
        aal = pc.a - alpha
        pref = pc.c * x ** (pc.a + 1.0 - kappa)
        z1 = None
        if pc.theta != 0.0:
            z1 = 1.0 / x
            # snap to an existing endpoint when the knot lands on one
            if abs(z1 - za) < 1e-13 * max(z1, za):
                z1 = za
            elif abs(z1 - zb) < 1e-13 * max(z1, zb):
                z1 = zb
        knots = {za, zb}
        if z1 is not None and za < z1 < zb:
            knots.add(z1)
        knots = sorted(knots)
        structures = [0.0, 1.0] + ([z1] if z1 is not None else [])
        for ka, kb in _pairs(knots):
            absorbed_a = ka == 0.0 or (z1 is not None and ka == z1)
            absorbed_b = kb == 1.0 or (z1 is not None and kb == z1)
            scale_a = 1.0 if absorbed_a else _near_scale(ka, structures, kb - ka, 1.0)
            scale_b = 1.0 if absorbed_b else _near_scale(kb, structures, kb - ka, 1.0)
            for pa, pb in _pairs(_graded_edges(ka, kb, scale_a, scale_b, 1.0)):
                le = re_ = 0.0
                a_abs = pa == 0.0
                b_abs = pb == 1.0
                tl = z1 is not None and pa == z1
                tr = z1 is not None and pb == z1
                if a_abs:
                    le += aal
                if b_abs:
                    re_ += -lam
                if tl:
                    le += pc.theta
                if tr:
                    re_ += pc.theta

                def g(z, _aa=a_abs, _ba=b_abs, _tl=tl, _tr=tr):
                    out = np.ones_like(z)
                    if aal != 0.0 and not _aa:
                        out = out * np.power(z, aal)
                    if not _ba:
                        out = out * np.power(1.0 - z, -lam)
                    if pc.theta != 0.0:
                        if _tl or _tr:
                            # |log(x z)|^theta = |z - z1|^theta * R^theta with
                            # R = |log1p((z - z1)/z1)| / |z - z1|
                            d = z - z1
                            out = out * np.abs(np.log1p(d / z1) / d) ** pc.theta
                        else:
                            out = out * np.abs(np.log(x) + np.log(z)) ** pc.theta
                    return out

                val, err, used, ok = _refine_plain(
                    lambda n, _pa=pa, _pb=pb, _le=le, _re=re_, _g=g:
                        _panel_plain(_g, _pa, _pb, _le, _re, n),
                    spec, rel_tol, spec.abs_tol / max(abs(pref), 1e-300))
                nodes += used
                if not ok:
                    raise ConvergenceError(
                        f"U panel did not converge at x={x} on [{pa}, {pb}]",
                        best_estimate=total + pref * val,
                        error_estimate=abs(pref) * err)
                total += pref * val
                abs_err += abs(pref) * err
    return QuadResult(total, abs_err, nodes, True)


def _z_route_ok(params: OperatorParams, f: FunctionSpec, x: float) -> bool:
    if abs(math.log(x)) > _Z_ENGINE_MAX_LOGX:
        return False
    for pc in f.pieces:
        if pc.lo == 0.0 and abs(1.0 - params.alpha + pc.a) <= 1e-9:
            return False  # marginal zero piece needs the log engine
        if pc.theta != 0.0 and pc.lo == 0.0:
            # |log(x z)|^theta is unbounded at the absorbed z -> 0 endpoint,
            # where the Jacobi weight only covers the power factor
            return False
        if abs(pc.a * math.log(x)) > 250.0:
            return False
        if abs((pc.a + 1.0 - params.kappa) * math.log(x)) > 250.0:
            return False
        # a z-knot exponentially close to (but not on) an endpoint
        # singularity starves the graded panels; the log engine walks such
        # slivers in log coordinates instead
        knots = []
        if pc.lo > 0.0:
            knots.append(pc.lo / x)
        knots.append(min(pc.hi / x, 1.0))
        if pc.theta != 0.0:
            knots.append(1.0 / x)
        for k in knots:
            if 0.0 < k < 1e-7 or 0.0 < 1.0 - k < 1e-7:
                return False
    return True


def apply_U(params: OperatorParams, f: FunctionSpec, x: float,
            spec: QuadratureSpec | None = None,
            rel_tol: float | None = None) -> QuadResult:
    """U[f](x) = x^(-beta) ∫_0^x y^(-alpha) f(y) (x-y)^(-lam) dy."""
    spec = spec or DEFAULT_SPEC
    rel = rel_tol if rel_tol is not None else spec.rel_tol
    if not (x > 0.0 and math.isfinite(x)):
        raise DomainError(f"x must be positive and finite, got {x}")
    _screen_U_pointwise(params, f, x)
    if x <= f.support_lo:
        return QuadResult(0.0, 0.0, 0, True)
    if _z_route_ok(params, f, x):
        return _apply_U_z(params, f, x, spec, rel)
    sign, logv, relerr, nodes = apply_U_log(params, f, math.log(x), spec, rel)
    value = sign * math.exp(logv) if logv < 709 else sign * math.inf
    err = abs(value) * relerr if math.isfinite(value) else math.inf
    return QuadResult(value, err, nodes, True)


# ---------------------------------------------------------------------------
# W: the conjugate operator, averaging from above
# ---------------------------------------------------------------------------

def apply_W_log(params: OperatorParams, f: FunctionSpec, u: float,
                spec: QuadratureSpec | None = None,
                rel_tol: float | None = None):
    """W[f](e^u) as (sign, log|value|, rel_err, nodes)."""
    spec = spec or DEFAULT_SPEC
    rel = rel_tol if rel_tol is not None else spec.rel_tol
    x = math.exp(u) if abs(u) < 700 else (math.inf if u > 0 else 0.0)
    _screen_W_pointwise(params, f, x if x > 0 else math.exp(min(max(u, -700.0), 700.0)))
    log_gamma_a = math.lgamma(params.alpha)
    sgns, logs, errs = [], [], []
    nodes = 0
    for pc in f.pieces:
        w1 = 0.0 if pc.lo == 0.0 else max(0.0, math.log(pc.lo) - u)
        w2 = math.inf if math.isinf(pc.hi) else math.log(pc.hi) - u
        if w2 <= w1:
            continue
        cw = params.alpha + params.lam - 1.0 - pc.a
        logS, relerr, used = _kernel_core_log(
            cw, params.lam, pc.theta, -u, w1, w2, spec, rel)
        nodes += used
        if logS == NEG_INF:
            continue
        lv = (math.log(abs(pc.c)) + u * (1.0 - params.kappa + pc.a)
              - log_gamma_a + logS)
        sgns.append(1.0 if pc.c > 0 else -1.0)
        logs.append(lv)
        errs.append(lv + math.log(max(relerr, 1e-300)))
    if not logs:
        return 0.0, NEG_INF, 0.0, nodes
    total, sign = signed_logsumexp(logs, sgns)
    total = float(total)
    if total == NEG_INF or sign == 0.0:
        return 0.0, NEG_INF, 0.0, nodes
    rel_out = math.exp(float(logsumexp(errs)) - total)
    return float(sign), total, rel_out, nodes


def _apply_W_z(params: OperatorParams, f: FunctionSpec, x: float,
               spec: QuadratureSpec, rel_tol: float) -> QuadResult:
    """Gauss-Jacobi evaluation of W[f](x) in t = x/y."""
    alpha, lam, kappa = params.alpha, params.lam, params.kappa
    ga = gamma_fn(alpha)
    total = 0.0
    abs_err = 0.0
    nodes = 0
    for pc in f.pieces:
        ta = 0.0 if math.isinf(pc.hi) else x / pc.hi
        tb = 1.0 if pc.lo == 0.0 else min(1.0, x / pc.lo)
        if tb <= ta:
            continue
        texp = alpha + lam - 2.0 - pc.a
        pref = pc.c * x ** (pc.a + 1.0 - kappa) / ga
        t1 = None
        if pc.theta != 0.0 and 0.0 < x:
            t1 = x  # x/t == 1 exactly at t = x
            if abs(t1 - ta) < 1e-13 * max(t1, ta):
                t1 = ta
            elif abs(t1 - tb) < 1e-13 * max(t1, tb):
                t1 = tb
            if not (ta <= t1 <= tb):
                t1 = None
        knots = {ta, tb}
        if t1 is not None and ta < t1 < tb:
            knots.add(t1)
        knots = sorted(knots)
        structures = [0.0, 1.0] + ([t1] if t1 is not None else [])
        for ka, kb in _pairs(knots):
            absorbed_a = ka == 0.0 or (t1 is not None and ka == t1)
            absorbed_b = kb == 1.0 or (t1 is not None and kb == t1)
            scale_a = 1.0 if absorbed_a else _near_scale(ka, structures, kb - ka, 1.0)
            scale_b = 1.0 if absorbed_b else _near_scale(kb, structures, kb - ka, 1.0)
            for pa, pb in _pairs(_graded_edges(ka, kb, scale_a, scale_b, 1.0)):
                le = re_ = 0.0
                a_abs = pa == 0.0
                b_abs = pb == 1.0
                tl = t1 is not None and pa == t1
                tr = t1 is not None and pb == t1
                if a_abs:
                    le += texp
                if b_abs:
                    re_ += -lam
                if tl:
                    le += pc.theta
                if tr:
                    re_ += pc.theta

                def g(t, _aa=a_abs, _ba=b_abs, _tl=tl, _tr=tr):
                    out = np.ones_like(t)
                    if texp != 0.0 and not _aa:
                        out = out * np.power(t, texp)
                    if not _ba:
                        out = out * np.power(1.0 - t, -lam)
                    if pc.theta != 0.0:
                        if _tl or _tr:
                            d = t - t1
                            out = out * np.abs(np.log1p(d / t1) / d) ** pc.theta
                        else:
                            out = out * np.abs(np.log(x) - np.log(t)) ** pc.theta
                    return out

                val, err, used, ok = _refine_plain(
                    lambda n, _pa=pa, _pb=pb, _le=le, _re=re_, _g=g:
                        _panel_plain(_g, _pa, _pb, _le, _re, n),
                    spec, rel_tol, spec.abs_tol / max(abs(pref), 1e-300))
                nodes += used
                if not ok:
                    raise ConvergenceError(
                        f"W panel did not converge at x={x} on [{pa}, {pb}]",
                        best_estimate=total + pref * val,
                        error_estimate=abs(pref) * err)
                total += pref * val
                abs_err += abs(pref) * err
    return QuadResult(total, abs_err, nodes, True)


def _w_z_route_ok(params: OperatorParams, f: FunctionSpec, x: float) -> bool:
    if abs(math.log(x)) > _Z_ENGINE_MAX_LOGX:
        return False
    for pc in f.pieces:
        if math.isinf(pc.hi) and abs(params.alpha + params.lam - 1.0 - pc.a) <= 1e-9:
            return False
        if pc.theta != 0.0 and math.isinf(pc.hi):
            # |log(x/t)|^theta is unbounded at the absorbed t -> 0 endpoint
            return False
        if abs(pc.a * math.log(x)) > 250.0:
            return False
        if abs((pc.a + 1.0 - params.kappa) * math.log(x)) > 250.0:
            return False
        knots = [min(1.0, x / pc.lo) if pc.lo > 0.0 else 1.0]
        if math.isfinite(pc.hi):
            knots.append(x / pc.hi)
        if pc.theta != 0.0:
            knots.append(x)
        for k in knots:
            if 0.0 < k < 1e-7 or 0.0 < 1.0 - k < 1e-7:
                return False
    return True


def apply_W(params: OperatorParams, f: FunctionSpec, x: float,
            spec: QuadratureSpec | None = None,
            rel_tol: float | None = None) -> QuadResult:
    """W[f](x) = x^(-beta) / Gamma(alpha) ∫_x^∞ y^(-alpha) f(y) (y-x)^(-lam) dy."""
    spec = spec or DEFAULT_SPEC
    rel = rel_tol if rel_tol is not None else spec.rel_tol
    if not (x > 0.0 and math.isfinite(x)):
        raise DomainError(f"x must be positive and finite, got {x}")
    _screen_W_pointwise(params, f, x)
    if x >= f.support_hi:
        return QuadResult(0.0, 0.0, 0, True)
    if _w_z_route_ok(params, f, x):
        return _apply_W_z(params, f, x, spec, rel)
    sign, logv, relerr, nodes = apply_W_log(params, f, math.log(x), spec, rel)
    value = sign * math.exp(logv) if logv < 709 else sign * math.inf
    err = abs(value) * relerr if math.isfinite(value) else math.inf
    return QuadResult(value, err, nodes, True)


# ---------------------------------------------------------------------------
# V_S: weighted convolution averaging
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightSpec:
    """Convolution weight s with primitive S and growth constant L.

    `kind` is "power" for s(z) = z^(bw - 1) (bw = 1 gives plain averaging),
    or "callable" for a black-box weight.  L = sup_{x > y} s(x)/s(y); when
    not supplied it is probed on a 1024-point log grid.
    """

    kind: str
    bw: float | None = None
    s: Callable | None = None
    S: Callable | None = None
    L: float | None = None
    label: str = ""

    def __post_init__(self):
        if self.kind == "power":
            if self.bw is None or not (0.0 < self.bw <= 1.0):
                raise DomainError(
                    f"power weight needs exponent bw in (0, 1], got {self.bw}")
        elif self.kind == "callable":
            if self.s is None:
                raise DomainError("callable weight needs s")
        else:
            raise DomainError(f"unknown weight kind {self.kind!r}")

    def weight(self, z):
        if self.kind == "power":
            return np.power(z, self.bw - 1.0)
        return self.s(z)

    def primitive(self, x: float, spec: QuadratureSpec | None = None) -> float:
        if self.kind == "power":
            return x ** self.bw / self.bw
        if self.S is not None:
            return float(self.S(x))
        return tanh_sinh(lambda z: np.asarray(self.s(z), dtype=float),
                         0.0, x, spec or DEFAULT_SPEC).value

    def growth_constant(self) -> float:
        if self.L is not None:
            return self.L
        if self.kind == "power":
            return 1.0  # non-increasing on (0, inf) for bw <= 1
        grid = np.geomspace(1e-4, 1e4, 1024)
        vals = np.asarray(self.s(grid), dtype=float)
        if np.any(~np.isfinite(vals)) or np.any(vals <= 0):
            raise DomainError("weight must be positive and finite on (0, inf)")
        running_min = np.minimum.accumulate(vals)
        return float(np.max(vals / running_min))


def weight_one() -> WeightSpec:
    return WeightSpec(kind="power", bw=1.0, L=1.0, label="s1")


def power_weight(bw: float) -> WeightSpec:
    return WeightSpec(kind="power", bw=bw, label=f"rl:{bw}")


def _vs_positivity_probe(w: WeightSpec):
    grid = np.geomspace(1e-6, 1e6, 1024)
    vals = np.asarray(w.weight(grid), dtype=float)
    if np.any(~np.isfinite(vals)) or np.any(vals <= 0.0):
        raise DomainError("weight must be positive and finite on (0, inf)")


def apply_VS_log(w: WeightSpec, f: FunctionSpec, u: float,
                 spec: QuadratureSpec | None = None,
                 rel_tol: float | None = None):
    """V_S[f](e^u) as (sign, log|value|, rel_err, nodes), power weights only.

    In v = log(x/t) the convolution becomes the same kernel integral as U
    with lam -> 1 - bw and decay 1 + a per piece.
    """
    if w.kind != "power":
        raise UnsupportedError("log-domain V_S needs a power weight")
    spec = spec or DEFAULT_SPEC
    rel = rel_tol if rel_tol is not None else spec.rel_tol
    bw = w.bw
    x = math.exp(u) if abs(u) < 700 else (math.inf if u > 0 else 0.0)
    _screen_VS_pointwise(bw, f, x if x > 0 else math.exp(min(max(u, -700.0), 700.0)))
    sgns, logs, errs = [], [], []
    nodes = 0
    for pc in f.pieces:
        v1 = 0.0 if math.isinf(pc.hi) else max(0.0, u - math.log(pc.hi))
        v2 = math.inf if pc.lo == 0.0 else u - math.log(pc.lo)
        if v2 <= v1:
            continue
        cv = 1.0 + pc.a
        logS, relerr, used = _kernel_core_log(
            cv, 1.0 - bw, pc.theta, u, v1, v2, spec, rel)
        nodes += used
        if logS == NEG_INF:
            continue
        lv = math.log(abs(pc.c)) + math.log(bw) + u * pc.a + logS
        sgns.append(1.0 if pc.c > 0 else -1.0)
        logs.append(lv)
        errs.append(lv + math.log(max(relerr, 1e-300)))
    if not logs:
        return 0.0, NEG_INF, 0.0, nodes
    total, sign = signed_logsumexp(logs, sgns)
    total = float(total)
    if total == NEG_INF or sign == 0.0:
        return 0.0, NEG_INF, 0.0, nodes
    rel_out = math.exp(float(logsumexp(errs)) - total)
    return float(sign), total, rel_out, nodes


def apply_VS(w: WeightSpec, f: FunctionSpec, x: float,
             spec: QuadratureSpec | None = None,
             rel_tol: float | None = None) -> QuadResult:
    """V_S[f](x) = (1/S(x)) ∫_0^x f(t) s(x - t) dt."""
    spec = spec or DEFAULT_SPEC
    rel = rel_tol if rel_tol is not None else spec.rel_tol
    if not (x > 0.0 and math.isfinite(x)):
        raise DomainError(f"x must be positive and finite, got {x}")
    _vs_positivity_probe(w)
    if w.kind == "power":
        _screen_VS_pointwise(w.bw, f, x)
    if x <= f.support_lo:
        return QuadResult(0.0, 0.0, 0, True)
    theta_pieces = any(pc.theta != 0.0 for pc in f.pieces)
    if w.kind == "power" and (abs(math.log(x)) > _Z_ENGINE_MAX_LOGX
                              or theta_pieces):
        # log-power structure sits at interior knots where t-space node
        # offsets quantize to ulp; the v-space kernel carries it exactly
        sign, logv, relerr, nodes = apply_VS_log(w, f, math.log(x), spec, rel)
        value = sign * math.exp(logv) if logv < 709 else sign * math.inf
        err = abs(value) * relerr if math.isfinite(value) else math.inf
        return QuadResult(value, err, nodes, True)
    # direct t-space panels between the breakpoints of f inside (0, x); the
    # panel touching t = x flips to r = x - t so the weight singularity
    # lands on an exact-zero endpoint instead of dissolving into ulp(x)
    knots = sorted({0.0, x} | {b for b in f.breakpoints if 0.0 < b < x}
                   | ({1.0} if 0.0 < 1.0 < x else set()))
    total = 0.0
    abs_err = 0.0
    nodes = 0
    for ka, kb in _pairs(knots):
        if kb == x and ka == 0.0:
            mid = 0.5 * x
            segs = (("t", ka, mid), ("r", 0.0, x - mid))
        elif kb == x:
            segs = (("r", 0.0, x - ka),)
        else:
            segs = (("t", ka, kb),)
        for mode, lo_, hi_ in segs:
            if mode == "t":
                def g(t):
                    return evaluate(f, t) * np.asarray(w.weight(x - t),
                                                       dtype=float)
            else:
                def g(r):
                    return evaluate(f, x - r) * np.asarray(w.weight(r),
                                                           dtype=float)
            res = tanh_sinh(g, lo_, hi_, spec, rel)
            total += res.value
            abs_err += res.error_estimate
            nodes += res.nodes_used
    S = w.primitive(x, spec)
    return QuadResult(total / S, abs_err / S, nodes, True)


# ---------------------------------------------------------------------------
# image endpoint declarations (shared with the norm pipeline)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ImageInfo:
    """Declared asymptotics of an operator image in u = log x.

    `left`/`right` are ("edge", u_edge) at a support edge or
    ("tail", a, theta) for power-log behavior x^a |log x|^theta.
    """

    left: tuple
    right: tuple
    breaks: tuple[float, ...]


def _u_breaks(f: FunctionSpec) -> tuple[float, ...]:
    pts = {0.0}
    for b in f.breakpoints:
        pts.add(math.log(b))
    return tuple(sorted(pts))


def image_info_U(params: OperatorParams, f: FunctionSpec) -> ImageInfo:
    tol = BOUNDARY_TOL
    bl = params.beta + params.lam
    if f.support_lo > 0.0:
        left = ("edge", math.log(f.support_lo))
    else:
        zp = f.zero_piece
        cv0 = 1.0 - params.alpha + zp.a
        if cv0 > tol:
            left = ("tail", zp.a + 1.0 - params.kappa, zp.theta)
        elif abs(cv0) <= tol and zp.theta < -1.0 - tol:
            left = ("tail", -bl, zp.theta + 1.0)
        else:
            _div("0", f"piece exponent {zp.a} at or below alpha - 1")
    cands = []
    for pc in f.pieces:
        if math.isinf(pc.hi):
            d = pc.a - (params.alpha - 1.0)
            if d > tol:
                cands.append((pc.a + 1.0 - params.kappa, pc.theta))
            elif abs(d) <= tol:
                cands.append((-bl, pc.theta + 1.0 if pc.theta > -1.0 + tol else 0.0))
            else:
                cands.append((-bl, 0.0))
        else:
            cands.append((-bl, 0.0))
    right = ("tail",) + max(cands)
    return ImageInfo(left, right, _u_breaks(f))


def image_info_W(params: OperatorParams, f: FunctionSpec) -> ImageInfo:
    tol = BOUNDARY_TOL
    if math.isfinite(f.support_hi):
        right = ("edge", math.log(f.support_hi))
    else:
        ip = f.infinity_piece
        cw = params.alpha + params.lam - 1.0 - ip.a
        if cw > tol:
            right = ("tail", ip.a + 1.0 - params.kappa, ip.theta)
        elif abs(cw) <= tol and ip.theta < -1.0 - tol:
            right = ("tail", -params.beta, ip.theta + 1.0)
        else:
            _div("infinity", f"piece exponent {ip.a} at or above alpha + lam - 1")
    cands = []
    for pc in f.pieces:
        if pc.lo == 0.0:
            d = (params.alpha + params.lam - 1.0) - pc.a
            if d > tol:
                cands.append((pc.a + 1.0 - params.kappa, pc.theta))
            elif abs(d) <= tol:
                cands.append((-params.beta,
                              pc.theta + 1.0 if pc.theta > -1.0 + tol else 0.0))
            else:
                cands.append((-params.beta, 0.0))
        else:
            cands.append((-params.beta, 0.0))
    a_min = min(c[0] for c in cands)
    th_pick = max(c[1] for c in cands if c[0] == a_min)
    left = ("tail", a_min, th_pick)
    return ImageInfo(left, right, _u_breaks(f))


def image_info_VS(w: WeightSpec, f: FunctionSpec) -> ImageInfo:
    if w.kind != "power":
        raise UnsupportedError("image declarations need a power weight")
    tol = BOUNDARY_TOL
    if f.support_lo > 0.0:
        left = ("edge", math.log(f.support_lo))
    else:
        zp = f.zero_piece
        if zp.a > -1.0 + tol:
            left = ("tail", zp.a, zp.theta)
        elif abs(zp.a + 1.0) <= tol and zp.theta < -1.0 - tol:
            left = ("tail", -1.0, zp.theta + 1.0)
        else:
            _div("0", f"piece exponent {zp.a} at or below -1")
    cands = []
    for pc in f.pieces:
        if math.isinf(pc.hi):
            d = pc.a + 1.0
            if d > tol:
                cands.append((pc.a, pc.theta))
            elif abs(d) <= tol:
                cands.append((-1.0, pc.theta + 1.0 if pc.theta > -1.0 + tol else 0.0))
            else:
                cands.append((-1.0, 0.0))
        else:
            cands.append((-1.0, 0.0))
    right = ("tail",) + max(cands)
    return ImageInfo(left, right, _u_breaks(f))


# ---------------------------------------------------------------------------
# several axes
# ---------------------------------------------------------------------------

def apply_U_multidim(mparams: MultiParams, f, x_vec,
                     spec: QuadratureSpec | None = None,
                     rel_tol: float | None = None) -> QuadResult:
    """Tensorized U applied axis by axis.

    For tensor-product functions each axis is an independent one-variable
    application; a plain callable f(y_1, .., y_d) is integrated by nested
    double-exponential rules, which tolerate integrable power behavior of
    the callable at the axis endpoints but cannot locate interior jumps of
    a black box -- express piecewise factors as a ProductFunctionSpec.
    """
    spec = spec or DEFAULT_SPEC
    rel = rel_tol if rel_tol is not None else spec.rel_tol
    x_vec = [float(v) for v in x_vec]
    if len(x_vec) != mparams.d:
        raise DomainError(f"x_vec has {len(x_vec)} entries for {mparams.d} axes")
    for j, xj in enumerate(x_vec):
        if not (xj > 0.0 and math.isfinite(xj)):
            raise DomainError(f"axis {j}: x must be positive and finite, got {xj}")
    if isinstance(f, ProductFunctionSpec):
        if f.d != mparams.d:
            raise DomainError(
                f"function has {f.d} factors for {mparams.d} axes")
        value = 1.0
        rel_err = 0.0
        nodes = 0
        for j, (ax, fj, xj) in enumerate(zip(mparams.axes, f.factors, x_vec)):
            try:
                res = apply_U(ax, fj, xj, spec, rel)
            except (DivergenceError, ConvergenceError) as exc:
                raise type(exc)(f"axis {j}: {exc}") from None
            value *= res.value
            rel_err += res.error_estimate / abs(res.value) if res.value else 0.0
            nodes += res.nodes_used
        return QuadResult(value, abs(value) * rel_err, nodes, True)
    if not callable(f):
        raise UnsupportedError(
            "multidimensional apply needs a ProductFunctionSpec or a callable")
    used = [0]

    def nested(j: int, zs: list[float]) -> float:
        ax = mparams.axes[j]

        def core(z: float) -> float:
            if j + 1 < mparams.d:
                return nested(j + 1, zs + [z])
            pts = [xk * zk for xk, zk in zip(x_vec, zs + [z])]
            return float(f(*pts))

        # full weighted integrand; tanh-sinh soaks up the endpoint
        # singularities, including whatever power the callable itself
        # contributes, without needing declared exponents.  Each singular
        # weight factor must sit at an integration endpoint that is exactly
        # zero, or the node offsets collapse into ulp(endpoint) and the
        # final sliver of mass is silently lost -- hence the reflected
        # upper half instead of a single pass over [0, 1].
        def g_lo(z_arr):
            out = np.array([core(float(z)) for z in z_arr])
            return out * np.power(z_arr, -ax.alpha) \
                * np.power(1.0 - z_arr, -ax.lam)

        def g_hi(t_arr):  # t = 1 - z
            out = np.array([core(1.0 - float(t)) for t in t_arr])
            return out * np.power(1.0 - t_arr, -ax.alpha) \
                * np.power(t_arr, -ax.lam)

        total = 0.0
        for part in (g_lo, g_hi):
            try:
                res = tanh_sinh(part, 0.0, 0.5, spec, rel)
            except ConvergenceError as exc:
                raise ConvergenceError(
                    f"axis {j}: nested quadrature did not converge",
                    best_estimate=exc.best_estimate,
                    error_estimate=exc.error_estimate) from exc
            used[0] += res.nodes_used
            total += res.value
        return total

    raw = nested(0, [])
    pref = 1.0
    for ax, xj in zip(mparams.axes, x_vec):
        pref *= xj ** (1.0 - ax.kappa)
    return QuadResult(pref * raw, abs(pref * raw) * rel * mparams.d, used[0], True)


# ---------------------------------------------------------------------------
# discrete counterpart
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscreteKernel:
    """Kernel M(m, n) on pairs of nonnegative integers."""

    M: Callable[[int, int], float]
    homogeneity_check: bool = True
    label: str = ""


def cesaro_kernel() -> DiscreteKernel:
    """M(m, n) = 1/(n+1) for m <= n: the discrete averaging prototype."""
    return DiscreteKernel(M=lambda m, n: 1.0 / (n + 1) if m <= n else 0.0,
                          label="cesaro")


# weak so the entry dies with the kernel; a plain id() key would be
# recycled by the allocator and silently skip the probe for a new kernel
_probed_kernels: "weakref.WeakSet[DiscreteKernel]" = weakref.WeakSet()


def _probe_homogeneity(kernel: DiscreteKernel):
    """Warn when M(2m, 2n) * 2 strays far from M(m, n) on a sample grid.

    Degree -1 homogeneity only holds asymptotically for lattice kernels
    (integer shifts contribute O(1/n)), so the tolerance is loose; a kernel
    of a genuinely different degree overshoots it by orders of magnitude.
    """
    if kernel in _probed_kernels:
        return
    _probed_kernels.add(kernel)
    worst = 0.0
    for m in (4, 8, 16, 32):
        for n in (4, 8, 16, 32):
            base = kernel.M(m, n)
            doubled = kernel.M(2 * m, 2 * n) * 2.0
            if base == 0.0 and doubled == 0.0:
                continue
            scale = max(abs(base), abs(doubled))
            worst = max(worst, abs(doubled - base) / scale)
    if worst > 0.15:
        warnings.warn(
            f"kernel {kernel.label or id(kernel)} deviates from degree -1 "
            f"homogeneity by {worst:.3g} on the sample grid",
            HomogeneityWarning, stacklevel=3)


def apply_M_discrete(kernel: DiscreteKernel, a: Sequence[float], n: int,
                     cutoff: int | None = None) -> float:
    """(M a)(n) = sum_{m=0}^{cutoff} M(m, n) a_m, with a_m = 0 past the end."""
    seq = [float(v) for v in a]
    if n < 0 or int(n) != n:
        raise DomainError(f"n must be a nonnegative integer, got {n}")
    if cutoff is None:
        cutoff = len(seq)
    if cutoff < len(seq):
        raise DomainError(
            f"cutoff {cutoff} is smaller than the sequence length {len(seq)}")
    if kernel.homogeneity_check:
        _probe_homogeneity(kernel)
    total = 0.0
    for m in range(min(cutoff, len(seq) - 1) + 1):
        if m < len(seq) and seq[m] != 0.0:
            total += kernel.M(m, int(n)) * seq[m]
    return total
