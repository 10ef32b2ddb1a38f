"""Quadrature engines for integrands with algebraic endpoint singularities.

Three layers live here:

* fixed-weight Gauss rules (Jacobi / Legendre / generalized Laguerre) with
  node-doubling error control, plus a tanh-sinh fallback for integrands whose
  singular structure is not declared;
* a log-domain engine for integrals of the form ``exp(-c*t) * |t - P|^r`` on
  arbitrary sub-intervals of the half line.  All half-line L_p integrals of
  piecewise power-log functions reduce to it after the substitution
  u = |log x|, and the operator kernels reuse it for their flat region.
  Values are carried as logarithms so that near-critical integrals whose mass
  sits at x ~ exp(1e4) neither overflow nor silently underflow to zero;
* a black-box half-line integrator working in u = log x with declared
  tail rates, used for image norms where only pointwise (log-)values of the
  integrand are available.

Divergence is always decided from declared exponents ([screen_* helpers]),
never by watching a numeric sequence grow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import roots_genlaguerre, roots_jacobi, roots_legendre

from .errors import ConvergenceError, DivergenceError, DomainError


def logsumexp(terms) -> float:
    """log(sum(exp(t))) over a 1-d collection, stable and allocation-light.

    The scipy version routes through the array-API compatibility layer and
    costs tens of microseconds per call, which dominates everything when the
    log-space panels invoke it hundreds of thousands of times.
    """
    a = np.asarray(terms, dtype=float)
    if a.size == 0:
        return NEG_INF
    m = float(np.max(a))
    if not math.isfinite(m):
        # all -inf, or a stray +inf/nan: the max is the honest answer
        return m
    return m + math.log(float(np.sum(np.exp(a - m))))


def signed_logsumexp(terms, signs) -> tuple[float, float]:
    """log|sum(sign*exp(t))| plus the sign of the sum."""
    a = np.asarray(terms, dtype=float)
    s = np.asarray(signs, dtype=float)
    if a.size == 0:
        return NEG_INF, 0.0
    m = float(np.max(a))
    if not math.isfinite(m):
        return m, 1.0
    acc = float(np.sum(s * np.exp(a - m)))
    if acc == 0.0:
        return NEG_INF, 0.0
    return m + math.log(abs(acc)), math.copysign(1.0, acc)

#: tolerance for "exponent sits exactly on the convergence boundary" checks
BOUNDARY_TOL = 1e-12

#: (1 - exp(-v)) is exactly 1.0 in doubles for v beyond this, so the curved
#: part of the operator kernels ends here
FLAT_KERNEL_V = 41.0

NEG_INF = float("-inf")


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and budgets shared by every integration routine."""

    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_nodes: int = 2048
    tail_cut: float = 1e8

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise DomainError("rel_tol and abs_tol must be positive")
        if self.max_nodes < 16:
            raise DomainError("max_nodes must be at least 16")


@dataclass
class QuadResult:
    value: float
    error_estimate: float
    nodes_used: int
    converged: bool


DEFAULT_SPEC = QuadratureSpec()


# ---------------------------------------------------------------------------
# special functions
# ---------------------------------------------------------------------------

def gamma_fn(x: float) -> float:
    """Gamma function for positive arguments.

    Backed by the platform libm implementation; arguments beyond the double
    overflow threshold (~171.6) return inf.
    """
    if not isinstance(x, (int, float)) or x != x:
        raise DomainError(f"gamma_fn needs a finite positive argument, got {x!r}")
    if x <= 0.0:
        raise DomainError(f"gamma_fn domain is x > 0, got {x}")
    try:
        return math.gamma(x)
    except OverflowError:
        return math.inf


def log_gamma(x: float) -> float:
    if x <= 0.0 or x != x:
        raise DomainError(f"log_gamma domain is x > 0, got {x}")
    return math.lgamma(x)


def beta_fn(a: float, b: float) -> float:
    """Euler Beta B(a, b) for positive arguments."""
    if a <= 0.0 or b <= 0.0:
        raise DomainError(f"beta_fn domain is a, b > 0, got ({a}, {b})")
    # direct Gamma quotient is accurate for the moderate arguments used here
    if a + b < 170.0:
        return math.gamma(a) * math.gamma(b) / math.gamma(a + b)
    return math.exp(math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))


# ---------------------------------------------------------------------------
# cached node tables
# ---------------------------------------------------------------------------

@lru_cache(maxsize=4096)
def _legendre_rule(n: int):
    x, w = roots_legendre(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=4096)
def _jacobi_rule(n: int, alpha: float, beta: float):
    # scipy convention: weight (1-x)^alpha (1+x)^beta on [-1, 1]
    with np.errstate(invalid="ignore"):  # scipy evaluates a dead branch at k=1
        x, w = roots_jacobi(n, alpha, beta)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=1024)
def _laguerre_rule(n: int, alpha: float):
    x, w = roots_genlaguerre(n, alpha)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _refine_ns(spec: QuadratureSpec, n0: int = 8, n_max: int = 512) -> list[int]:
    """Node-doubling schedule honoring the spec budget."""
    ns = []
    n = n0
    cap = min(n_max, spec.max_nodes)
    while n <= cap:
        ns.append(n)
        n *= 2
    if not ns:
        ns = [spec.max_nodes]
    return ns


# ---------------------------------------------------------------------------
# plain (non-log) panels
# ---------------------------------------------------------------------------

def _panel_plain(g, lo: float, hi: float, left_exp: float, right_exp: float,
                 n: int) -> float:
    """One Gauss panel of ∫_lo^hi (z-lo)^left (hi-z)^right g(z) dz."""
    h = 0.5 * (hi - lo)
    m = 0.5 * (hi + lo)
    if left_exp == 0.0 and right_exp == 0.0:
        x, w = _legendre_rule(n)
        return h * float(np.dot(w, g(m + h * x)))
    x, w = _jacobi_rule(n, right_exp, left_exp)
    return h ** (1.0 + left_exp + right_exp) * float(np.dot(w, g(m + h * x)))


def _refine_plain(make: Callable[[int], float], spec: QuadratureSpec,
                  rel_tol: float, abs_tol: float, n0: int = 8,
                  n_max: int = 512):
    """Evaluate `make(n)` over a doubling schedule until two values agree."""
    prev = None
    used = 0
    val = math.nan
    err = math.inf
    for n in _refine_ns(spec, n0, n_max):
        val = make(n)
        used += n
        if prev is not None:
            err = abs(val - prev)
            if err <= max(rel_tol * abs(val), abs_tol):
                return val, err, used, True
        prev = val
    return val, err, used, False


def jacobi_weighted_integral(g, a_exp: float, b_exp: float,
                             spec: QuadratureSpec | None = None) -> QuadResult:
    """∫_0^1 z^(-a_exp) (1-z)^(-b_exp) g(z) dz with both exponents in (0, 1).

    `g` must accept numpy arrays.  Raises ConvergenceError (carrying the best
    estimate) when the node budget is exhausted before two successive rules
    agree.
    """
    spec = spec or DEFAULT_SPEC
    for name, e in (("a_exp", a_exp), ("b_exp", b_exp)):
        if not (0.0 < e < 1.0):
            raise DomainError(f"{name} must lie in (0, 1), got {e}")
    val, err, used, ok = _refine_plain(
        lambda n: _panel_plain(g, 0.0, 1.0, -a_exp, -b_exp, n),
        spec, spec.rel_tol, spec.abs_tol)
    if not ok:
        raise ConvergenceError(
            f"jacobi_weighted_integral did not converge within {spec.max_nodes} nodes",
            best_estimate=val, error_estimate=err)
    return QuadResult(float(val), float(err), used, True)


def tanh_sinh(g, lo: float, hi: float, spec: QuadratureSpec | None = None,
              rel_tol: float | None = None) -> QuadResult:
    """Double-exponential quadrature on a finite interval.

    Robust to integrable endpoint singularities without knowing their
    exponents; `g` must accept numpy arrays and may return inf at the exact
    endpoints (never evaluated there).

    Accuracy caveat: a singularity x^(-s) at an endpoint that is exactly
    zero is resolved in full, because node offsets from zero stay exact
    down to e^(-200).  At a nonzero endpoint the node positions quantize to
    ulp(endpoint), which silently drops the last sliver of mass -- a
    relative floor of roughly (eps/endpoint)^(1-s).  Callers who know the
    singular factor analytically should substitute the distance to that
    endpoint as the integration variable first.
    """
    spec = spec or DEFAULT_SPEC
    rel = rel_tol if rel_tol is not None else spec.rel_tol
    if not (hi > lo):
        raise DomainError(f"need lo < hi, got [{lo}, {hi}]")
    hw = 0.5 * (hi - lo)
    t_max = 5.0
    term_sum = 0.0  # sum of w_j * g_j without the step factor h
    total = math.nan
    prev = None
    used = 0
    err = math.inf
    h = 0.5
    for level in range(9):
        if level == 0:
            ts = np.arange(-t_max, t_max + 1e-12, h)
        else:
            h *= 0.5
            ts = np.arange(-t_max + h, t_max, 2.0 * h)  # new (odd) nodes only
        s = 0.5 * math.pi * np.sinh(ts)
        # distance of the node to its nearest endpoint, computed stably
        delta = 2.0 / (np.exp(2.0 * np.abs(s)) + 1.0)
        x = np.where(ts >= 0, hi - hw * delta, lo + hw * delta)
        w = hw * 0.5 * math.pi * np.cosh(ts) / np.cosh(s) ** 2
        keep = (x > lo) & (x < hi) & (w > 0)
        term_sum += float(np.dot(w[keep], np.asarray(g(x[keep]), dtype=float)))
        used += int(keep.sum())
        total = h * term_sum
        if prev is not None:
            err = abs(total - prev)
            if err <= max(rel * abs(total), spec.abs_tol):
                return QuadResult(total, err, used, True)
        prev = total
        if used > spec.max_nodes:
            break
    raise ConvergenceError(
        f"tanh_sinh did not converge within {spec.max_nodes} nodes on [{lo}, {hi}]",
        best_estimate=total, error_estimate=err)


# ---------------------------------------------------------------------------
# log-domain panels
# ---------------------------------------------------------------------------

def _panel_log(logg, lo: float, hi: float, left_exp: float, right_exp: float,
               n: int) -> float:
    """log of one Gauss panel of ∫ (z-lo)^left (hi-z)^right exp(logg(z)) dz.

    `logg` is vectorized and may return -inf.
    """
    h = 0.5 * (hi - lo)
    m = 0.5 * (hi + lo)
    if left_exp == 0.0 and right_exp == 0.0:
        x, w = _legendre_rule(n)
        power = 1.0
    else:
        x, w = _jacobi_rule(n, right_exp, left_exp)
        power = 1.0 + left_exp + right_exp
    terms = np.log(w) + np.asarray(logg(m + h * x), dtype=float)
    return power * math.log(h) + float(logsumexp(terms))


def _refine_log(make: Callable[[int], float], spec: QuadratureSpec,
                rel_tol: float, n0: int = 12, n_max: int = 192):
    """Like _refine_plain but for log-valued panel evaluations."""
    prev = None
    used = 0
    logv = NEG_INF
    relerr = math.inf
    for n in _refine_ns(spec, n0, n_max):
        logv = make(n)
        used += n
        if prev is not None:
            if logv == NEG_INF and prev == NEG_INF:
                return logv, 0.0, used, True
            relerr = abs(math.expm1(min(prev - logv, 50.0))) if logv > NEG_INF else math.inf
            if relerr <= rel_tol:
                return logv, relerr, used, True
        prev = logv
    return logv, relerr, used, False


def _graded_edges(a: float, b: float, scale_a: float, scale_b: float,
                  cap: float) -> list[float]:
    """Panel edges on [a, b]: geometric ladders growing from both ends.

    The fronts advance toward each other (the one with the smaller current
    step moves) and join in a single middle panel, so the grading near each
    endpoint is never disturbed by edges arriving from the other side.
    """
    span = b - a
    cap = min(cap, span) if cap > 0 else span
    fa = max(min(scale_a, span), span * 1e-13)
    fb = max(min(scale_b, span), span * 1e-13)
    left = [a]
    right = [b]
    pos, step = a, fa
    posb, stepb = b, fb
    # merge only once the remaining gap is a valid neighbor for BOTH fronts
    # (at most twice the last step placed on each side); otherwise one front
    # with a span-sized opening step would suppress the other's fine grading
    while posb - pos > 2.0 * min(step, stepb) and len(left) + len(right) < 240:
        if step <= stepb:
            pos += step
            left.append(pos)
            step = min(step * 2.0, cap)
        else:
            posb -= stepb
            right.append(posb)
            stepb = min(stepb * 2.0, cap)
    edges = left + right[::-1]
    # collapse edges that ended up closer than a relative sliver
    out = [edges[0]]
    for e in edges[1:]:
        if e - out[-1] > 1e-12 * span:
            out.append(e)
    if out[-1] != b:
        out[-1] = b
    return out


def _near_scale(pt: float, structures: Sequence[float], span: float,
                cap: float) -> float:
    """First-panel length at `pt`: distance to the nearest off-point structure."""
    ds = [abs(pt - s) for s in structures if abs(pt - s) > 0.0]
    base = min(ds) if ds else cap
    return float(min(max(base, span * 1e-9), cap, span))


def _exp_power_panels_log(c: float, u1: float, u2: float, P: float, r: float,
                          spec: QuadratureSpec, rel_tol: float):
    """log ∫_{u1}^{u2} exp(-c t) |t - P|^r dt with c >= 0, finite interval,
    and P outside the open interval (so the power factor is singular at most
    at one endpoint).  Returns (log_value, rel_err, nodes).
    """
    if u2 <= u1:
        return NEG_INF, 0.0, 0
    span = u2 - u1
    trunc_rel = 0.0
    u2e = u2
    if c > 0.0 and c * span > 80.0:
        # mass is confined near u1; honest truncation with a recorded bound
        u2e = u1 + 80.0 / c
        if P >= u2:
            # keep the cut clear of the power point so |t-P|^r stays one-signed
            u2e = min(u2e, u2)
        trunc_rel = math.exp(-75.0)
    structures = [P] if r != 0.0 else []
    cap = 8.0 / (1.0 + c)
    touch_a = (P == u1)
    touch_b = (P == u2e)
    scale_a = cap if touch_a else _near_scale(u1, structures, u2e - u1, cap)
    scale_b = cap if touch_b else _near_scale(u2e, structures, u2e - u1, cap)
    edges = _graded_edges(u1, u2e, scale_a, scale_b, cap)
    logs, errs, nodes = [], [], 0
    for pa, pb in zip(edges[:-1], edges[1:]):
        le = r if (touch_a and pa == u1) else 0.0
        re_ = r if (touch_b and pb == u2e) else 0.0

        def logg(t, _le=le, _re=re_):
            out = -c * t
            if r != 0.0 and _le == 0.0 and _re == 0.0:
                out = out + r * np.log(np.abs(t - P))
            return out

        logv, relerr, used, ok = _refine_log(
            lambda n, _pa=pa, _pb=pb, _le=le, _re=re_, _lg=logg:
                _panel_log(_lg, _pa, _pb, _le, _re, n),
            spec, rel_tol)
        nodes += used
        if not ok:
            raise ConvergenceError(
                "power-exponential panel did not converge "
                f"(c={c}, r={r}, panel=[{pa}, {pb}])",
                best_estimate=None, error_estimate=relerr)
        logs.append(logv)
        errs.append(logv + math.log(max(relerr, 1e-300)))
    total = float(logsumexp(logs)) if logs else NEG_INF
    if total == NEG_INF:
        return total, 0.0, nodes
    err_rel = math.exp(float(logsumexp(errs)) - total) if errs else 0.0
    return total, err_rel + trunc_rel, nodes


def _laguerre_tail_log(c: float, r: float, T: float, spec: QuadratureSpec,
                       rel_tol: float):
    """log ∫_T^∞ exp(-c t) t^r dt for c > 0, T > 0. Returns (log, rel, nodes)."""
    prev = None
    used = 0
    logv = NEG_INF
    relerr = math.inf
    for n in _refine_ns(spec, 16, 256):
        x, w = _laguerre_rule(n, 0.0)
        t = T + x / c
        terms = np.log(w) + r * np.log(t)
        logv = -c * T - math.log(c) + float(logsumexp(terms))
        used += n
        if prev is not None:
            relerr = abs(math.expm1(min(prev - logv, 50.0)))
            if relerr <= rel_tol:
                return logv, relerr, used
        prev = logv
    raise ConvergenceError(
        f"Laguerre tail did not converge (c={c}, r={r}, T={T})",
        best_estimate=math.exp(logv), error_estimate=relerr)


def exp_power_integral_log(c: float, r: float, u1: float, u2: float,
                           spec: QuadratureSpec | None = None,
                           rel_tol: float | None = None):
    """log ∫_{u1}^{u2} exp(-c u) u^r du on 0 <= u1 < u2 <= inf.

    Requirements (callers screen, asserted here): r > -1 whenever u1 == 0;
    for u2 == inf either c > 0, or c == 0 with r < -1 and u1 > 0.
    Returns (log_value, rel_err, nodes).
    """
    spec = spec or DEFAULT_SPEC
    rel = rel_tol if rel_tol is not None else spec.rel_tol
    if u1 < 0 or u2 <= u1:
        raise DomainError(f"bad interval [{u1}, {u2}]")
    if u1 == 0.0 and r <= -1.0:
        raise DivergenceError(f"exponent {r} not integrable at 0")
    if r == 0.0:
        # pure exponential: closed form
        if math.isinf(u2):
            if c <= 0.0:
                raise DivergenceError(
                    f"exp-power integral divergent at infinity (c={c}, r={r})")
            return -c * u1 - math.log(c), 0.0, 0
        span = u2 - u1
        if c == 0.0:
            return math.log(span), 0.0, 0
        if c > 0.0:
            return (-c * u1 + math.log(-math.expm1(-c * span)) - math.log(c),
                    0.0, 0)
        return (-c * u2 + math.log(-math.expm1(c * span)) - math.log(-c),
                0.0, 0)
    if c == 0.0 and not math.isinf(u2):
        # pure power: closed form (u1 == 0 implies r > -1 after the screen)
        rp = r + 1.0
        if abs(rp) <= 1e-14:
            return math.log(math.log(u2 / u1)), 0.0, 0
        if rp > 0.0:
            ratio = rp * (math.log(u1 / u2) if u1 > 0.0 else NEG_INF)
            return (rp * math.log(u2) + math.log(-math.expm1(ratio))
                    - math.log(rp), 0.0, 0)
        ratio = rp * math.log(u2 / u1)
        return (rp * math.log(u1) + math.log(-math.expm1(ratio))
                - math.log(-rp), 0.0, 0)
    if math.isinf(u2):
        if c > 0.0:
            T = max(u1, 2.0 * r / c if r > 0 else 0.0, 1.0 / c)
            tail_log, tail_rel, tail_n = _laguerre_tail_log(c, r, T, spec, rel)
            if T > u1:
                head_log, head_rel, head_n = _exp_power_panels_log(
                    c, u1, T, 0.0, r, spec, rel)
                total = float(logsumexp([head_log, tail_log]))
                err = (math.exp(head_log - total) * head_rel
                       + math.exp(tail_log - total) * tail_rel)
                return total, err, head_n + tail_n
            return tail_log, tail_rel, tail_n
        if c == 0.0 and r < -1.0 and u1 > 0.0:
            # pure power tail: one more log substitution makes it exponential
            return exp_power_integral_log(-(r + 1.0), 0.0, math.log(u1),
                                          math.inf, spec, rel)
        raise DivergenceError(
            f"exp-power integral divergent at infinity (c={c}, r={r})")
    if c >= 0.0:
        return _exp_power_panels_log(c, u1, u2, 0.0, r, spec, rel)
    # growing integrand: anchor at u2 and integrate the mirrored variable
    logv, relerr, nodes = _exp_power_panels_log(
        -c, 0.0, u2 - u1, u2, r, spec, rel)
    return -c * u2 + logv, relerr, nodes


# ---------------------------------------------------------------------------
# divergence screening (declared exponents only)
# ---------------------------------------------------------------------------

def screen_zero_endpoint(s: float, r: float, tol: float = BOUNDARY_TOL) -> str | None:
    """∫_0 x^s |log x|^r dx: message when divergent, None when convergent."""
    if s < -1.0 - tol:
        return f"exponent {s} at 0 (needs > -1)"
    if abs(s + 1.0) <= tol and r >= -1.0 - tol:
        return f"marginal exponent -1 at 0 with log power {r} (needs < -1)"
    return None


def screen_inf_endpoint(s: float, r: float, tol: float = BOUNDARY_TOL) -> str | None:
    """∫^∞ x^s (log x)^r dx: message when divergent, None when convergent."""
    if s > -1.0 + tol:
        return f"exponent {s} at infinity (needs < -1)"
    if abs(s + 1.0) <= tol and r >= -1.0 - tol:
        return f"marginal exponent -1 at infinity with log power {r} (needs < -1)"
    return None


def screen_one_touch(r: float, tol: float = BOUNDARY_TOL) -> str | None:
    """|log x|^r near x=1: message when not integrable there."""
    if r <= -1.0 + tol:
        return f"log-power {r} at x=1 (needs > -1)"
    return None


def screen_lp_pieces(pieces, p: float, tol: float = BOUNDARY_TOL) -> None:
    """Raise DivergenceError when the declared exponents of |f|^p diverge."""
    for pc in pieces:
        s, r = pc.a * p, pc.theta * p
        if pc.lo == 0.0:
            msg = screen_zero_endpoint(s, r, tol)
            if msg:
                raise DivergenceError(f"L_p integral divergent at 0: {msg}")
        if math.isinf(pc.hi):
            msg = screen_inf_endpoint(s, r, tol)
            if msg:
                raise DivergenceError(f"L_p integral divergent at infinity: {msg}")
        if pc.theta != 0.0 and pc.lo <= 1.0 <= pc.hi:
            msg = screen_one_touch(r, tol)
            if msg:
                raise DivergenceError(f"L_p integral divergent at 1: {msg}")


# ---------------------------------------------------------------------------
# half-line L_p integrals of piecewise power-log functions
# ---------------------------------------------------------------------------

def _piece_lp_segments(pc, p: float):
    """Yield (c_decay, r, a, b) for epi-log calls covering one piece of |f|^p."""
    s = pc.a * p
    r = pc.theta * p
    lo, hi = pc.lo, pc.hi
    # part inside (0, 1]: u = -log x
    if lo < 1.0:
        hi1 = min(hi, 1.0)
        ua = -math.log(hi1)
        ub = math.inf if lo == 0.0 else -math.log(lo)
        yield (s + 1.0, r, ua, ub)
    # part inside [1, inf): u = log x
    if hi > 1.0:
        lo1 = max(lo, 1.0)
        ua = math.log(lo1)
        ub = math.inf if math.isinf(hi) else math.log(hi)
        yield (-(s + 1.0), r, ua, ub)


def halfline_lp_integral(f, p: float, spec: QuadratureSpec | None = None,
                         rel_tol: float | None = None) -> QuadResult:
    """∫_0^∞ |f(x)|^p dx for a piecewise power-log FunctionSpec.

    Each piece is integrated in the log variable, where the integrand is
    exactly exp(-c u) u^r; the infinite tails use exponentially weighted
    Gauss rules instead of a hard truncation so that near-marginal exponents
    keep their (possibly enormous but finite) mass.
    """
    spec = spec or DEFAULT_SPEC
    rel = rel_tol if rel_tol is not None else spec.rel_tol
    if p < 1.0:
        raise DomainError(f"p must be >= 1, got {p}")
    screen_lp_pieces(f.pieces, p)
    logs, errs, nodes = [], [], 0
    ok_all = True
    for pc in f.pieces:
        if pc.c == 0.0:
            continue
        base = p * math.log(abs(pc.c))
        for c_decay, r, ua, ub in _piece_lp_segments(pc, p):
            if ub <= ua:
                continue
            try:
                logv, relerr, used = exp_power_integral_log(
                    c_decay, r, ua, ub, spec, rel)
            except ConvergenceError as exc:
                ok_all = False
                logv = math.log(exc.best_estimate) if exc.best_estimate else NEG_INF
                relerr = math.inf
                used = spec.max_nodes
            nodes += used
            logs.append(base + logv)
            errs.append(base + logv + math.log(max(min(relerr, 1.0), 1e-300)))
    if not logs:
        return QuadResult(0.0, 0.0, nodes, True)
    log_total = float(logsumexp(logs))
    value = float(math.exp(log_total)) if log_total < 709 else math.inf
    rel_total = math.exp(float(logsumexp(errs)) - log_total)
    err = rel_total * value if math.isfinite(value) else math.inf
    if not ok_all or not (rel_total <= 10.0 * rel or err <= spec.abs_tol):
        raise ConvergenceError(
            f"half-line L_p integral did not converge (p={p})",
            best_estimate=value, error_estimate=err)
    return QuadResult(value, err, nodes, True)


# ---------------------------------------------------------------------------
# black-box half-line integrals in u = log x
# ---------------------------------------------------------------------------

def _de_panel_log(logf, a: float, b: float, spec: QuadratureSpec,
                  rel_tol: float):
    """tanh-sinh panel of log ∫_a^b exp(logf(u)) du with scalar logf."""
    hw = 0.5 * (b - a)
    t_max = 5.0
    terms: list[float] = []  # logw + logf per node, step factor h kept outside
    prev = None
    used = 0
    relerr = math.inf
    h = 0.5
    for level in range(8):
        if level == 0:
            ts = np.arange(-t_max, t_max + 1e-12, h)
        else:
            h *= 0.5
            ts = np.arange(-t_max + h, t_max, 2.0 * h)
        for t in ts:
            s = 0.5 * math.pi * math.sinh(t)
            delta = 2.0 / (math.exp(2.0 * abs(s)) + 1.0)
            u = b - hw * delta if t >= 0 else a + hw * delta
            if not (a < u < b):
                continue
            logw = (math.log(hw) + math.log(0.5 * math.pi)
                    + _log_cosh(t) - 2.0 * _log_cosh(s))
            lv = logf(u)
            if lv > NEG_INF:
                terms.append(logw + lv)
            used += 1
        cur = (math.log(h) + float(logsumexp(terms))) if terms else NEG_INF
        if prev is not None:
            if cur == NEG_INF and prev == NEG_INF:
                return cur, 0.0, used
            relerr = abs(math.expm1(min(prev - cur, 50.0))) if cur > NEG_INF else math.inf
            if relerr <= rel_tol:
                return cur, relerr, used
        prev = cur
        if used > 4 * spec.max_nodes:
            break
    raise ConvergenceError(
        f"log-domain DE panel did not converge on [{a}, {b}]",
        best_estimate=None, error_estimate=relerr)


def _log_cosh(t: float) -> float:
    at = abs(t)
    return at + math.log1p(math.exp(-2.0 * at)) - math.log(2.0)


def _gl_panel_log(logf, a: float, b: float, spec: QuadratureSpec,
                  rel_tol: float, n0: int = 16, n_max: int = 128):
    """Gauss-Legendre panel of log ∫_a^b exp(logf(u)) du, scalar logf."""
    h = 0.5 * (b - a)
    m = 0.5 * (a + b)

    def make(n):
        x, w = _legendre_rule(n)
        terms = [math.log(wi) + logf(m + h * xi) for xi, wi in zip(x, w)]
        terms = [t for t in terms if t > NEG_INF]
        return (math.log(h) + float(logsumexp(terms))) if terms else NEG_INF

    logv, relerr, used, ok = _refine_log(make, spec, rel_tol, n0, n_max)
    if not ok:
        raise ConvergenceError(
            f"log-domain GL panel did not converge on [{a}, {b}]",
            best_estimate=None, error_estimate=relerr)
    return logv, relerr, used


def _log_tail_integral(logf, start: float, eps: float, ell: float,
                       spec: QuadratureSpec, rel_tol: float):
    """log ∫_start^∞ exp(logf(u)) du where exp(logf) ~ C e^{-eps u} u^ell.

    The declared rate only places panels and the cutoff; the integrand itself
    is always evaluated.  `start` must be >= 1.
    """
    u_peak = max(start, (max(ell, 0.0)) / eps if eps > 0 else start)
    u_max = u_peak + (55.0 + abs(ell) * math.log(2.0 + u_peak)) / eps
    u_max = u_peak + (55.0 + abs(ell) * math.log(2.0 + u_max)) / eps
    edges = [start]
    pos = start
    while pos < u_max and len(edges) < 200:
        step = min(pos, 10.0 / eps)
        pos = min(pos + step, u_max)
        edges.append(pos)
    logs, errs, nodes = [], [], 0
    for a, b in zip(edges[:-1], edges[1:]):
        logv, relerr, used = _gl_panel_log(logf, a, b, spec, rel_tol)
        nodes += used
        logs.append(logv)
        errs.append(logv + math.log(max(relerr, 1e-300)))
    total = float(logsumexp(logs)) if logs else NEG_INF
    if total == NEG_INF:
        return total, 0.0, nodes
    err_rel = math.exp(float(logsumexp(errs)) - total) + math.exp(-50.0)
    return total, err_rel, nodes


def log_halfline_integral(logf, breaks: Sequence[float], left, right,
                          spec: QuadratureSpec | None = None,
                          rel_tol: float | None = None):
    """log ∫ exp(logf(u)) du over the u-interval described by `left`/`right`.

    `left` and `right` are ("edge", u0) for a support edge where the
    integrand vanishes continuously, or ("tail", eps, ell) for an infinite
    tail behaving like e^{-eps|u|} |u|^ell.  `breaks` lists interior kink
    locations.  Returns (log_value, rel_err, nodes).
    """
    spec = spec or DEFAULT_SPEC
    rel = rel_tol if rel_tol is not None else spec.rel_tol
    breaks = sorted(set(float(b) for b in breaks))
    if left[0] == "edge":
        u_l = left[1]
    else:
        u_l = min(-40.0, (min(breaks) - 5.0) if breaks else -40.0)
    if right[0] == "edge":
        u_r = right[1]
    else:
        u_r = max(40.0, (max(breaks) + 5.0) if breaks else 40.0)
    if u_r <= u_l:
        raise DomainError(f"empty integration window [{u_l}, {u_r}]")
    interior = [b for b in breaks if u_l < b < u_r]
    knots = [u_l] + interior + [u_r]
    edges: list[float] = []
    for a, b in zip(knots[:-1], knots[1:]):
        sub = _graded_edges(a, b, 2.0, 2.0, 10.0)
        edges.extend(sub[:-1])
    edges.append(knots[-1])
    # kinks at breaks and fractional vanishing at support edges both produce
    # endpoint singularities of the panel integrand; DE absorbs them, GL
    # stalls, so any panel touching one of those knots goes the DE route
    de_knots = set(interior)
    if left[0] == "edge":
        de_knots.add(u_l)
    if right[0] == "edge":
        de_knots.add(u_r)
    logs, errs, nodes = [], [], 0
    for a, b in zip(edges[:-1], edges[1:]):
        if a in de_knots or b in de_knots:
            logv, relerr, used = _de_panel_log(logf, a, b, spec, rel)
        else:
            logv, relerr, used = _gl_panel_log(logf, a, b, spec, rel)
        nodes += used
        logs.append(logv)
        errs.append(logv + math.log(max(relerr, 1e-300)))
    if right[0] == "tail":
        _, eps, ell = right
        logv, relerr, used = _log_tail_integral(logf, u_r, eps, ell, spec, rel)
        nodes += used
        logs.append(logv)
        errs.append(logv + math.log(max(relerr, 1e-300)))
    if left[0] == "tail":
        _, eps, ell = left
        logv, relerr, used = _log_tail_integral(
            lambda v: logf(-v), -u_l, eps, ell, spec, rel)
        nodes += used
        logs.append(logv)
        errs.append(logv + math.log(max(relerr, 1e-300)))
    total = float(logsumexp(logs)) if logs else NEG_INF
    if total == NEG_INF:
        return total, 0.0, nodes
    err_rel = math.exp(float(logsumexp(errs)) - total)
    return total, err_rel, nodes
