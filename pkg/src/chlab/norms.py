"""Norms over the half line: classical L_p, operator-image L_q, anisotropic
iterated norms, and the grand-style sup-over-exponent norms.

Image norms are the delicate part: near the critical exponent the integrand
of the image norm carries its mass around x ~ exp((q+1)/eps) with eps -> 0,
far outside double range.  The whole pipeline therefore works in u = log x
with log-valued operator evaluations; nothing is truncated at an arbitrary
large x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (ConfigError, DivergenceError, DomainError,
                     UnsupportedError)
from .exponents import OperatorParams
from .functions import (FunctionSpec, ProductFunctionSpec, evaluate,
                        function_from_json, function_to_json)
from .operators import (ImageInfo, WeightSpec, apply_U_log, apply_VS_log,
                        apply_W_log, image_info_U, image_info_VS,
                        image_info_W)
from .quadrature import (BOUNDARY_TOL, DEFAULT_SPEC, NEG_INF, QuadratureSpec,
                         halfline_lp_integral, log_halfline_integral,
                         screen_inf_endpoint, screen_lp_pieces,
                         screen_zero_endpoint)

#: default relative tolerance for image norms (each point costs an operator
#: integral per quadrature node, so the default is looser than the plain one)
IMAGE_NORM_REL = 1e-7


@dataclass
class NormResult:
    value: float
    p: object  # float, or tuple of floats for anisotropic norms
    achieved_at: float | None
    error_estimate: float


# ---------------------------------------------------------------------------
# classical L_p
# ---------------------------------------------------------------------------

def lp_norm(f: FunctionSpec, p: float, spec: QuadratureSpec | None = None,
            rel_tol: float | None = None) -> NormResult:
    """||f||_p on (0, inf) for a piecewise power-log function.

    For a single-piece function the scale factor |c| multiplies the final
    norm directly, so ||c f||_p = |c| ||f||_p holds to the last bit.
    """
    spec = spec or DEFAULT_SPEC
    if not (p >= 1.0):
        raise DomainError(f"p must be >= 1, got {p}")
    if len(f.pieces) == 1 and f.pieces[0].c != 1.0:
        pc = f.pieces[0]
        base = lp_norm(FunctionSpec((type(pc)(pc.lo, pc.hi, pc.a, pc.theta, 1.0),)),
                       p, spec, rel_tol)
        return NormResult(abs(pc.c) * base.value, p, None,
                          abs(pc.c) * base.error_estimate)
    res = halfline_lp_integral(f, p, spec, rel_tol)
    if res.value == 0.0:
        return NormResult(0.0, p, None, 0.0)
    norm = res.value ** (1.0 / p)
    err = norm * res.error_estimate / (p * res.value)
    return NormResult(norm, p, None, err)


# ---------------------------------------------------------------------------
# operator-image L_q norms
# ---------------------------------------------------------------------------

_image_cache: dict[tuple, dict[float, float]] = {}


def clear_caches():
    _image_cache.clear()


def _image_engine(op: str, params: OperatorParams | None,
                  weight: WeightSpec | None, f: FunctionSpec):
    if op == "U":
        if params is None:
            raise DomainError("op 'U' needs params")
        return (image_info_U(params, f),
                lambda u, spec, rel: apply_U_log(params, f, u, spec, rel),
                ("U", params.alpha, params.beta, params.lam))
    if op == "W":
        if params is None:
            raise DomainError("op 'W' needs params")
        return (image_info_W(params, f),
                lambda u, spec, rel: apply_W_log(params, f, u, spec, rel),
                ("W", params.alpha, params.beta, params.lam))
    if op == "VS":
        if weight is None:
            raise DomainError("op 'VS' needs a weight")
        return (image_info_VS(weight, f),
                lambda u, spec, rel: apply_VS_log(weight, f, u, spec, rel),
                ("VS", weight.kind, weight.bw))
    raise DomainError(f"unknown operator {op!r}")


def image_lq_norm(f: FunctionSpec, q: float, op: str = "U",
                  params: OperatorParams | None = None,
                  weight: WeightSpec | None = None,
                  spec: QuadratureSpec | None = None,
                  rel_tol: float | None = None,
                  use_cache: bool = True) -> NormResult:
    """||T f||_q for T in {U, W, V_S}, computed entirely in u = log x.

    Divergence is decided from the declared image exponents first; the
    integral then runs over central panels between the image kinks plus
    declared-rate tail panels.  Pointwise operator values are cached per
    (operator, function, tolerance), which makes exponent sweeps and
    grand-norm grids share work.
    """
    spec = spec or DEFAULT_SPEC
    rel = rel_tol if rel_tol is not None else min(spec.rel_tol * 1e3, IMAGE_NORM_REL)
    if not (q >= 1.0):
        raise DomainError(f"q must be >= 1, got {q}")
    info, engine, key_head = _image_engine(op, params, weight, f)
    # declared-exponent screens at both ends
    if info.right[0] == "tail":
        _, a_inf, th_inf = info.right
        msg = screen_inf_endpoint(q * a_inf, q * th_inf)
        if msg:
            raise DivergenceError(f"image L_q norm divergent at infinity: {msg}")
        right = ("tail", -(q * a_inf + 1.0), q * th_inf)
    else:
        right = info.right
    if info.left[0] == "tail":
        _, a_0, th_0 = info.left
        msg = screen_zero_endpoint(q * a_0, q * th_0)
        if msg:
            raise DivergenceError(f"image L_q norm divergent at 0: {msg}")
        left = ("tail", q * a_0 + 1.0, q * th_0)
    else:
        left = info.left
    inner_rel = rel / 5.0
    cache_key = key_head + (f.cache_key(), round(math.log10(inner_rel), 3))
    cache = _image_cache.setdefault(cache_key, {}) if use_cache else {}

    def logf(u: float) -> float:
        lv = cache.get(u)
        if lv is None:
            _, lv, _, _ = engine(u, spec, inner_rel)
            cache[u] = lv
        if lv == NEG_INF:
            return NEG_INF
        return q * lv + u  # |T f(e^u)|^q times the Jacobian e^u

    logI, relerr, nodes = log_halfline_integral(
        logf, info.breaks, left, right, spec, rel)
    if logI == NEG_INF:
        return NormResult(0.0, q, None, 0.0)
    norm = math.exp(logI / q)
    return NormResult(norm, q, None, norm * relerr / q)


# ---------------------------------------------------------------------------
# anisotropic iterated norms
# ---------------------------------------------------------------------------

def anisotropic_norm(f: ProductFunctionSpec, p_vec,
                     spec: QuadratureSpec | None = None,
                     rel_tol: float | None = None) -> NormResult:
    """Iterated mixed norm, innermost axis first.

    The innermost norm is a half-line integral of the first factor; each
    outer level integrates the previous level's norm against its own factor
    by genuine quadrature in that variable (no product shortcut), which is
    what makes the tensor factorization identity a meaningful cross-check.
    """
    spec = spec or DEFAULT_SPEC
    rel = rel_tol if rel_tol is not None else spec.rel_tol
    if not isinstance(f, ProductFunctionSpec):
        raise UnsupportedError(
            "anisotropic norms are implemented for tensor products")
    p_vec = [float(p) for p in p_vec]
    if len(p_vec) != f.d:
        raise DomainError(f"p_vec has {len(p_vec)} entries for {f.d} axes")
    for fj, pj in zip(f.factors, p_vec):
        if pj < 1.0:
            raise DomainError(f"exponents must be >= 1, got {pj}")
        screen_lp_pieces(fj.pieces, pj)
    value = lp_norm(f.factors[0], p_vec[0], spec, rel).value
    total_rel = 0.0
    for j in range(1, f.d):
        fj, pj = f.factors[j], p_vec[j]
        log_inner = math.log(value) if value > 0 else NEG_INF

        def logf(u: float, _fj=fj, _pj=pj, _li=log_inner) -> float:
            fx = evaluate(_fj, math.exp(u))
            if fx == 0.0 or _li == NEG_INF:
                return NEG_INF
            return _pj * (_li + math.log(abs(fx))) + u

        lo, hi = fj.support_lo, fj.support_hi
        left = (("edge", math.log(lo)) if lo > 0.0
                else ("tail", pj * fj.zero_piece.a + 1.0, pj * fj.zero_piece.theta))
        right = (("edge", math.log(hi)) if math.isfinite(hi)
                 else ("tail", -(pj * fj.infinity_piece.a + 1.0),
                       pj * fj.infinity_piece.theta))
        breaks = [math.log(b) for b in fj.breakpoints] + [0.0]
        logI, relerr, _ = log_halfline_integral(logf, breaks, left, right, spec, rel)
        value = math.exp(logI / pj) if logI > NEG_INF else 0.0
        total_rel += relerr / pj
    return NormResult(value, tuple(p_vec), None, value * total_rel)


# ---------------------------------------------------------------------------
# psi functions and grand-style norms
# ---------------------------------------------------------------------------

@dataclass
class PsiFunction:
    """A positive weight psi(p) on an exponent interval (A, B).

    Kinds: "constant", "power" (c * p^a), "natural" (psi(p) = ||f||_p),
    "callable" / "transfer" (arbitrary positive function; not serializable).
    """

    kind: str
    A: float
    B: float
    value: float | None = None
    expr: tuple | None = None
    f: FunctionSpec | None = None
    fn: Callable | None = None
    label: str = ""
    _memo: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not (1.0 <= self.A and self.A < self.B):
            raise DomainError(
                f"psi support needs 1 <= A < B, got ({self.A}, {self.B})")
        if self.kind == "constant":
            if self.value is None or not (self.value > 0):
                raise DomainError("constant psi needs a positive value")
        elif self.kind == "power":
            if self.expr is None or len(self.expr) != 2 or self.expr[0] <= 0:
                raise DomainError("power psi needs expr = (c, a) with c > 0")
        elif self.kind == "natural":
            if self.f is None:
                raise DomainError("natural psi needs a function")
        elif self.kind in ("callable", "transfer"):
            if self.fn is None:
                raise DomainError(f"{self.kind} psi needs a callable")
        else:
            raise DomainError(f"unknown psi kind {self.kind!r}")
        for p in _psi_grid(self.A, self.B, 256):
            v = self(p)
            if not (v > 0.0 and math.isfinite(v)):
                raise DomainError(
                    f"psi must be positive and finite on its support; "
                    f"psi({p}) = {v}")

    def __call__(self, p: float) -> float:
        if not (self.A < p < self.B):
            raise DomainError(
                f"p = {p} outside psi support ({self.A}, {self.B})")
        if self.kind == "constant":
            return self.value
        if self.kind == "power":
            return self.expr[0] * p ** self.expr[1]
        if self.kind == "natural":
            v = self._memo.get(p)
            if v is None:
                v = lp_norm(self.f, p, rel_tol=1e-9).value
                self._memo[p] = v
            return v
        return self.fn(p)

    def restrict(self, A2: float, B2: float) -> "PsiFunction":
        a, b = max(self.A, A2), min(self.B, B2)
        if not a < b:
            raise DomainError(f"empty restricted support ({a}, {b})")
        return PsiFunction(kind=self.kind, A=a, B=b, value=self.value,
                           expr=self.expr, f=self.f, fn=self.fn,
                           label=self.label)

    def to_json(self) -> dict:
        sup = [self.A, "inf" if math.isinf(self.B) else self.B]
        if self.kind == "constant":
            return {"kind": "constant", "value": self.value, "support": sup}
        if self.kind == "power":
            return {"kind": "power", "expr": list(self.expr), "support": sup}
        if self.kind == "natural":
            return {"kind": "natural", "f": function_to_json(self.f),
                    "support": sup}
        raise UnsupportedError(
            f"psi of kind {self.kind!r} has no serialized form")


def _psi_grid(A: float, B: float, n: int) -> np.ndarray:
    hi = min(B, 200.0)
    span = hi - A
    off = np.geomspace(span * 1e-8, span, n) * (1.0 - 1e-9)
    return A + off


def psi_from_json(data) -> PsiFunction:
    if not isinstance(data, dict) or "kind" not in data:
        raise ConfigError('psi JSON must be an object with a "kind"')
    sup = data.get("support")
    if (not isinstance(sup, (list, tuple))) or len(sup) != 2:
        raise ConfigError('psi JSON needs "support": [A, B]')
    A = float(sup[0])
    B = math.inf if (isinstance(sup[1], str) and sup[1].lower() == "inf") else float(sup[1])
    kind = data["kind"]
    try:
        if kind == "constant":
            return PsiFunction(kind="constant", A=A, B=B,
                               value=float(data["value"]))
        if kind == "power":
            expr = data["expr"]
            return PsiFunction(kind="power", A=A, B=B,
                               expr=(float(expr[0]), float(expr[1])))
        if kind == "natural":
            return PsiFunction(kind="natural", A=A, B=B,
                               f=function_from_json(data["f"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad psi JSON: {exc}") from None
    except DomainError as exc:
        raise ConfigError(f"bad psi JSON: {exc}") from None
    raise ConfigError(f"unknown psi kind {kind!r}")


def natural_psi(f: FunctionSpec, A: float, B: float,
                spec: QuadratureSpec | None = None) -> PsiFunction:
    """psi(p) = ||f||_p on (A, B), after checking finiteness on the interval.

    The check is analytic: each declared piece exponent is tested against the
    whole open interval, so a divergent interior p cannot hide between grid
    points.
    """
    tol = BOUNDARY_TOL
    if not (1.0 <= A < B):
        raise DomainError(f"need 1 <= A < B, got ({A}, {B})")
    for pc in f.pieces:
        if pc.lo == 0.0 and pc.a < 0.0:
            # need a*p > -1 for all p < B
            if math.isinf(B) or pc.a * B < -1.0 - tol:
                raise DomainError(
                    f"||f||_p divergent at 0 for p near {min(B, -1.0 / pc.a)}")
        if math.isinf(pc.hi):
            if pc.a >= 0.0 or pc.a * A > -1.0 + tol:
                raise DomainError(
                    f"||f||_p divergent at infinity for p near {A}")
        if pc.theta < 0.0 and pc.lo <= 1.0 <= pc.hi:
            if math.isinf(B) or pc.theta * B <= -1.0 + tol:
                raise DomainError(
                    f"||f||_p divergent at 1 for p near {min(B, -1.0 / pc.theta)}")
    return PsiFunction(kind="natural", A=A, B=B, f=f, label="natural")


def _sup_over_interval(fn, A: float, B: float, n_grid: int):
    """Maximize fn over (A, B) on a left-refined grid plus golden search.

    fn may raise DivergenceError (propagated) or return inf.  Ties resolve
    to the smaller exponent, keeping the reduction deterministic.
    """
    grid = _psi_grid(A, B, n_grid)
    # a few B-side points: blow-up can also sit at the right edge
    hi = min(B, 200.0)
    span = hi - A
    grid = np.unique(np.concatenate([
        grid, hi - np.geomspace(span * 1e-8, span * 0.25, max(n_grid // 4, 4))]))
    vals = np.array([fn(float(p)) for p in grid])
    if np.any(np.isinf(vals)):
        i = int(np.argmax(np.isinf(vals)))
        return math.inf, float(grid[i])
    i = int(np.argmax(vals))
    lo = float(grid[max(i - 1, 0)])
    hi_b = float(grid[min(i + 1, len(grid) - 1)])
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi_b
    x1 = b - phi * (b - a)
    x2 = a + phi * (b - a)
    f1, f2 = fn(x1), fn(x2)
    for _ in range(24):
        if math.isinf(f1):
            return math.inf, x1
        if math.isinf(f2):
            return math.inf, x2
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + phi * (b - a)
            f2 = fn(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - phi * (b - a)
            f1 = fn(x1)
        if b - a < 1e-7 * max(1.0, a):
            break
    best_p = x1 if f1 >= f2 else x2
    best_v = max(f1, f2, float(vals[i]))
    if float(vals[i]) >= max(f1, f2):
        best_p = float(grid[i])
    return best_v, best_p


def gls_norm(f: FunctionSpec, psi: PsiFunction,
             spec: QuadratureSpec | None = None,
             p_grid_size: int = 64) -> NormResult:
    """sup over p in (A, B) of ||f||_p / psi(p).

    A divergent ||f||_p inside the support makes the norm infinite; that is
    reported in the result rather than raised, since an infinite grand norm
    is an answer, not a failure.
    """
    spec = spec or DEFAULT_SPEC
    err_box = [0.0]

    def fn(p: float) -> float:
        try:
            res = lp_norm(f, p, spec, rel_tol=1e-9)
        except DivergenceError:
            return math.inf
        err_box[0] = max(err_box[0], res.error_estimate / max(res.value, 1e-300))
        return res.value / psi(p)

    value, at = _sup_over_interval(fn, psi.A, psi.B, p_grid_size)
    err = math.inf if math.isinf(value) else value * err_box[0]
    return NormResult(value, at, at, err)


def gls_image_norm(params_or_weight, f: FunctionSpec, psi: PsiFunction,
                   op: str = "U", spec: QuadratureSpec | None = None,
                   p_grid_size: int = 64,
                   rel_tol: float | None = None) -> NormResult:
    """sup over q in (A, B) of ||T f||_q / psi(q) for T in {U, W, VS}."""
    spec = spec or DEFAULT_SPEC
    params = params_or_weight if isinstance(params_or_weight, OperatorParams) else None
    weight = params_or_weight if isinstance(params_or_weight, WeightSpec) else None
    err_box = [0.0]

    def fn(q: float) -> float:
        try:
            res = image_lq_norm(f, q, op=op, params=params, weight=weight,
                                spec=spec, rel_tol=rel_tol)
        except DivergenceError:
            return math.inf
        err_box[0] = max(err_box[0], res.error_estimate / max(res.value, 1e-300))
        return res.value / psi(q)

    value, at = _sup_over_interval(fn, psi.A, psi.B, p_grid_size)
    err = math.inf if math.isinf(value) else value * err_box[0]
    return NormResult(value, at, at, err)
