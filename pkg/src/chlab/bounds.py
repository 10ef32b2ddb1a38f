"""Sharp-bound verification: the Gamma-quotient upper bound, empirical lower
bounds from norm ratios, blow-up rate recovery at the window edges, the
grand-norm transfer weight, and the convolution (Hardy-type) bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (ChlabError, ConvergenceError, DivergenceError,
                     EmptyIntersectionError, FitError, RangeError)
from .exponents import (BOUNDARY_TOL, OperatorParams, exponent_window, p_of_q,
                        q_of_p)
from .functions import FunctionSpec, Piece
from .norms import NormResult, PsiFunction, image_lq_norm, lp_norm
from .operators import WeightSpec, apply_VS
from .quadrature import QuadratureSpec, gamma_fn

NAN = float("nan")


@dataclass
class SweepRecord:
    """One point of a ratio sweep; `error` is set instead of values on failure."""

    p: float
    q: float = NAN
    f_norm: float = NAN
    image_norm: float = NAN
    ratio: float = NAN
    upper_bound: float = NAN
    error_estimate: float = NAN
    error: str | None = None


@dataclass
class BlowupFit:
    fitted_exponent: float
    fitted_constant: float
    residual: float
    p_points: tuple[float, ...]


def upper_bound_K(params: OperatorParams, p: float) -> float:
    """The Gamma-quotient bound for ||U||_{p -> q} on the admissible window.

    K(p) = [ G((1 - 1/p - alpha)/kappa) * G((alpha + beta)/kappa)
             / G((1 - 1/p + beta)/kappa) ]^kappa
    """
    q_of_p(params, p)  # window validation, RangeError outside (p_minus, p_plus]
    k = params.kappa
    a1 = (1.0 - 1.0 / p - params.alpha) / k
    a2 = (params.alpha + params.beta) / k
    a3 = (1.0 - 1.0 / p + params.beta) / k
    return math.exp(k * (math.lgamma(a1) + math.lgamma(a2) - math.lgamma(a3)))


def lower_bound_K_empirical(params: OperatorParams, p: float, f: FunctionSpec,
                            spec: QuadratureSpec | None = None) -> SweepRecord:
    """Empirical ratio ||U f||_q / ||f||_p at one admissible p."""
    q = q_of_p(params, p)
    fn = lp_norm(f, p, spec)
    if fn.value == 0.0:
        raise DivergenceError("norm ratio undefined: ||f||_p is zero")
    im = image_lq_norm(f, q, op="U", params=params, spec=spec)
    ratio = im.value / fn.value
    rel = (fn.error_estimate / fn.value
           + (im.error_estimate / im.value if im.value else 0.0))
    return SweepRecord(p=p, q=q, f_norm=fn.value, image_norm=im.value,
                       ratio=ratio, upper_bound=upper_bound_K(params, p),
                       error_estimate=ratio * rel)


def sweep_ratio(params: OperatorParams, f: FunctionSpec, p_list,
                spec: QuadratureSpec | None = None) -> list[SweepRecord]:
    """Ratio records over p_list, in input order; failures are recorded
    per point (error field set), never fatal for the other points."""
    records = []
    for p in p_list:
        p = float(p)
        try:
            records.append(lower_bound_K_empirical(params, p, f, spec))
        except ChlabError as exc:
            records.append(SweepRecord(p=p, error=f"{type(exc).__name__}: {exc}"))
    return records


def _fit_log_ratio(records, xs) -> BlowupFit:
    pts = [(x, math.log(r.ratio), r.p) for x, r in zip(xs, records)]
    if len(pts) < 4:
        raise FitError(
            f"blow-up fit needs at least 4 usable points, got {len(pts)}")
    x = np.array([t[0] for t in pts])
    y = np.array([t[1] for t in pts])
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return BlowupFit(fitted_exponent=float(slope),
                     fitted_constant=float(math.exp(intercept)),
                     residual=resid,
                     p_points=tuple(t[2] for t in pts))


def fit_blowup(records, p_minus: float) -> BlowupFit:
    """Least-squares slope of log(ratio) against log(p - p_minus).

    Only records with a finite ratio, no error, and p above p_minus enter;
    fewer than 4 such points raise FitError.
    """
    usable = [r for r in records
              if r.error is None and math.isfinite(r.ratio) and r.ratio > 0
              and r.p > p_minus]
    xs = [math.log(r.p - p_minus) for r in usable]
    return _fit_log_ratio(usable, xs)


# ---------------------------------------------------------------------------
# grand-norm transfer
# ---------------------------------------------------------------------------

def psi_K_transfer(params: OperatorParams, psi: PsiFunction
                   ) -> tuple[PsiFunction, PsiFunction]:
    """Transfer weight psi_K(q) = K(p(q)) psi(p(q)) on the image window.

    Returns (psi_K, psi_ab) where psi_ab is psi restricted to the overlap
    (a, b) of its support with the admissible window.  An empty or
    point-like overlap raises EmptyIntersectionError.
    """
    w = exponent_window(params)
    a = max(psi.A, w.p_minus)
    b = min(psi.B, w.p_plus)
    if not (b - a > BOUNDARY_TOL):
        raise EmptyIntersectionError(
            f"psi support ({psi.A}, {psi.B}) does not overlap the admissible "
            f"window ({w.p_minus}, {w.p_plus}]")
    psi_ab = psi.restrict(a, b)
    k = params.kappa
    q_lo = 1.0 / (1.0 / a + k - 1.0)
    q_hi = 1.0 / (1.0 / b + k - 1.0)

    def fn(q: float) -> float:
        p = p_of_q(params, q)
        return upper_bound_K(params, p) * psi(p)

    psi_K = PsiFunction(kind="transfer", A=q_lo, B=q_hi, fn=fn,
                        label=f"transfer[{psi.label or psi.kind}]")
    return psi_K, psi_ab


def gls_transfer_ratio(params: OperatorParams, f: FunctionSpec,
                       psi: PsiFunction, spec: QuadratureSpec | None = None,
                       p_grid_size: int = 24,
                       rel_tol: float | None = None) -> dict:
    """Both sides of the grand-norm transfer inequality for one (f, psi).

    Returns {"lhs": ||U f||_{G,psi_K}, "rhs": ||f||_{G,psi_ab}, "ratio": ...}.
    """
    from .norms import gls_image_norm, gls_norm

    psi_K, psi_ab = psi_K_transfer(params, psi)
    lhs = gls_image_norm(params, f, psi_K, op="U", spec=spec,
                         p_grid_size=p_grid_size, rel_tol=rel_tol)
    rhs = gls_norm(f, psi_ab, spec=spec, p_grid_size=p_grid_size)
    ratio = (lhs.value / rhs.value if rhs.value not in (0.0, math.inf)
             else (0.0 if math.isinf(rhs.value) and math.isfinite(lhs.value)
                   else math.nan))
    return {"lhs": lhs, "rhs": rhs, "ratio": ratio}


# ---------------------------------------------------------------------------
# convolution averaging bound
# ---------------------------------------------------------------------------

def hardy_convolution_bound(w: WeightSpec, p: float) -> float:
    """L * p^2 / (p - 1): the weighted averaging bound on L_p, p > 1."""
    if not p > 1.0 + BOUNDARY_TOL:
        raise RangeError(f"the averaging bound needs p > 1, got {p}")
    return w.growth_constant() * p * p / (p - 1.0)


def vs_ratio_record(w: WeightSpec, f: FunctionSpec, p: float,
                    spec: QuadratureSpec | None = None) -> SweepRecord:
    """||V_S f||_p / ||f||_p against the averaging bound at one p."""
    fn = lp_norm(f, p, spec)
    if fn.value == 0.0:
        raise DivergenceError("norm ratio undefined: ||f||_p is zero")
    if w.kind == "power":
        im = image_lq_norm(f, p, op="VS", weight=w, spec=spec)
    else:
        raise RangeError("norm sweeps need a power-kind weight")
    ratio = im.value / fn.value
    rel = (fn.error_estimate / fn.value
           + (im.error_estimate / im.value if im.value else 0.0))
    return SweepRecord(p=p, q=p, f_norm=fn.value, image_norm=im.value,
                       ratio=ratio, upper_bound=hardy_convolution_bound(w, p),
                       error_estimate=ratio * rel)


# ---------------------------------------------------------------------------
# conjugate-operator probe
# ---------------------------------------------------------------------------

def conjugate_probe_function(params: OperatorParams) -> FunctionSpec:
    """y^(-(1-alpha-lam)) on (0, 1]: the family whose W-ratios blow up at p_plus.

    Its L_p norm is finite on the whole window (the exponent matches the
    upper critical index, singular at the origin, compact support), and the
    conjugate operator's ratio grows like (p_plus - p)^(-kappa).
    """
    return FunctionSpec((Piece(0.0, 1.0, -(1.0 - params.alpha - params.lam)),))


def conjugate_upper_bound(params: OperatorParams, p: float) -> float:
    """Upper bound for ||W||_{p -> q} via the adjoint identity.

    W with parameters (alpha, beta, lam) is 1/Gamma(alpha) times the adjoint
    of U with (beta, alpha, lam), so the Gamma-quotient bound for the swapped
    parameters at the dual exponent divides by Gamma(alpha).
    """
    q = q_of_p(params, p)
    swapped = OperatorParams(params.beta, params.alpha, params.lam)
    q_dual = q / (q - 1.0)
    return upper_bound_K(swapped, q_dual) / gamma_fn(params.alpha)


def conjugate_sweep_records(params: OperatorParams, p_list,
                            spec: QuadratureSpec | None = None,
                            f: FunctionSpec | None = None) -> list[SweepRecord]:
    """W-ratio records for the conjugate probe family over p_list."""
    probe = f if f is not None else conjugate_probe_function(params)
    records = []
    for p in p_list:
        p = float(p)
        try:
            q = q_of_p(params, p)
            fn = lp_norm(probe, p, spec)
            im = image_lq_norm(probe, q, op="W", params=params, spec=spec)
            ratio = im.value / fn.value
            rel = (fn.error_estimate / fn.value
                   + (im.error_estimate / im.value if im.value else 0.0))
            try:
                ub = conjugate_upper_bound(params, p)
            except (RangeError, OverflowError):
                ub = NAN
            records.append(SweepRecord(
                p=p, q=q, f_norm=fn.value, image_norm=im.value, ratio=ratio,
                upper_bound=ub, error_estimate=ratio * rel))
        except ChlabError as exc:
            records.append(SweepRecord(p=p, error=f"{type(exc).__name__}: {exc}"))
    return records


def default_conjugate_p_list(params: OperatorParams, k_max: int = 4) -> list[float]:
    p_plus = exponent_window(params).p_plus
    return [p_plus - 10.0 ** (-k) for k in range(1, k_max + 1)]


def conjugate_bound_probe(params: OperatorParams, p_list=None,
                          spec: QuadratureSpec | None = None) -> BlowupFit:
    """Blow-up exponent of the conjugate ratios as p approaches p_plus.

    Fits log(ratio) against log(p_plus - p); the recovered slope should sit
    near -kappa.  An empty p_list (or too many failed points) raises FitError.
    """
    if p_list is None:
        p_list = default_conjugate_p_list(params)
    p_list = [float(p) for p in p_list]
    if not p_list:
        raise FitError("conjugate probe needs a non-empty p_list")
    records = conjugate_sweep_records(params, p_list, spec)
    p_plus = exponent_window(params).p_plus
    usable = [r for r in records
              if r.error is None and math.isfinite(r.ratio) and r.ratio > 0
              and r.p < p_plus]
    xs = [math.log(p_plus - r.p) for r in usable]
    return _fit_log_ratio(usable, xs)
