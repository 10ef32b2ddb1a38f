"""Exponent algebra for the weighted averaging operators.

The operator family is indexed by three exponents alpha, beta, lam, each in
(0, 1), with kappa = alpha + beta + lam < 1.  A source Lebesgue exponent p is
admissible when p_minus < p <= p_plus, where

    p_minus = 1 / (1 - alpha)          p_plus = 1 / (1 - alpha - lam)

and the image exponent q is tied to p through 1 + 1/q = 1/p + kappa, so the
image window is (q_minus, q_plus] with

    q_minus = 1 / (beta + lam)         q_plus = 1 / beta.

Everything downstream (quadrature screening, norm windows, bound formulas)
goes through this module, so the boundary rules live here once: values within
BOUNDARY_TOL of an excluded boundary are rejected, and the closed endpoint
p_plus maps to q_plus exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError, RangeError, UnsupportedError

#: Absolute tolerance for window-boundary rejection.
BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class OperatorParams:
    """Exponent triple (alpha, beta, lam) defining one operator."""

    alpha: float
    beta: float
    lam: float

    @property
    def kappa(self) -> float:
        return self.alpha + self.beta + self.lam

    def __post_init__(self):
        validate_params(self)


@dataclass(frozen=True)
class ExponentWindow:
    """Admissible exponent window attached to a parameter triple."""

    p_minus: float
    p_plus: float
    q_minus: float
    q_plus: float
    kappa: float

    def contains_p(self, p: float, tol: float = BOUNDARY_TOL) -> bool:
        """Whether p lies in (p_minus, p_plus], with tol-rejection at edges."""
        return (p - self.p_minus) > tol and (p - self.p_plus) <= tol


@dataclass(frozen=True)
class MultiParams:
    """Per-axis parameter triples for the tensorized operator, d <= 3."""

    axes: tuple[OperatorParams, ...]

    def __post_init__(self):
        if not self.axes:
            raise DomainError("MultiParams needs at least one axis")
        if len(self.axes) > 3:
            raise UnsupportedError(
                f"dimension {len(self.axes)} not supported: nested quadrature "
                "cost grows geometrically, d <= 3 enforced")

    @property
    def d(self) -> int:
        return len(self.axes)


def validate_params(params: OperatorParams) -> None:
    """Check alpha, beta, lam in (0,1) and kappa < 1, with 1e-12 margins."""
    for name in ("alpha", "beta", "lam"):
        v = getattr(params, name)
        if not isinstance(v, (int, float)) or v != v:
            raise DomainError(f"{name} must be a finite number, got {v!r}")
        if v <= BOUNDARY_TOL or v >= 1.0 - BOUNDARY_TOL:
            raise DomainError(f"{name} = {v} outside the open interval (0, 1)")
    if params.kappa >= 1.0 - BOUNDARY_TOL:
        raise DomainError(
            f"kappa = alpha + beta + lam = {params.kappa} must stay below 1")


def exponent_window(params: OperatorParams) -> ExponentWindow:
    """Admissible (p, q) window for the given parameters."""
    a, b, lam = params.alpha, params.beta, params.lam
    return ExponentWindow(
        p_minus=1.0 / (1.0 - a),
        p_plus=1.0 / (1.0 - a - lam),
        q_minus=1.0 / (b + lam),
        q_plus=1.0 / b,
        kappa=params.kappa,
    )


def q_of_p(params: OperatorParams, p: float) -> float:
    """Image exponent q solving 1 + 1/q = 1/p + kappa.

    Raises RangeError outside (p_minus, p_plus].  The closed endpoint is
    detected by float equality and returns q_plus = 1/beta directly, so the
    endpoint identity holds exactly instead of within an ulp; interior points
    use the plain formula.
    """
    w = exponent_window(params)
    if p != p:
        raise RangeError("p is NaN")
    if (p - w.p_minus) <= BOUNDARY_TOL:
        raise RangeError(
            f"p = {p} at or below the open lower endpoint p_minus = {w.p_minus}")
    if (p - w.p_plus) > BOUNDARY_TOL:
        raise RangeError(
            f"p = {p} above the upper endpoint p_plus = {w.p_plus}")
    if p == w.p_plus:
        return w.q_plus
    return 1.0 / (1.0 / p + params.kappa - 1.0)


def p_of_q(params: OperatorParams, q: float) -> float:
    """Inverse of q_of_p on the image window (q_minus, q_plus]."""
    w = exponent_window(params)
    if q != q:
        raise RangeError("q is NaN")
    if (q - w.q_minus) <= BOUNDARY_TOL:
        raise RangeError(
            f"q = {q} at or below the open lower endpoint q_minus = {w.q_minus}")
    if (q - w.q_plus) > BOUNDARY_TOL:
        raise RangeError(
            f"q = {q} above the upper endpoint q_plus = {w.q_plus}")
    if q == w.q_plus:
        return w.p_plus
    return 1.0 / (1.0 / q - params.kappa + 1.0)


def axis_windows(mparams: MultiParams) -> list[ExponentWindow]:
    """Per-axis admissible windows for the tensorized operator."""
    return [exponent_window(ax) for ax in mparams.axes]


def multi_exponents(mparams: MultiParams, p_vec) -> list[float]:
    """Component-wise image exponents q_j for a source exponent vector.

    Each axis applies its own window; a RangeError names the offending axis.
    """
    p_vec = list(p_vec)
    if len(p_vec) != mparams.d:
        raise DomainError(
            f"p_vec has {len(p_vec)} entries for {mparams.d} axes")
    out = []
    for j, (ax, p) in enumerate(zip(mparams.axes, p_vec)):
        try:
            out.append(q_of_p(ax, p))
        except RangeError as exc:
            raise RangeError(f"axis {j}: {exc}") from None
    return out
