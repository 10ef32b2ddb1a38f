"""Piecewise power-log test functions on the half line.

Every function handled symbolically by this package is a finite sum of
pieces c * x^a * |log x|^theta supported on disjoint half-open intervals
(lo, hi].  That family is closed under dilation and under the operators'
endpoint asymptotics, which is what makes declared-exponent screening and
closed-form cross-checks possible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, UnsupportedError
from .exponents import OperatorParams
from .quadrature import BOUNDARY_TOL, beta_fn

INF = math.inf


@dataclass(frozen=True)
class Piece:
    """One term c * x^a * |log x|^theta on the interval (lo, hi]."""

    lo: float
    hi: float
    a: float
    theta: float = 0.0
    c: float = 1.0


@dataclass(frozen=True)
class FunctionSpec:
    """A function given as disjoint power-log pieces, sorted by interval."""

    pieces: tuple[Piece, ...]

    def __post_init__(self):
        if not self.pieces:
            raise DomainError("FunctionSpec needs at least one piece")
        object.__setattr__(self, "pieces", tuple(self.pieces))
        prev_hi = 0.0
        first = True
        for pc in self.pieces:
            if not isinstance(pc, Piece):
                raise DomainError("pieces must be Piece instances")
            if pc.lo < 0.0 or not pc.hi > pc.lo:
                raise DomainError(f"bad piece interval ({pc.lo}, {pc.hi}]")
            if not first and pc.lo < prev_hi - 1e-15 * prev_hi:
                raise DomainError("pieces must be disjoint and sorted")
            for name, v in (("a", pc.a), ("theta", pc.theta), ("c", pc.c)):
                if not math.isfinite(v):
                    raise DomainError(f"piece field {name} must be finite, got {v}")
            if pc.c == 0.0:
                raise DomainError("piece scale c must be nonzero")
            prev_hi = pc.hi
            first = False

    # -- declared endpoint behavior -------------------------------------
    @property
    def zero_piece(self) -> Piece | None:
        return self.pieces[0] if self.pieces[0].lo == 0.0 else None

    @property
    def infinity_piece(self) -> Piece | None:
        return self.pieces[-1] if math.isinf(self.pieces[-1].hi) else None

    @property
    def declared_zero_exponent(self) -> float | None:
        pc = self.zero_piece
        return pc.a if pc is not None else None

    @property
    def declared_infinity_exponent(self) -> float | None:
        pc = self.infinity_piece
        return pc.a if pc is not None else None

    @property
    def support_lo(self) -> float:
        return self.pieces[0].lo

    @property
    def support_hi(self) -> float:
        return self.pieces[-1].hi

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """All finite positive interval endpoints, deduplicated, sorted."""
        pts = set()
        for pc in self.pieces:
            for v in (pc.lo, pc.hi):
                if 0.0 < v < INF:
                    pts.add(v)
        return tuple(sorted(pts))

    def cache_key(self) -> tuple:
        return tuple((p.lo, p.hi, p.a, p.theta, p.c) for p in self.pieces)

    def __call__(self, x):
        return evaluate(self, x)

    def scaled(self, factor: float) -> "FunctionSpec":
        if factor == 0.0 or not math.isfinite(factor):
            raise DomainError(f"scale factor must be finite nonzero, got {factor}")
        return FunctionSpec(tuple(
            Piece(p.lo, p.hi, p.a, p.theta, p.c * factor) for p in self.pieces))


def evaluate(f: FunctionSpec, x):
    """Evaluate the piecewise function; zero outside the support intervals.

    Accepts scalars or numpy arrays.  Membership follows the half-open
    convention (lo, hi].
    """
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.zeros_like(arr)
    for pc in f.pieces:
        mask = (arr > pc.lo) & (arr <= pc.hi)
        if not mask.any():
            continue
        xs = arr[mask]
        vals = pc.c * np.power(xs, pc.a)
        if pc.theta != 0.0:
            vals = vals * np.abs(np.log(xs)) ** pc.theta
        out[mask] = vals
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------

def make_f0(params: OperatorParams) -> FunctionSpec:
    """y^(-(1-alpha)) on (1, inf): the extremal family for the lower window edge."""
    return FunctionSpec((Piece(1.0, INF, -(1.0 - params.alpha)),))


def make_g_plus(params: OperatorParams) -> FunctionSpec:
    """y^(-(1-alpha-lambda)) on (1, inf): extremal at the upper window edge."""
    return FunctionSpec((Piece(1.0, INF, -(1.0 - params.alpha - params.lam)),))


def make_f_delta_theta(params: OperatorParams, theta: float) -> FunctionSpec:
    """y^(-(1-alpha)) |log y|^theta on (0, 1); needs theta > -(1-alpha)."""
    if not theta > -(1.0 - params.alpha) + BOUNDARY_TOL:
        raise DomainError(
            f"theta must exceed -(1-alpha) = {-(1.0 - params.alpha)}, got {theta}")
    return FunctionSpec((Piece(0.0, 1.0, -(1.0 - params.alpha), theta),))


def indicator(lo: float = 0.0, hi: float = 1.0) -> FunctionSpec:
    return FunctionSpec((Piece(lo, hi, 0.0),))


def power_function(a: float, lo: float = 0.0, hi: float = INF,
                   theta: float = 0.0, c: float = 1.0) -> FunctionSpec:
    return FunctionSpec((Piece(lo, hi, a, theta, c),))


def dilate(f: FunctionSpec, gamma: float) -> FunctionSpec:
    """The dilation (T_gamma f)(x) = f(gamma * x).

    Power pieces map to power pieces; a log factor would pick up a
    log(gamma) shift that leaves the family, hence UnsupportedError.
    """
    if not (gamma > 0.0 and math.isfinite(gamma)):
        raise DomainError(f"gamma must be positive and finite, got {gamma}")
    if gamma == 1.0:
        return f
    pieces = []
    for pc in f.pieces:
        if pc.theta != 0.0:
            raise UnsupportedError(
                "dilation of a log-weighted piece is not representable "
                "in the power-log family")
        hi = INF if math.isinf(pc.hi) else pc.hi / gamma
        pieces.append(Piece(pc.lo / gamma, hi, pc.a, 0.0, pc.c * gamma ** pc.a))
    return FunctionSpec(tuple(pieces))


def closed_form_image_U(params: OperatorParams, a: float) -> tuple[float, float]:
    """Image of the full-ray power x^a: returns (coefficient, exponent).

    U maps x^a to B(a+1-alpha, 1-lambda) * x^(a+1-kappa), valid for
    a > alpha - 1 (otherwise the defining integral diverges at the origin).
    """
    if a - (params.alpha - 1.0) <= BOUNDARY_TOL:
        raise DomainError(
            f"closed form needs a > alpha - 1 = {params.alpha - 1.0}, got {a}")
    coef = beta_fn(a + 1.0 - params.alpha, 1.0 - params.lam)
    return coef, a + 1.0 - params.kappa


# ---------------------------------------------------------------------------
# several axes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProductFunctionSpec:
    """Tensor product f(x) = prod_j f_j(x_j) of one-axis specs."""

    factors: tuple[FunctionSpec, ...]

    def __post_init__(self):
        if not 1 <= len(self.factors) <= 3:
            raise UnsupportedError("between 1 and 3 factors are supported")
        object.__setattr__(self, "factors", tuple(self.factors))

    @property
    def d(self) -> int:
        return len(self.factors)

    def __call__(self, x_vec):
        pts = np.atleast_2d(np.asarray(x_vec, dtype=float))
        if pts.shape[-1] != self.d:
            raise DomainError(f"expected points with {self.d} components")
        out = np.ones(pts.shape[0])
        for j, fj in enumerate(self.factors):
            out = out * np.atleast_1d(evaluate(fj, pts[:, j]))
        return float(out[0]) if np.asarray(x_vec).ndim == 1 else out


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _num_out(v: float):
    return "inf" if math.isinf(v) else v


def _num_in(v) -> float:
    if isinstance(v, str):
        if v.lower() in ("inf", "+inf", "infinity"):
            return INF
        try:
            return float(v)
        except ValueError:
            raise ConfigError(f"bad numeric field {v!r}") from None
    if isinstance(v, (int, float)):
        return float(v)
    raise ConfigError(f"bad numeric field {v!r}")


def function_to_json(f: FunctionSpec) -> dict:
    return {"pieces": [
        {"lo": _num_out(p.lo), "hi": _num_out(p.hi), "a": p.a,
         "theta": p.theta, "c": p.c} for p in f.pieces]}


def function_from_json(data) -> FunctionSpec:
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad function JSON: {exc}") from None
    if not isinstance(data, dict) or "pieces" not in data:
        raise ConfigError('function JSON must be an object with a "pieces" list')
    raw = data["pieces"]
    if not isinstance(raw, list) or not raw:
        raise ConfigError('"pieces" must be a non-empty list')
    pieces = []
    for entry in raw:
        if not isinstance(entry, dict):
            raise ConfigError("each piece must be an object")
        try:
            pieces.append(Piece(
                lo=_num_in(entry["lo"]), hi=_num_in(entry["hi"]),
                a=_num_in(entry.get("a", 0.0)),
                theta=_num_in(entry.get("theta", 0.0)),
                c=_num_in(entry.get("c", 1.0))))
        except KeyError as exc:
            raise ConfigError(f"piece missing field {exc}") from None
    try:
        return FunctionSpec(tuple(pieces))
    except DomainError as exc:
        raise ConfigError(f"invalid pieces: {exc}") from None
