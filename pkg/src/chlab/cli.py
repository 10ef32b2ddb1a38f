"""Command-line interface.

Nine subcommands expose the library: parameter windows, operator application,
norms, grand-style norms, ratio sweeps with blow-up fits, scaling checks, the
convolution averaging bound, and the conjugate probe.  Output is CSV (default)
or a JSON envelope; --plot renders a PNG figure next to the delimited output.

Exit codes: 0 success, 2 configuration, 3 domain/range, 4 convergence/fit,
5 divergence flagged by exponent screening.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import json
import math
import os
import sys
from dataclasses import dataclass

from . import __version__
from .bounds import (FitError, SweepRecord, conjugate_bound_probe,
                     conjugate_sweep_records, default_conjugate_p_list,
                     fit_blowup, hardy_convolution_bound,
                     lower_bound_K_empirical, sweep_ratio, vs_ratio_record)
from .errors import (ChlabError, ConfigError, ConvergenceError,
                     DivergenceError, DomainError, EmptyIntersectionError,
                     RangeError, UnsupportedError)
from .exponents import OperatorParams, exponent_window, q_of_p
from .functions import (FunctionSpec, function_from_json, indicator, make_f0,
                        make_f_delta_theta, make_g_plus, power_function,
                        dilate)
from .norms import (PsiFunction, gls_norm, image_lq_norm, lp_norm,
                    natural_psi, psi_from_json)
from .operators import (WeightSpec, apply_U, apply_VS, apply_W, power_weight,
                        weight_one)
from .quadrature import QuadratureSpec

_EXIT_BY_ERROR = (
    (ConfigError, 2),
    (ConvergenceError, 4),
    (FitError, 4),
    (DivergenceError, 5),
    (RangeError, 3),
    (DomainError, 3),
    (UnsupportedError, 3),
    (EmptyIntersectionError, 3),
)


def _exit_code(exc: Exception) -> int:
    for cls, code in _EXIT_BY_ERROR:
        if isinstance(exc, cls):
            return code
    return 1


@dataclass
class RunConfig:
    """Everything one invocation needs, after merging flags and --config."""

    command: str
    alpha: float | None = None
    beta: float | None = None
    lam: float | None = None
    op: str = "U"
    f: str | None = None
    f_json: str | None = None
    weight: str | None = None
    x: str | None = None
    x_grid: str | None = None
    p: float | None = None
    p_list: str | None = None
    p_near_pminus: int | None = None
    gamma_list: str = "0.5,2,10"
    psi_kind: str | None = None
    psi_value: float | None = None
    psi_expr: str | None = None
    psi_json: str | None = None
    A: float | None = None
    B: float | None = None
    rel_tol: float | None = None
    abs_tol: float | None = None
    max_nodes: int | None = None
    format: str = "csv"
    output: str | None = None
    plot: str | None = None


_CONFIG_FIELDS = {f.name for f in dataclasses.fields(RunConfig)} - {"command"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chlab",
        description="Weighted averaging operators: windows, norms, bounds.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp, params=True, function=False, weight=False):
        if params:
            sp.add_argument("--alpha", type=float)
            sp.add_argument("--beta", type=float)
            sp.add_argument("--lambda", dest="lam", type=float)
        if function:
            sp.add_argument("--f", help="builtin function name "
                            "(f0, fdeltatheta[:theta], gplus, indicator[:lo:hi], "
                            "power:a[:lo:hi], powerlog:a:theta)")
            sp.add_argument("--f-json", dest="f_json",
                            help="function as JSON piece list")
        if weight:
            sp.add_argument("--weight", help="s1 (flat) or rl:<bw> (power)")
        sp.add_argument("--config", help="JSON file with option defaults")
        sp.add_argument("--rel-tol", dest="rel_tol", type=float)
        sp.add_argument("--abs-tol", dest="abs_tol", type=float)
        sp.add_argument("--max-nodes", dest="max_nodes", type=int)
        sp.add_argument("--format", choices=("csv", "json"))
        sp.add_argument("--output", help="write the table here instead of stdout")
        sp.add_argument("--plot", help="render a PNG figure to this path")

    sp = sub.add_parser("params", help="window and kappa for one triple")
    add_common(sp)

    sp = sub.add_parser("apply", help="evaluate an operator pointwise")
    add_common(sp, function=True, weight=True)
    sp.add_argument("--op", choices=("U", "W", "VS"))
    sp.add_argument("--x", help="comma-separated evaluation points")
    sp.add_argument("--x-grid", dest="x_grid",
                    help="log grid lo:hi:n, e.g. 1e-2:1e2:25")

    sp = sub.add_parser("norm", help="L_p norms of a catalog function")
    add_common(sp, function=True)
    sp.add_argument("--p", type=float)
    sp.add_argument("--p-list", dest="p_list")

    sp = sub.add_parser("gls-norm", help="grand-style sup-norm over exponents")
    add_common(sp, function=True)
    sp.add_argument("--psi-kind", dest="psi_kind",
                    choices=("constant", "power", "natural"))
    sp.add_argument("--psi-value", dest="psi_value", type=float)
    sp.add_argument("--psi-expr", dest="psi_expr", help="c,a for c*p^a")
    sp.add_argument("--psi-json", dest="psi_json")
    sp.add_argument("--A", type=float)
    sp.add_argument("--B", type=float)

    sp = sub.add_parser("sweep", help="norm-ratio sweep against the bound")
    add_common(sp, function=True)
    sp.add_argument("--p-list", dest="p_list")
    sp.add_argument("--p-near-pminus", dest="p_near_pminus", type=int,
                    help="K points p_minus + 10^-k, k = 1..K")

    sp = sub.add_parser("fit-blowup", help="sweep plus blow-up rate fit")
    add_common(sp, function=True)
    sp.add_argument("--p-list", dest="p_list")
    sp.add_argument("--p-near-pminus", dest="p_near_pminus", type=int)

    sp = sub.add_parser("verify-scaling", help="dilation covariance check")
    add_common(sp, function=True)
    sp.add_argument("--p", type=float)
    sp.add_argument("--p-list", dest="p_list")
    sp.add_argument("--gamma-list", dest="gamma_list")
    sp.add_argument("--gamma", dest="gamma_list")

    sp = sub.add_parser("hardy-check", help="convolution averaging bound check")
    add_common(sp, params=False, function=True, weight=True)
    sp.add_argument("--p-list", dest="p_list")
    sp.add_argument("--p", type=float)

    sp = sub.add_parser("conjugate-sweep",
                        help="conjugate-operator ratios near p_plus")
    add_common(sp)
    sp.add_argument("--p-list", dest="p_list")

    return parser


def _merge_config(args: argparse.Namespace) -> RunConfig:
    file_cfg = {}
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        try:
            with open(cfg_path, "r", encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {cfg_path}: {exc}")
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(k.replace("-", "_") for k in file_cfg) - _CONFIG_FIELDS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    merged = {}
    for name in _CONFIG_FIELDS:
        cli_val = getattr(args, name, None)
        if cli_val is not None:
            merged[name] = cli_val
        else:
            for key in (name, name.replace("_", "-")):
                if key in file_cfg:
                    merged[name] = file_cfg[key]
                    break
    cfg = RunConfig(command=args.command, **merged)
    if cfg.command in ("params", "apply", "sweep", "fit-blowup",
                       "verify-scaling", "conjugate-sweep"):
        if cfg.command == "apply" and cfg.op == "VS":
            pass
        elif cfg.alpha is None or cfg.beta is None or cfg.lam is None:
            raise ConfigError(
                f"{cfg.command} needs --alpha, --beta and --lambda")
    return cfg


def _build_params(cfg: RunConfig) -> OperatorParams | None:
    if cfg.alpha is None and cfg.beta is None and cfg.lam is None:
        return None
    if cfg.alpha is None or cfg.beta is None or cfg.lam is None:
        raise ConfigError("provide all of --alpha, --beta, --lambda or none")
    try:
        return OperatorParams(float(cfg.alpha), float(cfg.beta), float(cfg.lam))
    except DomainError:
        raise


def _build_quad_spec(cfg: RunConfig) -> QuadratureSpec:
    base = QuadratureSpec()
    rel = cfg.rel_tol if cfg.rel_tol is not None else base.rel_tol
    ab = cfg.abs_tol if cfg.abs_tol is not None else base.abs_tol
    nodes = cfg.max_nodes if cfg.max_nodes is not None else base.max_nodes
    env = os.environ.get("CHLAB_MAX_NODES")
    if env is not None:
        try:
            nodes = int(env)
        except ValueError:
            raise ConfigError(f"CHLAB_MAX_NODES must be an integer, got {env!r}")
    try:
        return QuadratureSpec(rel_tol=rel, abs_tol=ab, max_nodes=nodes)
    except DomainError as exc:
        raise ConfigError(str(exc))


def _parse_floats(text: str, what: str) -> list[float]:
    try:
        vals = [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise ConfigError(f"bad {what} list: {text!r}")
    if not vals:
        raise ConfigError(f"empty {what} list")
    return vals


def _parse_function(cfg: RunConfig, params: OperatorParams | None) -> FunctionSpec:
    if cfg.f_json and cfg.f:
        raise ConfigError("give either --f or --f-json, not both")
    if cfg.f_json:
        return function_from_json(cfg.f_json)
    name = cfg.f or "f0"
    head, *rest = name.split(":")

    def need_params() -> OperatorParams:
        if params is None:
            raise ConfigError(f"builtin {head!r} needs --alpha/--beta/--lambda")
        return params

    try:
        if head == "f0":
            return make_f0(need_params())
        if head == "fdeltatheta":
            theta = float(rest[0]) if rest else 0.0
            return make_f_delta_theta(need_params(), theta)
        if head == "gplus":
            return make_g_plus(need_params())
        if head == "indicator":
            lo = float(rest[0]) if len(rest) > 0 else 0.0
            hi = float(rest[1]) if len(rest) > 1 else 1.0
            return indicator(lo, hi)
        if head == "power":
            a = float(rest[0])
            lo = float(rest[1]) if len(rest) > 1 else 0.0
            hi = float(rest[2]) if len(rest) > 2 else math.inf
            return power_function(a, lo, hi)
        if head == "powerlog":
            a = float(rest[0])
            theta = float(rest[1]) if len(rest) > 1 else 0.0
            return power_function(a, 0.0, 1.0, theta)
    except (IndexError, ValueError):
        raise ConfigError(f"malformed function spec {name!r}")
    raise ConfigError(f"unknown builtin function {head!r}")


def _parse_weight(cfg: RunConfig) -> WeightSpec:
    name = cfg.weight or "s1"
    if name == "s1":
        return weight_one()
    if name.startswith("rl:"):
        try:
            return power_weight(float(name.split(":", 1)[1]))
        except (ValueError, DomainError):
            raise ConfigError(f"bad weight {name!r}")
    raise ConfigError(f"unknown weight {name!r} (use s1 or rl:<bw>)")


def _parse_psi(cfg: RunConfig) -> PsiFunction:
    if cfg.psi_json:
        try:
            return psi_from_json(json.loads(cfg.psi_json))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad psi JSON: {exc}")
    kind = cfg.psi_kind or "constant"
    if cfg.A is None or cfg.B is None:
        raise ConfigError("gls-norm needs --A and --B (psi support)")
    A, B = float(cfg.A), float(cfg.B)
    if kind == "constant":
        return PsiFunction(kind="constant", A=A, B=B,
                           value=cfg.psi_value if cfg.psi_value is not None else 1.0)
    if kind == "power":
        if not cfg.psi_expr:
            raise ConfigError('power psi needs --psi-expr "c,a"')
        c, a = _parse_floats(cfg.psi_expr, "psi-expr")[:2]
        return PsiFunction(kind="power", A=A, B=B, expr=(c, a))
    raise ConfigError("natural psi on the CLI needs --psi-json with the function")


def _x_values(cfg: RunConfig) -> list[float]:
    if cfg.x and cfg.x_grid:
        raise ConfigError("give either --x or --x-grid, not both")
    if cfg.x:
        return _parse_floats(cfg.x, "x")
    if cfg.x_grid:
        try:
            lo_s, hi_s, n_s = cfg.x_grid.split(":")
            lo, hi, n = float(lo_s), float(hi_s), int(n_s)
        except ValueError:
            raise ConfigError(f"bad x grid {cfg.x_grid!r}, expected lo:hi:n")
        if not (0 < lo < hi and n >= 2):
            raise ConfigError(f"bad x grid {cfg.x_grid!r}")
        ratio = (hi / lo) ** (1.0 / (n - 1))
        return [lo * ratio ** i for i in range(n)]
    return [0.1, 1.0, 10.0]


def _p_values(cfg: RunConfig, params: OperatorParams | None) -> list[float]:
    if cfg.p is not None and cfg.p_list:
        raise ConfigError("give either --p or --p-list, not both")
    if cfg.p is not None:
        return [float(cfg.p)]
    if cfg.p_list:
        return _parse_floats(cfg.p_list, "p")
    if cfg.p_near_pminus is not None:
        if params is None:
            raise ConfigError("--p-near-pminus needs operator parameters")
        w = exponent_window(params)
        return [w.p_minus + 10.0 ** (-k)
                for k in range(1, int(cfg.p_near_pminus) + 1)]
    return []


def _record_row(r: SweepRecord) -> dict:
    return {"p": r.p, "q": r.q, "f_norm": r.f_norm,
            "image_norm": r.image_norm, "ratio": r.ratio,
            "upper_bound": r.upper_bound, "error_estimate": r.error_estimate,
            "error": r.error}


# ---------------------------------------------------------------------------
# command implementations: each returns (columns, rows, errors, plot_payload)
# ---------------------------------------------------------------------------

def _cmd_params(cfg, params, spec):
    w = exponent_window(params)
    row = {"alpha": params.alpha, "beta": params.beta, "lambda": params.lam,
           "kappa": params.kappa, "p_minus": w.p_minus, "p_plus": w.p_plus,
           "q_minus": w.q_minus, "q_plus": w.q_plus, "error": None}
    return list(row.keys()), [row], [], None


def _cmd_apply(cfg, params, spec):
    f = _parse_function(cfg, params)
    op = cfg.op or "U"
    weight = _parse_weight(cfg) if op == "VS" else None
    if op in ("U", "W") and params is None:
        raise ConfigError(f"apply --op {op} needs --alpha/--beta/--lambda")
    rows, errors = [], []
    for x in _x_values(cfg):
        row = {"x": x, "value": None, "error_estimate": None,
               "nodes": None, "error": None}
        try:
            if op == "U":
                res = apply_U(params, f, x, spec)
            elif op == "W":
                res = apply_W(params, f, x, spec)
            else:
                res = apply_VS(weight, f, x, spec)
            row.update(value=res.value, error_estimate=res.error_estimate,
                       nodes=res.nodes_used)
        except ChlabError as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
            errors.append(exc)
        rows.append(row)
    cols = ["x", "value", "error_estimate", "nodes", "error"]
    return cols, rows, errors, ("apply", rows)


def _cmd_norm(cfg, params, spec):
    f = _parse_function(cfg, params)
    ps = _p_values(cfg, params)
    if not ps:
        raise ConfigError("norm needs --p or --p-list")
    rows, errors = [], []
    for p in ps:
        row = {"p": p, "norm": None, "error_estimate": None, "error": None}
        try:
            res = lp_norm(f, p, spec)
            row.update(norm=res.value, error_estimate=res.error_estimate)
        except ChlabError as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
            errors.append(exc)
        rows.append(row)
    return ["p", "norm", "error_estimate", "error"], rows, errors, ("norm", rows)


def _cmd_gls_norm(cfg, params, spec):
    f = _parse_function(cfg, params)
    psi = _parse_psi(cfg)
    res = gls_norm(f, psi, spec)
    row = {"value": res.value, "achieved_at": res.achieved_at,
           "error_estimate": res.error_estimate, "error": None}
    return ["value", "achieved_at", "error_estimate", "error"], [row], [], None


def _sweep_p_list(cfg, params):
    ps = _p_values(cfg, params)
    if not ps:
        w = exponent_window(params)
        ps = [w.p_minus + 10.0 ** (-k) for k in range(1, 5)]
    return ps


def _cmd_sweep(cfg, params, spec):
    f = _parse_function(cfg, params)
    records = sweep_ratio(params, f, _sweep_p_list(cfg, params), spec)
    rows = [_record_row(r) for r in records]
    cols = ["p", "q", "f_norm", "image_norm", "ratio", "upper_bound",
            "error_estimate", "error"]
    w = exponent_window(params)
    return cols, rows, [], ("sweep", rows, w.p_minus, "p_minus", None)


def _cmd_fit_blowup(cfg, params, spec):
    f = _parse_function(cfg, params)
    w = exponent_window(params)
    records = sweep_ratio(params, f, _sweep_p_list(cfg, params), spec)
    rows = [dict(kind="point", **_record_row(r)) for r in records]
    errors = []
    fit_payload = None
    fit_row = {"kind": "fit", "p": None, "q": None, "f_norm": None,
               "image_norm": None, "ratio": None, "upper_bound": None,
               "error_estimate": None, "fitted_exponent": None,
               "fitted_constant": None, "residual": None, "error": None}
    try:
        fit = fit_blowup(records, w.p_minus)
        fit_row.update(fitted_exponent=fit.fitted_exponent,
                       fitted_constant=fit.fitted_constant,
                       residual=fit.residual)
        fit_payload = {"fitted_exponent": fit.fitted_exponent,
                       "fitted_constant": fit.fitted_constant}
    except ChlabError as exc:
        fit_row["error"] = f"{type(exc).__name__}: {exc}"
        errors.append(exc)
    for r in rows:
        r.setdefault("fitted_exponent", None)
        r.setdefault("fitted_constant", None)
        r.setdefault("residual", None)
    rows.append(fit_row)
    cols = ["kind", "p", "q", "f_norm", "image_norm", "ratio", "upper_bound",
            "error_estimate", "fitted_exponent", "fitted_constant", "residual",
            "error"]
    return cols, rows, errors, ("sweep", rows[:-1], w.p_minus, "p_minus",
                                fit_payload)


def _cmd_verify_scaling(cfg, params, spec):
    f = _parse_function(cfg, params)
    ps = _p_values(cfg, params) or [1.8]
    gammas = _parse_floats(cfg.gamma_list, "gamma")
    rows, errors = [], []
    for p in ps:
        for g in gammas:
            row = {"p": p, "q": None, "gamma": g,
                   "predicted_norm_factor": None, "measured_norm_factor": None,
                   "predicted_image_factor": None, "measured_image_factor": None,
                   "rel_dev_image": None, "error": None}
            try:
                q = q_of_p(params, p)
                fd = dilate(f, g)
                base_n = lp_norm(f, p, spec).value
                base_i = image_lq_norm(f, q, op="U", params=params, spec=spec).value
                dn = lp_norm(fd, p, spec).value
                di = image_lq_norm(fd, q, op="U", params=params, spec=spec).value
                pred_n = g ** (-1.0 / p)
                pred_i = g ** (params.kappa - 1.0 - 1.0 / q)
                meas_n = dn / base_n
                meas_i = di / base_i
                row.update(q=q, predicted_norm_factor=pred_n,
                           measured_norm_factor=meas_n,
                           predicted_image_factor=pred_i,
                           measured_image_factor=meas_i,
                           rel_dev_image=abs(meas_i / pred_i - 1.0))
            except ChlabError as exc:
                row["error"] = f"{type(exc).__name__}: {exc}"
                errors.append(exc)
            rows.append(row)
    cols = ["p", "q", "gamma", "predicted_norm_factor", "measured_norm_factor",
            "predicted_image_factor", "measured_image_factor", "rel_dev_image",
            "error"]
    return cols, rows, errors, ("scaling", rows)


def _cmd_hardy_check(cfg, params, spec):
    f = _parse_function(cfg, params)
    w = _parse_weight(cfg)
    ps = _p_values(cfg, params) or [1.5, 2.0, 3.0]
    rows, errors = [], []
    for p in ps:
        row = {"p": p, "f_norm": None, "image_norm": None, "ratio": None,
               "upper_bound": None, "classical_bound": None,
               "within_bound": None, "error": None}
        try:
            rec = vs_ratio_record(w, f, p, spec)
            bound = rec.upper_bound
            row.update(f_norm=rec.f_norm, image_norm=rec.image_norm,
                       ratio=rec.ratio, upper_bound=bound,
                       classical_bound=p / (p - 1.0),
                       within_bound=bool(rec.ratio <= bound + rec.error_estimate))
        except ChlabError as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
            errors.append(exc)
        rows.append(row)
    cols = ["p", "f_norm", "image_norm", "ratio", "upper_bound",
            "classical_bound", "within_bound", "error"]
    return cols, rows, errors, ("hardy", rows)


def _cmd_conjugate_sweep(cfg, params, spec):
    ps = _p_values(cfg, params) or default_conjugate_p_list(params)
    records = conjugate_sweep_records(params, ps, spec)
    rows = [dict(kind="point", **_record_row(r)) for r in records]
    errors = []
    w = exponent_window(params)
    fit_row = {"kind": "fit", "p": None, "q": None, "f_norm": None,
               "image_norm": None, "ratio": None, "upper_bound": None,
               "error_estimate": None, "fitted_exponent": None,
               "fitted_constant": None, "residual": None, "error": None}
    fit_payload = None
    try:
        usable = [r for r in records if r.error is None
                  and math.isfinite(r.ratio) and r.p < w.p_plus]
        if len(usable) < 4:
            raise FitError(
                f"conjugate fit needs at least 4 usable points, got {len(usable)}")
        fit = conjugate_bound_probe(params, [r.p for r in usable], spec)
        fit_row.update(fitted_exponent=fit.fitted_exponent,
                       fitted_constant=fit.fitted_constant,
                       residual=fit.residual)
        fit_payload = {"fitted_exponent": fit.fitted_exponent,
                       "fitted_constant": fit.fitted_constant}
    except ChlabError as exc:
        fit_row["error"] = f"{type(exc).__name__}: {exc}"
        errors.append(exc)
    for r in rows:
        r.setdefault("fitted_exponent", None)
        r.setdefault("fitted_constant", None)
        r.setdefault("residual", None)
    rows.append(fit_row)
    cols = ["kind", "p", "q", "f_norm", "image_norm", "ratio", "upper_bound",
            "error_estimate", "fitted_exponent", "fitted_constant", "residual",
            "error"]
    return cols, rows, errors, ("sweep", rows[:-1], w.p_plus, "p_plus",
                                fit_payload)


_COMMANDS = {
    "params": _cmd_params,
    "apply": _cmd_apply,
    "norm": _cmd_norm,
    "gls-norm": _cmd_gls_norm,
    "sweep": _cmd_sweep,
    "fit-blowup": _cmd_fit_blowup,
    "verify-scaling": _cmd_verify_scaling,
    "hardy-check": _cmd_hardy_check,
    "conjugate-sweep": _cmd_conjugate_sweep,
}

#: commands where a failed point decides the exit code (single-answer shapes)
_POINT_ERRORS_FATAL = {"apply", "norm", "gls-norm", "fit-blowup",
                       "conjugate-sweep"}


def _format_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        # failed points carry their explanation in the error column; a NaN
        # value cell would just duplicate it as noise
        return "" if math.isnan(v) else repr(v)
    return str(v)


def _json_safe(v):
    if isinstance(v, float):
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
    return v


def write_csv(cols, rows, fh):
    fh.write(",".join(cols) + "\n")
    for row in rows:
        fh.write(",".join(_format_cell(row.get(c)) for c in cols) + "\n")


def _config_echo(cfg: RunConfig) -> dict:
    out = {"command": cfg.command}
    for name in sorted(_CONFIG_FIELDS):
        v = getattr(cfg, name)
        if v is not None:
            out[name] = v
    return out


def _render_plot(payload, path: str):
    from . import plotting

    kind = payload[0]
    if kind == "apply":
        plotting.save_apply_plot(payload[1], path)
    elif kind == "norm":
        plotting.save_norm_plot(payload[1], path)
    elif kind == "sweep":
        _, rows, p_ref, ref_label, fit = payload
        plotting.save_sweep_plot(rows, path, p_ref=p_ref, ref_label=ref_label,
                                 fit=fit)
    elif kind == "scaling":
        plotting.save_scaling_plot(payload[1], path)
    elif kind == "hardy":
        plotting.save_hardy_plot(payload[1], path)


def run(cfg: RunConfig) -> tuple[str, int]:
    """Execute one command; returns (rendered output text, exit code)."""
    errors: list[Exception] = []
    rows: list[dict] = []
    cols: list[str] = []
    plot_payload = None
    code = 0
    try:
        spec = _build_quad_spec(cfg)
        params = _build_params(cfg)
        handler = _COMMANDS[cfg.command]
        cols, rows, errors, plot_payload = handler(cfg, params, spec)
    except ChlabError as exc:
        errors = [exc]
        code = _exit_code(exc)
        cols = cols or ["error"]
        rows = rows or [{"error": f"{type(exc).__name__}: {exc}"}]
    if code == 0 and errors and cfg.command in _POINT_ERRORS_FATAL:
        code = _exit_code(errors[0])
    if cfg.plot and plot_payload is not None and code in (0,):
        try:
            _render_plot(plot_payload, cfg.plot)
        except Exception as exc:  # plotting failures never mask results
            print(f"plot failed: {exc}", file=sys.stderr)
    if cfg.format == "json":
        payload = {
            "config": _config_echo(cfg),
            "results": rows,
            "errors": [{"type": type(e).__name__, "message": str(e),
                        "code": _exit_code(e)} for e in errors],
            "version": __version__,
        }
        payload["results"] = [
            {k: _json_safe(v) for k, v in row.items()} for row in rows]
        text = json.dumps(payload, indent=2, sort_keys=True,
                          allow_nan=False) + "\n"
    else:
        buf = io.StringIO()
        write_csv(cols, rows, buf)
        text = buf.getvalue()
    return text, code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        cfg = _merge_config(args)
        text, code = run(cfg)
    except ChlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
