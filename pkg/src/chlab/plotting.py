"""Figure-to-file helpers for the CLI report paths.

Each helper takes the already-serialized result rows of one command and
writes a single PNG; nothing here ever opens a window (Agg backend).
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _finite_rows(rows, *cols):
    out = []
    for r in rows:
        vals = [r.get(c) for c in cols]
        if all(isinstance(v, (int, float)) and math.isfinite(v) for v in vals):
            out.append(r)
    return out


def save_apply_plot(rows, path: str, title: str = ""):
    rows = _finite_rows(rows, "x", "value")
    fig, ax = plt.subplots(figsize=(6, 4))
    xs = [r["x"] for r in rows]
    ys = [r["value"] for r in rows]
    if xs and min(xs) > 0 and all(y > 0 for y in ys):
        ax.loglog(xs, ys, "o-", ms=3)
    else:
        ax.plot(xs, ys, "o-", ms=3)
    ax.set_xlabel("x")
    ax.set_ylabel("value")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_norm_plot(rows, path: str, title: str = ""):
    rows = _finite_rows(rows, "p", "norm")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot([r["p"] for r in rows], [r["norm"] for r in rows], "o-", ms=4)
    ax.set_xlabel("p")
    ax.set_ylabel("norm")
    ax.set_yscale("log")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_sweep_plot(rows, path: str, p_ref: float | None = None,
                    ref_label: str = "p_minus", fit: dict | None = None,
                    title: str = ""):
    """Ratio and bound against distance from the critical exponent."""
    pts = _finite_rows(rows, "p", "ratio")
    fig, ax = plt.subplots(figsize=(6, 4))
    if p_ref is not None and pts:
        xs = [abs(r["p"] - p_ref) for r in pts]
        ax.set_xlabel(f"|p - {ref_label}|")
        ax.set_xscale("log")
    else:
        xs = [r["p"] for r in pts]
        ax.set_xlabel("p")
    ax.plot(xs, [r["ratio"] for r in pts], "o", label="ratio")
    ub = _finite_rows(pts, "upper_bound")
    if ub:
        xs_ub = ([abs(r["p"] - p_ref) for r in ub] if p_ref is not None
                 else [r["p"] for r in ub])
        ax.plot(xs_ub, [r["upper_bound"] for r in ub], "s--",
                label="upper bound", alpha=0.7)
    if fit and p_ref is not None and pts:
        lo, hi = min(xs), max(xs)
        grid = [lo * (hi / lo) ** (i / 40.0) for i in range(41)]
        ax.plot(grid, [fit["fitted_constant"] * g ** fit["fitted_exponent"]
                       for g in grid],
                "-", alpha=0.6,
                label=f"fit slope {fit['fitted_exponent']:.3f}")
    ax.set_yscale("log")
    ax.set_ylabel("norm ratio")
    ax.legend()
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_scaling_plot(rows, path: str, title: str = ""):
    rows = _finite_rows(rows, "gamma", "measured_image_factor",
                        "predicted_image_factor")
    fig, ax = plt.subplots(figsize=(6, 4))
    gs = [r["gamma"] for r in rows]
    ax.plot(gs, [r["measured_image_factor"] for r in rows], "o", label="measured")
    ax.plot(gs, [r["predicted_image_factor"] for r in rows], "x", ms=9,
            label="predicted")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("gamma")
    ax.set_ylabel("image-norm dilation factor")
    ax.legend()
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_hardy_plot(rows, path: str, title: str = ""):
    rows = _finite_rows(rows, "p", "ratio", "upper_bound")
    fig, ax = plt.subplots(figsize=(6, 4))
    ps = [r["p"] for r in rows]
    ax.plot(ps, [r["ratio"] for r in rows], "o-", label="ratio")
    ax.plot(ps, [r["upper_bound"] for r in rows], "s--", label="L p^2/(p-1)")
    ax.plot(ps, [r["p"] / (r["p"] - 1.0) for r in rows], ":",
            label="p/(p-1)")
    ax.set_xlabel("p")
    ax.set_ylabel("ratio")
    ax.legend()
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
