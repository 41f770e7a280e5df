"""Figure rendering for the report paths of the CLI.

Figures are a convenience layer over the delimited outputs: every number
shown here is also in a CSV or JSON next to the image.  The Agg backend is
forced so rendering works headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from gnsquant.analysis import ErrorReport, HalftoneResult, effective_q
from gnsquant.shaping import QuantRun

_ALGO_STYLE = {
    "MSQ": dict(color="#777777", marker="s"),
    "SSS": dict(color="#1f77b4", marker="o"),
    "SDW": dict(color="#2ca02c", marker="^"),
    "SSSR": dict(color="#d62728", marker="d"),
    "PERM": dict(color="#9467bd", marker="v"),
}


def _style(tag: str) -> dict:
    return _ALGO_STYLE.get(tag, dict(color="#000000", marker="x"))


def render_quantize(
    f: np.ndarray,
    run: QuantRun,
    report: ErrorReport,
    r: int,
    path,
) -> Path:
    """Four panels for a single run: signal, samples, error, spectrum."""
    path = Path(path)
    idx = np.arange(f.size)
    q_eff = effective_q(run)
    fig, axes = plt.subplots(2, 2, figsize=(11, 7))

    ax = axes[0, 0]
    ax.plot(idx, f, lw=0.9, color="#1f77b4", label="f")
    ax.plot(idx, run.f_q, lw=0.9, color="#d62728", alpha=0.8, label="f_q")
    ax.set_title("signal and reconstruction")
    ax.set_xlabel("vertex")
    ax.legend(loc="best", fontsize=8)

    ax = axes[0, 1]
    ax.step(idx, q_eff, where="mid", lw=0.8, color="#2ca02c")
    ax.set_title(f"quantized samples ({run.algorithm_tag})")
    ax.set_xlabel("vertex")

    ax = axes[1, 0]
    ax.plot(idx, run.f_q - f, lw=0.9, color="#9467bd")
    ax.set_title(
        f"reconstruction error  (rel l2 sq {report.relative_l2_sq:.3e}, "
        f"linf {report.linf:.3e})"
    )
    ax.set_xlabel("vertex")

    ax = axes[1, 1]
    eps = np.finfo(float).tiny
    ax.semilogy(idx, np.maximum(report.error_spectrum, eps), lw=0.8, color="#444444")
    ax.axvline(r - 0.5, color="#d62728", ls="--", lw=1.0, label=f"band edge r={r}")
    ax.set_title(
        f"error spectrum |GFT(f - q)|  (in-band fraction "
        f"{report.inband_energy_fraction:.3e})"
    )
    ax.set_xlabel("frequency index")
    ax.legend(loc="best", fontsize=8)

    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def render_sweep(summary: list[dict], path, x_field: str = "r") -> Path:
    """Mean relative error curves per algorithm, with the bound overlay.

    ``x_field`` is "r" for bandwidth sweeps and "M" for iteration sweeps;
    the bound curve appears wherever SSSR rows carry one.
    """
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7.5, 5))
    by_algo: dict[str, list[dict]] = {}
    for rec in summary:
        by_algo.setdefault(rec["algorithm"], []).append(rec)
    for tag in sorted(by_algo):
        recs = sorted(by_algo[tag], key=lambda rec: rec[x_field])
        xs = [rec[x_field] for rec in recs]
        ys = [rec["mean_relative_l2_sq"] for rec in recs]
        errs = [rec["std_relative_l2_sq"] for rec in recs]
        ax.errorbar(
            xs, ys, yerr=errs, lw=1.2, ms=4, capsize=2, label=tag, **_style(tag)
        )
        bounds = [(rec[x_field], rec["bound_c1"]) for rec in recs if rec["bound_c1"]]
        if bounds:
            bx, by = zip(*bounds)
            ax.plot(bx, by, ls="--", lw=1.0, color=_style(tag)["color"],
                    label=f"{tag} bound (C=1)")
    ax.set_yscale("log")
    if x_field == "M":
        ax.set_xscale("log")
    ax.set_xlabel(x_field)
    ax.set_ylabel("mean relative l2 error (squared)")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def render_halftone(
    points: np.ndarray,
    result: HalftoneResult,
    path,
) -> Path:
    """Point-cloud halftoning panels: original values plus each method.

    Clouds are drawn as 2D projections (first and last coordinate), colored
    by the rendered value; the final panel compares low-pass errors.
    """
    path = Path(path)
    x = points[:, 0]
    y = points[:, -1] if points.shape[1] > 1 else np.zeros_like(x)
    tags = list(result.methods)
    fig, axes = plt.subplots(1, len(tags) + 2, figsize=(4 * (len(tags) + 2), 3.8))

    def cloud(ax, values, title):
        sc = ax.scatter(x, y, c=values, s=6, cmap="gray", vmin=-1.0, vmax=1.0)
        ax.set_title(title, fontsize=9)
        ax.set_aspect("equal")
        ax.set_xticks([])
        ax.set_yticks([])
        return sc

    cloud(axes[0], result.f, "original signal")
    for ax, tag in zip(axes[1:-1], tags):
        run = result.methods[tag].runs[0]
        cloud(ax, np.clip(effective_q(run), -1.0, 1.0), f"{tag} halftone")

    ax = axes[-1]
    width = 0.35
    pos = np.arange(len(tags))
    ax.bar(
        pos - width / 2,
        [result.methods[t].mean_lowpass_rel_l2_sq for t in tags],
        width,
        label="rel l2 sq (low-pass)",
        color="#1f77b4",
    )
    ax.bar(
        pos + width / 2,
        [result.methods[t].mean_lowpass_linf for t in tags],
        width,
        label="linf (low-pass)",
        color="#d62728",
    )
    ax.set_xticks(pos)
    ax.set_xticklabels(tags, fontsize=8)
    ax.set_yscale("log")
    ax.set_title("low-pass errors", fontsize=9)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
