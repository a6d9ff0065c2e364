"""Figure rendering for emitted trace and sweep-summary CSVs."""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def render_trace_figure(trace_csv, out_path=None) -> Path:
    """Cumulative-regret curve for one trace CSV, saved as PNG."""
    trace_csv = Path(trace_csv)
    header, data = _read_csv(trace_csv)
    cols = {name: data[:, i] for i, name in enumerate(header)}
    out = Path(out_path) if out_path else trace_csv.with_name(trace_csv.stem + "_regret.png")

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(cols["round"], cols["cum_regret"], lw=1.5)
    ax.set_xlabel("round")
    ax.set_ylabel("cumulative dynamic regret")
    ax.set_title(trace_csv.stem)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def render_scaling_figure(summary_csv, out_path=None) -> Path:
    """Log-log regret vs sqrt(T * V_T) from a sweep summary, saved as PNG."""
    summary_csv = Path(summary_csv)
    header, data = _read_csv(summary_csv)
    cols = {name: data[:, i] for i, name in enumerate(header)}
    out = Path(out_path) if out_path else summary_csv.with_name(
        summary_csv.stem + "_scaling.png"
    )

    x, y = cols["sqrt_T_VT"], cols["regret"]
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.loglog(x, y, "o-", label="measured regret")
    keep = (x > 0) & (y > 0)
    if keep.sum() >= 2:
        slope, intercept = np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)
        ax.loglog(x, np.exp(intercept) * x**slope, "--", label=f"fit slope {slope:.3f}")
        ref = y[keep][0] / x[keep][0]
        ax.loglog(x, ref * x, ":", color="gray", label="slope 1 reference")
    ax.set_xlabel(r"$\sqrt{T \cdot V_T}$")
    ax.set_ylabel("dynamic regret")
    ax.legend()
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out
