"""Figures for the command line reports (Agg backend, files only)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STATUS_COLORS = {"passed": "tab:green", "failed": "tab:red", "skipped": "0.6", "error": "tab:orange"}


def plot_field(f, path, title: str = "") -> None:
    """Heat map for n = 2, line plot for n = 1, middle slice along the last axis for n = 3."""
    g = f.grid
    fig, ax = plt.subplots(figsize=(5, 4))
    if g.n == 1:
        ax.plot(g.axis_coords(0), f.values, "k-")
        ax.set_xlabel("x1")
    else:
        vals = f.values
        if g.n == 3:
            k = g.shape[2] // 2
            vals = vals[:, :, k]
            title = f"{title} (x3 = {g.axis_coords(2)[k]:.3g})"
        data = np.ma.masked_invalid(vals.T)
        (x0, x1), (y0, y1) = g.bbox[0], g.bbox[1]
        im = ax.imshow(data, origin="lower", extent=(x0, x1, y0, y1), cmap="viridis", aspect="auto")
        fig.colorbar(im, ax=ax)
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def _status(r):
    if r.errored:
        return "error"
    if r.skipped:
        return "skipped"
    return "passed" if r.passed else "failed"


def plot_margins(report, path) -> None:
    """One bar per check: margin relative to tolerance on a symlog axis, colored by status."""
    res = report.results
    fig, ax = plt.subplots(figsize=(6, 0.4 * max(len(res), 1) + 1.2))
    if res:
        vals = []
        for r in res:
            m, tol = r.margin, abs(r.tolerance)
            if not np.isfinite(m):
                vals.append(0.0)
            else:
                vals.append(m / tol if np.isfinite(tol) and tol > 0 else m)
        colors = [_STATUS_COLORS[_status(r)] for r in res]
        ypos = np.arange(len(res))
        ax.barh(ypos, vals, color=colors)
        ax.set_yticks(ypos, [r.check_id for r in res])
        ax.invert_yaxis()
        ax.set_xscale("symlog", linthresh=1.0)
        ax.axvline(0.0, color="k", lw=0.8)
        ax.set_xlabel("margin / tolerance")
    ax.set_title("verification margins")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
