"""Static figures for sweep tables (Agg backend, files only)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_sweep(rows: Sequence[dict], axis: str, path: str | Path,
               title: str | None = None) -> Path:
    """One line per numeric column against the swept axis.

    Failure and disagreement columns go on a log scale in a second panel
    when any value is positive.
    """
    xs = [r[axis] for r in rows]
    cols = [k for k in rows[0] if k != axis
            and all(isinstance(r.get(k), (int, float)) for r in rows)]
    rates = [k for k in cols if k.startswith(("failure", "disagreement"))]
    other = [k for k in cols if k not in rates]
    panels = [p for p in (other, rates) if p]
    fig, axes = plt.subplots(len(panels), 1, figsize=(6, 3.2 * len(panels)), squeeze=False)
    for ax, keys in zip(axes[:, 0], panels):
        for k in keys:
            ax.plot(xs, [r[k] for r in rows], marker="o", label=k)
        if keys is rates and any(r[k] > 0 for r in rows for k in keys):
            ax.set_yscale("symlog", linthresh=1e-4)
        ax.set_xlabel(axis)
        ax.grid(alpha=0.3)
        ax.legend(fontsize=7)
    if title:
        axes[0, 0].set_title(title)
    fig.tight_layout()
    path = Path(path)
    # fixed metadata keeps repeated renders byte-identical
    fig.savefig(path, metadata={"Software": None} if path.suffix == ".png" else None)
    plt.close(fig)
    return path
