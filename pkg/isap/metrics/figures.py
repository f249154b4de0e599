"""SVG figures for the report command."""
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from isap.schemas.report import HistogramRow, SampleRow

# Fixed element ids and no timestamp keep repeated renders identical.
plt.rcParams["svg.hashsalt"] = "isap"
plt.rcParams["svg.fonttype"] = "none"

ID_COLOR = "tab:blue"
OOD_COLOR = "tab:red"


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def alpha0_vs_speed(samples: Sequence[SampleRow], path: Path, title: str, bins: int = 10) -> Path:
    """Scatter of total evidence against the speed heuristic with a binned mean per split."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for split, color in (("test_id", ID_COLOR), ("test_ood", OOD_COLOR)):
        rows = [s for s in samples if s.split == split and s.alpha0 is not None]
        if not rows:
            continue
        speed = np.array([s.speed for s in rows])
        alpha0 = np.array([s.alpha0 for s in rows])
        ax.scatter(speed, alpha0, s=6, alpha=0.4, color=color, label=split)
        edges = np.linspace(speed.min(), speed.max() + 1e-9, bins + 1)
        index = np.clip(np.digitize(speed, edges) - 1, 0, bins - 1)
        centers, means = [], []
        for b in range(bins):
            members = index == b
            if members.any():
                centers.append(0.5 * (edges[b] + edges[b + 1]))
                means.append(alpha0[members].mean())
        ax.plot(centers, means, color=color, linewidth=2)
    ax.set_yscale("log")
    ax.set_xlabel("speed heuristic [m]")
    ax.set_ylabel("alpha_0")
    ax.set_title(title)
    ax.legend()
    return _save(fig, path)


def entropy_histogram(histograms: Sequence[HistogramRow], entropy: str, path: Path, title: str) -> Path:
    rows = [h for h in histograms if h.entropy == entropy]
    fig, ax = plt.subplots(figsize=(6, 4))
    if rows:
        lows = np.array([h.bin_low for h in rows])
        widths = np.array([h.bin_high - h.bin_low for h in rows])
        ax.bar(lows, [h.id_count for h in rows], width=widths, align="edge", alpha=0.5, color=ID_COLOR, label="ID")
        ax.bar(lows, [h.ood_count for h in rows], width=widths, align="edge", alpha=0.5, color=OOD_COLOR, label="OOD")
        ax.legend()
    ax.set_xlabel(f"{entropy} entropy")
    ax.set_ylabel("samples")
    ax.set_title(title)
    return _save(fig, path)
