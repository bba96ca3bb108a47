"""Figure rendering for the report paths.

Every figure is written next to the delimited output it illustrates
(loss CSV, report CSV/JSON, generated-graph containers). Rendering is
deterministic: fixed layout seeds, no timestamps.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import networkx as nx
import numpy as np

from .evaluation import DESCRIPTOR_NAMES, SampleReport
from .graphs import Graph

_PNG_META = {"Software": "sentgraph"}


def _save(fig, path: str | Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight", metadata=_PNG_META)
    plt.close(fig)


def save_loss_curve(curve: Sequence[tuple[int, float, float]], path: str | Path):
    steps = [row[0] for row in curve]
    train = [row[1] for row in curve]
    val = [row[2] for row in curve]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(steps, train, label="train NLL", color="tab:blue")
    if not all(np.isnan(v) for v in val):
        ax.plot(steps, val, label="val NLL", color="tab:orange")
    ax.set_xlabel("step")
    ax.set_ylabel("mean token NLL")
    ax.legend()
    ax.grid(alpha=0.3)
    _save(fig, path)


def save_report_figure(report: SampleReport, path: str | Path, label: str = "generated"):
    names = list(DESCRIPTOR_NAMES)
    gen_vals = [report.mmds()[n] for n in names]
    train_vals = [report.train_mmd.get(n, np.nan) for n in names]
    x = np.arange(len(names))
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4), width_ratios=[3, 1])
    ax1.bar(x - 0.2, gen_vals, width=0.4, label=f"{label} vs test")
    ax1.bar(x + 0.2, train_vals, width=0.4, label="train vs test")
    ax1.set_xticks(x, ["Deg.", "Clus.", "Orbit", "Spec."])
    ax1.set_ylabel("MMD")
    ax1.set_yscale("log")
    ax1.legend()
    ax1.grid(alpha=0.3, axis="y")
    bars = [report.valid_frac, report.unique_frac, report.novel_frac, report.vun]
    ax2.bar(range(4), bars, color=["tab:green"] * 3 + ["tab:red"])
    ax2.set_xticks(range(4), ["V", "U", "N", "VUN"])
    ax2.set_ylim(0, 1.05)
    ax2.grid(alpha=0.3, axis="y")
    fig.suptitle(f"ratio={report.ratio:.2f}")
    _save(fig, path)


def save_graph_gallery(graphs: Sequence[Graph], path: str | Path, max_panels: int = 12):
    count = min(len(graphs), max_panels)
    if count == 0:
        return
    cols = min(4, count)
    rows = (count + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(3 * cols, 3 * rows))
    axes = np.atleast_1d(axes).ravel()
    for ax in axes[count:]:
        ax.axis("off")
    for ax, g in zip(axes, graphs[:count]):
        ng = nx.Graph()
        ng.add_nodes_from(range(g.n))
        ng.add_edges_from(g.edges)
        pos = nx.spring_layout(ng, seed=0)
        nx.draw_networkx(ng, pos=pos, ax=ax, node_size=30, with_labels=False,
                         node_color="tab:blue", edge_color="gray", width=0.8)
        ax.set_title(f"n={g.n} m={g.m}", fontsize=8)
        ax.axis("off")
    _save(fig, path)


def save_ablation_figure(report_sent: SampleReport, report_set: SampleReport, path: str | Path):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    names = list(DESCRIPTOR_NAMES)
    x = np.arange(len(names))
    ax1.bar(x - 0.2, [report_sent.mmds()[n] for n in names], width=0.4, label="SENT")
    ax1.bar(x + 0.2, [report_set.mmds()[n] for n in names], width=0.4, label="SET")
    ax1.set_xticks(x, ["Deg.", "Clus.", "Orbit", "Spec."])
    ax1.set_ylabel("MMD")
    ax1.set_yscale("log")
    ax1.legend()
    ax2.bar([0, 1], [report_sent.vun, report_set.vun], color=["tab:blue", "tab:orange"])
    ax2.set_xticks([0, 1], ["SENT", "SET"])
    ax2.set_ylabel("VUN")
    ax2.set_ylim(0, 1.05)
    _save(fig, path)


def save_calibration_figure(table: Sequence[tuple[float, float, float]], path: str | Path):
    tis = sorted({t[0] for t in table})
    tos = sorted({t[1] for t in table})
    grid = np.full((len(tis), len(tos)), np.nan)
    for ti, to, rate in table:
        grid[tis.index(ti), tos.index(to)] = rate
    fig, ax = plt.subplots(figsize=(6, 4))
    im = ax.imshow(grid, origin="lower", vmin=0, vmax=1, cmap="viridis", aspect="auto")
    ax.set_xticks(range(len(tos)), [f"{t:g}" for t in tos])
    ax.set_yticks(range(len(tis)), [f"{t:g}" for t in tis])
    ax.set_xlabel("inter-density tolerance")
    ax.set_ylabel("intra-density tolerance")
    fig.colorbar(im, label="self-consistency rate")
    _save(fig, path)
