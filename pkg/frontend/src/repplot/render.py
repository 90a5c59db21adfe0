"""Rendering of frontier curves, sweep heatmaps and scheme trees."""

from __future__ import annotations

import re

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .tables import FrontierTable, Table, TableError

SERIES_COLORS = ("tab:green", "tab:purple", "tab:olive", "tab:blue", "tab:orange")


def plot_frontier(tables: list[FrontierTable], out_path: str, title: str = ""):
    """Generation time (log scale) against achieved fidelity, one curve per
    input table."""
    fig, ax = plt.subplots(figsize=(7, 5))
    drawn = False
    for idx, table in enumerate(tables):
        fs, ts = table.pareto_curve()
        if not fs:
            continue
        color = SERIES_COLORS[idx % len(SERIES_COLORS)]
        ax.plot(fs, ts, marker=".", color=color, label=table.label)
        drawn = True
    ax.set_xlabel("fidelity")
    ax.set_ylabel("generation time (s)")
    if drawn:
        ax.set_yscale("log")
        ax.legend()
    else:
        ax.text(0.5, 0.5, "no feasible schemes", ha="center", va="center",
                transform=ax.transAxes)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def _grid_panel(ax, x, y, z, x_name, y_name, title):
    xs, ys = np.unique(x), np.unique(y)
    grid = np.full((len(ys), len(xs)), np.nan)
    for xi, yi, zi in zip(x, y, z):
        grid[np.searchsorted(ys, yi), np.searchsorted(xs, xi)] = zi
    with np.errstate(divide="ignore", invalid="ignore"):
        log_rate = np.log10(grid)
    masked = np.ma.masked_invalid(log_rate)
    mesh = ax.pcolormesh(xs, ys, masked, shading="nearest", cmap="viridis")
    # Central finite differences of the log-rate surface give the gradient
    # arrows; masked cells contribute nothing.
    if len(xs) > 1 and len(ys) > 1:
        gy, gx = np.gradient(masked.filled(np.nan), ys, xs)
        ax.quiver(
            np.repeat(xs[None, :], len(ys), axis=0),
            np.repeat(ys[:, None], len(xs), axis=1),
            np.nan_to_num(gx),
            np.nan_to_num(gy),
            color="white",
            width=0.004,
        )
    ax.set_xlabel(x_name)
    ax.set_ylabel(y_name)
    ax.set_title(title)
    return mesh


def plot_heatmap(grid: Table, out_path: str, targets: list[str] | None = None):
    """Per-target heatmap panels of a two-parameter sweep grid, with
    steepest-ascent arrows from finite differences on the log rate."""
    if len(grid.header) < 3:
        raise TableError("heatmap needs two parameter columns and a rate column")
    x_name, y_name = grid.header[0], grid.header[1]
    value_columns = targets if targets else [
        c for c in grid.header[2:] if c.startswith("rate_F") or c == "key_rate_bits_per_s"
    ]
    if not value_columns:
        raise TableError("no rate columns found in the grid table")
    x = grid.floats(x_name)
    y = grid.floats(y_name)
    fig, axes = plt.subplots(
        1, len(value_columns), figsize=(5.5 * len(value_columns), 4.5), squeeze=False
    )
    for ax, column in zip(axes[0], value_columns):
        mesh = _grid_panel(ax, x, y, grid.floats(column), x_name, y_name, column)
        fig.colorbar(mesh, ax=ax, label="log10 rate")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


_DOT_NODE = re.compile(r'^\s*(n\d+)\s*\[label="(.*)"\];$')
_DOT_EDGE = re.compile(r"^\s*(n\d+)\s*->\s*(n\d+);$")


def parse_dot(text: str) -> tuple[dict, list]:
    """Nodes and edges of the optimiser's scheme-graph text."""
    nodes: dict[str, str] = {}
    edges: list[tuple[str, str]] = []
    for line in text.splitlines():
        node = _DOT_NODE.match(line)
        if node:
            nodes[node.group(1)] = node.group(2).replace("\\n", "\n")
            continue
        edge = _DOT_EDGE.match(line)
        if edge:
            edges.append((edge.group(1), edge.group(2)))
    if not nodes:
        raise TableError("no nodes found in graph text")
    for a, b in edges:
        if a not in nodes or b not in nodes:
            raise TableError(f"edge {a}->{b} references unknown nodes")
    return nodes, edges


def plot_scheme(dot_text: str, out_path: str):
    """Layered tree rendering of a serialized scheme graph."""
    nodes, edges = parse_dot(dot_text)
    children: dict[str, list[str]] = {name: [] for name in nodes}
    has_parent = set()
    for a, b in edges:
        children[a].append(b)
        has_parent.add(b)
    roots = [n for n in nodes if n not in has_parent]
    positions: dict[str, tuple[float, float]] = {}
    next_x = [0.0]

    def layout(name: str, depth: int) -> float:
        kids = children[name]
        if not kids:
            x = next_x[0]
            next_x[0] += 1.0
        else:
            x = sum(layout(k, depth + 1) for k in kids) / len(kids)
        positions[name] = (x, -float(depth))
        return x

    for root in roots:
        layout(root, 0)
    fig, ax = plt.subplots(figsize=(max(6.0, next_x[0] * 2.2), 5))
    for a, b in edges:
        (x1, y1), (x2, y2) = positions[a], positions[b]
        ax.plot([x1, x2], [y1, y2], color="gray", zorder=1)
    for name, (x, y) in positions.items():
        ax.text(
            x,
            y,
            nodes[name],
            ha="center",
            va="center",
            fontsize=7,
            zorder=2,
            bbox=dict(boxstyle="round", facecolor="lavender", edgecolor="indigo"),
        )
    ax.set_axis_off()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
