"""CDF and heatmap rendering from simulator output files.

Input contract (produced by the simulator CLI):
  per_user.csv   user_id,total_packets,unsuccessful,ratio,cause_* columns
  summary.json   run metadata next to each per_user.csv (strategy, alpha, ...)
  forecast_t*.csv  vnf,bs,p rows, one probability per (VNF, cell)
"""

from __future__ import annotations

import glob
import json
import math
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

PER_USER_COLUMNS = [
    "user_id",
    "total_packets",
    "unsuccessful",
    "ratio",
    "cause_not_running",
    "cause_migrating",
    "cause_deadline",
]
GROUP_KEYS = ("strategy", "alpha", "d_max_ms")
SYMLOG_LINTHRESH = 1e-4


class SchemaError(Exception):
    """An input file does not match the simulator's published format."""


def read_per_user_ratios(path: str) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        for col in PER_USER_COLUMNS:
            if col not in header:
                raise SchemaError(f"{path}: missing column {col!r}")
        idx = header.index("ratio")
        ratios = []
        for ln, line in enumerate(fh, start=2):
            cols = line.strip().split(",")
            if len(cols) != len(header):
                raise SchemaError(f"{path}:{ln}: expected {len(header)} columns")
            try:
                ratios.append(float(cols[idx]))
            except ValueError:
                raise SchemaError(f"{path}:{ln}: column 'ratio' is not a number")
    if not ratios:
        raise SchemaError(f"{path}: no data rows")
    return np.array(ratios)


def read_summary(csv_path: str) -> dict:
    path = os.path.join(os.path.dirname(csv_path), "summary.json")
    if not os.path.exists(path):
        raise SchemaError(f"{csv_path}: no summary.json next to it")
    with open(path) as fh:
        return json.load(fh)


def _label(summary: dict, group_by: list[str], csv_path: str) -> str:
    parts = []
    for key in group_by:
        if key not in summary:
            raise SchemaError(f"{csv_path}: missing column {key!r} in summary.json")
        v = summary[key]
        parts.append(f"{v:g}" if isinstance(v, float) else str(v))
    return "/".join(parts)


def collect_groups(pattern: str, group_by: list[str]) -> dict:
    """Pool per-user ratios across every matching file, keyed by group label."""
    for key in group_by:
        if key not in GROUP_KEYS:
            raise SchemaError(
                f"cannot group by {key!r} (choose from {', '.join(GROUP_KEYS)})"
            )
    paths = sorted(glob.glob(pattern))
    if not paths:
        raise SchemaError(f"no files match {pattern!r}")
    groups: dict = {}
    for path in paths:
        label = _label(read_summary(path), group_by, path)
        groups.setdefault(label, []).append(read_per_user_ratios(path))
    return {label: np.concatenate(chunks) for label, chunks in groups.items()}


def ecdf(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.sort(np.asarray(values, dtype=float))
    y = np.arange(1, len(x) + 1) / len(x)
    return x, y


def _out_stem(out_path: str) -> str:
    stem, ext = os.path.splitext(out_path)
    return stem if ext.lower() in (".svg", ".png") else out_path


def _save(fig, out_path: str) -> list[str]:
    stem = _out_stem(out_path)
    written = []
    for ext in (".svg", ".png"):
        target = stem + ext
        fig.savefig(target, bbox_inches="tight")
        written.append(target)
    return written


def plot_cdf(pattern: str, group_by: list[str], out_path: str):
    """One empirical CDF line of the per-user unsuccessful ratio per group.

    The x-axis is symmetric-log so users with a ratio of exactly zero stay
    on the figure instead of falling off a pure log scale.
    """
    groups = collect_groups(pattern, group_by)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label in sorted(groups):
        x, y = ecdf(groups[label])
        ax.plot(x, y, drawstyle="steps-post", label=label)
    ax.set_xscale("symlog", linthresh=SYMLOG_LINTHRESH)
    ax.set_xlim(left=0.0, right=1.0)
    ax.set_ylim(0.0, 1.02)
    ax.set_xlabel("unsuccessful packet ratio per user")
    ax.set_ylabel("CDF")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(title="/".join(group_by))
    written = _save(fig, out_path)
    return fig, groups, written


def read_forecast(path: str) -> np.ndarray:
    """(n_vnfs, n_bs) probability matrix from a vnf,bs,p dump."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "vnf,bs,p":
            raise SchemaError(f"{path}: expected header 'vnf,bs,p', got {header!r}")
        rows = []
        for ln, line in enumerate(fh, start=2):
            cols = line.strip().split(",")
            if len(cols) != 3:
                raise SchemaError(f"{path}:{ln}: expected 3 columns")
            try:
                v, b, p = int(cols[0]), int(cols[1]), float(cols[2])
            except ValueError:
                raise SchemaError(f"{path}:{ln}: malformed row")
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{path}:{ln}: p={p!r} outside [0, 1]")
            rows.append((v, b, p))
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    n_vnfs = max(v for v, _, _ in rows) + 1
    n_bs = max(b for _, b, _ in rows) + 1
    mat = np.full((n_vnfs, n_bs), np.nan)
    for v, b, p in rows:
        mat[v, b] = p
    if np.isnan(mat).any():
        raise SchemaError(f"{path}: incomplete (vnf, bs) matrix")
    return mat


def _cell_grid(row: np.ndarray) -> np.ndarray:
    side = math.isqrt(len(row))
    if side * side == len(row):
        return row.reshape(side, side)
    return row.reshape(1, -1)


def plot_heatmap(in_path: str, out_path: str):
    """Per-VNF cell grid colored by demand probability."""
    mat = read_forecast(in_path)
    n_vnfs = mat.shape[0]
    fig, axes = plt.subplots(
        1, n_vnfs, figsize=(2.2 * n_vnfs + 1.2, 2.6), squeeze=False
    )
    for v in range(n_vnfs):
        ax = axes[0][v]
        im = ax.imshow(
            _cell_grid(mat[v]), vmin=0.0, vmax=1.0, origin="lower", cmap="viridis"
        )
        ax.set_title(f"VNF {v}", fontsize=9)
        ax.set_xticks([])
        ax.set_yticks([])
    fig.colorbar(im, ax=[axes[0][v] for v in range(n_vnfs)], shrink=0.85,
                 label="demand probability")
    written = _save(fig, out_path)
    return fig, mat, written
