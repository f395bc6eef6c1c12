"""Matplotlib rendering of campaign ledgers for the report command."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

FLOOR = 1e-18


def render_ledger_figures(docs, out_dir: str) -> list:
    """Write summary figures for the ledger rows; returns the file paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    if not docs:
        return paths

    names = [d["identity"] for d in docs]
    diffs = np.maximum([abs(float(d["difference"])) for d in docs], FLOOR)
    allow = np.maximum(
        [
            max(3.0 * float(d["stderr"]), float(d.get("bias_allowance", 0.0)))
            for d in docs
        ],
        FLOOR,
    )
    colors = ["tab:green" if d["verdict"] == "pass" else "tab:red" for d in docs]

    height = max(3.0, 0.28 * len(names))
    fig, ax = plt.subplots(figsize=(10, height))
    y = np.arange(len(names))
    ax.barh(y, diffs, color=colors, alpha=0.8, label="|difference|")
    ax.plot(allow, y, "k|", markersize=10, label="acceptance bound")
    ax.set_yticks(y)
    ax.set_yticklabels(names, fontsize=7)
    ax.set_xscale("log")
    ax.set_xlabel("absolute difference vs acceptance bound")
    ax.invert_yaxis()
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    p = os.path.join(out_dir, "differences.png")
    fig.savefig(p, dpi=150)
    plt.close(fig)
    paths.append(p)

    counts = {}
    for d in docs:
        counts[d["verdict"]] = counts.get(d["verdict"], 0) + 1
    fig, ax = plt.subplots(figsize=(4, 3))
    keys = sorted(counts)
    ax.bar(keys, [counts[k] for k in keys],
           color=["tab:green" if k == "pass" else "tab:red" for k in keys])
    ax.set_ylabel("identities")
    ax.set_title("campaign verdicts")
    fig.tight_layout()
    p = os.path.join(out_dir, "verdicts.png")
    fig.savefig(p, dpi=150)
    plt.close(fig)
    paths.append(p)
    return paths
