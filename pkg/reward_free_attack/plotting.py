"""
SVG plots of evaluation summaries and training curves.

:copyright: (c) 2026 by the reward-free-attack authors.
:license: MPL-2.0, see LICENSE for more details.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from reward_free_attack.evaluation import MetricsSummary  # noqa: E402

_LOG = logging.getLogger(__name__)

# fixed ids and no timestamp so identical inputs give identical files
matplotlib.rcParams["svg.hashsalt"] = "reward-free-attack"
_SVG_METADATA = {"Date": None}


def _save(fig: Figure, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata=_SVG_METADATA)
    plt.close(fig)
    _LOG.debug("Wrote plot %s", path)
    return path


def plot_summaries(path: str | Path, summaries: dict[str, MetricsSummary], title: str = "") -> Path:
    """Win rate bars and mean moves (with std error bars), one group per label."""
    labels = list(summaries)
    fig, (ax_win, ax_moves) = plt.subplots(1, 2, figsize=(8, 3.5))
    ax_win.bar(labels, [summaries[k].win_rate for k in labels], color="tab:red")
    ax_win.set_ylim(0.0, 1.0)
    ax_win.set_ylabel("attacker win rate")
    ax_moves.bar(
        labels,
        [summaries[k].mean_moves for k in labels],
        yerr=[summaries[k].std_moves for k in labels],
        color="tab:blue",
        capsize=4,
    )
    ax_moves.set_ylabel("mean moves")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    return _save(fig, path)


def plot_curve(path: str | Path, rows: Sequence[tuple[int, float, float, float]], title: str = "") -> Path:
    """Win rate and mean moves against training episodes."""
    episodes = [r[0] for r in rows]
    fig, ax_win = plt.subplots(figsize=(6, 3.5))
    ax_win.plot(episodes, [r[1] for r in rows], color="tab:red", label="win rate")
    ax_win.plot(episodes, [r[2] for r in rows], color="tab:gray", label="draw rate")
    ax_win.set_ylim(0.0, 1.0)
    ax_win.set_xlabel("episode")
    ax_win.set_ylabel("rate")
    ax_moves = ax_win.twinx()
    ax_moves.plot(episodes, [r[3] for r in rows], color="tab:blue", linestyle="--", label="mean moves")
    ax_moves.set_ylabel("mean moves")
    ax_win.legend(loc="upper left")
    if title:
        ax_win.set_title(title)
    fig.tight_layout()
    return _save(fig, path)
