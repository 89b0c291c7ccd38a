"""Render the report tables to PNG figures.

Figures are drawn headless and written with the Software metadata field
stripped, so a rerun with identical inputs produces identical bytes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_CHANNELS = ("infected", "recovered", "deaths")
_RATES = ("alpha", "beta", "gamma", "eta")
_RATE_LABELS = {
    "alpha": r"$\alpha$ (transmission)",
    "beta": r"$\beta$ (onset)",
    "gamma": r"$\gamma$ (recovery)",
    "eta": r"$\eta$ (death)",
}

_SAVE_KW = dict(dpi=120, metadata={"Software": None})


def render_fit(cols: dict, path) -> None:
    """Observed counts over their 95% predictive bands, one panel per channel."""
    days = cols["day"]
    fig, axes = plt.subplots(3, 1, figsize=(8, 9), sharex=True)
    for ax, ch in zip(axes, _CHANNELS):
        ax.fill_between(
            days, cols[f"{ch}_lower"], cols[f"{ch}_upper"],
            alpha=0.3, color="tab:blue", label="95% predictive band", linewidth=0,
        )
        ax.plot(days, cols[f"{ch}_median"], color="tab:blue", lw=1.2, label="predictive median")
        ax.plot(days, cols[f"{ch}_obs"], "k.", ms=3, label="observed")
        ax.set_ylabel(ch)
    axes[0].legend(loc="upper left", fontsize=8)
    axes[-1].set_xlabel("day")
    fig.suptitle("Observed counts vs posterior predictive bands")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def render_params(cols: dict, path) -> None:
    """Daily posterior median and central 95% interval for each rate."""
    days = cols["day"]
    fig, axes = plt.subplots(2, 2, figsize=(10, 7), sharex=True)
    for ax, name in zip(axes.ravel(), _RATES):
        ax.fill_between(
            days, cols[f"{name}_lower"], cols[f"{name}_upper"],
            alpha=0.3, color="tab:orange", linewidth=0,
        )
        ax.plot(days, cols[f"{name}_median"], color="tab:orange", lw=1.2)
        ax.set_title(_RATE_LABELS[name], fontsize=10)
    for ax in axes[1]:
        ax.set_xlabel("day")
    fig.suptitle("Posterior rate estimates (median, 95% interval)")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def render_monitor(cols: dict, limit: float, path) -> None:
    """Chart statistic per day with the control limit and signal days."""
    days = cols["day"]
    t2 = cols["t2"]
    fig, ax = plt.subplots(figsize=(9, 4))
    ax.plot(days, t2, color="tab:green", lw=1.2, label=r"$T^2$")
    ax.axhline(limit, color="tab:red", ls="--", lw=1, label=f"limit {limit:g}")
    hits = [(d, v) for d, v, s in zip(days, t2, cols["signaled"]) if s]
    if hits:
        ax.plot([d for d, _ in hits], [v for _, v in hits], "rv", ms=5, label="signal")
    ax.set_xlabel("day")
    ax.set_ylabel(r"$T^2$")
    ax.set_yscale("log")
    ax.legend(loc="upper right", fontsize=8)
    fig.suptitle("Parameter-change monitor")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
