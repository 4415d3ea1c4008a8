"""Render rejection-rate curves from a simulation results table."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

METHOD_LABELS = {
    "placebo": "Placebo",
    "andrews": "Andrews",
    "andrews_loo": "Andrews (leave-one-out)",
}

METHOD_STYLES = {
    "placebo": dict(color="tab:blue", marker="o"),
    "andrews": dict(color="tab:red", marker="s"),
    "andrews_loo": dict(color="tab:green", marker="^"),
}


def plot_rejection_rates(table, out_path, level=None, title=None):
    """Plot rejection rate vs. treatment effect, one curve per method.

    ``table`` is a DataFrame with columns alpha, method, rejection_rate,
    mc_se (the CSV the simulate command writes). Error bars show +/- 2
    Monte Carlo standard errors. Writes the figure to out_path.
    """
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for method, group in table.groupby("method", sort=False):
        group = group.sort_values("alpha")
        style = METHOD_STYLES.get(method, {})
        ax.errorbar(
            group["alpha"],
            group["rejection_rate"],
            yerr=2 * group["mc_se"],
            label=METHOD_LABELS.get(method, method),
            capsize=3,
            **style,
        )
    if level is not None:
        ax.axhline(level, color="gray", linestyle="--", linewidth=1, label=f"level {level}")
    ax.set_xlabel("treatment effect")
    ax.set_ylabel("rejection rate")
    ax.set_ylim(-0.02, 1.02)
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path
