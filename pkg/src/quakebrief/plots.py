"""Matplotlib rendering of recovery outputs (SVG, headless backend)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .recovery import FrequencySeries, RecoveryCurve, RecoveryFactorResult


def plot_recovery_curve(curve: RecoveryCurve, path: str | Path) -> Path:
    """Step plot of the community functionality fraction Q(t)."""
    path = Path(path)
    horizon = max(curve.max_t_r(), 1.0)
    days = [0.0]
    for r in sorted(curve.results, key=lambda r: r.t_r_days):
        if r.t_r_days > 0:
            days.append(r.t_r_days)
    days.append(horizon)

    fig, ax = plt.subplots(figsize=(6, 4))
    xs = [d for d in days]
    ys = [curve.q_at(d) for d in days]
    ax.step(xs, ys, where="post", color="tab:blue")
    ax.scatter(xs[1:-1], ys[1:-1], color="tab:blue", s=18, zorder=3)
    ax.axhline(1.0, color="gray", linewidth=0.6, linestyle=":")
    ax.set_xlabel("days after event")
    ax.set_ylabel("functionality Q(t)")
    ax.set_ylim(0, 1.05)
    ax.set_title(f"Recovery curve (aggregate {curve.aggregate_days:.1f} days)")
    fig.tight_layout()
    fig.savefig(path, format=path.suffix.lstrip(".") or "svg")
    plt.close(fig)
    return path


def plot_frequency_series(
    series: FrequencySeries,
    result: RecoveryFactorResult | None,
    path: str | Path,
) -> Path:
    """Bar plot of daily keyword counts with the threshold and t1 markers."""
    path = Path(path)
    days = list(range(series.start_day, series.start_day + len(series.counts)))
    fig, ax = plt.subplots(figsize=(6, 3))
    ax.bar(days, series.counts, color="tab:orange", width=0.8)
    if result is not None and result.threshold_used > 0:
        ax.axhline(result.threshold_used, color="tab:red", linewidth=0.8, linestyle="--",
                   label=f"threshold {result.threshold_used:.1f}")
        ax.axvline(result.t_r_days, color="tab:green", linewidth=0.8, linestyle="-.",
                   label=f"t1 (day {result.t_r_days:.0f})")
        ax.legend(fontsize=8)
    ax.set_xlabel("days after event")
    ax.set_ylabel("posts/day")
    ax.set_title(f"Keyword frequency: {series.factor}")
    fig.tight_layout()
    fig.savefig(path, format=path.suffix.lstrip(".") or "svg")
    plt.close(fig)
    return path
