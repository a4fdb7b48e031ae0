"""Figure rendering for the report paths (PNG next to each CSV).

matplotlib is imported lazily and forced onto the Agg backend so headless
runs and tests never touch a display.
"""

from __future__ import annotations

from pathlib import Path


def _plt():
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    return plt


_MARKERS = ("o", "s", "^", "v", "D", "x", "*")


def longitudinal_variance_figure(rows: list[dict], path) -> Path:
    """Variance vs eps_inf, one panel per ratio, log-scaled y."""
    plt = _plt()
    ratios = sorted({r["ratio"] for r in rows}, reverse=True)
    series = [c for c in rows[0] if c not in ("eps_inf", "eps_1", "ratio")]
    fig, axes = plt.subplots(
        1, len(ratios), figsize=(3.2 * len(ratios), 3.2), sharey=True, squeeze=False
    )
    for ax, ratio in zip(axes[0], ratios):
        chunk = [r for r in rows if r["ratio"] == ratio]
        xs = [r["eps_inf"] for r in chunk]
        for mark, name in zip(_MARKERS, series):
            ys = [r[name] for r in chunk]
            pts = [(x, y) for x, y in zip(xs, ys) if not isinstance(y, str)]
            if pts:
                ax.plot(*zip(*pts), marker=mark, ms=4, lw=1, label=name)
        ax.set_yscale("log")
        ax.set_xlabel(r"$\epsilon_\infty$")
        ax.set_title(f"single-report ratio {ratio}")
        ax.grid(alpha=0.3)
    axes[0][0].set_ylabel("approximate variance")
    axes[0][-1].legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, path)


def single_round_variance_figure(rows: list[dict], path) -> Path:
    """Single-round approximate variance vs eps, log-scaled y."""
    plt = _plt()
    series = [c for c in rows[0] if c != "eps"]
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    xs = [r["eps"] for r in rows]
    for mark, name in zip(_MARKERS, series):
        ax.plot(xs, [r[name] for r in rows], marker=mark, ms=4, lw=1, label=name)
    ax.set_yscale("log")
    ax.set_xlabel(r"$\epsilon$")
    ax.set_ylabel("approximate variance")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, path)


def mse_figure(result_rows: list[dict], path) -> Path:
    """Mean MSE_avg vs eps_inf per protocol, with run-to-run std bars."""
    plt = _plt()
    protocols = sorted({r["protocol"] for r in result_rows})
    fig, ax = plt.subplots(figsize=(4.8, 3.4))
    for mark, protocol in zip(_MARKERS, protocols):
        chunk = [
            r for r in result_rows if r["protocol"] == protocol and r["status"] == "ok"
        ]
        if not chunk:
            continue
        chunk.sort(key=lambda r: r["eps_inf"])
        xs = [r["eps_inf"] for r in chunk]
        ys = [r["mse_avg_mean"] for r in chunk]
        errs = [r["mse_avg_std"] for r in chunk]
        ax.errorbar(xs, ys, yerr=errs, marker=mark, ms=4, lw=1, capsize=2, label=protocol)
    ax.set_yscale("log")
    ax.set_xlabel(r"$\epsilon_\infty$")
    ax.set_ylabel(r"$MSE_{avg}$")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, path)


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150)
    _plt().close(fig)
    return path
