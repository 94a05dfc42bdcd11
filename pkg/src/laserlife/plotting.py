"""Figure rendering for the report paths (lognormal plot, scoring, comparison, training)."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .lifetest import LognormalFit, inv_norm_cdf  # noqa: E402
from .metrics import OVER_SCALE, UNDER_SCALE, EvalReport  # noqa: E402

METHOD_STYLE = {
    "ANN": dict(color="tab:blue", marker="o"),
    "RF": dict(color="tab:green", marker="s"),
    "GBM": dict(color="tab:orange", marker="^"),
    "Conventional": dict(color="tab:red", marker="D"),
}


def get_figure(width: float = 6.0, height: float | None = None, **kwargs):
    golden_ratio = (math.sqrt(5) - 1.0) / 2.0
    if height is None:
        height = width * golden_ratio
    fig, ax = plt.subplots(figsize=(width, height), **kwargs)
    return fig, ax


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.tight_layout()
    # fixed metadata keeps the PNG bytes reproducible
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_probability(fit: LognormalFit, path: str | Path) -> Path:
    """Failure times on a lognormal probability scale with the fitted line."""
    fig, ax = get_figure()
    ax.semilogx(fit.failure_times, fit.z, "o", color="k", ms=4, label="devices")
    zz = np.linspace(min(fit.z.min(), -2.5), max(fit.z.max(), 2.5), 50)
    ax.semilogx(np.exp(fit.mu + fit.sigma * zz), zz, "-", color="tab:red",
                label=f"fit: $t_m$={fit.tm_hours:.3g} h, $\\sigma$={fit.sigma:.3f}")
    ticks = [1, 5, 16, 50, 84, 95, 99]
    ax.set_yticks([inv_norm_cdf(p / 100) for p in ticks])
    ax.set_yticklabels([f"{p}" for p in ticks])
    ax.axhline(0.0, color="0.7", lw=0.8, ls="--")
    ax.set_xlabel("failure time (h)")
    ax.set_ylabel("cumulative failure (%)")
    ax.legend(loc="upper left", fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, path)


def plot_scoring(report: EvalReport, path: str | Path, title: str = "") -> Path:
    """Per-point score against prediction error, over the analytic penalty curve."""
    fig, ax = get_figure()
    h = np.asarray(report.h)
    span = max(1.0, float(np.abs(h).max()) * 1.2)
    hh = np.linspace(-span, span, 400)
    curve = np.where(hh < 0, np.expm1(-hh / UNDER_SCALE), np.expm1(hh / OVER_SCALE))
    ax.plot(hh, curve, color="0.6", lw=1)
    ax.plot(h, report.s, "o", ms=3, color="tab:blue")
    ax.set_xlabel("prediction error $h$ (years)")
    ax.set_ylabel("score $s(h)$")
    ax.set_title(title or f"MSE {report.mse:.3g} y$^2$, score {report.score:.3g}")
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def plot_comparison(tc_c, truth, predictions: dict, path: str | Path) -> Path:
    """Predicted MTTF per method over the temperature sweep, plus absolute errors."""
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.0, 6.5), sharex=True)
    ax1.semilogy(tc_c, truth, "-", color="k", lw=2, label="ground truth")
    for name, pred in predictions.items():
        style = METHOD_STYLE.get(name, {})
        ax1.semilogy(tc_c, pred, ls="--", ms=4, label=name, **style)
        ax2.semilogy(tc_c, np.maximum(np.abs(np.asarray(pred) - truth), 1e-6), ls="-", ms=4, **style)
    ax1.set_ylabel("MTTF (years)")
    ax1.legend(fontsize=8)
    ax2.set_ylabel("|error| (years)")
    ax2.set_xlabel("case temperature (°C)")
    for ax in (ax1, ax2):
        ax.grid(True, which="both", alpha=0.3)
    return _save(fig, path)


def plot_history(train_loss, val_loss, path: str | Path) -> Path:
    fig, ax = get_figure()
    epochs = np.arange(1, len(train_loss) + 1)
    ax.semilogy(epochs, train_loss, label="train")
    ax.semilogy(epochs, val_loss, label="validation")
    ax.set_xlabel("epoch")
    ax.set_ylabel("MSE (normalized)")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, path)
