"""Minimal SVG figures: log-frequency axis, magnitude and phase panels."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["bode_svg", "curves_svg"]

_SVG_RC = {"svg.hashsalt": "resetloop", "svg.fonttype": "none"}


def _save(fig, path):
    with matplotlib.rc_context(_SVG_RC):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def bode_svg(path, freq_hz, traces: dict, title: str = "") -> None:
    """Magnitude (dB) and phase (deg) panels, one line per labelled complex trace."""
    fig, (ax_m, ax_p) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
    for label, h in traces.items():
        h = np.asarray(h)
        with np.errstate(divide="ignore"):
            ax_m.semilogx(freq_hz, 20 * np.log10(np.abs(h)), label=label)
        ax_p.semilogx(freq_hz, np.degrees(np.unwrap(np.angle(h))), label=label)
    ax_m.set_ylabel("magnitude [dB]")
    ax_p.set_ylabel("phase [deg]")
    ax_p.set_xlabel("frequency [Hz]")
    ax_m.legend(fontsize="small")
    ax_m.grid(True, which="both", alpha=0.3)
    ax_p.grid(True, which="both", alpha=0.3)
    if title:
        ax_m.set_title(title)
    fig.tight_layout()
    _save(fig, path)


def curves_svg(path, freq_hz, traces: dict, ylabel: str, title: str = "") -> None:
    """Single panel of real-valued curves (already in display units)."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, v in traces.items():
        ax.semilogx(freq_hz, v, marker=".", label=label)
    ax.set_xlabel("frequency [Hz]")
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize="small")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)
