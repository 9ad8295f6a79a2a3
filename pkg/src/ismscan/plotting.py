"""Render spectrum snapshots to image files next to the CSV exports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .analysis import Spectrum  # noqa: E402

_THEMES = {
    "white": {"bg": "#ffffff", "fg": "#202020", "grid": "#c8c8c8"},
    "black": {"bg": "#101010", "fg": "#e0e0e0", "grid": "#404040"},
}


def render_spectrum(
    spectrum: Spectrum,
    out_path: str | Path,
    *,
    title: str | None = None,
    theme: str = "white",
) -> Path:
    """Write a two-panel spectrum figure (traces + occupancy) to ``out_path``."""
    colors = _THEMES.get(theme, _THEMES["white"])
    out_path = Path(out_path)
    fig, (ax_dbm, ax_occ) = plt.subplots(
        2, 1, sharex=True, figsize=(10, 6),
        gridspec_kw={"height_ratios": [3, 1]},
    )
    fig.patch.set_facecolor(colors["bg"])
    freqs = spectrum.freqs_mhz

    ax_dbm.plot(freqs, spectrum.peak_dbm, color="#d08030", lw=1.0, label="peak hold")
    ax_dbm.plot(freqs, spectrum.avg_dbm, color="#3a80c0", lw=1.0, label="average")
    ax_dbm.plot(freqs, spectrum.latest_dbm, color="#30a050", lw=1.2, label="latest")
    ax_dbm.set_ylabel("level (dBm, relative)")
    ax_dbm.legend(loc="upper right", fontsize=8)

    ax_occ.fill_between(freqs, spectrum.occupancy, step="mid", color="#8060c0", alpha=0.7)
    ax_occ.set_ylim(0.0, 1.05)
    ax_occ.set_ylabel("occupancy")
    ax_occ.set_xlabel("frequency (MHz)")

    for ax in (ax_dbm, ax_occ):
        ax.set_facecolor(colors["bg"])
        ax.tick_params(colors=colors["fg"], labelcolor=colors["fg"])
        for spine in ax.spines.values():
            spine.set_color(colors["fg"])
        ax.xaxis.label.set_color(colors["fg"])
        ax.yaxis.label.set_color(colors["fg"])
        ax.grid(True, color=colors["grid"], lw=0.4)
    if title:
        fig.suptitle(title, color=colors["fg"])
    fig.tight_layout()
    fig.savefig(out_path, dpi=120, facecolor=colors["bg"])
    plt.close(fig)
    return out_path
