"""Figure rendering for the command line reports.

Every function takes data already computed elsewhere and writes one PNG
next to the delimited output. Rendering is headless and deterministic:
the Agg backend, a fixed dpi, and no timestamp metadata.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 150

_POLARIZATION_COLOR = {"L": "tab:blue", "R": "tab:red", "none": "0.6"}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI, metadata={"Software": None})
    plt.close(fig)


def render_levels(field_mt, energies_by_m, path):
    """Zeeman fan of the six ladder levels versus field."""
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for m, energies in energies_by_m.items():
        ax.plot(field_mt, energies, label=f"m = {m:+.1f}")
    ax.set_xlabel("B (mT)")
    ax.set_ylabel("E/h (GHz)")
    ax.legend(fontsize=8, ncol=2)
    _save(fig, path)


def render_transitions(curves, path):
    """Transition frequencies versus field, colored by polarization."""
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    seen = set()
    for curve in curves:
        color = _POLARIZATION_COLOR[curve.polarization]
        label = None
        if curve.polarization not in seen:
            seen.add(curve.polarization)
            label = {"L": "drives L", "R": "drives R", "none": "forbidden"}[
                curve.polarization
            ]
        ax.plot(curve.field_mt, curve.frequency_ghz, color=color, lw=1, label=label)
    ax.set_xlabel("B (mT)")
    ax.set_ylabel("f (GHz)")
    ax.legend(fontsize=8)
    _save(fig, path)


def render_sweep(sweep, doublet, path):
    """Avoided-crossing map: branches colored by spin weight."""
    fields = sweep.fields()
    freqs = sweep.frequencies()
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    if "S" in sweep.labels:
        spin_weight = sweep.fraction("S")
    else:
        spin_weight = np.zeros_like(freqs)
    scatter = None
    for j in range(freqs.shape[1]):
        scatter = ax.scatter(
            fields, freqs[:, j], c=spin_weight[:, j], s=6, cmap="viridis",
            vmin=0.0, vmax=1.0,
        )
    ax.axhline(doublet.f_r_ghz, color="0.7", lw=0.8, ls="--")
    ax.axhline(doublet.f_l_ghz, color="0.7", lw=0.8, ls=":")
    if scatter is not None:
        fig.colorbar(scatter, ax=ax, label="spin weight")
    ax.set_xlabel("B (mT)")
    ax.set_ylabel("f (GHz)")
    _save(fig, path)


def render_s21(spectrum, path):
    """Transmission magnitude over the probe window."""
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    ax.plot(spectrum.frequency_ghz, spectrum.magnitude, lw=1)
    ax.set_xlabel("f (GHz)")
    ax.set_ylabel("|S21|")
    _save(fig, path)


def render_thermo(temperature_k, chi_plus, chi_minus, path):
    """Susceptibilities of both sub-ensembles versus temperature."""
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    ax.loglog(temperature_k, chi_plus, label="chi_plus (L photons)")
    ax.loglog(temperature_k, chi_minus, label="chi_minus (R photons)")
    ax.set_xlabel("T (K)")
    ax.set_ylabel("chi (relative)")
    ax.legend(fontsize=8)
    _save(fig, path)


def render_fit(observations, sweep, path):
    """Observed peaks over the fitted model branches."""
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    fields = sweep.fields()
    freqs = sweep.frequencies()
    for j in range(freqs.shape[1]):
        ax.plot(fields, freqs[:, j], color="0.4", lw=1)
    obs_b = []
    obs_f = []
    for obs in observations:
        for peak in obs.peaks_ghz:
            obs_b.append(obs.field_mt)
            obs_f.append(peak)
    ax.scatter(obs_b, obs_f, s=12, color="tab:red", zorder=3, label="data")
    ax.set_xlabel("B (mT)")
    ax.set_ylabel("f (GHz)")
    ax.legend(fontsize=8)
    _save(fig, path)
