"""Render figures from a diagnostics CSV, next to the delimited output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .observables import read_diagnostics_csv


def _drift(series: np.ndarray, scale: float) -> np.ndarray:
    return np.abs(series - series[0]) / scale


def render_report(csv_path, out_dir=None) -> list[Path]:
    """Write the standard run figures; returns the created file paths.

    Produces ``conserved.png`` (particle-number split and relative drifts),
    ``positivity.png`` (positivity floor and pairing-bound slack) and
    ``structure.png`` (symmetry defects, Sobolev norm, pairing ratio).
    """
    csv_path = Path(csv_path)
    out_dir = csv_path.parent if out_dir is None else Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    data = read_diagnostics_csv(csv_path)
    t = data["t"]
    created: list[Path] = []

    fig, (ax_n, ax_d) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax_n.plot(t, data["n_total"], label="total", lw=2)
    ax_n.plot(t, data["n_phi"], label="condensate", ls="--")
    ax_n.plot(t, data["n_gamma"], label="fluctuations", ls=":")
    ax_n.set_ylabel("particle number")
    ax_n.legend(loc="best", fontsize=8)
    n_scale = data["n_total"][0] if data["n_total"][0] != 0 else 1.0
    e_scale = abs(data["energy"][0]) + 1.0
    floor = 1e-18
    ax_d.semilogy(t, np.maximum(_drift(data["n_total"], n_scale), floor), label="number drift")
    ax_d.semilogy(t, np.maximum(_drift(data["energy"], e_scale), floor), label="energy drift")
    ax_d.set_xlabel("t")
    ax_d.set_ylabel("relative drift")
    ax_d.legend(loc="best", fontsize=8)
    fig.tight_layout()
    path = out_dir / "conserved.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    created.append(path)

    fig, (ax_f, ax_s) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax_f.plot(t, data["gamma_floor"], color="tab:blue")
    ax_f.axhline(0.0, color="k", lw=0.8)
    ax_f.plot(t, -1e-8 * (1.0 + data["n_gamma"]), color="tab:red", ls="--", lw=0.8,
              label="tolerance")
    ax_f.set_ylabel("positivity floor")
    ax_f.legend(loc="best", fontsize=8)
    ax_s.plot(t, data["sigma_slack"], color="tab:green")
    ax_s.axhline(0.0, color="k", lw=0.8)
    ax_s.set_xlabel("t")
    ax_s.set_ylabel("pairing-bound slack")
    fig.tight_layout()
    path = out_dir / "positivity.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    created.append(path)

    fig, (ax_def, ax_x) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax_def.semilogy(t, np.maximum(data["gamma_herm_defect"], floor), label="gamma hermiticity")
    ax_def.semilogy(t, np.maximum(data["sigma_sym_defect"], floor), label="sigma symmetry")
    ax_def.set_ylabel("defect")
    ax_def.legend(loc="best", fontsize=8)
    ax_x.plot(t, data["x1_norm"], label="X1 norm")
    ax_x.plot(t, data["k_ratio"], label="pairing ratio", ls="--")
    ax_x.set_xlabel("t")
    ax_x.legend(loc="best", fontsize=8)
    fig.tight_layout()
    path = out_dir / "structure.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    created.append(path)

    return created
