"""Figure rendering for report output.

Figures are rendered from the delimited artifacts (CSV/JSON) and never
recompute physics.  PNG output carries fixed metadata so repeated renders of
identical data are byte-identical.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_PNG_META = {"Software": "vortexlab"}

plt.rcParams["figure.figsize"] = (5.0, 3.4)
plt.rcParams["font.size"] = 9
plt.rcParams["axes.grid"] = True
plt.rcParams["grid.alpha"] = 0.3


def _save(fig, path: str):
    fig.tight_layout()
    fig.savefig(path, dpi=130, metadata=_PNG_META)
    plt.close(fig)


def render_sweep(rows: list[dict], path: str):
    """Energy and convergence flags across a tau sweep."""
    taus = np.array([r["tau"] for r in rows])
    conv = np.array([bool(r["converged"]) for r in rows])
    fig, ax = plt.subplots()
    if any(conv):
        energy = np.array([r.get("energy") or np.nan for r in rows], dtype=float)
        minimum = np.array([r.get("topological_minimum") or np.nan for r in rows], dtype=float)
        ax.plot(taus[conv] / (4 * np.pi), energy[conv], "o-", label="YMH energy")
        ax.plot(taus[conv] / (4 * np.pi), minimum[conv], "k--", lw=1, label="topological minimum")
    if any(~conv):
        lo, hi = ax.get_ylim()
        ax.plot(taus[~conv] / (4 * np.pi), np.full((~conv).sum(), lo), "rx", label="diverged")
    ax.set_xlabel(r"$\tau / 4\pi$")
    ax.set_ylabel("energy")
    ax.legend(fontsize=8)
    _save(fig, path)


def render_profile(radii, values, slack, path: str):
    radii = np.asarray(radii)
    values = np.asarray(values)
    slack = np.asarray(slack)
    fig, ax = plt.subplots()
    ax.plot(radii, values, "o-", label="scaled local energy")
    ax.fill_between(radii, values - slack, values + slack, alpha=0.25, label="O(h) slack")
    ax.set_xlabel("radius")
    ax.set_ylabel(r"$r^{4-n}\,\int_{B_r} e\,dv$")
    ax.legend(fontsize=8)
    _save(fig, path)


def render_trace(trace, path: str, ylabel: str = "residual"):
    fig, ax = plt.subplots()
    ax.semilogy(np.arange(len(trace)), np.maximum(np.asarray(trace, dtype=float), 1e-18), "o-")
    ax.set_xlabel("iteration")
    ax.set_ylabel(ylabel)
    _save(fig, path)


def render_concentration(points, thetas, path: str):
    fig, ax = plt.subplots()
    idx = np.arange(len(thetas))
    ax.bar(idx, thetas, width=0.6)
    ax.set_xticks(idx)
    labels = [",".join(f"{c:.2f}" for c in p) for p in points]
    ax.set_xticklabels(labels, rotation=30, fontsize=7)
    ax.set_ylabel(r"$\Theta$ estimate")
    _save(fig, path)


def render_density_slice(density: np.ndarray, path: str):
    """Midplane slice of a density grid (first two axes for m = 2)."""
    q = np.asarray(density)
    while q.ndim > 2:
        q = q[..., q.shape[-1] // 2]
    fig, ax = plt.subplots()
    im = ax.imshow(np.real(q).T, origin="lower", cmap="viridis")
    fig.colorbar(im, ax=ax, shrink=0.85)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    _save(fig, path)
