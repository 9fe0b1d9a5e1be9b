"""PNG figures written next to the CSV reports.

Figures are built on bare Figure objects with the Agg canvas, so nothing
touches pyplot's global state and rendering is safe from worker threads.
Metadata is stripped so repeated runs produce identical files.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

STYLE = {"font.size": 8, "axes.labelsize": 9, "legend.fontsize": 7, "lines.linewidth": 1.0}
FIG_SIZE = (6.0, 3.4)
DPI = 120


def _new(nrows=1, ncols=1, size=FIG_SIZE):
    fig = Figure(figsize=size, dpi=DPI)
    FigureCanvasAgg(fig)
    axes = fig.subplots(nrows, ncols, squeeze=False)
    for ax in axes.flat:
        ax.grid(True, lw=0.3, alpha=0.5)
        ax.tick_params(labelsize=STYLE["font.size"])
    return fig, axes


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, format="png", metadata={"Software": None})
    return path


def plot_char_modulus(path, lam, moduli: dict, spectra=()) -> Path:
    """log10 |Delta_j| along the real axis, with eigenvalue real parts marked."""
    fig, axes = _new()
    ax = axes[0, 0]
    for label, mod in moduli.items():
        ax.plot(lam, np.log10(np.maximum(mod, 1e-16)), label=label)
    for s, c in zip(spectra, ("C0", "C1")):
        sel = (s.values.real >= lam[0]) & (s.values.real <= lam[-1])
        ax.plot(s.values.real[sel], np.full(sel.sum(), -16.5), "|", color=c, ms=6)
    ax.set_xlabel("Re lambda")
    ax.set_ylabel("log10 |Delta|")
    ax.legend(loc="lower right")
    return _save(fig, path)


def plot_spectra(path, spectra) -> Path:
    """Remainders lambda_n - lattice_n in the complex plane and by index."""
    fig, axes = _new(1, 2)
    for s, marker in zip(spectra, ("o", "s")):
        kappa = s.remainders
        axes[0, 0].plot(kappa.real, kappa.imag, marker, ms=2.5, mfc="none", label=f"j={s.problem_j}")
        axes[0, 1].semilogy(s.indices, np.maximum(np.abs(kappa), 1e-17), marker, ms=1.5,
                            label=f"j={s.problem_j}")
    axes[0, 0].set_xlabel("Re kappa_n")
    axes[0, 0].set_ylabel("Im kappa_n")
    axes[0, 1].set_xlabel("n")
    axes[0, 1].set_ylabel("|kappa_n|")
    axes[0, 0].legend()
    return _save(fig, path)


def plot_potentials(path, pp, reference=None) -> Path:
    """Real and imaginary parts of q and p, optionally against a reference pair."""
    fig, axes = _new(1, 2)
    x = pp.grid
    for ax, name in zip(axes[0], ("q", "p")):
        v = getattr(pp, name)
        ax.plot(x, v.real, label=f"Re {name}")
        ax.plot(x, v.imag, label=f"Im {name}")
        if reference is not None:
            r = getattr(reference, name)
            ax.plot(x, r.real, "k:", lw=0.8, label="reference")
            ax.plot(x, r.imag, "k:", lw=0.8)
        ax.set_xlabel("x")
        ax.legend()
    return _save(fig, path)


def plot_stability(path, report) -> Path:
    """lhs against rhs on log axes, and the ratio distribution."""
    fig, axes = _new(1, 2)
    ok = [t for t in report.per_trial if not t.excluded]
    for kind, marker in (("generic", "o"), ("common", "^"), ("double", "s")):
        sel = [t for t in ok if t.kind == kind]
        if sel:
            axes[0, 0].loglog([t.rhs_distance for t in sel], [t.lhs for t in sel], marker,
                              ms=2.5, mfc="none", label=kind)
    if ok:
        rhs = np.array([t.rhs_distance for t in ok])
        xs = np.array([rhs.min(), rhs.max()])
        axes[0, 0].loglog(xs, report.p50 * xs, "k--", lw=0.7, label="median ratio")
        axes[0, 1].hist([t.ratio for t in ok], bins=30, color="C0")
        axes[0, 1].axvline(report.p99, color="C3", lw=0.8, label="p99")
        axes[0, 1].legend()
    axes[0, 0].set_xlabel("spectra distance")
    axes[0, 0].set_ylabel("potential distance")
    axes[0, 0].legend()
    axes[0, 1].set_xlabel("ratio")
    return _save(fig, path)
