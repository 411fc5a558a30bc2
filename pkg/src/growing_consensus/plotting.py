"""Report figures: gnuplot-style .dat series plus PNG renderings of the same series."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import atomic_write_bytes, write_dat  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 3.8),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "lines.linewidth": 1.4,
    "savefig.dpi": 120,
}


def _save(fig, path: Path) -> Path:
    import io

    buf = io.BytesIO()
    fig.savefig(buf, format="png", bbox_inches="tight")
    plt.close(fig)
    return atomic_write_bytes(path, buf.getvalue())


def _positive(y):
    y = np.asarray(y, dtype=float)
    return np.where(y > 0, y, np.nan)


def render_trajectory(cols: dict[str, np.ndarray], out_dir, prefix: str = "") -> list[Path]:
    """Write variance, mean, dissipation and (C1) residual series and figures for one run."""
    out = Path(out_dir)
    t = cols["t"]
    written = []
    m1_keys = sorted(k for k in cols if k.startswith("m1_"))
    written.append(write_dat(out / f"{prefix}variance.dat", {"t": t, "V": cols["V"], "V_X": cols["V_X"]}))
    written.append(write_dat(out / f"{prefix}mean.dat", {"t": t, **{k: cols[k] for k in m1_keys}}))
    written.append(write_dat(out / f"{prefix}dissipation.dat", {"t": t, "D": cols["D"]}))
    written.append(write_dat(out / f"{prefix}c1_residual.dat", {"t": t, "c1_residual": cols["c1_residual"]}))
    written.append(write_dat(out / f"{prefix}population.dat", {"t": t, "N": cols["N"], "M": cols["M"]}))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.semilogy(t, _positive(cols["V"]), label="V")
        ax.semilogy(t, _positive(cols["V_X"]), label="V_X", linestyle="--")
        ax.set_xlabel("t")
        ax.set_ylabel("variance")
        ax.legend(frameon=False)
        written.append(_save(fig, out / f"{prefix}variance.png"))

        fig, ax = plt.subplots()
        for k in m1_keys:
            ax.plot(t, cols[k], label=k)
        ax.set_xlabel("t")
        ax.set_ylabel("mean opinion")
        ax.legend(frameon=False)
        written.append(_save(fig, out / f"{prefix}mean.png"))

        fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(6.0, 5.0))
        ax1.semilogy(t, _positive(cols["D"]))
        ax1.set_ylabel("D")
        ax2.plot(t, cols["c1_residual"])
        ax2.set_ylabel("(C1) residual")
        ax2.set_xlabel("t")
        written.append(_save(fig, out / f"{prefix}dissipation_c1.png"))
    return written


def render_series(t, y, out_dir, name: str, ylabel: str, log: bool = False) -> list[Path]:
    out = Path(out_dir)
    written = [write_dat(out / f"{name}.dat", {"t": t, ylabel: y})]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        (ax.semilogy if log else ax.plot)(t, _positive(y) if log else y)
        ax.set_xlabel("t")
        ax.set_ylabel(ylabel)
        written.append(_save(fig, out / f"{name}.png"))
    return written


def render_sweep(values, y, out_dir, axis: str, ylabel: str) -> list[Path]:
    out = Path(out_dir)
    written = [write_dat(out / "sweep.dat", {axis: values, ylabel: y})]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(values, y, marker="o")
        ax.set_xlabel(axis)
        ax.set_ylabel(ylabel)
        written.append(_save(fig, out / "sweep.png"))
    return written
