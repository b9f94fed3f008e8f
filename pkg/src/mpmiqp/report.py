"""Figure and table rendering for solved instances.

Each report writes a delimited CSV of the plotted series and a PNG figure
next to it.  Matplotlib runs on the Agg backend so reports work headless.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .casestudies import CalciumInstance, HevInstance
from .projection import MultiPeriodProblem, ProjectedMIQP

__all__ = ["write_report"]


def _save(fig, path: Path) -> None:
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def _calcium_report(inst: CalciumInstance, sol: dict, outdir: Path) -> list[Path]:
    n = inst.n
    x = np.asarray(sol["x"], dtype=float)
    z = np.asarray(sol["z"], dtype=float)
    fitted = np.empty(n + 1)
    fitted[0] = inst.beta0
    for i in range(n):
        fitted[i + 1] = inst.alpha * fitted[i] + x[i]

    csv_path = outdir / "trace.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["period", "observed", "fitted", "spike", "indicator"])
        for t in range(n + 1):
            spike = f"{x[t - 1]:.12g}" if 1 <= t <= n else ""
            ind = f"{int(z[t - 1])}" if 1 <= t <= n else ""
            writer.writerow([t + 1, f"{inst.r[t]:.12g}", f"{fitted[t]:.12g}", spike, ind])

    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(9, 6), sharex=True)
    periods = np.arange(1, n + 2)
    ax0.plot(periods, inst.r, color="0.6", lw=0.8, label="observed")
    ax0.plot(periods, fitted, color="C0", lw=1.4, label="fitted concentration")
    ax0.set_ylabel("fluorescence")
    ax0.legend(loc="upper right")
    spike_periods = np.arange(1, n + 1)
    if np.any(inst.true_spikes > 0):
        ax1.stem(spike_periods, inst.true_spikes, linefmt="0.7", markerfmt=" ",
                 basefmt=" ", label="generating spikes")
    detected = np.where(z > 0.5, x, 0.0)
    if np.any(detected != 0):
        ax1.stem(spike_periods, detected, linefmt="C3-", markerfmt="C3.",
                 basefmt=" ", label="detected spikes")
    ax1.set_xlabel("period")
    ax1.set_ylabel("spike size")
    ax1.legend(loc="upper right")
    fig_path = outdir / "deconvolution.png"
    _save(fig, fig_path)
    return [csv_path, fig_path]


def _hev_report(inst: HevInstance, sol: dict, outdir: Path) -> list[Path]:
    n, ds = inst.n, inst.state_dim
    x = np.asarray(sol["x"], dtype=float).reshape(n, ds)
    z = np.asarray(sol["z"], dtype=float)
    states = np.empty((n + 1, ds))
    states[0] = inst.b0
    for i in range(n):
        states[i + 1] = inst.A @ states[i] + x[i]

    csv_path = outdir / "trajectory.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["period"]
        header += [f"state{k + 1}" for k in range(ds)]
        header += [f"target{k + 1}" for k in range(ds)]
        header += [f"input{k + 1}" for k in range(ds)] + ["indicator"]
        writer.writerow(header)
        for t in range(n + 1):
            row = [t + 1]
            row += [f"{states[t, k]:.12g}" for k in range(ds)]
            row += [f"{inst.r[t, k]:.12g}" for k in range(ds)]
            if 1 <= t <= n:
                row += [f"{x[t - 1, k]:.12g}" for k in range(ds)] + [f"{int(z[t - 1])}"]
            else:
                row += [""] * ds + [""]
            writer.writerow(row)

    fig, axes = plt.subplots(ds + 1, 1, figsize=(9, 2.6 * (ds + 1)), sharex=True)
    periods = np.arange(1, n + 2)
    for k in range(ds):
        axes[k].plot(periods, inst.r[:, k], "--", color="0.5", label="target")
        axes[k].plot(periods, states[:, k], color=f"C{k}", label="state")
        axes[k].set_ylabel(f"state {k + 1}")
        axes[k].legend(loc="upper right")
    axes[ds].step(np.arange(1, n + 1), z, where="mid", color="C3")
    axes[ds].set_ylabel("engaged")
    axes[ds].set_xlabel("period")
    fig_path = outdir / "trajectory.png"
    _save(fig, fig_path)
    return [csv_path, fig_path]


def _generic_report(n: int, d: int, sol: dict, outdir: Path) -> list[Path]:
    x = np.asarray(sol["x"], dtype=float).reshape(n, d)
    z = np.asarray(sol["z"], dtype=float)

    csv_path = outdir / "solution.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["period"] + [f"x{k + 1}" for k in range(d)] + ["indicator"])
        for i in range(n):
            writer.writerow([i + 1] + [f"{x[i, k]:.12g}" for k in range(d)]
                            + [f"{int(z[i])}"])

    fig, ax = plt.subplots(figsize=(9, 3.2))
    periods = np.arange(1, n + 1)
    magnitude = np.linalg.norm(x, axis=1) if d > 1 else x[:, 0]
    ax.stem(periods, magnitude, linefmt="C0-", markerfmt="C0.", basefmt=" ")
    on = periods[z > 0.5]
    if len(on):
        ax.plot(on, np.zeros(len(on)), "C3^", ms=6, label="active periods")
        ax.legend(loc="upper right")
    ax.set_xlabel("period")
    ax.set_ylabel("input" + (" magnitude" if d > 1 else ""))
    fig_path = outdir / "support.png"
    _save(fig, fig_path)
    return [csv_path, fig_path]


def write_report(instance, sol: dict, outdir) -> list[Path]:
    """Render the report for a solved instance; returns the written paths.

    ``sol`` is the solution mapping with keys objective, z, x, support,
    pathCost (as produced by the solve command).
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if isinstance(instance, CalciumInstance):
        return _calcium_report(instance, sol, outdir)
    if isinstance(instance, HevInstance):
        return _hev_report(instance, sol, outdir)
    if isinstance(instance, ProjectedMIQP):
        return _generic_report(instance.n, instance.d, sol, outdir)
    if isinstance(instance, MultiPeriodProblem):
        return _generic_report(instance.n, instance.d, sol, outdir)
    raise TypeError(f"no report for {type(instance).__name__}")
