#!/usr/bin/env python3
"""Plot the CSV artifacts written by the chaoslab recipes.

The core binary never draws; this script turns an output directory into PNGs.
It detects which artifacts are present and emits one figure per kind:

  mu_beta.csv      -> density.png        (equilibrium profile)
  meanfield.csv    -> meanfield.png      (free energy + velocity norms)
  records.csv      -> entropy_decay.png  (modulated free energy, Fisher info,
                                          decay bound, log scale)
  diagnostics.csv  -> diagnostics.png    (modulated energy and marginal gaps)
  snapshots.csv    -> snapshots.png      (particle histograms per snapshot)

Usage: plot_artifacts.py OUT_DIR [--dest DIR]
"""
import argparse
import csv
import pathlib
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    cols = {k: [float(r[k]) for r in rows] for k in rows[0]} if rows else {}
    return cols


def read_csv_raw(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def plot_density(src, dest):
    d = read_csv(src / "mu_beta.csv")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(d["x"], d["value"])
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.set_title("thermal equilibrium profile")
    fig.tight_layout()
    fig.savefig(dest / "density.png", dpi=150)
    plt.close(fig)


def plot_meanfield(src, dest):
    d = read_csv(src / "meanfield.csv")
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    axes[0].plot(d["t"], d["free_energy"])
    axes[0].set_xlabel("t")
    axes[0].set_ylabel("free energy")
    axes[0].set_title("mean-field free energy")
    axes[1].plot(d["t"], d["sup_u"], label="sup |u|")
    axes[1].plot(d["t"], d["sup_grad_u"], label="sup |grad u|")
    axes[1].set_xlabel("t")
    axes[1].set_yscale("log")
    axes[1].legend()
    axes[1].set_title("velocity norms")
    fig.tight_layout()
    fig.savefig(dest / "meanfield.png", dpi=150)
    plt.close(fig)


def plot_records(src, dest):
    d = read_csv(src / "records.csv")
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    axes[0].plot(d["t"], d["e_script"], label="modulated free energy + error")
    axes[0].plot(d["t"], d["bound_rhs"], "--", label="decay bound")
    axes[0].set_xlabel("t")
    axes[0].legend()
    axes[0].set_title("decay inequality")
    positive = [max(v, 1e-30) for v in d["fisher"]]
    axes[1].semilogy(d["t"], positive, label="modulated Fisher info")
    h = [max(v, 1e-30) for v in d["h_rel"]]
    axes[1].semilogy(d["t"], h, label="relative entropy")
    axes[1].set_xlabel("t")
    axes[1].legend()
    axes[1].set_title("dissipation channels")
    fig.tight_layout()
    fig.savefig(dest / "entropy_decay.png", dpi=150)
    plt.close(fig)


def plot_diagnostics(src, dest):
    d = read_csv(src / "diagnostics.csv")
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    axes[0].plot(d["t"], d["mean_F"], label="mean modulated energy")
    axes[0].fill_between(d["t"], d["min_F"], d["max_F"], alpha=0.2, label="min/max")
    axes[0].plot(d["t"], d["riesz_floor"], "--", label="lower bound")
    axes[0].set_xlabel("t")
    axes[0].legend()
    axes[0].set_title("modulated energy across replicas")
    for key in ("w2", "tv", "kl"):
        axes[1].plot(d["t"], d[key], label=key)
    axes[1].set_xlabel("t")
    axes[1].legend()
    axes[1].set_title("one-particle marginal vs mean field")
    fig.tight_layout()
    fig.savefig(dest / "diagnostics.png", dpi=150)
    plt.close(fig)


def plot_snapshots(src, dest):
    index = read_csv_raw(src / "snapshots.csv")
    if not index:
        return
    picks = [index[0], index[len(index) // 2], index[-1]]
    fig, axes = plt.subplots(1, len(picks), figsize=(4 * len(picks), 3.5), sharey=True)
    for ax, row in zip(axes, picks):
        xs = [float(r["x"]) for r in read_csv_raw(src / row["file"])]
        ax.hist(xs, bins=64, density=True, alpha=0.7)
        ax.set_title(f"t = {float(row['t']):g}")
        ax.set_xlabel("x")
    if (src / "mu_beta.csv").exists():
        mu = read_csv(src / "mu_beta.csv")
        for ax in axes:
            ax.plot(mu["x"], mu["value"], "k--", lw=1)
    fig.tight_layout()
    fig.savefig(dest / "snapshots.png", dpi=150)
    plt.close(fig)


def main():
    ap = argparse.ArgumentParser(description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("out_dir", help="recipe output directory with CSV artifacts")
    ap.add_argument("--dest", default=None, help="where to write PNGs (default: out_dir)")
    args = ap.parse_args()
    src = pathlib.Path(args.out_dir)
    dest = pathlib.Path(args.dest) if args.dest else src
    dest.mkdir(parents=True, exist_ok=True)

    plotted = []
    handlers = [
        ("mu_beta.csv", plot_density),
        ("meanfield.csv", plot_meanfield),
        ("records.csv", plot_records),
        ("diagnostics.csv", plot_diagnostics),
        ("snapshots.csv", plot_snapshots),
    ]
    for name, fn in handlers:
        if (src / name).exists():
            fn(src, dest)
            plotted.append(name)
    if not plotted:
        sys.exit(f"no known artifacts in {src}")
    print(f"plotted {len(plotted)} figure(s) from {', '.join(plotted)} into {dest}")


if __name__ == "__main__":
    main()
