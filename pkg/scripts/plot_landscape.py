"""Contour plots of landscape grids written by ``qlink landscape`` or ``qlink run``.

    python scripts/plot_landscape.py results/paper-grid/landscape/*.csv --out landscape.png
"""

import argparse
from pathlib import Path

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read_grid(path):
    raw = np.genfromtxt(path, delimiter=",", skip_header=0, dtype=str)
    beta = raw[0, 1:].astype(float)
    alpha = raw[1:, 0].astype(float)
    return alpha, beta, raw[1:, 1:].astype(float)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("grids", nargs="+")
    ap.add_argument("--out", default="landscape.png")
    args = ap.parse_args()

    fig, axes = plt.subplots(1, len(args.grids), figsize=(3.6 * len(args.grids), 3.2), squeeze=False)
    for ax, path in zip(axes[0], args.grids):
        alpha, beta, losses = read_grid(path)
        cs = ax.contourf(beta, alpha, losses, levels=30, cmap="viridis", vmin=0, vmax=2)
        ax.plot(0, 0, "r+")
        ax.set_title(Path(path).stem, fontsize=8)
        ax.set_xlabel("beta")
        ax.set_ylabel("alpha")
        fig.colorbar(cs, ax=ax)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
