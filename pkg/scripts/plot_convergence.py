"""Loss curves from a run directory's traces/ folder, one panel per qubit count.

    python scripts/plot_convergence.py results/paper-grid --out convergence.png
"""

import argparse
import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

COLORS = {"vanilla": "tab:gray", "qlink_fixed": "tab:blue", "qlink_adaptive": "tab:orange"}


def read_trace(path):
    with open(path, newline="") as fh:
        return [float(row["loss"]) for row in csv.DictReader(fh)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("run_dir")
    ap.add_argument("--out", default="convergence.png")
    args = ap.parse_args()

    curves = defaultdict(list)
    for path in sorted(Path(args.run_dir, "traces").glob("*.csv")):
        arch, n, _ = path.stem.rsplit("_", 2)
        curves[int(n[1:]), arch].append(read_trace(path))
    if not curves:
        raise SystemExit(f"no traces under {args.run_dir}/traces")

    qubits = sorted({n for n, _ in curves})
    fig, axes = plt.subplots(1, len(qubits), figsize=(3.2 * len(qubits), 3), sharey=True, squeeze=False)
    for ax, n in zip(axes[0], qubits):
        for arch, color in COLORS.items():
            for k, losses in enumerate(curves.get((n, arch), [])):
                ax.plot(range(1, len(losses) + 1), losses, color=color, lw=0.8,
                        label=arch if k == 0 else None)
        ax.set_yscale("log")
        ax.set_xscale("log")
        ax.axhline(1e-3, color="k", ls=":", lw=0.6)
        ax.set_title(f"{n} qubits")
        ax.set_xlabel("iteration")
    axes[0][0].set_ylabel("loss")
    axes[0][-1].legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
