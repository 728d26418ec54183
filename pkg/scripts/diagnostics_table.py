"""Expressibility and gradient-variance table over architectures and qubit counts.

    python scripts/diagnostics_table.py --qubits 5 6 7 8 9 10 --out results/table.csv

Variance uses uniform [0, 2pi) parameters by default; pass --init normal
--init-scale 0.1 to evaluate around the training initialization instead.
"""

import argparse
import csv
import time
from pathlib import Path

from qlink.analysis import estimate_expressibility, gradient_variance
from qlink.ansatz import Architecture, build_circuit


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--qubits", type=int, nargs="+", default=[5, 6, 7, 8, 9, 10])
    ap.add_argument("--expr-samples", type=int, default=5000)
    ap.add_argument("--bins", type=int, default=75)
    ap.add_argument("--var-samples", type=int, default=200)
    ap.add_argument("--init", choices=["uniform", "normal"], default="uniform")
    ap.add_argument("--init-scale", type=float, default=0.1)
    ap.add_argument("--reduced", action="store_true", help="trace out the messenger for expressibility")
    ap.add_argument("--no-expressibility", action="store_true")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/table.csv")
    args = ap.parse_args()

    rows = []
    print(f"{'n':>3} {'architecture':<16} {'expressibility':>15} {'grad variance':>14} {'sec':>6}")
    for n in args.qubits:
        for arch in Architecture:
            t0 = time.perf_counter()
            c = build_circuit(arch, n)
            expr = float("nan")
            if not args.no_expressibility:
                expr = estimate_expressibility(c, args.expr_samples, args.bins, args.seed + n,
                                               reduced=args.reduced).kl_divergence
            var = gradient_variance(c, args.var_samples, args.seed + 1000 + n, "first",
                                    args.init, args.init_scale).variance
            dt = time.perf_counter() - t0
            print(f"{n:>3} {arch.value:<16} {expr:>15.3e} {var:>14.3e} {dt:>6.1f}", flush=True)
            rows.append({"n_total": n, "architecture": arch.value, "depth": c.depth,
                         "expressibility": repr(expr), "gradient_variance": repr(var)})

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
