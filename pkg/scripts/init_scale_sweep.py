"""Mean stopping iteration per architecture as a function of the parameter
initialization.  Used to choose the training initialization default.

    python scripts/init_scale_sweep.py --qubits 5 6 7 --scales 0.01 0.1 0.2 0.5 --uniform
"""

import argparse

import numpy as np

from qlink.ansatz import Architecture, build_circuit, prepare_input
from qlink.trainer import TrainConfig, train


def sweep(qubits, repeats, init, scale, max_iterations):
    stops = {}
    for n in qubits:
        for arch in Architecture:
            c = build_circuit(arch, n)
            s = []
            for rep in range(repeats):
                cfg = TrainConfig(max_iterations=max_iterations, seed=rep, init=init, init_scale=scale)
                s.append(train(c, prepare_input(c, 100 + rep), cfg).stop_iteration)
            stops[arch, n] = s
    return stops


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--qubits", type=int, nargs="+", default=[5, 6, 7])
    ap.add_argument("--scales", type=float, nargs="+", default=[0.01, 0.1, 0.2])
    ap.add_argument("--uniform", action="store_true", help="also run uniform [0, 2pi) init")
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--max-iterations", type=int, default=1500)
    args = ap.parse_args()

    settings = [("normal", s) for s in args.scales]
    if args.uniform:
        settings.append(("uniform", 0.0))
    for init, scale in settings:
        stops = sweep(args.qubits, args.repeats, init, scale, args.max_iterations)
        label = f"{init}({scale})" if init == "normal" else init
        for n in args.qubits:
            means = {a: float(np.mean(stops[a, n])) for a in Architecture}
            ordered = means[Architecture.QLINK_FIXED] < means[Architecture.QLINK_ADAPTIVE] < means[Architecture.VANILLA]
            print(f"{label:<14} n={n:<3} " + "  ".join(f"{a.value}={means[a]:7.1f}" for a in Architecture)
                  + f"  fixed<adaptive<vanilla={ordered}", flush=True)


if __name__ == "__main__":
    main()
