"""Compare the compiled and pure-Python simulation kernels.

    python benchmarks/bench_sim.py [--vectors N] [--repeat R]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from spdc.compiler import compile_file
from spdc.lbm import channel, lbm_design
from spdc.lbm.lattice import to_packet
from spdc.sim import Simulator, StallPattern, StreamPacket
from spdc.sim.kernel import BACKENDS


def _best(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n: int):
    from importlib import resources
    with resources.as_file(resources.files("spdc.data") / "sample_core.spd") as path:
        sample = compile_file(path)
    rng = np.random.default_rng(0)
    x = rng.uniform(-4, 4, (n, 4)).astype(np.float32)
    pk = StreamPacket(x.view(np.uint32), ["a", "b", "c", "d"])
    yield "sample_core", sample, pk, None
    yield "sample_core 50% stalls", sample, pk, StallPattern.parse("random:0.5:1")
    lbm = lbm_design(64)
    yield "lbm 64x32 step", lbm, to_packet(channel(64, 32), Simulator(lbm).input_fields), None


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--vectors", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    names = [b for b in ("cython", "python") if b in BACKENDS]
    print(f"{'case':<24} {'vectors':>8} " + " ".join(f"{b + ' s':>10}" for b in names)
          + (f" {'speedup':>8}" if len(names) == 2 else ""))
    for label, design, pk, stalls in cases(args.vectors):
        row = []
        outs = []
        for b in names:
            sim = Simulator(design, backend=b)
            row.append(_best(lambda: sim.run(pk, stalls), args.repeat))
            outs.append(sim.run(pk, stalls)[0].words)
        assert all(np.array_equal(outs[0], o) for o in outs[1:]), "backends disagree"
        line = f"{label:<24} {len(pk):>8} " + " ".join(f"{t:>10.4f}" for t in row)
        if len(row) == 2:
            line += f" {row[1] / row[0]:>7.1f}x"
        print(line)


if __name__ == "__main__":
    main()
