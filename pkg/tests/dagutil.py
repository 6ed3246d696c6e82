"""Random DAG-shaped SPD programs and a brute-force longest-path oracle."""

from __future__ import annotations

import numpy as np

PATH_CAP = 20000


def random_dag_program(rng: np.random.Generator, max_nodes: int = 50, max_lat: int = 20,
                       kind: str = "HDL") -> tuple[str, dict[str, int], dict[str, list[str]], list[str]]:
    """SPD text for a random DAG: (source, latency per node var, preds per node var, inputs).

    ``kind="HDL"`` uses opaque modules with declared delays; ``kind="equ"``
    writes sums so that the program can also be simulated.
    """
    while True:
        n_in = int(rng.integers(1, 5))
        n_nodes = int(rng.integers(1, max_nodes - n_in))
        inputs = [f"i{k}" for k in range(n_in)]
        pool = list(inputs)
        preds: dict[str, list[str]] = {}
        lat: dict[str, int] = {}
        for j in range(n_nodes):
            var = f"v{j}"
            k = int(rng.integers(1, 4))
            window = pool[-8:]
            chosen = list(dict.fromkeys(rng.choice(window, size=min(k, len(window)), replace=False).tolist()))
            if j < n_in and inputs[j] not in chosen:
                chosen.append(inputs[j])
            preds[var] = chosen
            lat[var] = int(rng.integers(0, max_lat + 1))
            pool.append(var)
        used = {p for ps in preds.values() for p in ps}
        sinks = [v for v in preds if v not in used]
        n_outputs = len(sinks)
        if n_in + n_nodes + n_outputs > max_nodes:
            continue
        if path_count(preds, inputs) > PATH_CAP:
            continue
        break
    lines = ["Name rnd", f"Input {', '.join(inputs)}", f"Output {', '.join(sinks)}"]
    for var, ps in preds.items():
        if kind == "HDL":
            lines.append(f"n_{var} {lat[var]}, HDL, ({var}) = blk({', '.join(ps)})")
        else:
            lines.append(f"n_{var} 0, equ, {var} = {' + '.join(ps)}")
    return "\n".join(lines) + "\n", lat, preds, inputs


def path_count(preds: dict[str, list[str]], inputs) -> int:
    memo: dict[str, int] = {}

    def count(v: str) -> int:
        if v in inputs:
            return 1
        if v not in memo:
            memo[v] = sum(count(p) for p in preds[v])
        return memo[v]

    return max((count(v) for v in preds), default=0)


def all_paths(v: str, preds, inputs) -> list[list[str]]:
    """Every explicit path from an input to ``v`` (inputs excluded, ``v`` last)."""
    if v in inputs:
        return [[]]
    out = []
    for p in preds[v]:
        for path in all_paths(p, preds, inputs):
            out.append(path + [v])
    return out


def brute_force_ready(preds, lat, inputs) -> dict[str, int]:
    """Ready time of each node var: the longest sum of upstream latencies over all paths."""
    ready = {}
    for v in preds:
        best = 0
        for path in all_paths(v, preds, inputs):
            best = max(best, sum(lat[u] for u in path[:-1]))
        ready[v] = best
    return ready
