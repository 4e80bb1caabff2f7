"""Time the compiled edit-distance kernel against the pure-Python fallback.

    python3 benchmarks/bench_edit_distance.py [--length N] [--pairs K] [--seed S]
"""
from __future__ import annotations

import argparse
import random
import timeit
from array import array

from periphsim import _editdist_py, fidelity


def _pairs(length: int, count: int, seed: int) -> list[tuple[array, array]]:
    rnd = random.Random(seed)
    out = []
    for _ in range(count):
        a = array("q", (rnd.randrange(8) for _ in range(length)))
        b = array("q", (rnd.randrange(8) for _ in range(length)))
        out.append((a, b))
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--length", type=int, default=400)
    ap.add_argument("--pairs", type=int, default=5)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    pairs = _pairs(args.length, args.pairs, args.seed)
    kernels = {"python": _editdist_py.weighted_edit_distance_codes}
    if fidelity.BACKEND != "python":
        kernels[fidelity.BACKEND] = fidelity._kernel
    results = {}
    for name, fn in kernels.items():
        dists = [fn(a, b) for a, b in pairs]
        best = min(timeit.repeat(lambda: [fn(a, b) for a, b in pairs], number=1, repeat=args.repeat))
        results[name] = (best, dists)
        print(f"{name:8s} {best / len(pairs) * 1e3:10.3f} ms/pair  ({args.length}x{args.length})")
    if len(results) > 1:
        (t_py, d_py), (t_c, d_c) = results["python"], results[fidelity.BACKEND]
        assert d_py == d_c, "backends disagree"
        print(f"speedup  {t_py / t_c:10.1f}x")
    else:
        print("compiled kernel not built; only the fallback was timed")


if __name__ == "__main__":
    main()
