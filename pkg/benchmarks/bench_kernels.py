"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
from __future__ import annotations

import argparse
import random
import sys
import timeit

from floatsynth import _pykernels as py
from floatsynth.cost import compile_plan
from floatsynth.gearbox import parse_node
from floatsynth.search import PairList

try:
    from floatsynth import _kernels as cy
except ImportError:
    cy = None


def cases():
    plan = compile_plan(parse_node("GB(H T H, GB(T H T H, H T H), C*3(H T H))"))
    arrs = plan.arrays()
    rng = random.Random(20130)
    norms = [(rng.randint(0, 2**14), rng.randint(-2**13, 2**13)) for _ in range(300)]
    K, m = 12, 21
    pl = PairList.build(2.0**K * 0.01, 2.0**K)
    join = (pl.value, pl.x0, pl.x1, pl.conj, 0.0, 2.0**K * 0.01, K, m, True, 0, len(pl))
    return {
        "sample_plan (20000 trials)": lambda k: k.sample_plan(*arrs, plan.root, 1, 0, 20_000),
        "norm_solve (300 inputs)": lambda k: [k.norm_solve(A, B) for A, B in norms],
        "band_join (K=12, m=21)": lambda k: k.band_join(*join),
    }


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=3, help="best-of repeats per kernel (default: 3)")
    args = ap.parse_args(argv)
    if cy is None:
        print("compiled extension not built; only the Python timings are shown", file=sys.stderr)
    print(f"{'kernel':<28}{'python s':>12}{'cython s':>12}{'speedup':>10}")
    for name, fn in cases().items():
        tp = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat))
        if cy is None:
            print(f"{name:<28}{tp:>12.4f}{'-':>12}{'-':>10}")
            continue
        tc = min(timeit.repeat(lambda: fn(cy), number=1, repeat=args.repeat))
        print(f"{name:<28}{tp:>12.4f}{tc:>12.4f}{tp / tc:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
