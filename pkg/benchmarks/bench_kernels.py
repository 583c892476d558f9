"""Time the numba and numpy backends on the two sweeps and check they agree.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import time

from cubic_rigidity import kernels
from cubic_rigidity.exclusion import feasibility_search

GRID_C = {
    "n": {"min": 1, "max": 10}, "M": {"min": 1, "max": 5},
    "eps_plus": {"min": 1, "max": 6}, "eps_minus": {"min": 0, "max": 6},
    "Sigma0": {"min": 0, "max": 8}, "Sigma1": {"min": 0, "max": 8},
    "e": {"min": "1/4", "max": 6, "step": "1/4"},
    "lambda_fractions": [0, "1/4", "1/2", "3/4", 1],
}


def best_of(fn, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return out, best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = ["numba", "numpy"] if kernels.HAVE_NUMBA else ["numpy"]
    if kernels.HAVE_NUMBA:
        # compile (or load from cache) outside the timed region
        feasibility_search("C", {**GRID_C, "n": [1], "M": [1]}, backend="numba")
        for case in ("one_line", "two_lines", "three_lines"):
            kernels.line_sweep(case, 1, 2, backend="numba")
    print(f"{'task':<28}{'backend':<8}{'seconds':>10}  result")
    for name, fn in [
        ("exclusion grid, case C", lambda b: feasibility_search("C", GRID_C, backend=b)["feasible"]),
        ("two lines, top 12, T 1..4", lambda b: [kernels.line_sweep("two_lines", T, 12, b) for T in range(1, 5)]),
        ("three lines, top 12, T 1..4", lambda b: [kernels.line_sweep("three_lines", T, 12, b) for T in range(1, 5)]),
    ]:
        results = {}
        for b in backends:
            res, sec = best_of(lambda: fn(b), args.repeat)
            results[b] = res
            print(f"{name:<28}{b:<8}{sec:>10.3f}  {res}")
        if len(set(map(str, results.values()))) != 1:
            raise SystemExit(f"backends disagree on {name}: {results}")


if __name__ == "__main__":
    main()
