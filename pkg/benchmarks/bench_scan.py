"""Compare the compiled and numpy chart-scan kernels.

    python3 benchmarks/bench_scan.py --N 4 --q 7 --repeat 3

Both kernels scan every chart of the atlas; the case tallies must agree.
"""

from __future__ import annotations

import argparse
import json
import time

from dwork_semistable import scan
from dwork_semistable.charts import atlas, verify_chart_smoothness


def bench(N: int, i: int, q: int, repeat: int, budget: int) -> dict:
    charts = atlas(N, i, q)
    rows = {}
    tallies = {}
    for name, kernel in scan.kernels().items():
        best, best_kernel = float("inf"), float("inf")
        for _ in range(repeat):
            spent = [0.0]

            def timed(*args, _k=kernel, _spent=spent):
                t0 = time.perf_counter()
                r = _k(*args)
                _spent[0] += time.perf_counter() - t0
                return r

            t = time.perf_counter()
            out = [verify_chart_smoothness(c, q, "all", budget, kernel=timed) for c in charts]
            best = min(best, time.perf_counter() - t)
            best_kernel = min(best_kernel, spent[0])
        points = sum(s.grid_points for s in out)
        rows[name] = {
            "scan_seconds": round(best, 4),
            "kernel_seconds": round(best_kernel, 4),
            "grid_points": points,
            "kernel_points_per_s": round(points / best_kernel),
        }
        tallies[name] = [s.to_json() for s in out]
    names = list(tallies)
    agree = all(tallies[n] == tallies[names[0]] for n in names)
    if "cython" in rows:
        rows["scan_speedup"] = round(rows["python"]["scan_seconds"] / rows["cython"]["scan_seconds"], 2)
        rows["kernel_speedup"] = round(rows["python"]["kernel_seconds"] / rows["cython"]["kernel_seconds"], 2)
    return {"N": N, "i": i, "q": q, "kernels": rows, "tallies_agree": agree}


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--N", type=int, default=4)
    ap.add_argument("--i", type=int, default=1)
    ap.add_argument("--q", type=int, default=7)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--budget", type=int, default=10**9)
    a = ap.parse_args()
    print(json.dumps(bench(a.N, a.i, a.q, a.repeat, a.budget), indent=2))


if __name__ == "__main__":
    main()
