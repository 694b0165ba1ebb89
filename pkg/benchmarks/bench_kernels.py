"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--n 4000] [--repeat 3]

Set NLTSA_THREADS to let the compiled pair counter use more cores.
"""
import argparse
import time

import numpy as np

from nltsa import _kernels, _pykernels
from nltsa.embedding import embed
from nltsa.recurrence import recurrence_matrix
from nltsa.systems import integrate_flow

try:
    from nltsa import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=4000, help="number of embedded points")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    traj = integrate_flow("lorenz", [1.0, 1.0, 20.0], 0.01, args.n + 20, discard=1000)
    cloud = embed(traj.values[:, 0], 3, 10)
    pts = np.ascontiguousarray(cloud.points)
    tidx = np.ascontiguousarray(cloud.time_index, dtype=np.int64)
    eps2 = np.geomspace(1e-4, 400.0, 24)
    R = np.ascontiguousarray(recurrence_matrix(cloud, rr_target=0.05).matrix, dtype=np.uint8)
    threads = _kernels.threads()

    cases = {
        "pair_counts": lambda m: m.pair_counts(pts, tidx, eps2, 10, threads),
        "nearest_neighbors": lambda m: m.nearest_neighbors(pts, tidx, 10),
        "diagonal_lines": lambda m: m.diagonal_lines(R),
        "vertical_lines": lambda m: m.vertical_lines(R),
        "recurrence_times": lambda m: m.recurrence_times(R),
    }
    print(f"points: {len(pts)}  threads: {threads}")
    print(f"{'kernel':<20}{'numpy [s]':>12}{'cython [s]':>12}{'speedup':>10}")
    for name, call in cases.items():
        t_py = best_of(lambda: call(_pykernels), args.repeat)
        if _ckernels is None:
            print(f"{name:<20}{t_py:>12.4f}{'n/a':>12}{'':>10}")
            continue
        t_c = best_of(lambda: call(_ckernels), args.repeat)
        print(f"{name:<20}{t_py:>12.4f}{t_c:>12.4f}{t_py / t_c:>9.1f}x")


if __name__ == "__main__":
    main()
