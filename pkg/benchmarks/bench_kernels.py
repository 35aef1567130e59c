#!/usr/bin/env python3
"""Benchmark the jitted kernels against the pure-numpy fallback.

The kernel backend is fixed at import time by ARRAYLIGHT_NUMBA, so each
backend is timed in its own subprocess and the parent merges the results
into one table.  Run:

    python3 benchmarks/bench_kernels.py
"""

import argparse
import json
import os
import subprocess
import sys
import time

PAIR_SIZES = [(4, 4, 4), (6, 6, 6), (8, 8, 8)]
DIR_CASES = [(2048, 216), (8192, 216), (8192, 512)]  # (directions, atoms)


def _best_of(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _worker() -> None:
    import numpy as np

    from arraylight import build_lattice
    from arraylight import _kernels

    rng = np.random.default_rng(0)
    results = {"backend": _kernels.backend_name(),
               "pair_blocks": {}, "direction_sums": {}}

    for nx, ny, nz in PAIR_SIZES:
        pos = build_lattice(nx, ny, nz, 0.6).positions
        _kernels.pair_blocks(pos)  # warm-up (JIT compile, caches)
        label = f"N={nx * ny * nz}"
        results["pair_blocks"][label] = _best_of(
            lambda: _kernels.pair_blocks(pos))

    for m, n in DIR_CASES:
        side = round(n ** (1 / 3))
        pos = build_lattice(side, side, n // (side * side), 0.6).positions
        dirs = rng.normal(size=(m, 3))
        dirs /= np.linalg.norm(dirs, axis=1)[:, None]
        s = rng.normal(size=(len(pos), 3)) + 1j * rng.normal(size=(len(pos), 3))
        _kernels.direction_sums(dirs, pos, s)
        label = f"M={m} N={len(pos)}"
        results["direction_sums"][label] = _best_of(
            lambda: _kernels.direction_sums(dirs, pos, s))

    print(json.dumps(results))


def _run_backend(flag: str) -> dict | None:
    env = dict(os.environ, ARRAYLIGHT_NUMBA=flag)
    proc = subprocess.run([sys.executable, os.path.abspath(__file__),
                           "--worker"], env=env, capture_output=True,
                          text=True)
    if proc.returncode != 0:
        sys.stderr.write(proc.stderr)
        return None
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--worker", action="store_true",
                        help=argparse.SUPPRESS)
    args = parser.parse_args()
    if args.worker:
        _worker()
        return 0

    numpy_res = _run_backend("0")
    numba_res = _run_backend("1")
    if numpy_res is None:
        print("numpy backend failed; see stderr above")
        return 1

    print(f"{'kernel':<28}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    for group in ("pair_blocks", "direction_sums"):
        for label, t_np in numpy_res[group].items():
            row = f"{group} {label}"
            if numba_res is None:
                print(f"{row:<28}{t_np:>10.4f} s{'n/a':>12}{'':>10}")
                continue
            t_nb = numba_res[group][label]
            print(f"{row:<28}{t_np:>10.4f} s{t_nb:>10.4f} s"
                  f"{t_np / t_nb:>9.1f}x")
    if numba_res is None:
        print("\nnumba backend unavailable (install numba to compare)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
