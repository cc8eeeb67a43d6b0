"""Scalar Monte Carlo oracle for the classical LIL acceptance band.

Simulates independent simple random walks with numpy (independent of the
C++ generator and its RNG) and reports quantiles of
max_{n0 <= n <= N} |S_n| / sqrt(n L(n)), L(x) = max(1, ln ln x).
"""
import argparse
import json

import numpy as np


def iterated_log(n):
    with np.errstate(divide="ignore", invalid="ignore"):
        ll = np.log(np.log(n.astype(float)))
    return np.maximum(1.0, np.nan_to_num(ll, nan=1.0, neginf=1.0))


def run(paths, steps, n0, seed, chunk=20000):
    rng = np.random.default_rng(seed)
    s = np.zeros(paths, dtype=np.int64)
    best = np.zeros(paths)
    for start in range(1, steps + 1, chunk):
        stop = min(steps, start + chunk - 1)
        k = stop - start + 1
        inc = rng.integers(0, 2, size=(k, paths), dtype=np.int8) * 2 - 1
        walk = s + np.cumsum(inc, axis=0, dtype=np.int64)
        s = walk[-1].copy()
        n = np.arange(start, stop + 1)
        mask = n >= n0
        if mask.any():
            scale = 1.0 / np.sqrt(n[mask] * iterated_log(n[mask]))
            ratio = np.abs(walk[mask]) * scale[:, None]
            best = np.maximum(best, ratio.max(axis=0))
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=2048)
    ap.add_argument("--steps", type=int, default=200000)
    ap.add_argument("--n0", type=int, default=1000)
    ap.add_argument("--reps", type=int, default=5)
    args = ap.parse_args()
    out = []
    for rep in range(args.reps):
        best = run(args.paths, args.steps, args.n0, seed=1000 + rep)
        out.append({"seed": 1000 + rep,
                    "median": float(np.median(best)),
                    "p99": float(np.quantile(best, 0.99)),
                    "p01": float(np.quantile(best, 0.01))})
    print(json.dumps(out, indent=1))


if __name__ == "__main__":
    main()
