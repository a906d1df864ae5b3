"""Compare the compiled kernels against the pure-Python fallback.

Runs the exact solver and the Sinkhorn iteration on matched random
instances at several sizes, checks both backends agree, and prints a
timing table. Usage: python3 benchmarks/bench_backends.py [--quick]
"""

import argparse
import sys
import time

import numpy as np

from lotmap._kernels import pure

try:
    from lotmap._kernels import _core
except ImportError:
    _core = None


def _instance(size, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((size, 2))
    y = rng.standard_normal((size, 2)) + np.array([3.0, 4.0])
    cost = ((x[:, None, :] - y[None, :, :]) ** 2).sum(axis=2)
    a = rng.random(size) + 0.5
    b = rng.random(size) + 0.5
    return np.ascontiguousarray(cost), a / a.sum(), b / b.sum()


def _best_of(fn, repeats):
    best = np.inf
    value = None
    for _ in range(repeats):
        start = time.perf_counter()
        value = fn()
        best = min(best, time.perf_counter() - start)
    return best, value


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--quick", action="store_true", help="smaller sizes, 1 repeat"
    )
    args = parser.parse_args(argv)
    if _core is None:
        print("compiled extension not built; nothing to compare")
        return 1
    repeats = 1 if args.quick else 3
    ns_sizes = (32, 64, 128) if args.quick else (64, 128, 256, 512)
    sk_sizes = (128, 256) if args.quick else (256, 512, 1024, 2048)

    print(f"{'kernel':<16}{'size':>6}{'pure s':>12}{'compiled s':>12}"
          f"{'speedup':>9}  agreement")
    for size in ns_sizes:
        cost, a, b = _instance(size, seed=size)
        t_pure, (plan_p, status_p, _) = _best_of(
            lambda: pure.network_simplex(cost, a, b), repeats
        )
        t_comp, (plan_c, status_c, _) = _best_of(
            lambda: _core.network_simplex(cost, a, b), repeats
        )
        assert status_p == status_c == 0
        obj_p = float((plan_p * cost).sum())
        obj_c = float((plan_c * cost).sum())
        gap = abs(obj_p - obj_c) / max(abs(obj_p), 1e-300)
        print(f"{'network_simplex':<16}{size:>6}{t_pure:>12.4f}"
              f"{t_comp:>12.4f}{t_pure / t_comp:>8.1f}x"
              f"  obj rel diff {gap:.2e}")

    for size in sk_sizes:
        cost, a, b = _instance(size, seed=10_000 + size)
        half = 0.5 * cost
        t_pure, (f_p, g_p, it_p, err_p, ok_p) = _best_of(
            lambda: pure.sinkhorn_logdomain(half, a, b, 1.0, 1e-9, 2000),
            repeats,
        )
        t_comp, (f_c, g_c, it_c, err_c, ok_c) = _best_of(
            lambda: _core.sinkhorn_logdomain(half, a, b, 1.0, 1e-9, 2000),
            repeats,
        )
        assert ok_p and ok_c and it_p == it_c
        diff = max(
            float(np.abs(np.asarray(f_p) - np.asarray(f_c)).max()),
            float(np.abs(np.asarray(g_p) - np.asarray(g_c)).max()),
        )
        print(f"{'sinkhorn':<16}{size:>6}{t_pure:>12.4f}"
              f"{t_comp:>12.4f}{t_pure / t_comp:>8.1f}x"
              f"  potential max diff {diff:.2e} ({it_c} iters)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
