"""Benchmark the compiled kernels against the numpy fallback.

Times the three per-step kernels, the fused schedule rollout, and two
end-to-end runs (generic simulate and the adaptive online loop) under
each backend. Run from the repository root:

    python benchmarks/bench_kernels.py [--sizes 5,10,20] [--repeat 5]
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from opsteer._kernels import pyfallback  # noqa: E402

try:
    from opsteer._kernels import _fast
except ImportError:
    _fast = None


def build_case(n, seed=0):
    rng = np.random.default_rng(seed)
    V = rng.uniform(0, 1, (n, n))
    V /= V.sum(axis=1, keepdims=True)
    h = rng.uniform(0.2, 0.9, n)
    x = rng.uniform(0, 1, n)
    u = rng.uniform(0, 1, n) / h
    y = u * (0.8 - x)
    theta = rng.uniform(0.2, 0.8, n)
    resid = rng.normal(size=n)
    return V, h, x, u, y, theta, resid


def best_of(repeat, fn, *args):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(backend, n, loops, repeat):
    V, h, x, u, y, theta, resid = build_case(n)
    hu = h * u
    results = {}

    def many(fn, *args):
        def run():
            for _ in range(loops):
                fn(*args)
        return best_of(repeat, run) / loops

    results["mix_step"] = many(backend.mix_step, V, hu, x, 0.8)
    results["predict_opinion"] = many(backend.predict_opinion, V, x, y, theta)
    results["regressor_correction"] = many(backend.regressor_correction, V, y, resid)
    results["schedule_rollout(T=1000)"] = best_of(
        repeat, backend.schedule_rollout, V, h, x, 0.8, 0.5, 0.99, 1000, np.inf
    )
    return results


def bench_end_to_end(n, repeat):
    """Full library paths; backend chosen by OPSTEER_KERNELS at import."""
    from opsteer import OnlineHyperparams, RateSchedule, make_network, run_online, schedule_policy, simulate
    from opsteer.network import random_network

    g, p = random_network(n, 0.5, (0.2, 0.8), (0.3, 0.7), seed=7)
    net = make_network(g, p)
    x0 = np.random.default_rng(1).uniform(0.02, 0.45, n)
    sched = RateSchedule(a=0.4, b=0.99)
    out = {}
    out["simulate(T=1000)"] = best_of(
        repeat, simulate, net, x0, 0.9, schedule_policy(sched, net.params.h), 1000
    )
    out["run_online"] = best_of(repeat, run_online, net, x0, 0.9, OnlineHyperparams())
    return out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="5,10,20")
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--loops", type=int, default=2000)
    args = parser.parse_args()

    if _fast is None:
        print("compiled backend unavailable; showing fallback timings only")
    backends = {"python": pyfallback}
    if _fast is not None:
        backends["compiled"] = _fast

    for n in (int(s) for s in args.sizes.split(",")):
        print(f"\nn = {n} agents (per-call seconds, best of {args.repeat})")
        rows = {name: bench_kernels(mod, n, args.loops, args.repeat) for name, mod in backends.items()}
        kernels = list(next(iter(rows.values())).keys())
        width = max(len(k) for k in kernels)
        for k in kernels:
            line = f"  {k:<{width}}"
            for name in backends:
                line += f"  {name}: {rows[name][k]:.3e}"
            if len(rows) == 2:
                line += f"  speedup: {rows['python'][k] / rows['compiled'][k]:5.1f}x"
            print(line)

    import os
    import subprocess

    print("\nend-to-end (library paths, subprocess per backend):")
    for name in backends:
        code = (
            "import sys; sys.path.insert(0, 'src');"
            "from benchmarks.bench_kernels import bench_end_to_end;"
            f"print(bench_end_to_end(10, {args.repeat}))"
        )
        env = dict(os.environ, OPSTEER_KERNELS=name, PYTHONPATH="src:.")
        out = subprocess.run([sys.executable, "-c", code], capture_output=True,
                             text=True, env=env, cwd=str(Path(__file__).resolve().parent.parent))
        print(f"  {name}: {out.stdout.strip() or out.stderr.strip()}")


if __name__ == "__main__":
    main()
