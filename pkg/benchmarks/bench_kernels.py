"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3] [--quick]
"""
import argparse
import time

import numpy as np

from lowdim_maxcut.graph import random_graph
from lowdim_maxcut.kernels import implementations


def _cases(quick):
    rng = np.random.default_rng(0)
    n_bf = 16 if quick else 20
    W = np.ascontiguousarray(random_graph(n_bf, 0.5, rng, weighted=True).adjacency)

    V = rng.standard_normal((60 if quick else 120, 3))
    V /= np.linalg.norm(V, axis=1)[:, None]
    R = np.ascontiguousarray(V @ V.T)

    G = random_graph(50, 0.2, rng, weighted=True)
    ip, ix, w = G.csr
    proj = np.ascontiguousarray(rng.standard_normal((4096, G.n)) * 0.3)

    S = 20_000 if quick else 200_000
    gauss = rng.standard_normal((S, 5))
    vecs = rng.standard_normal((20, 5))
    wts = np.ones(20)

    return [
        (f"maxcut_enumerate n={n_bf}", lambda k: k.maxcut_enumerate(W)),
        (f"triangle_terms n={R.shape[0]}", lambda k: k.triangle_terms(R, True)),
        ("local_improve_batch 4096x50", lambda k: k.local_improve_batch(ip, ix, w, proj, 0.05)),
        (f"sign_moment_sums {S}x20", lambda k: k.sign_moment_sums(gauss, vecs, wts)),
    ]


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args()
    impls = implementations()
    names = list(impls)
    print(f"{'kernel':<34}" + "".join(f"{n:>12}" for n in names) + f"{'speedup':>10}")
    for label, call in _cases(args.quick):
        times = {n: _time(lambda: call(impls[n]), args.repeat) for n in names}
        line = f"{label:<34}" + "".join(f"{times[n] * 1e3:>10.2f}ms" for n in names)
        if "compiled" in times:
            line += f"{times['pure'] / times['compiled']:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
