"""Time the MAR fixed-point kernel under each backend, then a full suite run.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time
from pathlib import Path

import numpy as np

from seqident.io import read_counts
from seqident.kernels import BACKEND, available_backends, mar_em, materialized_index_map
from seqident.sensitivity import DirichletPrior, load_suite, run_suite, sample_posterior

DATA = Path(__file__).resolve().parent.parent / "data"


def em_case(rng, n_ctx, cards):
    mat = materialized_index_map(cards)
    g = rng.random((n_ctx, int(mat.max()) + 1)) + 0.02
    g /= g.sum(axis=1, keepdims=True)
    return g, mat


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    print(f"default backend: {BACKEND}")
    print(f"{'cards':<12}{'contexts':>9}  " + "".join(f"{b:>14}" for b in available_backends()) + "   iterations")
    for cards, n_ctx in [((2, 2), 4), ((3, 3), 9), ((2, 2, 2), 3), ((3, 3, 3), 1), ((3, 3), 200)]:
        g, mat = em_case(rng, n_ctx, cards)
        cells = []
        for backend in available_backends():
            def run():
                q = np.full((n_ctx, mat.shape[1]), 1.0 / mat.shape[1])
                return mar_em(g, mat, q, backend=backend)
            t, (iters, _) = best_of(run, args.repeat)
            cells.append(f"{t * 1e3:11.3f} ms")
        print(f"{str(cards):<12}{n_ctx:>9}  " + "".join(f"{c:>14}" for c in cells) + f"   {iters:>10}")

    counts = read_counts(DATA / "synthetic_survey_counts.txt")
    config = load_suite(DATA / "suite_six.json", counts.space)
    draws = sample_posterior(counts, DirichletPrior.symmetric(counts.space, config.prior_alpha), 500, seed=0)
    t, _ = best_of(lambda: run_suite(draws, config.suite, config.estimands), 1)
    print(f"suite, {len(config.suite.mechanisms)} mechanisms x 500 draws: {t:.2f} s ({BACKEND})")


if __name__ == "__main__":
    main()
