"""Compare the numba kernels against their pure-numpy twins.

    python benchmarks/bench_kernels.py [--repeat 5]

Kernel timings call both implementations directly in one process. The
end-to-end row times HL-SVR ``predict_batch`` in two subprocesses, one with
``HLSVR_DISABLE_NUMBA=1``, because the backend is fixed at import time.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from hlsvr._kernels import numba_impl, numpy_impl

END_TO_END = """
import time
from hlsvr._kernels import USING_NUMBA
from hlsvr.benchmarks import get_problem
from hlsvr.hierarchical import fit_hlsvr, predict_batch
from hlsvr.sampling import generate_nested
p = get_problem("ex3")
train, test = generate_nested(p.design.with_seed(0), p.evaluator)
model = fit_hlsvr(train)
queries = test.queries() * 25
predict_batch(model, queries[:5])
t0 = time.perf_counter()
for _ in range({repeat}):
    predict_batch(model, queries)
print(USING_NUMBA, (time.perf_counter() - t0) / {repeat})
"""


def best_of(fn, repeat):
    fn()  # warm-up; compiles the numba variant
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_cases(rng):
    a, b = rng.random((400, 8)), rng.random((300, 8))
    alphas = rng.normal(size=300)
    ranks2 = np.arange(2, 42, 2, dtype=np.int64)  # n = 20, doubled ranks
    return {
        "sq_dists 400x300x8": lambda impl: impl.sq_dists(a, b),
        "rbf_cross 400x300x8": lambda impl: impl.rbf_cross(a, b, 0.7),
        "kernel_expand 400 q / 300 sv": lambda impl: impl.kernel_expand(b, alphas, 0.1, a, 0.7),
        "wilcoxon_count_ge n=20": lambda impl: impl.wilcoxon_count_ge(ranks2, np.int64(300)),
    }


def end_to_end(repeat, disable):
    env = dict(os.environ)
    if disable:
        env["HLSVR_DISABLE_NUMBA"] = "1"
    else:
        env.pop("HLSVR_DISABLE_NUMBA", None)
    out = subprocess.run([sys.executable, "-c", END_TO_END.format(repeat=repeat)], env=env,
                         capture_output=True, text=True, check=True).stdout.split()
    return float(out[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-end-to-end", action="store_true")
    args = ap.parse_args(argv)
    if numba_impl is None:
        sys.exit("numba is not importable; nothing to compare")

    rng = np.random.default_rng(0)
    print(f"{'case':34s} {'numba ms':>10s} {'numpy ms':>10s} {'speed-up':>9s}")
    for name, call in kernel_cases(rng).items():
        t_nb = best_of(lambda: call(numba_impl), args.repeat)
        t_np = best_of(lambda: call(numpy_impl), args.repeat)
        print(f"{name:34s} {t_nb * 1e3:10.3f} {t_np * 1e3:10.3f} {t_np / t_nb:8.2f}x")
    if not args.skip_end_to_end:
        t_nb = end_to_end(args.repeat, disable=False)
        t_np = end_to_end(args.repeat, disable=True)
        print(f"{'HL-SVR predict_batch ex3 1000 q':34s} {t_nb * 1e3:10.3f} {t_np * 1e3:10.3f} "
              f"{t_np / t_nb:8.2f}x")


if __name__ == "__main__":
    main()
