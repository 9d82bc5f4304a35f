"""Analytic test problems with split small-/large-sample inputs.

Evaluators take ``x_s`` and ``x_l`` as vectors or as row-aligned 2-D arrays
and return a float or an array with one value per row.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .sampling import NestedDesignSpec


def _cols(x):
    x = np.asarray(x, dtype=np.float64)
    return [x[..., k] for k in range(x.shape[-1])]


def _scalar(y):
    return float(y) if np.ndim(y) == 0 else y


def eval_ex1(x_s, x_l):
    """Branin-type response; small-sample inputs shift the bowl and add a cosine offset."""
    s1, s2 = _cols(x_s)
    l1, l2 = _cols(x_l)
    y = ((l1 - 5.1 * s1 ** 2 / (4 * np.pi ** 2) + 5 * l2 / np.pi - 6) ** 2
         + 10 * (1 - 1 / (8 * np.pi)) * np.cos(s2) + 10)
    return _scalar(y)


def eval_ex2(x_s, x_l):
    """Six-hump-camel-type response with one small-sample input."""
    (s1,) = _cols(x_s)
    l1, l2 = _cols(x_l)
    y = l1 ** 2 * (4 - 2.1 * s1 ** 2 + s1 ** 4 / 3) + l1 * s1 + (4 * l1 ** 2 - 4) * l2 ** 2
    return _scalar(y)


def eval_ex3(x_s, x_l):
    s1, s2, s3, s4 = _cols(x_s)
    l1, l2, l3, l4 = _cols(x_l)
    y = ((1 - 2 * l1 + 0.05 * np.sin(4 * np.pi * l2) - s1) ** 2
         + (l3 - 0.5 * np.sin(2 * np.pi * s2)) ** 2
         + (l4 - 0.5 * np.sin(2 * np.pi * s3)) ** 2
         + s4)
    return _scalar(y)


@dataclass(frozen=True)
class BenchmarkProblem:
    id: str
    dims_s: int
    dims_l: int
    evaluator: Callable
    design: NestedDesignSpec

    @property
    def bounds_s(self):
        return self.design.bounds_s

    @property
    def bounds_l(self):
        return self.design.bounds_l

    def __call__(self, x_s, x_l):
        return self.evaluator(x_s, x_l)


def _box(lo, hi, d):
    return tuple((lo, hi) for _ in range(d))


# train and test sizes as (anchors, points per anchor)
PROBLEMS = {
    "ex1": BenchmarkProblem(
        "ex1", 2, 2, eval_ex1,
        NestedDesignSpec(_box(-1.0, 1.0, 2), _box(-1.0, 1.0, 2), 4, 10, 20, 6)),
    "ex2": BenchmarkProblem(
        "ex2", 1, 2, eval_ex2,
        NestedDesignSpec(_box(0.0, 1.0, 1), _box(0.0, 1.0, 2), 3, 20, 10, 6)),
    "ex3": BenchmarkProblem(
        "ex3", 4, 4, eval_ex3,
        NestedDesignSpec(_box(0.0, 1.0, 4), _box(0.0, 1.0, 4), 8, 40, 40, 1)),
}


def get_problem(problem_id):
    try:
        return PROBLEMS[problem_id.lower()]
    except KeyError:
        raise KeyError(f"unknown problem {problem_id!r}; choose from {sorted(PROBLEMS)}") from None
