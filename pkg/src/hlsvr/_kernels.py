"""Hot numeric loops, compiled with numba when available.

Every kernel has a pure-numpy twin with the same signature. The numba
versions are used unless ``HLSVR_DISABLE_NUMBA`` is set to a truthy value
or numba cannot be imported. Both variants stay importable under
``numba_impl`` / ``numpy_impl`` so tests and the benchmark can compare them.
"""

import os
from types import SimpleNamespace

import numpy as np

_FLAG = os.environ.get("HLSVR_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _FLAG not in ("", "0", "false", "no")

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    njit = None


# --------------------------------------------------------------------------
# pure numpy
# --------------------------------------------------------------------------

def _sq_dists_np(a, b):
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _rbf_cross_np(a, b, theta):
    return np.exp(-theta * _sq_dists_np(a, b))


def _kernel_expand_np(support, alphas, bias, queries, theta):
    # row-wise reduction keeps each row's value independent of the batch size
    return (_rbf_cross_np(queries, support, theta) * alphas).sum(axis=1) + bias


def _wilcoxon_count_ge_np(ranks2, w_obs2):
    # meet in the middle: sums over all 2^n subsets = outer sum of two halves
    n = ranks2.shape[0]
    half = n // 2

    def subset_sums(r):
        sums = np.zeros(1, dtype=np.int64)
        for v in r:
            sums = np.concatenate((sums, sums + v))
        return sums

    lo = subset_sums(ranks2[:half])
    hi = np.sort(subset_sums(ranks2[half:]))
    # for each low sum count high sums >= w_obs2 - low
    idx = np.searchsorted(hi, w_obs2 - lo, side="left")
    return int(np.sum(hi.shape[0] - idx))


numpy_impl = SimpleNamespace(
    sq_dists=_sq_dists_np,
    rbf_cross=_rbf_cross_np,
    kernel_expand=_kernel_expand_np,
    wilcoxon_count_ge=_wilcoxon_count_ge_np,
)


# --------------------------------------------------------------------------
# numba
# --------------------------------------------------------------------------

def _sq_dists_loop(a, b):
    na, d = a.shape
    nb = b.shape[0]
    out = np.empty((na, nb))
    for i in range(na):
        for j in range(nb):
            s = 0.0
            for k in range(d):
                t = a[i, k] - b[j, k]
                s += t * t
            out[i, j] = s
    return out


def _rbf_cross_loop(a, b, theta):
    na, d = a.shape
    nb = b.shape[0]
    out = np.empty((na, nb))
    for i in range(na):
        for j in range(nb):
            s = 0.0
            for k in range(d):
                t = a[i, k] - b[j, k]
                s += t * t
            out[i, j] = np.exp(-theta * s)
    return out


def _kernel_expand_loop(support, alphas, bias, queries, theta):
    nq, d = queries.shape
    ns = support.shape[0]
    out = np.empty(nq)
    for q in range(nq):
        acc = 0.0
        for i in range(ns):
            s = 0.0
            for k in range(d):
                t = queries[q, k] - support[i, k]
                s += t * t
            acc += alphas[i] * np.exp(-theta * s)
        out[q] = acc + bias
    return out


def _subset_sums_loop(r):
    sums = np.zeros(np.int64(1) << r.shape[0], dtype=np.int64)
    size = 1
    for v in r:
        for i in range(size):
            sums[size + i] = sums[i] + v
        size *= 2
    return sums


def _wilcoxon_count_ge_loop(ranks2, w_obs2):
    # meet in the middle; both halves sorted, then one two-pointer sweep
    half = ranks2.shape[0] // 2
    lo = np.sort(_subset_sums_loop(ranks2[:half]))
    hi = np.sort(_subset_sums_loop(ranks2[half:]))
    count = np.int64(0)
    j = hi.shape[0]
    # lo ascending -> threshold w_obs2 - lo descending, so j only moves left
    for i in range(lo.shape[0]):
        need = w_obs2 - lo[i]
        while j > 0 and hi[j - 1] >= need:
            j -= 1
        count += hi.shape[0] - j
    return count


if njit is not None:
    # rebound so the compiled Wilcoxon kernel resolves the jitted helper
    _subset_sums_loop = njit(cache=True)(_subset_sums_loop)
    numba_impl = SimpleNamespace(
        sq_dists=njit(cache=True)(_sq_dists_loop),
        rbf_cross=njit(cache=True)(_rbf_cross_loop),
        kernel_expand=njit(cache=True)(_kernel_expand_loop),
        wilcoxon_count_ge=njit(cache=True)(_wilcoxon_count_ge_loop),
    )
else:  # pragma: no cover
    numba_impl = None

USING_NUMBA = numba_impl is not None and not _DISABLED
_active = numba_impl if USING_NUMBA else numpy_impl


def sq_dists(a, b):
    """Pairwise squared Euclidean distances between rows of ``a`` and ``b``."""
    return _active.sq_dists(np.ascontiguousarray(a, dtype=np.float64),
                            np.ascontiguousarray(b, dtype=np.float64))


def rbf_cross(a, b, theta):
    """``exp(-theta * ||a_i - b_j||^2)`` for every row pair."""
    return _active.rbf_cross(np.ascontiguousarray(a, dtype=np.float64),
                             np.ascontiguousarray(b, dtype=np.float64),
                             float(theta))


def kernel_expand(support, alphas, bias, queries, theta):
    """Evaluate ``sum_i alphas[i] * k(support_i, q) + bias`` for each query row."""
    return _active.kernel_expand(
        np.ascontiguousarray(support, dtype=np.float64),
        np.ascontiguousarray(alphas, dtype=np.float64),
        float(bias),
        np.ascontiguousarray(queries, dtype=np.float64),
        float(theta),
    )


def wilcoxon_count_ge(ranks2, w_obs2):
    """Number of sign patterns whose doubled positive-rank sum is >= ``w_obs2``."""
    return int(_active.wilcoxon_count_ge(np.ascontiguousarray(ranks2, dtype=np.int64),
                                         np.int64(w_obs2)))
