"""Latin hypercube designs and nested (anchor, sub-design) data generation."""

from dataclasses import dataclass

import numpy as np

from .errors import GenerationError, InvalidInputError
from .lssvr import as_bounds

# role tags for seed derivation; values are part of the reproducibility contract
ROLE_TAGS = {
    "train_anchor": 1,
    "train_group": 2,
    "test_anchor": 3,
    "test_group": 4,
    "repetition": 5,
    "dental": 6,
    "tuning": 7,
}


def derive_seed(master, role, *index):
    """Child seed from ``(master, role, index...)`` via numpy's SeedSequence mixer."""
    tag = ROLE_TAGS[role] if isinstance(role, str) else int(role)
    ss = np.random.SeedSequence(int(master), spawn_key=(tag, *map(int, index)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def lhs(n, d, bounds, seed):
    """``n`` points in ``d`` dimensions, exactly one per stratum in every dimension.

    Stratum ``j`` of a dimension is ``[lo + j (hi-lo)/n, lo + (j+1) (hi-lo)/n)``.
    """
    if int(n) != n or n < 1 or int(d) != d or d < 1:
        raise InvalidInputError(f"lhs needs n >= 1 and d >= 1, got n={n}, d={d}")
    n, d = int(n), int(d)
    lower, upper = as_bounds(bounds, d)
    rng = np.random.default_rng(seed)
    out = np.empty((n, d))
    width = upper - lower
    for k in range(d):
        strata = rng.permutation(n)
        u = (strata + rng.random(n)) / n
        x = lower[k] + u * width[k]
        # rounding can push a point onto the next stratum's edge; pull it back
        for _ in range(4):
            got = np.floor((x - lower[k]) / width[k] * n)
            bad = got != strata
            if not bad.any():
                break
            lo_edge = lower[k] + strata[bad] * width[k] / n
            x[bad] = np.where(got[bad] > strata[bad],
                              np.nextafter(x[bad], -np.inf),
                              np.maximum(np.nextafter(x[bad], np.inf), lo_edge))
        out[:, k] = x
    return out


def stratum_occupancy(x, bounds):
    """Per-dimension count of points in each of the ``n`` strata (``d x n`` array)."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    n, d = x.shape
    lower, upper = as_bounds(bounds, d)
    idx = np.floor((x - lower) / (upper - lower) * n).astype(np.int64)
    counts = np.zeros((d, n), dtype=np.int64)
    for k in range(d):
        inside = (idx[:, k] >= 0) & (idx[:, k] < n)
        np.add.at(counts[k], idx[inside, k], 1)
    return counts


@dataclass(frozen=True)
class NestedDesignSpec:
    bounds_s: tuple
    bounds_l: tuple
    m_train: int
    k_train: int
    m_test: int
    k_test: int
    seed: int = 0

    def __post_init__(self):
        as_bounds(self.bounds_s)
        as_bounds(self.bounds_l)
        object.__setattr__(self, "bounds_s", tuple(tuple(map(float, b)) for b in self.bounds_s))
        object.__setattr__(self, "bounds_l", tuple(tuple(map(float, b)) for b in self.bounds_l))
        for name in ("m_train", "k_train", "m_test", "k_test"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise InvalidInputError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))

    @property
    def dims_s(self):
        return len(self.bounds_s)

    @property
    def dims_l(self):
        return len(self.bounds_l)

    def with_seed(self, seed):
        return NestedDesignSpec(self.bounds_s, self.bounds_l, self.m_train, self.k_train,
                                self.m_test, self.k_test, seed)


def _evaluate(f, anchor, xl):
    y = np.asarray(f(np.broadcast_to(anchor, (xl.shape[0], anchor.shape[0])), xl),
                   dtype=np.float64).reshape(-1)
    bad = ~np.isfinite(y)
    if bad.any():
        i = int(np.argmax(bad))
        point = np.concatenate([anchor, xl[i]])
        raise GenerationError(f"response function returned {y[i]} at {point.tolist()}", point)
    return y


def _nested(spec, f, m, k, anchor_role, group_role):
    from .hierarchical import GroupedDataset

    anchors = lhs(m, spec.dims_s, spec.bounds_s, derive_seed(spec.seed, anchor_role))
    groups = []
    for i in range(m):
        xl = lhs(k, spec.dims_l, spec.bounds_l, derive_seed(spec.seed, group_role, i))
        groups.append((xl, _evaluate(f, anchors[i], xl)))
    return GroupedDataset(anchors, groups, spec.bounds_s, spec.bounds_l)


def generate_nested(spec, f):
    """Build ``(train, test)`` grouped datasets for response ``f(x_s, x_l)``.

    ``f`` receives row-aligned arrays of small-sample and large-sample inputs
    and returns one response per row.
    """
    train = _nested(spec, f, spec.m_train, spec.k_train, "train_anchor", "train_group")
    test = _nested(spec, f, spec.m_test, spec.k_test, "test_anchor", "test_group")
    return train, test
