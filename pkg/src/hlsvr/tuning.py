"""Grid search over (gamma, theta) with cross-validated RMSE."""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import InvalidInputError, NumericalFailure, TuningError
from .lssvr import BorderedSystem, as_bounds, as_matrix

LOO_BELOW = 10


def _decades(lo, hi):
    return tuple(float(10.0 ** k) for k in range(lo, hi + 1))


@dataclass(frozen=True)
class TuningConfig:
    gamma_grid: tuple = field(default_factory=lambda: _decades(0, 6))
    theta_grid: tuple = field(default_factory=lambda: _decades(-3, 3))
    folds: int = 5
    seed: int = 0

    def __post_init__(self):
        for name in ("gamma_grid", "theta_grid"):
            grid = tuple(sorted(float(v) for v in getattr(self, name)))
            if not grid:
                raise InvalidInputError(f"{name} must not be empty")
            if not all(np.isfinite(v) and v > 0 for v in grid):
                raise InvalidInputError(f"{name} must hold positive finite values")
            object.__setattr__(self, name, grid)
        if int(self.folds) != self.folds or self.folds < 2:
            raise InvalidInputError(f"folds must be an integer >= 2, got {self.folds!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidInputError("seed must fit in an unsigned 64-bit integer")
        object.__setattr__(self, "folds", int(self.folds))
        object.__setattr__(self, "seed", int(self.seed))


class TuningResult(NamedTuple):
    gamma: float
    theta: float
    cv_rmse: float


def fold_indices(n, folds, seed):
    """Seeded shuffle of ``range(n)`` split into ``folds`` near-equal parts."""
    if n < folds:
        raise InvalidInputError(f"cannot split {n} samples into {folds} folds")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(part) for part in np.array_split(perm, folds)]


def effective_folds(n, config):
    """Leave-one-out for small samples, ``config.folds``-fold otherwise."""
    if n < 2:
        raise InvalidInputError("cross-validation needs at least two samples")
    return n if n < LOO_BELOW else config.folds


def cv_rmse(z, y, gamma, theta, folds):
    """Mean per-fold RMSE for one grid cell; ``z`` is already normalized."""
    gram = _kernels.rbf_cross(z, z, theta)
    return _cv_from_gram(gram, y, gamma, folds)


def _cv_from_gram(gram, y, gamma, folds):
    n = y.shape[0]
    scores = []
    for test in folds:
        train = np.setdiff1d(np.arange(n), test, assume_unique=True)
        system = BorderedSystem(gram[np.ix_(train, train)], gamma)
        alphas, bias = system.solve(y[train])
        pred = gram[np.ix_(test, train)] @ alphas + bias
        scores.append(np.sqrt(np.mean((y[test] - pred) ** 2)))
    return float(np.mean(scores))


def grid_search_cv(inputs, responses, config=None, bounds=None):
    """Return the ``(gamma, theta, cv_rmse)`` cell with the lowest CV RMSE.

    Ties go to the smaller gamma, then the smaller theta. Cells whose solves
    fail numerically are skipped; if all fail a ``TuningError`` lists them.
    """
    config = config or TuningConfig()
    x = as_matrix(inputs)
    y = np.asarray(responses, dtype=np.float64)
    if y.shape != (x.shape[0],):
        raise InvalidInputError(f"{x.shape[0]} inputs but responses of shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise InvalidInputError("responses contain non-finite values")
    if bounds is not None:
        lower, upper = as_bounds(bounds, x.shape[1])
        x = (x - lower) / (upper - lower)
    n = x.shape[0]
    folds = fold_indices(n, effective_folds(n, config), config.seed)

    best = None
    failures = {}
    sq = _kernels.sq_dists(x, x)
    for theta in config.theta_grid:
        gram = np.exp(-theta * sq)
        for gamma in config.gamma_grid:
            try:
                score = _cv_from_gram(gram, y, gamma, folds)
            except NumericalFailure as exc:
                failures[(gamma, theta)] = exc
                continue
            cell = (score, gamma, theta)
            if best is None or cell < best:
                best = cell
    if best is None:
        raise TuningError(f"all {len(failures)} grid cells failed", failures)
    score, gamma, theta = best
    return TuningResult(gamma, theta, score)
