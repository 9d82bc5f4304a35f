"""Two-level LS-SVR for inputs with unequal sample sizes.

Each distinct small-sample point (an *anchor*) owns a low-level LS-SVR over
the large-sample inputs. To predict at ``(x_s, x_l)`` every low-level model
is evaluated at ``x_l``; a high-level LS-SVR is then fitted over the anchors
with those predictions as targets and evaluated at ``x_s``.

The high-level targets depend on ``x_l``, so the high-level model is refitted
for every query. Its Gram matrix depends only on the anchors, so the
factorization is computed once at fit time and each query costs one
``(m+1)``-sized triangular solve.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InputShapeError, InvalidInputError, NumericalFailure, TuningError
from .lssvr import (BorderedSystem, KernelParams, LssvrModel, as_bounds, as_matrix,
                    fit_lssvr, gram_matrix)
from .tuning import grid_search_cv

DEFAULT_LOW_GAMMA = 1e3
DEFAULT_LOW_THETA = 1.0


class GroupedDataset:
    """Anchors in the small-sample space, each with its own large-sample block.

    ``groups[i]`` is ``(inputs_l, responses)`` for ``anchors[i]``.
    """

    def __init__(self, anchors, groups, bounds_s, bounds_l):
        anchors = as_matrix(anchors, "anchors")
        lo_s, hi_s = as_bounds(bounds_s, anchors.shape[1])
        groups = list(groups)
        if len(groups) != anchors.shape[0]:
            raise InvalidInputError(f"{anchors.shape[0]} anchors but {len(groups)} groups")
        q = len(bounds_l)
        lo_l, hi_l = as_bounds(bounds_l, q)
        clean = []
        for i, (xl, y) in enumerate(groups):
            xl = as_matrix(xl, f"group {i} inputs")
            y = np.asarray(y, dtype=np.float64).reshape(-1)
            if xl.shape[1] != q:
                raise InputShapeError(f"group {i} has {xl.shape[1]} columns, expected {q}")
            if y.shape[0] != xl.shape[0]:
                raise InputShapeError(f"group {i}: {xl.shape[0]} rows but {y.shape[0]} responses")
            if not np.all(np.isfinite(y)):
                raise InvalidInputError(f"group {i} has non-finite responses")
            clean.append((xl, y))
        z = (anchors - lo_s) / (hi_s - lo_s)
        for i in range(len(z)):
            gap = np.abs(z[i + 1:] - z[i]).max(axis=1) if i + 1 < len(z) else np.array([])
            if np.any(gap <= 1e-12):
                j = i + 1 + int(np.argmax(gap <= 1e-12))
                raise InvalidInputError(f"anchors {i} and {j} coincide")
        self.anchors = anchors
        self.groups = clean
        self.bounds_s = tuple(zip(lo_s.tolist(), hi_s.tolist()))
        self.bounds_l = tuple(zip(lo_l.tolist(), hi_l.tolist()))

    @property
    def m(self):
        return self.anchors.shape[0]

    @property
    def dims_s(self):
        return self.anchors.shape[1]

    @property
    def dims_l(self):
        return len(self.bounds_l)

    @property
    def n_rows(self):
        return sum(len(y) for _, y in self.groups)

    def flatten(self):
        """Rows of ``anchor + x_l`` with their responses, in group order."""
        xs, ys = [], []
        for anchor, (xl, y) in zip(self.anchors, self.groups):
            xs.append(np.hstack([np.broadcast_to(anchor, (xl.shape[0], anchor.shape[0])), xl]))
            ys.append(y)
        return np.vstack(xs), np.concatenate(ys)

    def queries(self):
        """``(query_s, query_l)`` pairs for every row, in flatten order."""
        return [(a, row) for a, (xl, _) in zip(self.anchors, self.groups) for row in xl]

    def responses(self):
        return np.concatenate([y for _, y in self.groups])


@dataclass(frozen=True)
class HighLevelPolicy:
    """Hyperparameters of the query-time high-level fit.

    ``theta=None`` selects ``1 / (2 * median pairwise squared distance)``
    between normalized anchors (``theta = 1`` when there are fewer than three).
    """

    gamma: float = 1e4
    theta: float = None

    def resolve_theta(self, anchors_normalized):
        if self.theta is not None:
            return float(self.theta)
        m = anchors_normalized.shape[0]
        if m < 3:
            return 1.0
        diff = anchors_normalized[:, None, :] - anchors_normalized[None, :, :]
        sq = (diff ** 2).sum(axis=-1)[np.triu_indices(m, k=1)]
        med = float(np.median(sq))
        return 1.0 / (2.0 * med) if med > 0 else 1.0


@dataclass(frozen=True, eq=False)
class HlsvrModel:
    anchors: np.ndarray
    low_models: tuple
    high_policy: HighLevelPolicy
    bounds_s: tuple
    bounds_l: tuple
    low_tuning: tuple = ()
    _high: tuple = field(default=None, repr=False)

    def __post_init__(self):
        anchors = np.array(self.anchors, dtype=np.float64)
        anchors.setflags(write=False)
        object.__setattr__(self, "anchors", anchors)
        object.__setattr__(self, "low_models", tuple(self.low_models))
        if len(self.low_models) != anchors.shape[0]:
            raise InvalidInputError("exactly one low-level model per anchor is required")
        dims = {lm.dim for lm in self.low_models}
        if len(dims) != 1:
            raise InvalidInputError(f"low-level models disagree on input dimension: {sorted(dims)}")
        lo, hi = as_bounds(self.bounds_s, anchors.shape[1])
        z = (anchors - lo) / (hi - lo)
        params = KernelParams(self.high_policy.resolve_theta(z))
        system = BorderedSystem(gram_matrix(z, params), self.high_policy.gamma)
        object.__setattr__(self, "_high", (z, lo, hi, params, system))

    @property
    def m(self):
        return self.anchors.shape[0]

    @property
    def dims_s(self):
        return self.anchors.shape[1]

    @property
    def dims_l(self):
        return self.low_models[0].dim

    @property
    def high_theta(self):
        return self._high[3].theta

    def high_level_model(self, targets):
        """The high-level LS-SVR fitted to ``targets`` (one value per anchor)."""
        z, lo, hi, params, system = self._high
        alphas, bias = system.solve(np.asarray(targets, dtype=np.float64))
        return LssvrModel(z, alphas, bias, params, system.gamma, lo, hi, system.condition)

    def low_level_predictions(self, query_l):
        return np.array([lm.predict(query_l) for lm in self.low_models])


def _check_query(model, query_s, query_l):
    qs = np.asarray(query_s, dtype=np.float64).reshape(-1)
    ql = np.asarray(query_l, dtype=np.float64).reshape(-1)
    if qs.shape[0] != model.dims_s or ql.shape[0] != model.dims_l:
        raise InputShapeError(
            f"query dimensions ({qs.shape[0]}, {ql.shape[0]}) do not match model "
            f"({model.dims_s}, {model.dims_l})")
    if not (np.all(np.isfinite(qs)) and np.all(np.isfinite(ql))):
        raise InvalidInputError("query contains non-finite entries")
    return qs, ql


def fit_hlsvr(data, tuner=None, policy=None, gamma=DEFAULT_LOW_GAMMA, theta=DEFAULT_LOW_THETA):
    """Fit one low-level LS-SVR per anchor.

    With a ``TuningConfig`` each group's ``(gamma, theta)`` is chosen by its
    own cross-validated grid search; groups with a single row, or all groups
    when ``tuner`` is None, use the fixed ``gamma`` and ``theta``.
    """
    if not isinstance(data, GroupedDataset) or data.m < 1:
        raise InvalidInputError("fit_hlsvr needs a non-empty GroupedDataset")
    low, chosen = [], []
    for i, (xl, y) in enumerate(data.groups):
        g, t = gamma, theta
        if tuner is not None and len(y) >= 2:
            try:
                g, t, _ = grid_search_cv(xl, y, tuner, bounds=data.bounds_l)
            except (TuningError, NumericalFailure) as exc:
                raise NumericalFailure(f"tuning failed for group {i}: {exc}") from exc
        try:
            low.append(fit_lssvr(xl, y, g, KernelParams(t), bounds=data.bounds_l))
        except NumericalFailure as exc:
            raise NumericalFailure(f"low-level fit failed for group {i}: {exc}",
                                   exc.condition) from exc
        chosen.append((float(g), float(t)))
    return HlsvrModel(data.anchors, low, policy or HighLevelPolicy(),
                      data.bounds_s, data.bounds_l, tuple(chosen))


def predict_hlsvr(model, query_s, query_l):
    qs, ql = _check_query(model, query_s, query_l)
    return model.high_level_model(model.low_level_predictions(ql)).predict(qs)


def predict_batch(model, queries):
    """``predict_hlsvr`` over a list of ``(query_s, query_l)`` pairs, order preserved."""
    queries = list(queries)
    if not queries:
        raise InvalidInputError("predict_batch needs at least one query")
    out = np.empty(len(queries))
    for k, (qs, ql) in enumerate(queries):
        try:
            out[k] = predict_hlsvr(model, qs, ql)
        except (InputShapeError, InvalidInputError, NumericalFailure) as exc:
            raise type(exc)(f"query {k}: {exc}") from exc
    return out
