"""RBF least-squares support vector regression.

Training solves the bordered dual system

    [ K + I/gamma   1 ] [alpha]   [y]
    [ 1^T           0 ] [  b  ] = [0]

with a dense LU factorization (partial pivoting) followed by one step of
iterative refinement. Predictions are ``sum_i alpha_i k(x_i, x) + b``.

The kernel is ``k(x, z) = exp(-theta * ||x - z||^2)``. A Gaussian written
as ``exp(-||x - z||^2 / (2 sigma^2))`` corresponds to
``theta = 1 / (2 sigma^2)``.

All fitting happens in normalized coordinates: when bounds are supplied the
inputs are mapped affinely onto the unit box and the model applies the same
map to every query.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack

from . import _kernels
from .errors import InputShapeError, InvalidInputError, NumericalFailure

MAX_CONDITION = 1e14
JITTER_SCALE = 1e-10


@dataclass(frozen=True)
class KernelParams:
    theta: float

    def __post_init__(self):
        theta = float(self.theta)
        if not np.isfinite(theta) or theta <= 0:
            raise InvalidInputError(f"theta must be positive and finite, got {self.theta!r}")
        object.__setattr__(self, "theta", theta)


def as_bounds(bounds, d=None):
    """Validate ``bounds`` (d pairs of lo, hi) and return ``(lower, upper)`` arrays."""
    arr = np.asarray(bounds, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InputShapeError(f"bounds must be a sequence of (lo, hi) pairs, got shape {arr.shape}")
    if d is not None and arr.shape[0] != d:
        raise InputShapeError(f"expected {d} bound pairs, got {arr.shape[0]}")
    lower, upper = arr[:, 0].copy(), arr[:, 1].copy()
    if not (np.all(np.isfinite(arr)) and np.all(lower < upper)):
        raise InvalidInputError("bounds must be finite with lo < hi in every dimension")
    return lower, upper


def as_matrix(x, name="inputs"):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise InputShapeError(f"{name} must be a 2-D array, got {x.ndim} dimensions")
    if x.shape[0] < 1:
        raise InvalidInputError(f"{name} must have at least one row")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return x


def _as_vector(x, name):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InputShapeError(f"{name} must be a 1-D vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return x


def rbf_kernel(x, z, params):
    """``exp(-theta * ||x - z||^2)`` for two points of equal dimension."""
    x = _as_vector(x, "x")
    z = _as_vector(z, "z")
    if x.shape != z.shape:
        raise InputShapeError(f"dimension mismatch: {x.shape[0]} vs {z.shape[0]}")
    diff = x - z
    return float(np.exp(-params.theta * float(diff @ diff)))


def gram_matrix(inputs, params):
    """Symmetric RBF Gram matrix of the rows of ``inputs``."""
    x = as_matrix(inputs)
    return _kernels.rbf_cross(x, x, params.theta)


class BorderedSystem:
    """Factorization of the LS-SVR dual system for a fixed Gram matrix.

    ``solve`` may be called repeatedly with different response vectors; the
    hierarchical model relies on this for its query-time high-level fits.
    """

    def __init__(self, gram, gamma):
        gram = np.asarray(gram, dtype=np.float64)
        n = gram.shape[0]
        if gram.shape != (n, n) or n < 1:
            raise InputShapeError(f"Gram matrix must be square and non-empty, got {gram.shape}")
        gamma = float(gamma)
        if not np.isfinite(gamma) or gamma <= 0:
            raise InvalidInputError(f"gamma must be positive and finite, got {gamma!r}")
        self.n = n
        self.gamma = gamma
        self.jitter = 0.0
        self.condition = 1.0
        if n == 1:
            # second row forces alpha = 0, first row then forces b = y
            self.matrix = None
            return
        self._gram = gram
        self._ridge = 1.0 / gamma
        if not self._factor():
            self.jitter = JITTER_SCALE * np.trace(gram) / n
            self._ridge = 1.0 / gamma + self.jitter
            if not self._factor():
                raise NumericalFailure(
                    f"LS-SVR system is singular or ill-conditioned "
                    f"(condition estimate {self.condition:.3e}) even after jitter",
                    condition=self.condition,
                )

    @staticmethod
    def _assemble(gram, ridge, scale=1.0):
        n = gram.shape[0]
        a = np.zeros((n + 1, n + 1))
        a[:n, :n] = gram
        a[np.arange(n), np.arange(n)] += ridge
        a[:n, :n] /= scale
        a[:n, n] = 1.0
        a[n, :n] = 1.0
        return a

    def _factor(self):
        # solve for scale * alpha so the kernel block has unit-size diagonal;
        # without this a large ridge (tiny gamma) looks ill-conditioned
        self._scale = float(np.mean(np.diag(self._gram))) + self._ridge
        a = self.matrix = self._assemble(self._gram, self._ridge, self._scale)
        anorm = np.abs(a).sum(axis=0).max()
        lu, piv, info = lapack.dgetrf(a)
        if info > 0:
            self.condition = np.inf
            return False
        rcond, _ = lapack.dgecon(lu, anorm, norm="1")
        self.condition = np.inf if rcond == 0 else 1.0 / rcond
        if self.condition > MAX_CONDITION:
            return False
        self._lu, self._piv = lu, piv
        return True

    def _lu_solve(self, rhs):
        x, info = lapack.dgetrs(self._lu, self._piv, rhs)
        if info != 0:  # pragma: no cover - dgetrs only fails on bad arguments
            raise NumericalFailure(f"dgetrs failed with info={info}")
        return x

    def solve(self, responses):
        """Return ``(alphas, bias)`` for the given response vector."""
        y = np.asarray(responses, dtype=np.float64)
        if y.shape != (self.n,):
            raise InputShapeError(f"expected {self.n} responses, got shape {y.shape}")
        if self.n == 1:
            return np.zeros(1), float(y[0])
        if np.all(y == y[0]):
            # alpha = 0, b = c satisfies the system exactly
            return np.zeros(self.n), float(y[0])
        rhs = np.append(y, 0.0)
        x = self._lu_solve(rhs)
        x = x + self._lu_solve(rhs - self.matrix @ x)
        return x[:-1] / self._scale, float(x[-1])

    def residual(self, alphas, bias, responses):
        """Infinity-norm residual of ``(alphas, bias)`` in the assembled system."""
        rhs = np.append(np.asarray(responses, dtype=np.float64), 0.0)
        if self.matrix is None:
            a = np.array([[1.0 + 1.0 / self.gamma, 1.0], [1.0, 0.0]])
        else:
            a = self._assemble(self._gram, self._ridge)
        return float(np.max(np.abs(a @ np.append(alphas, bias) - rhs)))


@dataclass(frozen=True, eq=False)
class LssvrModel:
    """A fitted LS-SVR. Immutable; safe to share between threads."""

    support_inputs: np.ndarray
    alphas: np.ndarray
    bias: float
    kernel: KernelParams
    gamma: float
    lower: np.ndarray
    upper: np.ndarray
    condition: float = field(default=1.0, compare=False)

    def __post_init__(self):
        for name in ("support_inputs", "alphas", "lower", "upper"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (np.all(np.isfinite(self.alphas)) and np.isfinite(self.bias)):
            raise NumericalFailure("fitted LS-SVR has non-finite coefficients")

    @property
    def dim(self):
        return self.support_inputs.shape[1]

    def normalize(self, x):
        return (x - self.lower) / (self.upper - self.lower)

    def predict(self, query):
        """Prediction at a single d-vector."""
        q = _as_vector(query, "query")
        if q.shape[0] != self.dim:
            raise InputShapeError(f"query has dimension {q.shape[0]}, model expects {self.dim}")
        return float(self.predict_many(q[None, :])[0])

    def predict_many(self, queries):
        q = as_matrix(queries, "queries")
        if q.shape[1] != self.dim:
            raise InputShapeError(f"queries have dimension {q.shape[1]}, model expects {self.dim}")
        if not np.any(self.alphas):
            return np.full(q.shape[0], self.bias)
        return _kernels.kernel_expand(self.support_inputs, self.alphas, self.bias,
                                      self.normalize(q), self.kernel.theta)


def fit_lssvr(inputs, responses, gamma, params, bounds=None):
    """Fit an RBF LS-SVR.

    ``bounds`` gives the box mapped onto ``[0, 1]^d`` before fitting; with
    ``None`` the inputs are used as-is.
    """
    x = as_matrix(inputs)
    y = _as_vector(responses, "responses")
    if y.shape[0] != x.shape[0]:
        raise InputShapeError(f"{x.shape[0]} input rows but {y.shape[0]} responses")
    if not isinstance(params, KernelParams):
        params = KernelParams(params)
    if bounds is None:
        lower, upper = np.zeros(x.shape[1]), np.ones(x.shape[1])
    else:
        lower, upper = as_bounds(bounds, x.shape[1])
    z = (x - lower) / (upper - lower)
    system = BorderedSystem(_kernels.rbf_cross(z, z, params.theta), gamma)
    alphas, bias = system.solve(y)
    return LssvrModel(z, alphas, bias, params, float(gamma), lower, upper, system.condition)


def predict_lssvr(model, query):
    return model.predict(query)
