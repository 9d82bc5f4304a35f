"""One-sided paired tests on per-repetition RMSEs.

Both tests take ``a`` (baseline RMSEs) and ``b`` (proposed-method RMSEs) and
test the alternative that ``a`` exceeds ``b`` on average.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from . import _kernels
from .errors import DegenerateInputError, InputShapeError, InvalidInputError

EXACT_MAX_N = 20


@dataclass(frozen=True)
class PairedTestResult:
    statistic: float
    p_value: float
    n_effective: int
    method: str

    def to_dict(self):
        return {"method": self.method, "statistic": self.statistic,
                "p_value": self.p_value, "n_effective": self.n_effective}


def _differences(a, b):
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise InputShapeError(f"paired samples differ in length: {a.size} vs {b.size}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise InvalidInputError("paired samples contain non-finite values")
    return a - b


def paired_t_test(a, b):
    d = _differences(a, b)
    n = d.size
    if n < 2:
        raise InvalidInputError("paired t-test needs at least two pairs")
    sd = d.std(ddof=1)
    if sd == 0:
        raise DegenerateInputError("differences have zero variance")
    t = float(d.mean() / (sd / np.sqrt(n)))
    p = float(sps.t.sf(t, n - 1))
    return PairedTestResult(t, min(max(p, 0.0), 1.0), n, "student_t")


def wilcoxon_signed_rank(a, b):
    """Signed-rank test with mid-ranks for ties and zero differences dropped.

    The statistic is the sum of ranks of positive differences. For up to 20
    non-zero differences the p-value counts every one of the ``2^n`` sign
    assignments; above that a tie-corrected normal approximation with
    continuity correction is used.
    """
    d = _differences(a, b)
    d = d[d != 0]
    n = d.size
    if n == 0:
        raise DegenerateInputError("all paired differences are zero")
    ranks = sps.rankdata(np.abs(d))
    w = float(ranks[d > 0].sum())
    if n <= EXACT_MAX_N:
        # mid-ranks are multiples of 1/2, so doubled ranks are exact integers
        ranks2 = np.rint(2 * ranks).astype(np.int64)
        count = _kernels.wilcoxon_count_ge(ranks2, int(round(2 * w)))
        p = count / float(2 ** n)
    else:
        mean = n * (n + 1) / 4.0
        _, tie_counts = np.unique(ranks, return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24.0 - (tie_counts ** 3 - tie_counts).sum() / 48.0
        z = (w - mean - 0.5) / np.sqrt(var)
        p = float(sps.norm.sf(z))
    return PairedTestResult(w, min(max(p, 0.0), 1.0), n, "wilcoxon")


def format_test_table(results):
    """Plain-text table of test results, one row per method.

    ``results`` maps a label to a ``PairedTestResult`` or to an error string.
    """
    lines = [f"{'Test':<16}{'Alternative':<36}{'Statistic':>12}{'P-value':>12}"]
    alt = "baseline RMSE > HL-SVR RMSE"
    for label, res in results.items():
        if isinstance(res, PairedTestResult):
            lines.append(f"{label:<16}{alt:<36}{res.statistic:>12.4f}{res.p_value:>12.3E}")
        else:
            lines.append(f"{label:<16}{alt:<36}{'-':>12}{'n/a':>12}  ({res})")
    return "\n".join(lines)
