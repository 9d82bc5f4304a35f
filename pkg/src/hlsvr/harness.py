"""Repeated train/test experiments comparing HL-SVR against a flat LS-SVR."""

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, HlsvrError, InvalidInputError
from .hierarchical import fit_hlsvr, predict_batch
from .lssvr import KernelParams, fit_lssvr
from .sampling import derive_seed, generate_nested
from .stats import format_test_table, paired_t_test, wilcoxon_signed_rank
from .tuning import TuningConfig, grid_search_cv

log = logging.getLogger(__name__)

REPORT_COLUMNS = ("rep", "seed", "rmse_hlsvr", "rmse_svr", "svr_gamma", "svr_theta",
                  "hl_gammas", "hl_thetas", "error")


def rmse(truth, pred):
    truth = np.asarray(truth, dtype=np.float64).reshape(-1)
    pred = np.asarray(pred, dtype=np.float64).reshape(-1)
    if truth.size == 0 or truth.shape != pred.shape:
        raise InvalidInputError(f"rmse needs equal non-empty lengths, got {truth.size} and {pred.size}")
    if not (np.all(np.isfinite(truth)) and np.all(np.isfinite(pred))):
        raise InvalidInputError("rmse inputs contain non-finite values")
    return float(np.sqrt(np.mean((truth - pred) ** 2)))


def fit_conventional_svr(train, tuner=None):
    """One tuned LS-SVR over the concatenated ``(x_s, x_l)`` rows."""
    x, y = train.flatten()
    bounds = tuple(train.bounds_s) + tuple(train.bounds_l)
    gamma, theta, _ = grid_search_cv(x, y, tuner or TuningConfig(), bounds=bounds)
    return fit_lssvr(x, y, gamma, KernelParams(theta), bounds=bounds)


@dataclass
class RepetitionRecord:
    rep: int
    seed: int
    rmse_hlsvr: float = None
    rmse_svr: float = None
    svr_params: tuple = None
    hl_params: tuple = ()
    error: str = None

    @property
    def ok(self):
        return self.error is None


@dataclass
class ExperimentReport:
    name: str
    records: list
    master_seed: int = None
    summary: dict = field(default_factory=dict)
    tests: dict = field(default_factory=dict)

    @property
    def completed(self):
        return [r for r in self.records if r.ok]

    def paired(self):
        done = self.completed
        return (np.array([r.rmse_svr for r in done]), np.array([r.rmse_hlsvr for r in done]))

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for r in self.records:
            svr = r.svr_params or (None, None)
            writer.writerow([
                r.rep, r.seed, _fmt(r.rmse_hlsvr), _fmt(r.rmse_svr), _fmt(svr[0]), _fmt(svr[1]),
                ";".join(_fmt(g) for g, _ in r.hl_params),
                ";".join(_fmt(t) for _, t in r.hl_params),
                r.error or "",
            ])
        return buf.getvalue()

    def summary_dict(self):
        return {
            "name": self.name,
            "master_seed": self.master_seed,
            "records": len(self.records),
            "completed": len(self.completed),
            "summary": self.summary,
            "tests": {k: (v.to_dict() if hasattr(v, "to_dict") else {"error": v})
                      for k, v in self.tests.items()},
        }

    def plot_columns(self):
        """Whitespace-separated ``method mean std`` rows for a bar chart."""
        lines = ["# method mean std"]
        for method in ("hlsvr", "svr"):
            s = self.summary[method]
            lines.append(f"{method} {_fmt(s['mean'])} {_fmt(s['std'])}")
        return "\n".join(lines) + "\n"

    def test_table(self):
        return format_test_table({"Student's t": self.tests.get("student_t"),
                                  "Wilcoxon": self.tests.get("wilcoxon")})

    def write(self, out_dir):
        from pathlib import Path

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.csv").write_text(self.to_csv())
        (out / "summary.json").write_text(json.dumps(self.summary_dict(), indent=2, sort_keys=True) + "\n")
        (out / "plot.dat").write_text(self.plot_columns())


def _fmt(v):
    return "" if v is None else repr(float(v))


def summarize(report):
    """Fill in mean/std per method and the paired tests from completed records."""
    done = report.completed
    if not done:
        raise HlsvrError(f"all {len(report.records)} repetitions failed: "
                         + "; ".join(r.error for r in report.records))
    for method in ("hlsvr", "svr"):
        vals = np.array([getattr(r, f"rmse_{method}") for r in done])
        std = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        report.summary[method] = {"mean": float(vals.mean()), "std": std}
    svr, hl = report.paired()
    for key, test in (("student_t", paired_t_test), ("wilcoxon", wilcoxon_signed_rank)):
        try:
            report.tests[key] = test(svr, hl)
        except (DegenerateInputError, InvalidInputError) as exc:
            report.tests[key] = str(exc)
    return report


def compare_on(train, test, tuner=None, policy=None):
    """Fit both methods on ``train``; return ``(rmse_hlsvr, rmse_svr, hl_params, svr_params)``."""
    tuner = tuner or TuningConfig()
    truth = test.responses()
    hl = fit_hlsvr(train, tuner, policy)
    hl_pred = predict_batch(hl, test.queries())
    svr = fit_conventional_svr(train, tuner)
    x_test, _ = test.flatten()
    svr_pred = svr.predict_many(x_test)
    return (rmse(truth, hl_pred), rmse(truth, svr_pred), hl.low_tuning,
            (svr.gamma, svr.kernel.theta))


def run_repetition(problem, rep, master_seed, tuner, design=None, policy=None):
    seed = derive_seed(master_seed, "repetition", rep)
    spec = (design or problem.design).with_seed(seed)
    record = RepetitionRecord(rep, seed)
    try:
        train, test = generate_nested(spec, problem.evaluator)
        record.rmse_hlsvr, record.rmse_svr, record.hl_params, record.svr_params = \
            compare_on(train, test, tuner, policy)
    except HlsvrError as exc:
        log.warning("repetition %d failed: %s", rep, exc)
        record.error = f"{type(exc).__name__}: {exc}"
    return record


def _run_repetition_args(args):
    return run_repetition(*args)


def run_benchmark(problem, reps=30, master_seed=0, tuner=None, jobs=1, design=None, policy=None):
    """Run ``reps`` paired repetitions; results do not depend on ``jobs``."""
    if int(reps) != reps or reps < 1:
        raise InvalidInputError(f"reps must be a positive integer, got {reps!r}")
    tuner = tuner or TuningConfig()
    tasks = [(problem, r, master_seed, tuner, design, policy) for r in range(int(reps))]
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_repetition_args, tasks))
    else:
        records = [run_repetition(*t) for t in tasks]
    report = ExperimentReport(problem.id, records, master_seed)
    return summarize(report)
