"""Command-line interface.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

import argparse
import csv
import json
import logging
import re
import sys
from pathlib import Path

import numpy as np

from . import dental
from .benchmarks import PROBLEMS, get_problem
from .errors import (CsvSchemaError, HlsvrError, IntegrityError, InvalidInputError,
                     ModelFormatError)
from .harness import run_benchmark
from .hierarchical import GroupedDataset, HighLevelPolicy, fit_hlsvr, predict_batch
from .persist import load_model, save_model
from .sampling import NestedDesignSpec
from .tuning import TuningConfig

log = logging.getLogger("hlsvr")


class UsageError(Exception):
    """Bad flags, config or input schema; maps to exit code 2."""


BENCH_KEYS = {"problem", "reps", "seed", "jobs", "out", "grid_gamma", "grid_theta", "folds",
              "m_train", "k_train", "m_test", "k_test", "high_gamma", "high_theta"}


def _float_list(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _add_tuning_flags(p):
    p.add_argument("--grid-gamma", type=_float_list, help="comma-separated gamma values")
    p.add_argument("--grid-theta", type=_float_list, help="comma-separated theta values")
    p.add_argument("--folds", type=int, help="CV folds for groups of 10 or more rows")
    p.add_argument("--seed", type=int, help="master seed")


def build_parser():
    parser = argparse.ArgumentParser(prog="hlsvr", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="repeat a benchmark problem and compare HL-SVR with SVR")
    b.add_argument("--problem", help=f"one of {', '.join(sorted(PROBLEMS))}")
    b.add_argument("--reps", type=int)
    b.add_argument("--jobs", type=int)
    b.add_argument("--config", type=Path, help="JSON file with the same settings")
    b.add_argument("--out", type=Path)
    _add_tuning_flags(b)

    f = sub.add_parser("fit", help="fit HL-SVR on a training CSV")
    f.add_argument("--train", type=Path, required=True)
    f.add_argument("--out", type=Path, required=True, help="model file to write")
    f.add_argument("--config", type=Path)
    _add_tuning_flags(f)

    p = sub.add_parser("predict", help="predict with a saved model")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--queries", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)

    d = sub.add_parser("doe", help="dental-implant DoE export / ingest")
    g = d.add_mutually_exclusive_group(required=True)
    g.add_argument("--export", type=Path, metavar="DIR")
    g.add_argument("--ingest", type=Path, metavar="DIR")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--fill-synthetic", action="store_true",
                   help="fill exported plans with the analytic stand-in stress")
    d.add_argument("--out", type=Path, help="report directory for --ingest (default: DIR)")
    d.add_argument("--config", type=Path)
    d.add_argument("--grid-gamma", type=_float_list)
    d.add_argument("--grid-theta", type=_float_list)
    d.add_argument("--folds", type=int)
    return parser


def _load_config(path, allowed):
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    unknown = sorted(set(cfg) - allowed)
    if unknown:
        raise UsageError(f"unknown config key(s): {', '.join(unknown)}")
    return cfg


def _merge(args, cfg, key, default=None):
    v = getattr(args, key, None)
    if v is not None:
        return v
    return cfg.get(key, default)


def _tuner(args, cfg):
    base = TuningConfig()
    try:
        return TuningConfig(
            gamma_grid=tuple(_merge(args, cfg, "grid_gamma", base.gamma_grid)),
            theta_grid=tuple(_merge(args, cfg, "grid_theta", base.theta_grid)),
            folds=_merge(args, cfg, "folds", base.folds),
            seed=_merge(args, cfg, "seed", 0),
        )
    except (InvalidInputError, TypeError) as exc:
        raise UsageError(str(exc)) from exc


# --------------------------------------------------------------------------
# bench
# --------------------------------------------------------------------------

def cmd_bench(args):
    cfg = _load_config(args.config, BENCH_KEYS)
    pid = _merge(args, cfg, "problem")
    if pid is None:
        raise UsageError("--problem is required")
    try:
        problem = get_problem(str(pid))
    except KeyError as exc:
        raise UsageError(exc.args[0]) from exc
    reps = _merge(args, cfg, "reps", 30)
    jobs = _merge(args, cfg, "jobs", 1)
    seed = _merge(args, cfg, "seed", 0)
    if not (isinstance(reps, int) and reps >= 1 and isinstance(jobs, int) and jobs >= 1):
        raise UsageError("reps and jobs must be positive integers")
    out = Path(_merge(args, cfg, "out", f"bench-{problem.id}"))
    tuner = _tuner(args, cfg)
    d = problem.design
    try:
        design = NestedDesignSpec(d.bounds_s, d.bounds_l,
                                  cfg.get("m_train", d.m_train), cfg.get("k_train", d.k_train),
                                  cfg.get("m_test", d.m_test), cfg.get("k_test", d.k_test))
        policy = HighLevelPolicy(cfg.get("high_gamma", 1e4), cfg.get("high_theta"))
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from exc
    report = run_benchmark(problem, reps, seed, tuner, jobs=jobs, design=design, policy=policy)
    report.write(out)
    s = report.summary
    print(f"{problem.id}: {len(report.completed)}/{reps} repetitions")
    print(f"  HL-SVR RMSE mean {s['hlsvr']['mean']:.6g} std {s['hlsvr']['std']:.6g}")
    print(f"  SVR    RMSE mean {s['svr']['mean']:.6g} std {s['svr']['std']:.6g}")
    print(report.test_table())
    print(f"wrote {out}/report.csv, summary.json, plot.dat")
    return 0


# --------------------------------------------------------------------------
# fit / predict
# --------------------------------------------------------------------------

_GENERIC_COL = re.compile(r"^([sl])(\d+)$")


def _read_csv(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise UsageError(f"{path} is empty")
    return [h.strip() for h in rows[0]], rows[1:]


def _generic_columns(header):
    s_cols, l_cols = {}, {}
    for i, h in enumerate(header):
        m = _GENERIC_COL.match(h)
        if m:
            (s_cols if m.group(1) == "s" else l_cols)[int(m.group(2))] = i
    p, q = len(s_cols), len(l_cols)
    if p == 0 or q == 0 or sorted(s_cols) != list(range(1, p + 1)) \
            or sorted(l_cols) != list(range(1, q + 1)):
        raise CsvSchemaError("expected columns s1..sp and l1..lq", 1)
    return [s_cols[k] for k in range(1, p + 1)], [l_cols[k] for k in range(1, q + 1)]


def _numeric(rows, cols, first_line=2):
    out = np.empty((len(rows), len(cols)))
    for r, row in enumerate(rows):
        for c, idx in enumerate(cols):
            try:
                out[r, c] = float(row[idx])
            except (ValueError, IndexError):
                raise CsvSchemaError(f"bad numeric value in column {idx + 1}", first_line + r) from None
    if not np.all(np.isfinite(out)):
        raise CsvSchemaError("non-finite value in data")
    return out


def _data_bounds(x):
    lo, hi = x.min(axis=0), x.max(axis=0)
    flat = hi <= lo
    lo, hi = np.where(flat, lo - 0.5, lo), np.where(flat, hi + 0.5, hi)
    return tuple(zip(lo.tolist(), hi.tolist()))


def _read_generic_training(path, header, rows, cfg):
    s_idx, l_idx = _generic_columns(header)
    if "y" not in header:
        raise CsvSchemaError("missing response column 'y'", 1)
    xs = _numeric(rows, s_idx)
    xl = _numeric(rows, l_idx)
    y = _numeric(rows, [header.index("y")])[:, 0]
    anchors, inverse = np.unique(xs, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    order = np.argsort([int(np.argmax(inverse == k)) for k in range(len(anchors))], kind="stable")
    groups = []
    for k in order:
        mask = inverse == k
        groups.append((xl[mask], y[mask]))
    bounds_s = tuple(map(tuple, cfg.get("bounds_s") or _data_bounds(xs)))
    bounds_l = tuple(map(tuple, cfg.get("bounds_l") or _data_bounds(xl)))
    return GroupedDataset(anchors[order], groups, bounds_s, bounds_l)


def cmd_fit(args):
    cfg = _load_config(args.config, {"grid_gamma", "grid_theta", "folds", "seed",
                                     "high_gamma", "high_theta", "bounds_s", "bounds_l",
                                     "tune"})
    header, rows = _read_csv(args.train)
    if tuple(header[:len(dental.HEADER)]) == dental.HEADER:
        schema = "dental"
        data = dental.ingest_responses_csv(args.train).train
    else:
        schema = "generic"
        data = _read_generic_training(args.train, header, rows, cfg)
    tuner = _tuner(args, cfg) if cfg.get("tune", True) else None
    policy = HighLevelPolicy(cfg.get("high_gamma", 1e4), cfg.get("high_theta"))
    model = fit_hlsvr(data, tuner, policy)
    save_model(model, args.out, schema=schema)
    print(f"fitted HL-SVR on {data.n_rows} rows, {data.m} anchors; wrote {args.out}")
    return 0


def cmd_predict(args):
    try:
        model, meta = load_model(args.model)
    except OSError as exc:
        raise UsageError(f"cannot read model {args.model}: {exc}") from exc
    header, rows = _read_csv(args.queries)
    if tuple(header[:len(dental.HEADER)]) == dental.HEADER:
        xs = _numeric(rows, [header.index("E_gpa"), header.index("nu")])
        xl = _numeric(rows, [header.index(c) for c in dental.STRUCTURE_NAMES])
    else:
        s_idx, l_idx = _generic_columns(header)
        xs, xl = _numeric(rows, s_idx), _numeric(rows, l_idx)
    if xs.shape[1] != model.dims_s or xl.shape[1] != model.dims_l:
        raise UsageError(f"query columns ({xs.shape[1]} small-sample, {xl.shape[1]} large-sample) "
                         f"do not match the model ({model.dims_s}, {model.dims_l})")
    pred = predict_batch(model, list(zip(xs, xl)))
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "prediction"])
        for i, v in enumerate(pred):
            w.writerow([i, repr(float(v))])
    print(f"wrote {len(pred)} predictions to {args.out}")
    return 0


# --------------------------------------------------------------------------
# doe
# --------------------------------------------------------------------------

def _plan_name(exp):
    return f"exp{exp:02d}.csv"


def cmd_doe(args):
    cfg = _load_config(args.config, {"grid_gamma", "grid_theta", "folds", "seed"})
    if args.export is not None:
        out = args.export
        out.mkdir(parents=True, exist_ok=True)
        plans = dental.generate_doe(args.seed)
        fn = dental.synthetic_stress if args.fill_synthetic else None
        manifest = {"seed": args.seed, "schema": list(dental.HEADER) + [dental.RESPONSE_COLUMN],
                    "filled": bool(fn), "experiments": []}
        for plan in plans:
            dental.export_plan_csv(plan, out / _plan_name(plan.experiment_no), fn)
            manifest["experiments"].append({
                "exp": plan.experiment_no, "file": _plan_name(plan.experiment_no),
                "train_materials": list(plan.train_materials),
                "test_materials": list(plan.test_materials),
                "train_rows": plan.n_train, "test_rows": plan.n_test})
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
        print(f"wrote {len(plans)} plans and manifest.json to {out}")
        return 0

    src = args.ingest
    missing = [e for e in dental.SPLITS if not (src / _plan_name(e)).is_file()]
    if missing:
        log.error("missing experiment file(s): %s", ", ".join(_plan_name(e) for e in missing))
        return 1
    experiments = [dental.ingest_responses_csv(src / _plan_name(e)) for e in dental.SPLITS]
    report = dental.run_dental_study(experiments, _tuner(args, cfg))
    out = args.out or src
    report.write(out)
    table = report.test_table()
    (Path(out) / "tests.txt").write_text(table + "\n")
    for r in report.records:
        print(f"exp {r.rep:2d}: HL-SVR {r.rmse_hlsvr:.4f}  SVR {r.rmse_svr:.4f}")
    print(table)
    return 0


COMMANDS = {"bench": cmd_bench, "fit": cmd_fit, "predict": cmd_predict, "doe": cmd_doe}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, CsvSchemaError, IntegrityError, ModelFormatError) as exc:
        print(f"hlsvr {args.command}: {exc}", file=sys.stderr)
        return 2
    except HlsvrError as exc:
        print(f"hlsvr {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
