"""Dental-implant case study: leave-two-materials-out DoE and CSV exchange.

Finite-element stresses are computed outside this package. ``export_plan_csv``
writes the structural designs to evaluate; ``ingest_responses_csv`` reads the
completed file back into train/test grouped datasets whose anchors are the
materials' (elastic modulus, Poisson's ratio) pairs.

CSV schema (UTF-8, comma separated, header required)::

    exp,role,material_id,E_gpa,nu,L_C,L_T,P,L,beta[,stress_mpa]

Units: GPa, dimensionless, mm (L_C, L_T, P, L), degrees (beta), MPa.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CsvSchemaError, IntegrityError, InvalidInputError
from .harness import ExperimentReport, RepetitionRecord, compare_on, summarize
from .hierarchical import GroupedDataset
from .sampling import derive_seed, lhs


@dataclass(frozen=True)
class Material:
    id: int
    name: str
    elastic_modulus: float
    poisson_ratio: float

    def __post_init__(self):
        if not self.elastic_modulus > 0:
            raise InvalidInputError(f"material {self.id}: modulus must be positive")
        if not 0 < self.poisson_ratio < 0.5:
            raise InvalidInputError(f"material {self.id}: Poisson's ratio must lie in (0, 0.5)")


_MATERIALS = (
    Material(1, "Y-TZP", 210.0, 0.230),
    Material(2, "Zr", 200.0, 0.310),
    Material(3, "Ti (TC4)", 110.0, 0.350),
    Material(4, "Ti-Au", 106.0, 0.340),
    Material(5, "Ti (Grade 4)", 105.0, 0.360),
    Material(6, "Ti-15Zr", 102.0, 0.335),
    Material(7, "Ti alloy", 91.0, 0.230),
    Material(8, "Ti-Nb-Zr", 71.0, 0.320),
)

STRUCTURE_NAMES = ("L_C", "L_T", "P", "L", "beta")
# implanting length, thread length, thread pitch, tooth bottom width (mm); base angle (deg)
STRUCTURE_BOUNDS = ((8.0, 9.0), (6.0, 7.0), (1.0, 1.4), (0.4, 0.8), (50.0, 70.0))
# anchor normalization box spanning the material table
MATERIAL_BOUNDS = ((71.0, 210.0), (0.23, 0.36))

# experiment number -> (training materials, testing materials)
SPLITS = {
    1: ((1, 4, 5, 6, 7, 8), (2, 3)),
    2: ((1, 3, 5, 6, 7, 8), (2, 4)),
    3: ((1, 3, 4, 6, 7, 8), (2, 5)),
    4: ((1, 3, 4, 5, 7, 8), (2, 6)),
    5: ((1, 3, 4, 5, 6, 8), (2, 7)),
    6: ((1, 2, 5, 6, 7, 8), (3, 4)),
    7: ((1, 2, 4, 6, 7, 8), (3, 5)),
    8: ((1, 2, 4, 5, 7, 8), (3, 6)),
    9: ((1, 2, 4, 5, 6, 8), (3, 7)),
    10: ((1, 2, 3, 6, 7, 8), (4, 5)),
    11: ((1, 2, 3, 5, 7, 8), (4, 6)),
    12: ((1, 2, 3, 5, 6, 8), (4, 7)),
    13: ((1, 2, 3, 4, 7, 8), (5, 6)),
    14: ((1, 2, 3, 4, 6, 8), (5, 7)),
    15: ((1, 2, 3, 4, 5, 8), (6, 7)),
}

HEADER = ("exp", "role", "material_id", "E_gpa", "nu") + STRUCTURE_NAMES
RESPONSE_COLUMN = "stress_mpa"
POINTS_PER_MATERIAL = 25


def builtin_materials():
    return list(_MATERIALS)


def material(mid):
    for m in _MATERIALS:
        if m.id == mid:
            return m
    raise KeyError(f"unknown material id {mid}")


@dataclass(frozen=True, eq=False)
class DoePlan:
    experiment_no: int
    train_materials: tuple
    test_materials: tuple
    designs: dict  # material id -> (points x 5) structural design
    seed: int = 0

    def rows(self):
        """``(role, material, structure_row)`` in export order."""
        for role, mids in (("train", self.train_materials), ("test", self.test_materials)):
            for mid in mids:
                for x in self.designs[mid]:
                    yield role, material(mid), x

    @property
    def n_train(self):
        return sum(len(self.designs[m]) for m in self.train_materials)

    @property
    def n_test(self):
        return sum(len(self.designs[m]) for m in self.test_materials)


def generate_doe(seed=0, points=POINTS_PER_MATERIAL):
    """The 15 leave-two-out plans, each with an LHS structural design per material."""
    plans = []
    for exp, (train, test) in SPLITS.items():
        designs = {mid: lhs(points, len(STRUCTURE_BOUNDS), STRUCTURE_BOUNDS,
                            derive_seed(seed, "dental", exp, mid))
                   for mid in train + test}
        plans.append(DoePlan(exp, train, test, designs, seed))
    return plans


def _fmt(v):
    return repr(float(v))


def export_plan_csv(plan, path, response_fn=None):
    """Write ``plan`` as CSV; with ``response_fn(E, nu, structure)`` also fill stresses."""
    header = HEADER + ((RESPONSE_COLUMN,) if response_fn is not None else ())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for role, mat, x in plan.rows():
            row = [plan.experiment_no, role, mat.id, _fmt(mat.elastic_modulus),
                   _fmt(mat.poisson_ratio)] + [_fmt(v) for v in x]
            if response_fn is not None:
                row.append(_fmt(response_fn(mat.elastic_modulus, mat.poisson_ratio, x)))
            w.writerow(row)
    return Path(path)


def fill_responses_csv(path, response_fn, out_path=None):
    """Append a stress column to an exported plan using ``response_fn`` (for stand-in studies)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0][:len(HEADER)]) != HEADER:
        raise CsvSchemaError("not an exported plan file", line=1)
    out = [list(HEADER) + [RESPONSE_COLUMN]]
    for r in rows[1:]:
        e, nu = float(r[3]), float(r[4])
        x = np.array([float(v) for v in r[5:5 + len(STRUCTURE_NAMES)]])
        out.append(r[:len(HEADER)] + [_fmt(response_fn(e, nu, x))])
    with open(out_path or path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(out)
    return Path(out_path or path)


@dataclass(frozen=True, eq=False)
class IngestedExperiment:
    experiment_no: int
    train: GroupedDataset
    test: GroupedDataset
    train_materials: tuple
    test_materials: tuple


def _parse_float(text, column, line):
    try:
        v = float(text)
    except ValueError:
        raise CsvSchemaError(f"column {column!r}: {text!r} is not a number", line) from None
    if not np.isfinite(v):
        raise CsvSchemaError(f"column {column!r}: non-finite value {text!r}", line)
    return v


def ingest_responses_csv(path):
    """Read a completed plan CSV into train/test ``GroupedDataset`` objects."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = HEADER + (RESPONSE_COLUMN,)
        if header is None:
            raise CsvSchemaError("file is empty", 1)
        header = tuple(h.strip() for h in header)
        missing = [c for c in expected if c not in header]
        if missing:
            raise CsvSchemaError(f"missing column(s): {', '.join(missing)}", 1)
        if len(header) != len(expected):
            extra = [c for c in header if c not in expected]
            raise CsvSchemaError(f"unexpected column(s): {', '.join(extra)}", 1)
        col = {name: header.index(name) for name in expected}

        exp_no = None
        blocks = {}  # material id -> dict(role, E, nu, xs, ys)
        seen = set()
        for line, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(expected):
                raise CsvSchemaError(f"expected {len(expected)} fields, got {len(row)}", line)
            cell = {name: row[i].strip() for name, i in col.items()}
            try:
                exp = int(cell["exp"])
                mid = int(cell["material_id"])
            except ValueError:
                raise CsvSchemaError("exp and material_id must be integers", line) from None
            if exp_no is None:
                exp_no = exp
            elif exp != exp_no:
                raise CsvSchemaError(f"mixed experiments {exp_no} and {exp} in one file", line)
            role = cell["role"]
            if role not in ("train", "test"):
                raise CsvSchemaError(f"role must be 'train' or 'test', got {role!r}", line)
            try:
                mat = material(mid)
            except KeyError:
                raise CsvSchemaError(f"unknown material id {mid}", line) from None
            e = _parse_float(cell["E_gpa"], "E_gpa", line)
            nu = _parse_float(cell["nu"], "nu", line)
            if not (np.isclose(e, mat.elastic_modulus, rtol=1e-9)
                    and np.isclose(nu, mat.poisson_ratio, rtol=1e-9)):
                raise CsvSchemaError(f"E_gpa/nu do not match material {mid} ({mat.name})", line)
            x = tuple(_parse_float(cell[c], c, line) for c in STRUCTURE_NAMES)
            if not cell[RESPONSE_COLUMN]:
                raise CsvSchemaError(f"blank {RESPONSE_COLUMN} value", line)
            y = _parse_float(cell[RESPONSE_COLUMN], RESPONSE_COLUMN, line)
            key = (mid, x)
            if key in seen:
                raise IntegrityError(f"line {line}: duplicate design point for material {mid}")
            seen.add(key)
            block = blocks.setdefault(mid, {"role": role, "E": e, "nu": nu, "xs": [], "ys": []})
            if block["role"] != role:
                raise IntegrityError(f"line {line}: material {mid} appears as both train and test")
            block["xs"].append(x)
            block["ys"].append(y)
    if exp_no is None:
        raise CsvSchemaError("file has no data rows", 2)

    def dataset(role):
        mids = [m for m, b in blocks.items() if b["role"] == role]
        if not mids:
            raise InvalidInputError(f"experiment {exp_no}: no {role} rows")
        anchors = np.array([[blocks[m]["E"], blocks[m]["nu"]] for m in mids])
        groups = [(np.array(blocks[m]["xs"]), np.array(blocks[m]["ys"])) for m in mids]
        return tuple(mids), GroupedDataset(anchors, groups, MATERIAL_BOUNDS, STRUCTURE_BOUNDS)

    train_m, train = dataset("train")
    test_m, test = dataset("test")
    return IngestedExperiment(exp_no, train, test, train_m, test_m)


def run_dental_study(experiments, tuner=None):
    """Fit both methods for each of the 15 experiments and test the paired RMSEs."""
    by_no = {}
    for e in experiments:
        if e.experiment_no in by_no:
            raise InvalidInputError(f"experiment {e.experiment_no} supplied twice")
        by_no[e.experiment_no] = e
    missing = sorted(set(SPLITS) - set(by_no))
    unknown = sorted(set(by_no) - set(SPLITS))
    if missing or unknown:
        raise InvalidInputError(f"need experiments 1-15; missing {missing}, unexpected {unknown}")
    records = []
    for exp in sorted(by_no):
        e = by_no[exp]
        rec = RepetitionRecord(exp, None)
        rec.rmse_hlsvr, rec.rmse_svr, rec.hl_params, rec.svr_params = compare_on(e.train, e.test, tuner)
        records.append(rec)
    return summarize(ExperimentReport("dental", records))


def synthetic_stress(e_gpa, nu, structure):
    """Analytic stand-in for FEM stress, for demos and pipeline tests only.

    The structural response is nearly linear, but its slope changes sign
    quickly across material space.
    """
    b = np.asarray(STRUCTURE_BOUNDS)
    u = (np.asarray(structure, dtype=np.float64) - b[:, 0]) / (b[:, 1] - b[:, 0])
    (e_lo, e_hi), (v_lo, v_hi) = MATERIAL_BOUNDS
    e = (e_gpa - e_lo) / (e_hi - e_lo)
    v = (nu - v_lo) / (v_hi - v_lo)
    return float(100 + 40 * (u[0] + u[1] - 1) * (np.sin(6 * e) + np.cos(8 * v)) + 20 * u[2])
