import numpy as np
import pytest

# criterion -> (passed, detail); filled by test_acceptance, printed at session end
ACCEPTANCE = {}


def record_acceptance(criterion, passed, detail=""):
    ACCEPTANCE[criterion] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def separated_points(rng, n, d, min_sq=1.0, side=None):
    """Random points with every pairwise squared distance >= ``min_sq``."""
    side = side or 2.0 * n ** (1.0 / d) + 2.0
    pts = []
    while len(pts) < n:
        p = rng.random(d) * side
        if all(((p - q) ** 2).sum() >= min_sq for q in pts):
            pts.append(p)
    return np.array(pts)
