import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fusekit import PredictionSet  # noqa: E402

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "data"
_criteria: list[tuple[str, str]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark and rep.when == "call":
        _criteria.append(("PASS" if rep.passed else "FAIL", mark.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for status, label in _criteria:
        terminalreporter.write_line(f"[{status}] {label}")


def random_set(rng, s, m, k, names=None):
    probs = rng.dirichlet(np.ones(k), size=(m, s))
    truth = rng.integers(0, k, size=s)
    return PredictionSet.from_arrays(list(probs), truth, names=names)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
