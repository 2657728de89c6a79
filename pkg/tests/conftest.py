import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from eeflow import build_coefficients, build_supranetwork, solve_leontief, synth_dataset  # noqa: E402

_ACCEPTANCE: dict[str, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(criterion, text): acceptance criterion check")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    key, text = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.skipped):
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        prev = _ACCEPTANCE.get(key)
        if prev is None or prev[1] == "PASS" or status == "FAIL":
            _ACCEPTANCE[key] = [text, status]


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE, key=lambda k: (len(k), k)):
        text, status = _ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {status}  {text}")


@pytest.fixture
def small_dataset():
    return synth_dataset(3, 2, seed=7, spectral_target=0.6)


@pytest.fixture
def small_system(small_dataset):
    return solve_leontief(build_coefficients(small_dataset))


@pytest.fixture
def small_network(small_dataset, small_system):
    return build_supranetwork(small_dataset, small_system)


def random_network_matrix(rng, n_sec, n_eco, density=0.7):
    n = n_sec * n_eco
    return rng.uniform(0, 5, (n, n)) * (rng.random((n, n)) < density)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
