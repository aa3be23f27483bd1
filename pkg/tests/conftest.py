import numpy as np
import pytest

from eegcolor.experiment import build_feature_matrices, synthetic_epochs

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when not in ("setup", "call"):
        return
    n = marker.args[0]
    if rep.when == "setup" and rep.passed:
        return
    detail = dict(item.user_properties).get("detail", "")
    prev = _CRITERIA.get(n, (True, []))
    ok = prev[0] and rep.passed
    _CRITERIA[n] = (ok, prev[1] + ([detail] if detail else []))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, details = _CRITERIA[n]
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}"
        if details:
            line += "  " + "; ".join(details)
        terminalreporter.write_line(line)


@pytest.fixture
def detail(record_property):
    """Attach a one-line measurement to the criterion summary."""
    def note(text):
        print(text)
        record_property("detail", text)
    return note


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def cohort_epochs():
    """Eight synthetic subjects, ten presentations of each color."""
    return synthetic_epochs(n_subjects=8, n_trials=1, repetitions=10, seed=0)


@pytest.fixture(scope="session")
def cohort_matrices(cohort_epochs):
    return build_feature_matrices(cohort_epochs)


@pytest.fixture(scope="session")
def small_matrices():
    """Two subjects, five presentations per color, all four windows."""
    return build_feature_matrices(synthetic_epochs(n_subjects=2, repetitions=5, seed=3))
