import json

import numpy as np
import pytest

from monofair.synthetic import threshold_dataset


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(12345))


@pytest.fixture
def write_csv(tmp_path):
    def _write(text, name="data.csv"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return _write


@pytest.fixture
def write_json(tmp_path):
    def _write(obj, name):
        path = tmp_path / name
        path.write_text(json.dumps(obj), encoding="utf-8")
        return path
    return _write


@pytest.fixture(scope="session")
def threshold_data():
    return threshold_dataset(n=400, seed=3)


_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        _ACCEPTANCE[name] = (report.outcome, dict(report.user_properties).get("path", ""))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    from test_acceptance import CRITERIA
    terminalreporter.section("acceptance criteria")
    for test_name, title in CRITERIA.items():
        outcome, path = _ACCEPTANCE.get(test_name, ("not run", ""))
        status = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        suffix = f" [{path}]" if path else ""
        terminalreporter.write_line(f"{status}  {title}{suffix}")
