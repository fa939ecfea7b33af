import pytest

from relumin.core import validate_dataset
from relumin.harness import ExperimentConfig, canonical_dataset, generate_dataset

_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def canonical():
    d = canonical_dataset()
    return d, validate_dataset(d)


@pytest.fixture(scope="session")
def q3():
    d = generate_dataset(ExperimentConfig(q=3, seed=0))
    return d, validate_dataset(d)


def pytest_runtest_logreport(report):
    name = report.nodeid.split("::")[-1]
    if "test_acceptance" in report.nodeid and name.startswith("test_criterion_"):
        if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
            _ACCEPTANCE[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        num = name.split("_")[2]
        label = " ".join(name.split("_")[3:])
        status = "PASS" if _ACCEPTANCE[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {int(num):2d}  {status}  {label}")
