from __future__ import annotations

import pytest

from undr import demo
from undr.stats import TestResult

TestResult.__test__ = False  # a result type, not a test class


@pytest.fixture(scope="session")
def laptop_schema():
    return demo.laptop_schema()


def pytest_runtest_logreport(report):
    # one visible pass/fail line per acceptance criterion
    if report.when == "call" and "test_acceptance" in report.nodeid:
        outcome = "PASS" if report.passed else "FAIL"
        name = report.nodeid.split("::")[-1]
        print(f"\nACCEPTANCE {outcome}: {name}")
