import pytest

import oddcov


@pytest.fixture(scope="session")
def verticalcas_spec():
    return oddcov.load_spec(oddcov.bundled_spec_path())


@pytest.fixture(scope="session")
def verticalcas_model(verticalcas_spec):
    return oddcov.build_model(verticalcas_spec)


@pytest.fixture(scope="session")
def tau60_model():
    return oddcov.build_model(oddcov.load_spec(oddcov.bundled_spec_path("verticalcas_tau60")))


def pytest_runtest_logreport(report):
    # one visible pass/fail line per acceptance criterion
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    print(f"\n[acceptance] {name}: {'PASS' if report.passed else 'FAIL'}")
