import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from chrism.fixtures import load_program  # noqa: E402

_RESULTS = pytest.StashKey[dict]()


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", help="also run tests marked slow")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion covered")
    config.addinivalue_line("markers", "slow: minutes-long; needs --runslow")
    config.stash[_RESULTS] = {}


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="slow; use --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    results = item.config.stash[_RESULTS]
    entry = results.setdefault(n, {"title": title, "passed": 0, "failed": 0, "skipped": 0})
    if report.when == "call" or (report.when == "setup" and not report.passed):
        if report.skipped:
            entry["skipped"] += 1
        elif report.passed:
            entry["passed"] += 1
        else:
            entry["failed"] += 1


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash[_RESULTS]
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        e = results[n]
        status = "FAIL" if e["failed"] else ("PASS" if e["passed"] else "SKIP")
        detail = f"{e['passed']} passed, {e['failed']} failed"
        if e["skipped"]:
            detail += f", {e['skipped']} skipped"
        terminalreporter.write_line(f"criterion {n:2d} {status}  {e['title']}  ({detail})")


@pytest.fixture(scope="session")
def coin():
    return load_program("coin")


@pytest.fixture(scope="session")
def rps():
    return load_program("rps")


@pytest.fixture(scope="session")
def alarm():
    return load_program("alarm")


@pytest.fixture(scope="session")
def two_rule():
    return load_program("ambiguous_two_rule")


@pytest.fixture(scope="session")
def partner():
    return load_program("partner_order")


@pytest.fixture(scope="session")
def confluent():
    return load_program("confluent_ambiguous")


@pytest.fixture(scope="session")
def gcd():
    return load_program("gcd")
