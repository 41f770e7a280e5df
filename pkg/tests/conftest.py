"""Shared pytest wiring: one-line-per-criterion acceptance summary."""

import pytest


def pytest_configure(config):
    config._criterion_results = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if (
        report.when == "call"
        and "test_acceptance" in item.nodeid
        and item.name.startswith("test_criterion_")
    ):
        doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
        item.config._criterion_results[item.name] = (report.outcome, doc)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_criterion_results", {})
    if not results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name in sorted(results):
        outcome, doc = results[name]
        number = name.split("_")[2]
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status} - {doc}")
