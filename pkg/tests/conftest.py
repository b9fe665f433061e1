import pytest

from atomrepeater.cascade import NS, build_model, calibrated_pulse


@pytest.fixture(scope="session")
def pulse_59():
    """Control pulse calibrated once per session at 5.9 ns FWHM."""
    return calibrated_pulse(5.9 * NS)


@pytest.fixture(scope="session")
def model_59(pulse_59):
    return build_model(pulse=pulse_59)


# acceptance reporting: one line per criterion in the terminal summary
_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        ok = report.passed and not hasattr(report, "wasxfail")
        values = [f"{k}={v}" for k, v in item.user_properties]
        _CRITERIA.setdefault(marker.args[0], []).append((item.name, ok, values))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        results = _CRITERIA[n]
        ok = all(r[1] for r in results)
        failed = [r[0] for r in results if not r[1]]
        values = "; ".join(v for r in results for v in r[2])
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}"
        if failed:
            line += f" (failing: {', '.join(failed)})"
        if values:
            line += f" [{values}]"
        terminalreporter.write_line(line)
