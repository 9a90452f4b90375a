import pytest


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): one acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        detail = dict(item.user_properties).get("detail", "")
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        item.config._acceptance = getattr(item.config, "_acceptance", {})
        item.config._acceptance[marker.args[0]] = (status, marker.args[1], detail)


def pytest_terminal_summary(terminalreporter, config):
    results = getattr(config, "_acceptance", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        status, title, detail = results[number]
        line = f"AC{number:<2} {status}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
