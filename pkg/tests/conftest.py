import pytest


def pytest_addoption(parser):
    parser.addoption(
        "--run-extended",
        action="store_true",
        default=False,
        help="run the long Monte-Carlo campaigns marked 'extended'",
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-extended"):
        return
    skip = pytest.mark.skip(reason="extended tier; pass --run-extended")
    for item in items:
        if "extended" in item.keywords:
            item.add_marker(skip)


_CRITERIA: dict[int, list[tuple[str, str]]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    props = dict(report.user_properties)
    if "criterion" in props:
        status = {"passed": "PASS", "failed": "FAIL"}.get(report.outcome, "SKIP")
        _CRITERIA.setdefault(props["criterion"], []).append((status, props.get("detail", "")))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        results = _CRITERIA[num]
        statuses = {status for status, _ in results}
        overall = "FAIL" if "FAIL" in statuses else ("PASS" if statuses == {"PASS"} else "SKIP")
        detail = " | ".join(d for _, d in results)
        terminalreporter.write_line(f"criterion {num:2d}: {overall}  {detail}")
