import pytest

_ACCEPTANCE: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    outcome = "PASS" if report.outcome == "passed" else "FAIL"
    _ACCEPTANCE[props["criterion"]] = (props.get("title", ""), outcome, props.get("detail", ""))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        title, outcome, detail = _ACCEPTANCE[k]
        line = f"criterion {k} [{title}]: {outcome}"
        terminalreporter.write_line(f"{line} -- {detail}" if detail else line)


@pytest.fixture
def criterion(record_property):
    """Tag a test as an acceptance criterion; returns a setter for its one-line detail."""

    def tag(number: int, title: str):
        record_property("criterion", number)
        record_property("title", title)

        def detail(text: str):
            record_property("detail", text)

        return detail

    return tag
