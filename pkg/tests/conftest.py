import pytest

_OUTCOMES: dict[int, tuple[str, str, list[str]]] = {}
_RANK = {"PASS": 0, "SKIP": 1, "FAIL": 2}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (rep.when != "call" and rep.passed):
        return
    number, title = marker.args
    notes = [text for name, text in rep.user_properties if name == "note"] if rep.when == "call" else []
    status = "PASS" if rep.passed else "SKIP" if rep.skipped else "FAIL"
    prev_status, _, prev_notes = _OUTCOMES.get(number, ("PASS", title, []))
    worst = max(prev_status, status, key=_RANK.__getitem__)
    _OUTCOMES[number] = (worst, title, prev_notes + notes)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        status, title, notes = _OUTCOMES[number]
        line = f"{status} criterion {number:>2}: {title}"
        if notes:
            line += f" [{'; '.join(notes)}]"
        terminalreporter.write_line(line)


@pytest.fixture
def note(request):
    """Attach a short measurement to the criterion's summary line."""

    def add(text: str) -> None:
        request.node.user_properties.append(("note", text))

    return add
