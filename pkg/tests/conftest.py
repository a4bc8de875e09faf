import pytest

_RESULTS = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record a numbered acceptance outcome; failures still raise through the asserts."""
    results = request.config.stash.setdefault(_RESULTS, {})
    number, _, title = request.function.__doc__.partition(".")
    key = int(number)
    results[key] = ("FAIL", title.strip(), "")

    def record(detail: str = ""):
        results[key] = ("PASS", title.strip(), detail)

    return record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_RESULTS, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(results):
        status, title, detail = results[key]
        line = f"{status} [{key:2d}] {title}"
        terminalreporter.write_line(f"{line}  ({detail})" if detail else line)
