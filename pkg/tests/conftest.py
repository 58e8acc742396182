import pytest

_RESULTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_RESULTS] = {}


@pytest.fixture
def record(request):
    """Record the outcome of the acceptance criterion named by the test's ``criterion`` marker.

    ``record(passed, detail)`` stores a line; a test that raises before
    recording is logged as a failure.
    """
    mark = request.node.get_closest_marker("criterion")
    if mark is None:
        raise RuntimeError("record needs a criterion marker")
    number, title = mark.args
    store = request.config.stash[_RESULTS]

    def _record(passed, detail=""):
        store[number] = (title, bool(passed), detail)

    yield _record
    if number not in store:
        store[number] = (title, False, "error before a result was recorded")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_RESULTS, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        title, passed, detail = store[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number:2d}: {title} -- {detail}")
