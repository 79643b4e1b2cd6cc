import pytest

_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES] = []


@pytest.fixture
def acceptance_report(request):
    """Record one summary line per acceptance criterion."""
    lines = request.config.stash[_LINES]

    def report(criterion, ok, detail, soft=False):
        status = ("PASS" if ok else "FAIL") + (" (soft)" if soft else "")
        lines.append(f"{criterion:<4} {status:<12} {detail}")
        print(lines[-1])

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
