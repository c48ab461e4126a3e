import pytest

ACCEPTANCE = {}
CRITERIA = [f"AC{i}" for i in range(1, 11)]
_SELECTED = []


def pytest_collection_modifyitems(items):
    _SELECTED.extend(i for i in items if i.module.__name__.endswith("test_acceptance"))


@pytest.fixture
def report():
    """Record one acceptance line: report("AC3", passed, "detail")."""
    def record(key, passed, detail):
        ACCEPTANCE[key] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _SELECTED:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for key in CRITERIA:
        if key in ACCEPTANCE:
            ok, detail = ACCEPTANCE[key]
            terminalreporter.write_line(f"{key:<5} {'PASS' if ok else 'FAIL'}  {detail}")
        else:
            terminalreporter.write_line(f"{key:<5} FAIL  (no result recorded)")
