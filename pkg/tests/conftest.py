import os
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"

# Optional directory with the official releases laid out as
# <root>/finqa/{train,dev,test}.json, <root>/tatqa/..., <root>/tatdqa/... (+ docs/)
OFFICIAL_DATA_ENV = "STEPWISE_QA_DATA"

_acceptance: dict[str, tuple[str, str]] = {}
_details: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(code, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    code, title = marker.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[rep.outcome]
        detail = ""
        if rep.outcome == "skipped" and isinstance(rep.longrepr, tuple):
            detail = rep.longrepr[2]
        _acceptance[code] = (status, f"{title}{' (' + detail + ')' if detail else ''}")


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for code in sorted(_acceptance, key=lambda c: int(c[2:])):
        status, text = _acceptance[code]
        detail = _details.get(code)
        terminalreporter.write_line(f"{code} {status:<4} {text}" + (f" | {detail}" if detail else ""))


@pytest.fixture
def ac_detail(request):
    """Attach a measured-result note to the current acceptance criterion."""
    code = request.node.get_closest_marker("acceptance").args[0]

    def record(text: str) -> None:
        _details[code] = text
        print(f"{code}: {text}")

    return record


@pytest.fixture
def data_dir() -> Path:
    return DATA


@pytest.fixture
def official_data() -> Path | None:
    root = os.environ.get(OFFICIAL_DATA_ENV)
    return Path(root) if root else None
