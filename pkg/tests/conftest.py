import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# criterion number -> [(passed, detail), ...], filled by tests/test_acceptance.py
CRITERIA: dict[int, list[tuple[bool, str]]] = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion's verdict; an unrecorded test counts as failed."""
    seen = []

    def record(k: int, ok: bool, detail: str) -> None:
        CRITERIA.setdefault(k, []).append((bool(ok), detail))
        seen.append(k)

    yield record
    k = request.node.get_closest_marker("criterion")
    if k is not None and k.args[0] not in seen:
        CRITERIA.setdefault(k.args[0], []).append((False, "raised before reporting"))


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        ok = all(v for v, _ in CRITERIA[k])
        detail = "; ".join(d for _, d in CRITERIA[k])
        terminalreporter.write_line(f"CRITERION {k}: {'PASS' if ok else 'FAIL'}  {detail}")
