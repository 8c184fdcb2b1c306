import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from martgap import build_majority, build_optimal, leaf, node  # noqa: E402

# acceptance results recorded by test_acceptance.py: criterion -> [(part, ok, detail)]
ACCEPTANCE: dict[int, list] = {}


def acceptance_line(k):
    parts = ACCEPTANCE[k]
    ok = all(p[1] for p in parts)
    detail = "; ".join(f"{name}: {'ok' if good else 'FAIL'} {d}".strip() if name else d
                       for name, good, d in parts)
    return f"[{k:02d}] {'PASS' if ok else 'FAIL'}  {detail}"


@pytest.fixture(scope="session")
def majority3():
    return build_majority(3)


@pytest.fixture(scope="session")
def optimal3():
    return build_optimal(0.5, 3)


@pytest.fixture
def fair_bit():
    return node([(0.5, leaf(0)), (0.5, leaf(1))])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(acceptance_line(k))
