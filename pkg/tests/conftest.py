import numpy as np
import pytest


def pytest_configure(config):
    config._criterion_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_criterion_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def criterion(request):
    """Record one pass/fail line per acceptance criterion and assert it."""

    def record(num: int, name: str, ok: bool, detail: str = ""):
        line = f"[criterion {num:02d}] {'PASS' if ok else 'FAIL'} — {name}"
        if detail:
            line += f" ({detail})"
        request.config._criterion_lines.append(line)
        print(line)
        assert ok, line

    return record


def _battery(seed, count, dims, fields, make):
    """Deterministic instance stream shared by the property suites."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        d = int(dims[k % len(dims)])
        field = fields[k % len(fields)]
        out.append(make(rng, d, field))
    return out


@pytest.fixture(scope="session")
def relation_battery():
    from relsemi.sampling import random_relation
    return _battery(1234, 200, range(1, 9), ("real", "complex"), random_relation)


@pytest.fixture(scope="session")
def m_dissipative_battery():
    from relsemi.sampling import random_m_dissipative
    return _battery(99, 30, range(1, 7), ("real", "complex"),
                    random_m_dissipative)
