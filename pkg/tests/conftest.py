import random

import pytest

from ckdyn.automorphism import AutomorphismSpec


def random_alpha(rng: random.Random, k: int, d: int) -> tuple:
    """Valid coefficients: 0 < |a_2| < d, the others of moderate size."""
    a2 = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
    a2 *= rng.uniform(0.1, 0.9) * d / abs(a2)
    rest = [complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(k - 2)]
    return (a2, *rest)


@pytest.fixture
def spec32():
    return AutomorphismSpec(3, 2, (0.5, 0.3 + 0.1j))


@pytest.fixture
def spec33():
    return AutomorphismSpec(3, 3, (0.5, 0.3 + 0.1j))


@pytest.fixture
def spec42():
    return AutomorphismSpec(4, 2, (0.5, 0.3 + 0.1j, 0.2))


# -- acceptance report -----------------------------------------------------------------

@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion, then assert it."""
    log = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number: int, ok: bool, detail: str):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
        log.append((number, line))
        print(line)
        assert ok, line

    return record


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_ACCEPTANCE, [])
    if log:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(log):
            terminalreporter.write_line(line)
