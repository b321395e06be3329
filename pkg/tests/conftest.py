import numpy as np
import pytest
from hypothesis import settings

from twistlab import gen_equator, gen_f2, new_grid

settings.register_profile("default", deadline=None, max_examples=30)
settings.load_profile("default")


@pytest.fixture(scope="session")
def twisted64():
    return new_grid(2, [64, 64], parities=[1, 0])


@pytest.fixture(scope="session")
def periodic64():
    return new_grid(2, [64, 64])


@pytest.fixture(scope="session")
def f1(twisted64):
    return gen_equator(twisted64, 0.5)


@pytest.fixture(scope="session")
def f2(periodic64):
    return gen_f2(periodic64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA: list[str] = []


@pytest.fixture
def record_criterion():
    """Log one PASS/FAIL line per acceptance criterion; shown again in the terminal summary."""

    def record(cid: int, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'} criterion {cid:>2}: {detail}"
        _CRITERIA.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
