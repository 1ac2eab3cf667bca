import functools

import pytest

from kfplab import velocity_ops as vo


@functools.lru_cache(maxsize=None)
def make_ops(gamma: float, v_max: float, n: int, dim: int = 1) -> vo.OperatorSet:
    return vo.build_operators(vo.build_grid(v_max, n, dim), vo.PotentialParams(gamma, dim_v=dim))


@pytest.fixture(scope="session")
def ops2():
    return make_ops(2.0, 10.0, 201)


@pytest.fixture(scope="session")
def ops1():
    return make_ops(1.0, 30.0, 301)


@pytest.fixture(scope="session")
def ops_half():
    return make_ops(0.5, 160.0, 801)


# acceptance verdicts, printed as one line per criterion at the end of the run
ACCEPTANCE = {}


def record(criterion: str, passed: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    groups = {}
    for key in sorted(ACCEPTANCE):
        groups.setdefault(key.split()[0].rstrip("ab"), []).append(key)
    for crit, keys in groups.items():
        passed = all(ACCEPTANCE[k][0] for k in keys)
        terminalreporter.write_line(f"criterion {crit}: {'PASS' if passed else 'FAIL'}")
        for k in keys:
            ok, detail = ACCEPTANCE[k]
            terminalreporter.write_line(f"    {k}: {'pass' if ok else 'FAIL'}  {detail}")
