import numpy as np
import pytest

from lqrdp.dp import solve_optimal
from lqrdp.model import Plant, example_plant, scalar_plant

GOLDEN = (1 + 5 ** 0.5) / 2

# Results recorded by the acceptance suite: key "N" or "N.sub" -> (ok, detail).
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def _crit(key):
    head = key.split(".")[0]
    return int(head), key


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    groups: dict[int, list[str]] = {}
    for key in sorted(ACCEPTANCE, key=_crit):
        groups.setdefault(_crit(key)[0], []).append(key)
    for num, keys in groups.items():
        oks = [ACCEPTANCE[k][0] for k in keys]
        if keys == [str(num)]:
            ok, detail = ACCEPTANCE[keys[0]]
            terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
            continue
        verdict = "PASS" if all(oks) else "FAIL"
        terminalreporter.write_line(f"criterion {num}: {verdict}  ({sum(oks)}/{len(oks)} parts pass)")
        for k in keys:
            ok, detail = ACCEPTANCE[k]
            terminalreporter.write_line(f"    {k}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def bench():
    return example_plant()


@pytest.fixture(scope="session")
def bench_opt(bench):
    return solve_optimal(bench)


@pytest.fixture(scope="session")
def golden():
    return scalar_plant()


@pytest.fixture(scope="session")
def golden_opt(golden):
    return solve_optimal(golden)


@pytest.fixture(scope="session")
def null_plant():
    """A = 0 and B = 0, so every gain gives the same closed loop."""
    return Plant(np.zeros((2, 2)), np.zeros((2, 1)), np.diag([1.0, 2.0]), [[3.0]], 0.9)


def random_pd(rng, d, floor=1e-3):
    L = rng.standard_normal((d, d))
    return L @ L.T + floor * np.eye(d)


def random_in_p(rng, d):
    """Random element of the PSD Q-parameters with positive definite P22."""
    return random_pd(rng, d, floor=1e-2)
