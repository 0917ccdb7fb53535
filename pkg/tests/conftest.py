import numpy as np
import pytest

from trisig.tensor import from_codes

# (criterion, passed, detail) lines collected by test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def hand_tensor():
    """4 obs x 2 vars x 3 ctx, binary, temporal; counts are easy to check by hand."""
    codes = np.array(
        [
            [[0, 0, 1], [1, 1, 0]],
            [[0, 0, 1], [1, 1, 1]],
            [[0, 1, 1], [0, 1, 0]],
            [[1, 1, 0], [0, 0, 0]],
        ]
    )
    return from_codes(codes, 2, temporal=True)


def random_tensor(rng, n_max=30, m_max=4, p_max=4, l_max=3, missing=0.0, temporal=True):
    n = int(rng.integers(2, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    p = int(rng.integers(1, p_max + 1))
    card = [int(c) for c in rng.integers(2, l_max + 1, size=m)]
    codes = np.stack([rng.integers(0, c, size=(n, p)) for c in card], axis=1)
    if missing:
        codes[rng.random(codes.shape) < missing] = -1
    return from_codes(codes, card, temporal=temporal)
