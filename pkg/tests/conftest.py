import numpy as np
import pytest


def separable_cube(m=12, n=12, o=16, seed=0):
    """Noiseless two-endmember cube with piecewise-constant abundances.

    Returns ``(M, W, H)`` with ``M = H x3 W``; the left half of the scene is
    pure endmember 0, the right half a fixed mixture.
    """
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, 1.0, o)
    W = np.stack([1.0 + 0.5 * np.sin(2 * np.pi * t), 0.5 + t], axis=1)
    W *= rng.uniform(0.8, 1.2, size=(1, 2))
    H = np.zeros((m, n, 2))
    H[:, : n // 2] = [1.0, 0.0]
    H[:, n // 2:] = [0.3, 0.7]
    H[m // 2:, n // 2:] = [0.0, 1.0]
    return np.tensordot(H, W, axes=([2], [1])), W, H


@pytest.fixture
def separable():
    return separable_cube()


_ACCEPTANCE = {}


@pytest.fixture
def report():
    """Record one acceptance line: ``report(number, passed, detail)``."""
    def _report(number, passed, detail):
        line = f"ACCEPTANCE {number}: {'PASS' if passed else 'FAIL'} - {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        return passed
    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[number])
