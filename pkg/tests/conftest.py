import numpy as np
import pytest

from dcla import regularizers as regs
from dcla.potentials import DCPotential, QuadraticF

SIGMA = np.array([[1.0, 0.8], [0.8, 1.0]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def quad_potential(mean=(0.0, 0.0), precision=SIGMA, reg=None):
    return DCPotential(QuadraticF(mean, precision), reg if reg is not None else regs.zero())


def fd_grad(fun, x, h=1e-5):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2 * h)
    return g


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def record(request):
    """Log one ``PASS``/``FAIL`` line for an acceptance criterion, then assert it."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def _record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
