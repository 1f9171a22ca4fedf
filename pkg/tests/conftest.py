import numpy as np
import pytest

from drerm.ambiguity import MomentAmbiguity, equicorrelated_sigma
from drerm.harness.instances import generate_game
from drerm.model import AffineSVIP, PolyhedralSet, SetMode


def scalar_svip(m_const=1.0, q_lin=0.0, q_const=0.0, m_lin=0.0, feasible=None):
    """n = m = 1 instance ``F(x, xi) = (m_lin xi + m_const) x + q_lin xi + q_const``."""
    return AffineSVIP(
        m_lin=np.full((1, 1, 1), m_lin),
        m_const=np.full((1, 1), m_const),
        q_lin=np.full((1, 1), q_lin),
        q_const=np.full(1, q_const),
        feasible=feasible if feasible is not None else PolyhedralSet.nonneg_orthant(1),
    )


def random_feasible_x(S, rng):
    """A random point of ``S`` (assumes 0 is in S for inequality sets)."""
    if S.mode is SetMode.INEQUALITY:
        u = rng.standard_normal(S.n)
        Au = S.A @ u
        pos = Au > 0
        tmax = np.min(S.b[pos] / Au[pos]) if pos.any() else 3.0
        return rng.uniform(0.0, 1.0) * min(tmax, 3.0) * u
    raise NotImplementedError


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def games():
    return [generate_game(seed=s) for s in range(10)]


@pytest.fixture(scope="session")
def nominal6():
    return MomentAmbiguity(np.zeros(6), equicorrelated_sigma(6), 0.0, 1.0)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
