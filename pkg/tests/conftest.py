import numpy as np
import pytest

from unsharp_clt.trine import trine_povm


@pytest.fixture(scope="session")
def trine():
    return trine_povm()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_density(rng, dim=2, rank=None):
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_qubit_povm(rng, n_outcomes=3):
    """Random complete qubit POVM: S^{-1/2} G_i S^{-1/2} with G_i = g_i g_i^dagger."""
    from unsharp_clt.povm import Povm

    gs = []
    for _ in range(n_outcomes):
        g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        gs.append(g @ g.conj().T)
    total = sum(gs)
    w, v = np.linalg.eigh(total)
    inv_sqrt = (v / np.sqrt(w)) @ v.conj().T
    effects = np.stack([inv_sqrt @ g @ inv_sqrt for g in gs])
    effects = 0.5 * (effects + effects.conj().transpose(0, 2, 1))
    values = rng.choice(np.arange(-5, 6), size=n_outcomes, replace=False).astype(float)
    return Povm(effects, values)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
