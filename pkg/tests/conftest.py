import math

import numpy as np
import pytest

from gaussent.covariance import (
    StandardFormV0,
    SymplecticTransform,
    beam_splitter,
    rotation,
    squeezer,
    symplectic_form,
    two_mode_squeezer,
)

ENSEMBLE_SEED = 20021
ENSEMBLE_SIZE = 10_000


def random_v0_ensemble(size=ENSEMBLE_SIZE, seed=ENSEMBLE_SEED):
    """Physical V0-form states by rejection: n_i ~ U[0.2, 6], c_i ~ U[-6, 6]."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < size:
        n1, n2 = rng.uniform(0.2, 6, 2)
        c1, c2 = rng.uniform(-6, 6, 2)
        # positivity plus symplectic eigenvalues of the diagonal-block form
        if n1 <= abs(c1) or n2 <= abs(c2):
            continue
        if (n1 + c1) * (n2 + c2) < 1 or (n1 - c1) * (n2 - c2) < 1:
            continue
        out.append(StandardFormV0(n1, n2, c1, c2))
    return out


@pytest.fixture(scope="session")
def v0_ensemble():
    return random_v0_ensemble()


def random_symplectic(rng, n_modes=2, depth=6, max_s=0.8):
    """Random composition of squeezers, rotations, beam splitters and two-mode squeezers."""
    S = SymplecticTransform(np.eye(2 * n_modes))
    for _ in range(depth):
        kind = rng.integers(4) if n_modes > 1 else rng.integers(2)
        if kind == 0:
            k = int(rng.integers(n_modes))
            g = squeezer(rng.uniform(-max_s, max_s), rng.uniform(0, 2 * math.pi)).embed([k], n_modes)
        elif kind == 1:
            k = int(rng.integers(n_modes))
            g = rotation(rng.uniform(0, 4 * math.pi)).embed([k], n_modes)
        else:
            i, j = (int(x) for x in rng.choice(n_modes, 2, replace=False))
            if kind == 2:
                g = beam_splitter(rng.uniform(0, 2 * math.pi), rng.uniform(0, 2 * math.pi))
            else:
                g = two_mode_squeezer(rng.uniform(-max_s, max_s))
            g = g.embed([i, j], n_modes)
        S = g @ S
    return S


def random_local_symplectic(rng, max_s=0.8):
    """``A (+) B`` with each factor a random single-mode composition."""
    a = random_symplectic(rng, 1, depth=4, max_s=max_s)
    b = random_symplectic(rng, 1, depth=4, max_s=max_s)
    return a.direct_sum(b)


def is_symplectic(m, tol=1e-12):
    omega = symplectic_form(m.shape[0] // 2)
    return np.max(np.abs(m @ omega @ m.T - omega)) < tol


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    def record(tag, ok, detail=""):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {tag}  {detail}".rstrip())
        print(ACCEPTANCE_LINES[-1])
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
