import numpy as np
import pytest

from qhier import Operator, OperatorSequence, SystemSpec, builtin_scenario

import oracles


@pytest.fixture(scope="session")
def cm1():
    return builtin_scenario()


@pytest.fixture(scope="session")
def spec(cm1):
    return cm1.spec


def symmetric_density_sequence(rng: np.random.Generator,
                               spec: SystemSpec,
                               top: int) -> OperatorSequence:
    """Random exchange-symmetric positive sectors with a vacuum entry.
    The reduced-state expansions are only claimed for symmetric data."""
    entries = {0: Operator.vacuum(1.0, spec.d)}
    for n in range(1, top + 1):
        dim = spec.d ** n
        raw = rng.standard_normal((dim, dim)) \
            + 1j * rng.standard_normal((dim, dim))
        mat = raw @ raw.conj().T + np.eye(dim)
        entries[n] = Operator(oracles.symmetrize(mat, n, spec.d), n, spec.d)
    return OperatorSequence("density", spec.d, entries)


def symmetric_hermitian(rng: np.random.Generator, n: int,
                        d: int) -> np.ndarray:
    dim = d ** n
    raw = rng.standard_normal((dim, dim)) \
        + 1j * rng.standard_normal((dim, dim))
    return oracles.symmetrize(raw + raw.conj().T, n, d)
