import numpy as np
import pytest
from hypothesis import strategies as st

from coherence_cycle.qmat import DensityMatrix, random_density_matrix

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def rand_state(seed: int, dims=(2,), rank=None) -> DensityMatrix:
    rng = np.random.default_rng(seed)
    return DensityMatrix(random_density_matrix(int(np.prod(dims)), rng, rank), tuple(dims))


def bell_state() -> DensityMatrix:
    psi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    return DensityMatrix.from_ket(psi, (2, 2))


def maximally_correlated(rho_a: np.ndarray) -> DensityMatrix:
    """sum_mn rho_mn |mm><nn| built by hand, independent of the CNOT code path."""
    d = rho_a.shape[0]
    m = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            m[i * d + i, j * d + j] = rho_a[i, j]
    return DensityMatrix(m, (d, d))


@pytest.fixture
def rng():
    return np.random.default_rng(20171015)
