"""Dense density-matrix primitives and entropic functionals.

All entropies are in bits. Matrices are plain complex ``numpy`` arrays; the
:class:`DensityMatrix` wrapper only adds validation and a subsystem layout.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Mapping, Sequence

import numpy as np

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10
TRACE_TOL = 1e-10
EIG_FLOOR = 1e-12
MAX_DIM = 16


class StateError(ValueError):
    """Raised when a matrix violates a density-matrix invariant."""


def _as_matrix(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise StateError(f"expected a square matrix, got shape {m.shape}")
    return m


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, PSD, unit-trace matrix with an ordered subsystem layout."""

    matrix: np.ndarray
    dims: tuple[int, ...] = ()

    def __post_init__(self):
        m = _as_matrix(self.matrix)
        dims = tuple(int(d) for d in self.dims) or (m.shape[0],)
        if any(d < 1 for d in dims) or int(np.prod(dims)) != m.shape[0]:
            raise StateError(f"subsystem dims {dims} do not match matrix size {m.shape[0]}")
        if m.shape[0] > MAX_DIM:
            raise StateError(f"dimension {m.shape[0]} exceeds the supported maximum {MAX_DIM}")
        if not is_hermitian(m):
            raise StateError("matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > TRACE_TOL:
            raise StateError(f"trace is {np.trace(m).real!r}, expected 1")
        if np.linalg.eigvalsh(m)[0] < -PSD_TOL:
            raise StateError("matrix is not positive semidefinite")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_ket(cls, psi, dims: Sequence[int] = ()) -> "DensityMatrix":
        return PureState(psi).density(dims)

    @classmethod
    def maximally_mixed(cls, dims: Sequence[int]) -> "DensityMatrix":
        d = int(np.prod(dims))
        return cls(np.eye(d) / d, tuple(dims))

    @classmethod
    def project(cls, m, dims: Sequence[int] = ()) -> "DensityMatrix":
        """Closest valid state by Hermitizing, clipping eigenvalues at zero and renormalizing."""
        m = _as_matrix(m)
        m = (m + m.conj().T) / 2
        w, v = np.linalg.eigh(m)
        w = np.clip(w, 0.0, None)
        if w.sum() <= 0:
            raise StateError("matrix has no positive part")
        w = w / w.sum()
        out = (v * w) @ v.conj().T
        return cls((out + out.conj().T) / 2, tuple(dims))

    def __repr__(self) -> str:
        return f"DensityMatrix(dims={self.dims})"


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        psi = np.asarray(self.amplitudes, dtype=complex).ravel()
        if abs(np.vdot(psi, psi).real - 1.0) > 1e-12:
            raise StateError("state vector is not normalized")
        psi = psi.copy()
        psi.setflags(write=False)
        object.__setattr__(self, "amplitudes", psi)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self, dims: Sequence[int] = ()) -> DensityMatrix:
        psi = self.amplitudes
        return DensityMatrix(np.outer(psi, psi.conj()), tuple(dims))


def ket(*labels: int, d: int = 2) -> np.ndarray:
    """Computational basis vector |labels> for ``len(labels)`` systems of dimension ``d``."""
    vecs = [np.eye(d, dtype=complex)[i] for i in labels]
    return reduce(np.kron, vecs)


def tensor(a: DensityMatrix, b: DensityMatrix) -> DensityMatrix:
    return DensityMatrix(np.kron(a.matrix, b.matrix), a.dims + b.dims)


def partial_trace(rho: DensityMatrix, keep: int) -> DensityMatrix:
    """Reduced state on subsystem ``keep``."""
    n = len(rho.dims)
    if not 0 <= keep < n:
        raise IndexError(f"subsystem {keep} out of range for dims {rho.dims}")
    t = rho.matrix.reshape(rho.dims + rho.dims)
    ket_idx = list(range(n))
    bra_idx = [i + n if i == keep else i for i in range(n)]
    red = np.einsum(t, ket_idx + bra_idx, [keep, keep + n])
    return DensityMatrix((red + red.conj().T) / 2, (rho.dims[keep],))


def eig_hermitian(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition with descending eigenvalues and a fixed phase convention.

    Each eigenvector is rotated so its largest-magnitude component is real and
    positive (first such component on ties).
    """
    m = _as_matrix(m)
    if not is_hermitian(m):
        raise ValueError("eig_hermitian requires a Hermitian matrix")
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    w, v = w[::-1], v[:, ::-1]
    mags = np.abs(v)
    lead = np.argmax(mags >= mags.max(axis=0) - 1e-12, axis=0)
    phase = v[lead, np.arange(v.shape[1])]
    v = v * (np.abs(phase) / phase)
    return w, v


def _xlog2x(p: np.ndarray) -> np.ndarray:
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    out = np.zeros_like(p)
    nz = p > EIG_FLOOR
    out[nz] = p[nz] * np.log2(p[nz])
    return out


def shannon_entropy(p) -> float:
    return float(-_xlog2x(p).sum()) + 0.0


def von_neumann_entropy(rho: DensityMatrix) -> float:
    return shannon_entropy(np.linalg.eigvalsh(rho.matrix))


def relative_entropy(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """S(rho||sigma) in bits; ``inf`` when rho has weight outside the support of sigma."""
    if rho.dim != sigma.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    s_vals, s_vecs = np.linalg.eigh(sigma.matrix)
    weights = np.real(np.einsum("ik,ij,jk->k", s_vecs.conj(), rho.matrix, s_vecs))
    kernel = s_vals <= EIG_FLOOR
    if np.any(weights[kernel] > EIG_FLOOR):
        return float("inf")
    cross = float(np.sum(weights[~kernel] * np.log2(s_vals[~kernel])))
    value = -von_neumann_entropy(rho) - cross
    return max(value, 0.0) if value > -1e-12 else value


def _check_basis(u: np.ndarray) -> np.ndarray:
    u = _as_matrix(u)
    if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > 1e-10:
        raise ValueError("basis vectors are not orthonormal")
    return u


def dephase(
    rho: DensityMatrix,
    subsystems: Iterable[int],
    bases: Mapping[int, np.ndarray] | None = None,
) -> DensityMatrix:
    """Remove coherences on ``subsystems`` in the given per-subsystem bases.

    ``bases[k]`` holds basis vectors as columns; subsystems without an entry
    use the computational basis.
    """
    subsystems = sorted(set(subsystems))
    n = len(rho.dims)
    if any(not 0 <= s < n for s in subsystems):
        raise IndexError(f"subsystems {subsystems} out of range for dims {rho.dims}")
    bases = dict(bases or {})
    locals_ = []
    for k, d in enumerate(rho.dims):
        u = bases.get(k) if k in subsystems else None
        locals_.append(np.eye(d, dtype=complex) if u is None else _check_basis(u))
    u = reduce(np.kron, locals_)
    m = u.conj().T @ rho.matrix @ u
    mask = np.ones(rho.dims + rho.dims, dtype=bool)
    for s in subsystems:
        shape = [1] * (2 * n)
        shape[s], shape[s + n] = rho.dims[s], rho.dims[s]
        mask &= np.eye(rho.dims[s], dtype=bool).reshape(shape)
    m = np.where(mask.reshape(m.shape), m, 0)
    out = u @ m @ u.conj().T
    return DensityMatrix((out + out.conj().T) / 2, rho.dims)


def simplex_projection(w: np.ndarray) -> np.ndarray:
    """Euclidean projection of a real vector onto the probability simplex."""
    u = np.sort(w)[::-1]
    css = np.cumsum(u)
    k = np.nonzero(u - (css - 1) / np.arange(1, u.size + 1) > 0)[0][-1]
    return np.clip(w - (css[k] - 1) / (k + 1), 0.0, None)


def closest_unit_trace_psd(m: np.ndarray) -> np.ndarray:
    """Frobenius-closest unit-trace PSD matrix to the Hermitian part of ``m``."""
    m = (m + m.conj().T) / 2
    w, v = np.linalg.eigh(m)
    out = (v * simplex_projection(w)) @ v.conj().T
    return (out + out.conj().T) / 2


def sqrtm_psd(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def matrix_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """Uhlmann fidelity (tr sqrt(sqrt(a) b sqrt(a)))^2 for unit-trace PSD matrices."""
    ra = sqrtm_psd(a)
    w = np.linalg.eigvalsh(ra @ b @ ra)
    f = float(np.sum(np.sqrt(np.clip(w, 0.0, None))) ** 2)
    return min(max(f, 0.0), 1.0)


def state_fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    if rho.dim != sigma.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    return matrix_fidelity(rho.matrix, sigma.matrix)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random state from the induced (Ginibre) measure; full rank by default."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    return m / np.trace(m).real


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with phase fix."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
