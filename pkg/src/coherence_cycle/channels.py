"""Gates, Kraus channels and two-qubit process (chi) matrices."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import reduce
from pathlib import Path
from typing import Sequence

import numpy as np

from .qmat import DensityMatrix, _as_matrix, is_hermitian, matrix_fidelity

PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
PAULI_LABELS = tuple("".join(p) for p in itertools.product("IXYZ", repeat=2))
PAULI_2Q = np.stack([np.kron(PAULI_1Q[a], PAULI_1Q[b]) for a, b in PAULI_LABELS])

# Process fidelity the experimental CNOT reached; lambda solves F = lam + (1 - lam) / 16.
EXPERIMENTAL_FIDELITY = 0.885
EXPERIMENTAL_LAMBDA = (EXPERIMENTAL_FIDELITY - 1 / 16) / (15 / 16)


class ChannelError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class UnitaryGate:
    matrix: np.ndarray
    dims: tuple[int, ...] = ()

    def __post_init__(self):
        u = _as_matrix(self.matrix)
        if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > 1e-10:
            raise ChannelError("matrix is not unitary")
        dims = tuple(self.dims) or (u.shape[0],)
        if int(np.prod(dims)) != u.shape[0]:
            raise ChannelError(f"dims {dims} do not match gate size {u.shape[0]}")
        u = u.copy()
        u.setflags(write=False)
        object.__setattr__(self, "matrix", u)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class KrausChannel:
    operators: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(_as_matrix(k) for k in self.operators)
        if not ops or len({k.shape for k in ops}) != 1:
            raise ChannelError("Kraus operators must be non-empty and share one shape")
        total = sum(k.conj().T @ k for k in ops)
        if np.max(np.abs(total - np.eye(ops[0].shape[0]))) > 1e-8:
            raise ChannelError("Kraus operators are not trace preserving")
        object.__setattr__(self, "operators", ops)


@dataclass(frozen=True, eq=False)
class ChiMatrix:
    """Two-qubit process matrix over ``PAULI_LABELS`` with unit trace.

    With unnormalized Pauli operators a trace-one chi is exactly the
    trace-preserving normalization, so ``apply_chi`` needs no extra factor.
    Complete positivity is enforced here; trace preservation is checked by
    ``apply_chi`` because tomographic estimates only satisfy it approximately.
    """

    entries: np.ndarray

    def __post_init__(self):
        chi = _as_matrix(self.entries)
        if chi.shape != (16, 16):
            raise ChannelError(f"chi must be 16x16, got {chi.shape}")
        if not is_hermitian(chi):
            raise ChannelError("chi is not Hermitian")
        if abs(np.trace(chi).real - 1.0) > 1e-10:
            raise ChannelError("chi does not have unit trace")
        if np.linalg.eigvalsh(chi)[0] < -1e-8:
            raise ChannelError("chi is not positive semidefinite (map not completely positive)")
        chi = chi.copy()
        chi.setflags(write=False)
        object.__setattr__(self, "entries", chi)

    def tp_deviation(self) -> float:
        """Max-entry deviation of sum_mn chi_mn A_n^dag A_m from the identity."""
        s = np.einsum("mn,nki,mkj->ij", self.entries, PAULI_2Q.conj(), PAULI_2Q)
        return float(np.max(np.abs(s - np.eye(4))))

    def to_json(self) -> str:
        return json.dumps(
            {
                "order": list(PAULI_LABELS),
                "re": self.entries.real.tolist(),
                "im": self.entries.imag.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "ChiMatrix":
        data = json.loads(text)
        if not isinstance(data, dict):
            raise ChannelError("chi file must hold a JSON object")
        if list(data.get("order", [])) != list(PAULI_LABELS):
            raise ChannelError("chi file uses an unsupported Pauli ordering")
        return cls(np.asarray(data["re"], dtype=float) + 1j * np.asarray(data["im"], dtype=float))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "ChiMatrix":
        try:
            return cls.from_json(Path(path).read_text())
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ChannelError(f"invalid chi file {path}: {exc}") from exc


def generalized_cnot(d: int = 2) -> UnitaryGate:
    """|m>|n> -> |m>|(m + n) mod d>."""
    if not 2 <= d <= 4:
        raise ValueError(f"generalized CNOT supports 2 <= d <= 4, got {d}")
    u = np.zeros((d * d, d * d))
    for m in range(d):
        for n in range(d):
            u[m * d + (m + n) % d, m * d + n] = 1.0
    return UnitaryGate(u, (d, d))


def apply_unitary(rho: DensityMatrix, u: UnitaryGate) -> DensityMatrix:
    if u.dim != rho.dim:
        raise ValueError(f"gate dimension {u.dim} does not match state dimension {rho.dim}")
    out = u.matrix @ rho.matrix @ u.matrix.conj().T
    return DensityMatrix((out + out.conj().T) / 2, rho.dims)


def apply_kraus(rho: DensityMatrix, channel: KrausChannel) -> DensityMatrix:
    out = sum(k @ rho.matrix @ k.conj().T for k in channel.operators)
    return DensityMatrix((out + out.conj().T) / 2, rho.dims)


def chi_of_unitary(u: UnitaryGate) -> ChiMatrix:
    if u.dim != 4:
        raise ValueError("chi matrices are defined for two-qubit gates")
    v = np.einsum("mij,ij->m", PAULI_2Q.conj(), u.matrix) / 4
    chi = np.outer(v, v.conj())
    return ChiMatrix(chi / np.trace(chi).real)


def apply_chi(rho: DensityMatrix, chi: ChiMatrix, tp_tol: float = 1e-6) -> DensityMatrix:
    if rho.dim != 4:
        raise ValueError("apply_chi expects a two-qubit state")
    dev = chi.tp_deviation()
    if dev > tp_tol:
        raise ChannelError(f"chi is not trace preserving (deviation {dev:.3g} > {tp_tol:g})")
    out = np.einsum("mn,mij,jk,nlk->il", chi.entries, PAULI_2Q, rho.matrix, PAULI_2Q.conj())
    out = (out + out.conj().T) / 2
    if np.linalg.eigvalsh(out)[0] < -1e-8:
        raise ChannelError("chi produced a non-positive output state")
    return DensityMatrix(out / np.trace(out).real, rho.dims)


def apply_gate(rho: DensityMatrix, gate, tp_tol: float = 1e-6) -> DensityMatrix:
    """Dispatch on gate type: UnitaryGate, ChiMatrix or KrausChannel."""
    if isinstance(gate, UnitaryGate):
        return apply_unitary(rho, gate)
    if isinstance(gate, ChiMatrix):
        return apply_chi(rho, gate, tp_tol=tp_tol)
    if isinstance(gate, KrausChannel):
        return apply_kraus(rho, gate)
    raise TypeError(f"unsupported gate type {type(gate).__name__}")


def depolarizing_chi() -> ChiMatrix:
    return ChiMatrix(np.eye(16) / 16)


def depolarized_cnot(lam: float) -> ChiMatrix:
    """lam * chi(CNOT) + (1 - lam) * I/16."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda {lam} outside [0, 1]")
    chi = lam * chi_of_unitary(generalized_cnot(2)).entries + (1 - lam) * np.eye(16) / 16
    return ChiMatrix(chi)


def process_fidelity(chi1: ChiMatrix, chi2: ChiMatrix) -> float:
    a, b = chi1.entries, chi2.entries
    if np.linalg.matrix_rank(a, tol=1e-9) == 1 or np.linalg.matrix_rank(b, tol=1e-9) == 1:
        return float(min(max(np.trace(a @ b).real, 0.0), 1.0))
    return matrix_fidelity(a, b)


def chi_to_kraus(chi: ChiMatrix, floor: float = 1e-12) -> KrausChannel:
    """Kraus form from the eigendecomposition of chi; eigenvalues below ``floor`` dropped."""
    w, v = np.linalg.eigh(chi.entries)
    ops = [np.sqrt(lam) * np.einsum("m,mij->ij", v[:, k], PAULI_2Q) for k, lam in enumerate(w) if lam > floor]
    return KrausChannel(tuple(ops))


def random_incoherent_channel(
    dims: Sequence[int], rng: np.random.Generator, n_kraus: int = 3
) -> KrausChannel:
    """Random strictly incoherent channel on ``prod(dims)`` levels.

    Each Kraus operator is a permutation times a complex diagonal
    (K_i |k> = c_ik |pi_i(k)>) with sum_i |c_ik|^2 = 1, so basis states map to
    mixtures of basis states.
    """
    d = int(np.prod(dims))
    weights = rng.dirichlet(np.ones(n_kraus), size=d).T
    phases = np.exp(2j * np.pi * rng.random((n_kraus, d)))
    ops = []
    for i in range(n_kraus):
        perm = rng.permutation(d)
        k = np.zeros((d, d), dtype=complex)
        k[perm, np.arange(d)] = np.sqrt(weights[i]) * phases[i]
        ops.append(k)
    return KrausChannel(tuple(ops))


def local_unitary(*us: np.ndarray) -> UnitaryGate:
    return UnitaryGate(reduce(np.kron, us), tuple(u.shape[0] for u in us))
