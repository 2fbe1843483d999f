"""The coherence -> discord -> coherence cycle.

Stage one entangles a coherent system A with an incoherent ancilla B through
a CNOT-type gate; stage two measures B in a basis unbiased with respect to
the computational one and undoes the outcome-dependent phase on A.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .channels import UnitaryGate, apply_gate, apply_unitary, generalized_cnot
from .measures import (
    DiscordConfig,
    binary_entropy,
    coherence_rel_ent,
    discord_rel_ent,
    qi_rel_ent,
)
from .qmat import DensityMatrix, partial_trace, state_fidelity, tensor

MIN_OUTCOME_PROB = 1e-12


@dataclass(frozen=True)
class CycleInput:
    """Pure input cos(2 theta)|0> + sin(2 theta)|1> (theta in degrees) or mixed input with off-diagonal ``a``."""

    kind: str
    theta: float = 0.0
    a: complex = 0.0

    def __post_init__(self):
        if self.kind == "pure":
            if not 0.0 <= self.theta <= 45.0:
                raise ValueError(f"theta must lie in [0, 45] degrees, got {self.theta}")
        elif self.kind == "mixed":
            if abs(self.a) > 1.0 + 1e-12:
                raise ValueError(f"|a| must be at most 1, got {abs(self.a)}")
        else:
            raise ValueError(f"unknown input kind {self.kind!r}")

    @classmethod
    def pure(cls, theta: float) -> "CycleInput":
        return cls("pure", theta=float(theta))

    @classmethod
    def mixed(cls, a: complex) -> "CycleInput":
        return cls("mixed", a=complex(a))

    def system_state(self) -> DensityMatrix:
        if self.kind == "pure":
            t = np.radians(2 * self.theta)
            return DensityMatrix.from_ket([np.cos(t), np.sin(t)])
        return mixed_system_state(self.a)

    def key(self) -> float:
        return self.theta if self.kind == "pure" else abs(self.a)


def mixed_system_state(a: complex) -> DensityMatrix:
    if abs(a) > 1.0 + 1e-12:
        raise ValueError(f"|a| must be at most 1, got {abs(a)}")
    return DensityMatrix(0.5 * np.array([[1.0, a], [np.conj(a), 1.0]]))


def with_blank_ancilla(rho_a: DensityMatrix) -> DensityMatrix:
    d = rho_a.dim
    blank = np.zeros((d, d))
    blank[0, 0] = 1.0
    return tensor(rho_a, DensityMatrix(blank))


def prepare_pure(theta: float) -> DensityMatrix:
    return with_blank_ancilla(CycleInput.pure(theta).system_state())


def prepare_mixed(a: complex) -> DensityMatrix:
    return with_blank_ancilla(CycleInput.mixed(a).system_state())


def abs_a_for_coherence(c: float) -> float:
    """|a| of the mixed input whose coherence 1 - h((1 + |a|)/2) equals ``c``."""
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"coherence {c} outside [0, 1]")
    if c == 0.0:
        return 0.0
    if c == 1.0:
        return 1.0
    p = brentq(lambda p: 1.0 - binary_entropy(p) - c, 0.5, 1.0, xtol=1e-15)
    return 2 * p - 1


@dataclass(frozen=True, eq=False)
class MeasurementBasis:
    """Orthonormal ancilla basis; column j of ``vectors`` is outcome j."""

    vectors: np.ndarray
    label: str = "custom"
    outcome_labels: tuple[str, ...] = ()

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=complex)
        d = v.shape[0]
        if v.shape != (d, d) or np.max(np.abs(v.conj().T @ v - np.eye(d))) > 1e-10:
            raise ValueError("measurement vectors are not an orthonormal basis")
        if np.max(np.abs(np.abs(v) ** 2 - 1.0 / d)) > 1e-9:
            raise ValueError("measurement basis is not unbiased with respect to the computational basis")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)
        labels = tuple(self.outcome_labels) or tuple(str(j) for j in range(d))
        object.__setattr__(self, "outcome_labels", labels)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @classmethod
    def pauli_y(cls) -> "MeasurementBasis":
        v = np.array([[1, 1], [1j, -1j]]) / np.sqrt(2)
        return cls(v, "pauli_y", ("+", "-"))

    @classmethod
    def fourier(cls, d: int = 2) -> "MeasurementBasis":
        k = np.arange(d)
        v = np.exp(-2j * np.pi * np.outer(k, k) / d) / np.sqrt(d)
        return cls(v, "fourier")

    @classmethod
    def by_name(cls, name: str, d: int = 2) -> "MeasurementBasis":
        if name == "pauli_y":
            return cls.pauli_y()
        if name == "fourier":
            return cls.fourier(d)
        raise ValueError(f"unknown measurement basis {name!r}")


def convert(state: DensityMatrix, gate=None, tp_tol: float = 1e-6) -> DensityMatrix:
    """Apply the conversion gate (ideal generalized CNOT when ``gate`` is None)."""
    if gate is None:
        gate = generalized_cnot(state.dims[0])
    return apply_gate(state, gate, tp_tol=tp_tol)


@dataclass
class AncillaOutcome:
    index: int
    probability: float
    state: DensityMatrix | None

    @property
    def omitted(self) -> bool:
        return self.state is None


def measure_ancilla(rho_ab: DensityMatrix, basis: MeasurementBasis) -> list[AncillaOutcome]:
    """Project B onto each basis vector; outcomes below 1e-12 probability carry ``state=None``."""
    d_a, d_b = rho_ab.dims
    if d_b != basis.dim:
        raise ValueError(f"basis dimension {basis.dim} does not match ancilla dimension {d_b}")
    r = rho_ab.matrix.reshape(d_a, d_b, d_a, d_b)
    outcomes = []
    for j in range(basis.dim):
        psi = basis.vectors[:, j]
        block = np.einsum("l,albn,n->ab", psi.conj(), r, psi)
        p = float(np.trace(block).real)
        state = None
        if p >= MIN_OUTCOME_PROB:
            block = block / p
            state = DensityMatrix((block + block.conj().T) / 2)
        outcomes.append(AncillaOutcome(j, max(p, 0.0), state))
    return outcomes


def post_measurement_state(rho_ab: DensityMatrix, basis: MeasurementBasis) -> DensityMatrix:
    """Ensemble average sum_m p_m rho_A^m (x) |Psi_m><Psi_m| after measuring B."""
    total = np.zeros((rho_ab.dim, rho_ab.dim), dtype=complex)
    for out in measure_ancilla(rho_ab, basis):
        if out.state is not None:
            psi = basis.vectors[:, out.index]
            total += out.probability * np.kron(out.state.matrix, np.outer(psi, psi.conj()))
    return DensityMatrix.project(total, rho_ab.dims)


def corrective_phase(basis: MeasurementBasis, m: int) -> UnitaryGate:
    """Diagonal phase on A that undoes outcome ``m``.

    Outcome m multiplies rho_kl by conj(psi_k) psi_l, so the correction is
    diag(psi_k / |psi_k|), with the k = 0 phase divided out.
    """
    if not 0 <= m < basis.dim:
        raise IndexError(f"outcome {m} out of range for a {basis.dim}-outcome basis")
    psi = basis.vectors[:, m]
    phases = psi / np.abs(psi)
    return UnitaryGate(np.diag(phases / phases[0]))


@dataclass
class OutcomeRecord:
    label: str
    probability: float
    state: DensityMatrix | None
    coherence: float
    fidelity: float


@dataclass
class CycleReport:
    c_initial: float
    discord: float
    qi_rel_ent: float
    outcomes: list[OutcomeRecord] = field(default_factory=list)
    c_final: float = 0.0
    discord_converged: bool = True

    def probability(self, label: str) -> float:
        return next((o.probability for o in self.outcomes if o.label == label), 0.0)

    def to_dict(self) -> dict:
        def num(x: float) -> float:
            return float(f"{x:.12g}")

        def mat(m: np.ndarray) -> dict:
            return {"re": [[num(x) for x in row] for row in m.real], "im": [[num(x) for x in row] for row in m.imag]}

        return {
            "c_initial": num(self.c_initial),
            "discord": num(self.discord),
            "qi_rel_ent": num(self.qi_rel_ent),
            "outcomes": [
                {
                    "label": o.label,
                    "probability": num(o.probability),
                    "coherence": num(o.coherence),
                    "fidelity": num(o.fidelity),
                    "state": None if o.state is None else mat(o.state.matrix),
                }
                for o in self.outcomes
            ],
            "c_final": num(self.c_final),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def run_cycle(
    inp: CycleInput,
    gate=None,
    basis: MeasurementBasis | None = None,
    discord_config: DiscordConfig | None = None,
    tp_tol: float = 1e-6,
) -> CycleReport:
    """Prepare, convert, record discord, measure the ancilla and restore A."""
    return cycle_from_state(inp.system_state(), gate, basis, discord_config, tp_tol)


def cycle_from_state(
    rho_a: DensityMatrix,
    gate=None,
    basis: MeasurementBasis | None = None,
    discord_config: DiscordConfig | None = None,
    tp_tol: float = 1e-6,
) -> CycleReport:
    """The cycle for an arbitrary system state, not only the pure/mixed input families."""
    basis = basis or MeasurementBasis.pauli_y()
    joint = convert(with_blank_ancilla(rho_a), gate, tp_tol=tp_tol)
    disc = discord_rel_ent(joint, discord_config)

    records = []
    for out in measure_ancilla(joint, basis):
        label = basis.outcome_labels[out.index]
        if out.state is None:
            records.append(OutcomeRecord(label, out.probability, None, 0.0, 0.0))
            continue
        restored = apply_unitary(out.state, corrective_phase(basis, out.index))
        records.append(
            OutcomeRecord(
                label,
                out.probability,
                out.state,
                coherence_rel_ent(out.state),
                state_fidelity(restored, rho_a),
            )
        )
    return CycleReport(
        c_initial=coherence_rel_ent(rho_a),
        discord=disc.value,
        qi_rel_ent=qi_rel_ent(joint),
        outcomes=records,
        c_final=float(sum(r.probability * r.coherence for r in records)),
        discord_converged=disc.converged,
    )


def system_marginal(rho_ab: DensityMatrix) -> DensityMatrix:
    return partial_trace(rho_ab, 0)
