"""Simulated state and process tomography from finite Pauli-basis counts."""

from __future__ import annotations

import csv
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .channels import PAULI_1Q, PAULI_2Q, ChiMatrix, apply_gate
from .qmat import DensityMatrix, closest_unit_trace_psd

# Eigenvectors per Pauli axis; outcome 0 is the +1 eigenstate.
_AXIS_VECTORS = {
    "Z": np.array([[1, 0], [0, 1]], dtype=complex),
    "X": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "Y": np.array([[1, 1], [1j, -1j]], dtype=complex) / np.sqrt(2),
}


@dataclass(frozen=True)
class MeasurementSetting:
    bases: tuple[str, ...]

    def __post_init__(self):
        if not self.bases or any(b not in _AXIS_VECTORS for b in self.bases):
            raise ValueError(f"setting must be a non-empty string over X, Y, Z, got {self.bases!r}")

    @classmethod
    def parse(cls, label: str) -> "MeasurementSetting":
        return cls(tuple(label))

    @property
    def label(self) -> str:
        return "".join(self.bases)

    @property
    def n_qubits(self) -> int:
        return len(self.bases)

    def projectors(self) -> np.ndarray:
        """Rank-one projectors for all 2**n outcomes, first qubit most significant."""
        vecs = []
        for bits in itertools.product((0, 1), repeat=self.n_qubits):
            vecs.append(reduce(np.kron, [_AXIS_VECTORS[b][:, o] for b, o in zip(self.bases, bits)]))
        vecs = np.array(vecs)
        return np.einsum("ki,kj->kij", vecs, vecs.conj())


@dataclass(frozen=True)
class CountRecord:
    """Counts for one setting. Analytic (expected-value) records hold float counts."""

    setting: MeasurementSetting
    counts: tuple[float, ...]
    shots: float

    def __post_init__(self):
        if len(self.counts) != 2**self.setting.n_qubits:
            raise ValueError("number of outcomes does not match the setting")
        if any(c < 0 for c in self.counts):
            raise ValueError("counts must be non-negative")
        if abs(sum(self.counts) - self.shots) > 1e-9 * max(1.0, self.shots):
            raise ValueError("counts do not sum to shots")


@dataclass
class TomographyConfig:
    shots_per_setting: int = 10_000
    seed: int = 0
    mle_max_iter: int = 500
    mle_tol: float = 1e-10

    def __post_init__(self):
        if self.shots_per_setting < 1 or self.mle_max_iter < 1 or self.mle_tol <= 0 or self.seed < 0:
            raise ValueError("tomography settings must be positive")


def complete_settings(n_qubits: int) -> list[MeasurementSetting]:
    return [MeasurementSetting(b) for b in itertools.product("XYZ", repeat=n_qubits)]


def _n_qubits(rho: DensityMatrix) -> int:
    n = int(round(np.log2(rho.dim)))
    if 2**n != rho.dim:
        raise ValueError("tomography is implemented for qubit registers only")
    return n


def born_probabilities(rho: DensityMatrix, setting: MeasurementSetting) -> np.ndarray:
    p = np.real(np.einsum("kij,ji->k", setting.projectors(), rho.matrix))
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def stream_rng(seed: int, *key: int) -> np.random.Generator:
    """Philox generator keyed by (seed, *key); independent of call order."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *key])))


def simulate_counts(
    rho: DensityMatrix,
    settings: Sequence[MeasurementSetting],
    config: TomographyConfig,
    stream: Sequence[int] = (),
) -> list[CountRecord]:
    """Multinomial Born-rule counts; setting i draws from the stream (seed, *stream, i)."""
    _n_qubits(rho)
    records = []
    for i, s in enumerate(settings):
        rng = stream_rng(config.seed, *stream, i)
        counts = rng.multinomial(config.shots_per_setting, born_probabilities(rho, s))
        records.append(CountRecord(s, tuple(int(c) for c in counts), config.shots_per_setting))
    return records


def exact_records(rho: DensityMatrix, settings: Sequence[MeasurementSetting], shots: float = 1.0) -> list[CountRecord]:
    """Noise-free records whose counts are the expected values shots * p."""
    records = []
    for s in settings:
        p = born_probabilities(rho, s) * shots
        records.append(CountRecord(s, tuple(float(x) for x in p), float(p.sum())))
    return records


def linear_inversion(records: Sequence[CountRecord]) -> np.ndarray:
    """Pauli-expectation reconstruction; Hermitian and unit trace but possibly not PSD."""
    n = records[0].setting.n_qubits
    signs = {}
    for rec in records:
        freqs = np.asarray(rec.counts, dtype=float) / rec.shots
        bits = np.array(list(itertools.product((0, 1), repeat=n)))
        signs.setdefault(rec.setting.bases, []).append((freqs, bits))
    rho = np.zeros((2**n, 2**n), dtype=complex)
    for pauli in itertools.product("IXYZ", repeat=n):
        active = [i for i, p in enumerate(pauli) if p != "I"]
        estimates = []
        for bases, entries in signs.items():
            if all(bases[i] == pauli[i] for i in active):
                for freqs, bits in entries:
                    parity = (-1.0) ** bits[:, active].sum(axis=1) if active else np.ones(len(freqs))
                    estimates.append(float(freqs @ parity))
        if not estimates:
            raise ValueError(f"settings are not tomographically complete (no data for {''.join(pauli)})")
        op = reduce(np.kron, [PAULI_1Q[p] for p in pauli])
        rho += np.mean(estimates) * op
    rho /= 2**n
    return (rho + rho.conj().T) / 2


@dataclass
class MLEResult:
    state: DensityMatrix
    log_likelihoods: list[float] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    linear_min_eigenvalue: float = 0.0


def _stack(records: Sequence[CountRecord]) -> tuple[np.ndarray, np.ndarray]:
    projs = np.concatenate([r.setting.projectors() for r in records])
    counts = np.concatenate([np.asarray(r.counts, dtype=float) for r in records])
    return projs, counts


def mle_fit(records: Sequence[CountRecord], config: TomographyConfig | None = None) -> MLEResult:
    """Maximum-likelihood state by the RrhoR fixed-point iteration.

    Starts from the PSD projection of the linear-inversion estimate. When a
    full RrhoR step would lower the likelihood, the diluted update
    (I + eps R) rho (I + eps R) is used with eps halved until it does not.
    Iteration stops once the likelihood gain per count drops below
    ``mle_tol`` or after ``mle_max_iter`` steps.
    """
    config = config or TomographyConfig()
    projs, counts = _stack(records)
    dim = projs.shape[1]
    settings = len(records)
    total = counts.sum()
    freqs = counts / total
    observed = counts > 0

    lin = linear_inversion(records)
    lin_min = float(np.linalg.eigvalsh(lin)[0])
    rho = DensityMatrix.project(lin).matrix

    def probs(r):
        return np.real(np.einsum("kij,ji->k", projs, r))

    def loglik(p):
        if np.any(p[observed] <= 0):
            return -np.inf
        return float(counts[observed] @ np.log(p[observed]))

    p = probs(rho)
    if np.any(p[observed] <= 1e-15):
        rho = (1 - 1e-3) * rho + 1e-3 * np.eye(dim) / dim
        p = probs(rho)
    ll = loglik(p)
    history = [ll]
    converged = False
    iterations = 0
    eye = np.eye(dim)
    for iterations in range(1, config.mle_max_iter + 1):
        weights = np.where(observed, freqs / np.where(observed, p, 1.0), 0.0) * settings
        big_r = np.einsum("k,kij->ij", weights, projs)
        candidate = big_r @ rho @ big_r
        new_rho = candidate / np.trace(candidate).real
        new_p = probs(new_rho)
        new_ll = loglik(new_p)
        eps = 1.0
        while new_ll < ll and eps > 1e-8:
            step = eye + eps * big_r
            candidate = step @ rho @ step
            new_rho = candidate / np.trace(candidate).real
            new_p = probs(new_rho)
            new_ll = loglik(new_p)
            eps /= 2
        if new_ll < ll:
            converged = True
            break
        gain = new_ll - ll
        rho, p, ll = (new_rho + new_rho.conj().T) / 2, new_p, new_ll
        history.append(ll)
        if gain / total <= config.mle_tol:
            converged = True
            break
    n = records[0].setting.n_qubits
    return MLEResult(DensityMatrix.project(rho, (2,) * n), history, converged, iterations, lin_min)


def mle_state(records: Sequence[CountRecord], config: TomographyConfig | None = None) -> DensityMatrix:
    return mle_fit(records, config).state


PROBE_STATES_1Q = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([1, 1], dtype=complex) / np.sqrt(2),
    "+i": np.array([1, 1j], dtype=complex) / np.sqrt(2),
}


def probe_states() -> list[DensityMatrix]:
    """The 16 product inputs {|0>, |1>, |+>, |+i>} on two qubits."""
    out = []
    for a, b in itertools.product(PROBE_STATES_1Q, repeat=2):
        out.append(DensityMatrix.from_ket(np.kron(PROBE_STATES_1Q[a], PROBE_STATES_1Q[b]), (2, 2)))
    return out


def _probe_output(args) -> np.ndarray:
    index, probe, gate, config, analytic = args
    out = apply_gate(probe, gate)
    settings = complete_settings(2)
    if analytic:
        records = exact_records(out, settings, float(config.shots_per_setting))
    else:
        records = simulate_counts(out, settings, config, stream=(index,))
    return mle_state(records, config).matrix


def chi_from_io(inputs: Sequence[np.ndarray], outputs: Sequence[np.ndarray]) -> np.ndarray:
    """Least-squares chi solving sum_mn chi_mn A_m rho_k A_n^dag = out_k (no positivity)."""
    # design[(k, i, l), (m, n)] = (A_m rho_k A_n^dag)[i, l]
    rows = [np.einsum("mij,jk,nlk->ilmn", PAULI_2Q, rho, PAULI_2Q.conj()) for rho in inputs]
    design = np.concatenate([r.reshape(16, 256) for r in rows])
    target = np.concatenate([np.asarray(o).reshape(16) for o in outputs])
    sol, *_ = np.linalg.lstsq(design, target, rcond=None)
    chi = sol.reshape(16, 16)
    return (chi + chi.conj().T) / 2


def qpt(gate, config: TomographyConfig | None = None, analytic: bool = False, workers: int = 1) -> ChiMatrix:
    """Process tomography of a two-qubit gate over the 16 product probes.

    Each output is reconstructed with ``mle_state`` from the counts of the
    nine two-qubit Pauli settings (probe k uses RNG stream (seed, k, setting)).
    The linear chi estimate is mapped to the nearest unit-trace PSD matrix
    (spectrum projected onto the simplex); plain clip-and-rescale would shrink
    the dominant eigenvalue and bias the process fidelity low.
    """
    config = config or TomographyConfig()
    probes = probe_states()
    tasks = [(k, p, gate, config, analytic) for k, p in enumerate(probes)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_probe_output, tasks))
    else:
        outputs = [_probe_output(t) for t in tasks]
    chi = chi_from_io([p.matrix for p in probes], outputs)
    chi = closest_unit_trace_psd(chi / np.trace(chi).real)
    return ChiMatrix(chi / np.trace(chi).real)


def write_counts_csv(records: Iterable[CountRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["setting", "outcome", "count", "shots"])
        for rec in records:
            n = rec.setting.n_qubits
            for idx, c in enumerate(rec.counts):
                writer.writerow([rec.setting.label, format(idx, f"0{n}b"), _fmt_count(c), _fmt_count(rec.shots)])


def _fmt_count(x) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def read_counts_csv(path) -> list[CountRecord]:
    grouped: dict[str, dict] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            entry = grouped.setdefault(row["setting"], {"counts": {}, "shots": float(row["shots"])})
            entry["counts"][int(row["outcome"], 2)] = float(row["count"])
    records = []
    for label, entry in grouped.items():
        setting = MeasurementSetting.parse(label)
        counts = tuple(entry["counts"].get(i, 0.0) for i in range(2**setting.n_qubits))
        records.append(CountRecord(setting, counts, entry["shots"]))
    return records

