"""Relative-entropy resource measures: coherence, QI relative entropy, discord."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .qmat import DensityMatrix, dephase, shannon_entropy, von_neumann_entropy


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    return shannon_entropy([p, 1.0 - p])


def coherence_rel_ent(rho: DensityMatrix) -> float:
    """Relative entropy of coherence in the computational basis of every subsystem.

    For this measure the minimization over incoherent states has the closed
    form S(diag rho) - S(rho).
    """
    dephased = np.clip(np.real(np.diag(rho.matrix)), 0.0, 1.0)
    return max(shannon_entropy(dephased) - von_neumann_entropy(rho), 0.0)


def qi_rel_ent(rho_ab: DensityMatrix) -> float:
    """Quantum-incoherent relative entropy C_{B|A}: dephase subsystem A only."""
    if len(rho_ab.dims) != 2:
        raise ValueError(f"expected a bipartite state, got dims {rho_ab.dims}")
    value = von_neumann_entropy(dephase(rho_ab, {0})) - von_neumann_entropy(rho_ab)
    return max(value, 0.0)


@dataclass(frozen=True)
class LocalBasisPair:
    """Bloch angles (theta_a, phi_a, theta_b, phi_b) of one qubit basis per side.

    Each basis is {|n>, |-n>} for the Bloch direction n(theta, phi); the pair
    (theta, phi) and (pi - theta, phi + pi) name the same basis.
    """

    angles: tuple[float, float, float, float]

    @classmethod
    def canonical(cls, angles) -> "LocalBasisPair":
        out = []
        for theta, phi in np.reshape(np.asarray(angles, dtype=float), (2, 2)):
            theta = theta % (2 * np.pi)
            if theta > np.pi:
                theta, phi = 2 * np.pi - theta, phi + np.pi
            out += [float(theta), float(phi % (2 * np.pi))]
        return cls(tuple(out))

    def bases(self) -> tuple[np.ndarray, np.ndarray]:
        ta, pa, tb, pb = self.angles
        return qubit_basis(ta, pa), qubit_basis(tb, pb)


def qubit_basis(theta, phi) -> np.ndarray:
    """Unitary whose columns are |n> and |-n> for Bloch direction n(theta, phi).

    Broadcasts over array-valued angles, returning shape (..., 2, 2).
    """
    theta, phi = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(phi, dtype=float))
    c, s, e = np.cos(theta / 2), np.sin(theta / 2), np.exp(1j * phi)
    u = np.empty(theta.shape + (2, 2), dtype=complex)
    u[..., 0, 0], u[..., 1, 0] = c, e * s
    u[..., 0, 1], u[..., 1, 1] = -np.conj(e) * s, c
    return u


@dataclass
class DiscordConfig:
    grid_points: int = 12
    n_refine: int = 5
    xatol: float = 1e-7
    fatol: float = 1e-12
    max_iter: int = 4000


@dataclass
class DiscordResult:
    value: float
    optimal_bases: LocalBasisPair
    optimizer_trace: list[tuple[int, float]] = field(default_factory=list)
    converged: bool = True
    raw_value: float = 0.0


def _product_probs(rho4: np.ndarray, ua: np.ndarray, ub: np.ndarray) -> np.ndarray:
    """p[a, b, i, j] = <a_i b_j| rho |a_i b_j> for stacks of local bases ua[a], ub[b]."""
    half = np.einsum("aki,klmn,ami->ailn", ua.conj(), rho4, ua)
    return np.real(np.einsum("blj,ailn,bnj->abij", ub.conj(), half, ub))


def _entropy_rows(p: np.ndarray) -> np.ndarray:
    p = np.clip(p, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 1e-12, p * np.log2(np.where(p > 1e-12, p, 1.0)), 0.0)
    return -terms.sum(axis=(-1, -2))


def _gap_at(rho: np.ndarray, s_joint: float, x) -> float:
    ca, sa = math.cos(x[0] / 2), math.sin(x[0] / 2)
    cb, sb = math.cos(x[2] / 2), math.sin(x[2] / 2)
    ea, eb = cmath.exp(1j * x[1]), cmath.exp(1j * x[3])
    ua = np.array([[ca, -ea.conjugate() * sa], [ea * sa, ca]])
    ub = np.array([[cb, -eb.conjugate() * sb], [eb * sb, cb]])
    w = (ua[:, None, :, None] * ub[None, :, None, :]).reshape(4, 4)
    h = 0.0
    for p in (w.conj() * (rho @ w)).sum(axis=0).real.tolist():
        if p > 1e-12:
            h -= p * math.log2(min(p, 1.0))
    return h - s_joint


def dephased_entropy_gap(rho: DensityMatrix, angles) -> float:
    """S(product-basis dephasing of rho) - S(rho) for one LocalBasisPair."""
    ua, ub = LocalBasisPair.canonical(angles).bases()
    p = _product_probs(rho.matrix.reshape(2, 2, 2, 2), ua[None], ub[None])
    return float(_entropy_rows(p)[0, 0]) - von_neumann_entropy(rho)


def discord_rel_ent(rho_ab: DensityMatrix, config: DiscordConfig | None = None) -> DiscordResult:
    """Relative entropy of discord of a two-qubit state.

    The closest classically-correlated state is the dephasing of ``rho_ab`` in
    some product basis, so the search runs over four Bloch angles: a coarse
    grid over theta in [0, pi/2] and phi in [0, 2 pi) per side, then
    Nelder-Mead refinement from the best grid points.
    """
    config = config or DiscordConfig()
    if rho_ab.dims != (2, 2):
        raise ValueError(f"discord is implemented for two qubits, got dims {rho_ab.dims}")
    rho4 = rho_ab.matrix.reshape(2, 2, 2, 2)
    s_joint = von_neumann_entropy(rho_ab)

    n = config.grid_points
    thetas = np.linspace(0.0, np.pi / 2, n)
    phis = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    tt, pp = np.meshgrid(thetas, phis, indexing="ij")
    local_angles = np.stack([tt.ravel(), pp.ravel()], axis=1)
    u_local = qubit_basis(local_angles[:, 0], local_angles[:, 1])
    gaps = _entropy_rows(_product_probs(rho4, u_local, u_local)) - s_joint

    ia, ib = np.meshgrid(np.arange(len(local_angles)), np.arange(len(local_angles)), indexing="ij")
    grid_angles = np.concatenate([local_angles[ia.ravel()], local_angles[ib.ravel()]], axis=1)
    flat = gaps.ravel()
    order = np.lexsort(tuple(grid_angles[:, k] for k in range(3, -1, -1)) + (flat,))
    seeds = grid_angles[order[: config.n_refine]]

    trace: list[tuple[int, float]] = [(0, float(flat[order[0]]))]
    best_val, best_x, converged = float(flat[order[0]]), seeds[0], True
    step = np.array([np.pi / (2 * max(n - 1, 1)), np.pi / n] * 2) / 2

    rho = rho_ab.matrix

    def objective(x):
        return _gap_at(rho, s_joint, x)

    iteration = 0
    for seed in seeds:
        simplex = np.vstack([seed, seed + np.diag(step)])
        res = minimize(
            objective,
            seed,
            method="Nelder-Mead",
            options=dict(
                initial_simplex=simplex,
                xatol=config.xatol,
                fatol=config.fatol,
                maxiter=config.max_iter,
                maxfev=2 * config.max_iter,
            ),
        )
        iteration += int(res.nit)
        trace.append((iteration, float(res.fun)))
        if res.fun < best_val or (res.fun == best_val and tuple(res.x) < tuple(best_x)):
            best_val, best_x = float(res.fun), res.x
            converged = bool(res.success)
    return DiscordResult(
        value=max(best_val, 0.0),
        optimal_bases=LocalBasisPair.canonical(best_x),
        optimizer_trace=trace,
        converged=converged,
        raw_value=best_val,
    )
