"""Simulation of the cyclic inter-conversion between coherence and discord."""

from .channels import (
    ChiMatrix,
    KrausChannel,
    UnitaryGate,
    apply_chi,
    apply_unitary,
    chi_of_unitary,
    depolarized_cnot,
    generalized_cnot,
    process_fidelity,
)
from .measures import DiscordConfig, binary_entropy, coherence_rel_ent, discord_rel_ent, qi_rel_ent
from .protocol import CycleInput, CycleReport, MeasurementBasis, run_cycle
from .qmat import DensityMatrix, partial_trace, relative_entropy, tensor, von_neumann_entropy

__version__ = "0.1.0"
