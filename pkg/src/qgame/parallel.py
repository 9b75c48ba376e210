"""Parallelized 5-qubit circuits that play all 16 strategy pairs in two runs.

Qubit layout: (A, B, aux1, aux2, aux3) = indices (0, 1, 2, 3, 4), qubit 0
most significant. The three aux qubits are put in uniform superposition;
aux1 controls an X on A, aux2 a Z on A, aux3 a Z on B. Each aux outcome
(x, y, z) therefore tags a branch in which players effectively applied
U_A = Z^y X^x and U_B = Z^z. The I-circuit covers U_B in {I, Z}; the
X-variant adds an unconditional X on B just before unentangling,
shifting coverage to U_B in {X, Y}. Composite operators only match the
bare strategy gates up to phase (ZX = iY, XZ = -iY), which is invisible
in the measured probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from qgame.game import Strategy
from qgame.statevector import CHI_MAX, Gate, GateKind, StateVector, apply_gate, probabilities

QUBIT_A, QUBIT_B, AUX1, AUX2, AUX3 = range(5)
N_QUBITS = 5
N_OUTCOMES = 2**N_QUBITS


class Variant(Enum):
    I_CIRCUIT = "I"
    X_CIRCUIT = "X"


class EmptyBranchError(ValueError):
    """A parsed branch holds zero population; downstream math would divide by it."""


@dataclass(frozen=True)
class ParallelCircuit:
    variant: Variant
    chi: float
    gate_sequence: tuple[Gate, ...]


def build_circuit(variant: Variant, chi: float) -> ParallelCircuit:
    if not 0.0 <= chi <= CHI_MAX + 1e-12:
        raise ValueError(f"chi={chi} outside [0, pi/4]")
    gates = [
        Gate(GateKind.H, (AUX1,)),
        Gate(GateKind.H, (AUX2,)),
        Gate(GateKind.H, (AUX3,)),
        Gate(GateKind.J, (QUBIT_A, QUBIT_B), chi),
        Gate(GateKind.CNOT, (AUX1, QUBIT_A)),
        Gate(GateKind.CZ, (AUX2, QUBIT_A)),
        Gate(GateKind.CZ, (AUX3, QUBIT_B)),
    ]
    if variant is Variant.X_CIRCUIT:
        gates.append(Gate(GateKind.X, (QUBIT_B,)))
    gates.append(Gate(GateKind.JDAG, (QUBIT_A, QUBIT_B), chi))
    return ParallelCircuit(variant, chi, tuple(gates))


def exact_distribution(circuit: ParallelCircuit) -> np.ndarray:
    """Noise-free 32-outcome probability vector."""
    state = StateVector.ground(N_QUBITS)
    for gate in circuit.gate_sequence:
        state = apply_gate(state, gate)
    return probabilities(state)


# (x, y) -> U_A, shared by both variants
_UA_BY_XY = {
    (0, 0): Strategy.I,
    (1, 0): Strategy.X,
    (0, 1): Strategy.Z,
    (1, 1): Strategy.Y,
}


def branch_strategies(variant: Variant, x: int, y: int, z: int) -> tuple[Strategy, Strategy]:
    """Strategy pair evaluated by the branch with aux outcome (x, y, z)."""
    u_a = _UA_BY_XY[(x, y)]
    if variant is Variant.I_CIRCUIT:
        u_b = Strategy.Z if z else Strategy.I
    else:
        u_b = Strategy.Y if z else Strategy.X
    return u_a, u_b


def branch_map(variant: Variant) -> dict[tuple[int, int, int], tuple[Strategy, Strategy]]:
    return {
        (x, y, z): branch_strategies(variant, x, y, z)
        for x in (0, 1)
        for y in (0, 1)
        for z in (0, 1)
    }


def branch_indices(x: int, y: int, z: int) -> list[int]:
    """Flat outcome indices of (A, B, x, y, z) for the four (A, B) values."""
    tail = 4 * x + 2 * y + z
    return [16 * a + 8 * b + tail for a in (0, 1) for b in (0, 1)]


def parse_branches(
    populations, variant: Variant, mapping=None
) -> dict[tuple[Strategy, Strategy], np.ndarray]:
    """Split a 32-outcome population into 8 per-pair conditional distributions.

    `populations` is a 32-vector of counts or frequencies (anything with a
    `.counts` attribute also works). Each branch is renormalized to sum 1.
    A branch with zero total raises EmptyBranchError rather than silently
    emitting zeros.
    """
    counts = np.asarray(getattr(populations, "counts", populations), dtype=float)
    if counts.shape != (N_OUTCOMES,):
        raise ValueError(f"expected {N_OUTCOMES} outcome entries, got {counts.shape}")
    if (counts < 0).any():
        raise ValueError("negative populations")
    if mapping is None:
        mapping = branch_map(variant)
    out: dict[tuple[Strategy, Strategy], np.ndarray] = {}
    for (x, y, z), pair in mapping.items():
        sub = counts[branch_indices(x, y, z)]
        total = sub.sum()
        if total <= 0:
            raise EmptyBranchError(
                f"branch (x,y,z)=({x},{y},{z}) of {variant.value}-circuit has zero population"
            )
        out[pair] = sub / total
    return out
