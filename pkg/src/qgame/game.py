"""Two-player game engine: entangle, apply local strategies, unentangle,
convert the outcome distribution to expected payoffs.

Outcome convention is fixed: |0> is cooperate, |1> is defect. Payoff
tables are configuration inputs; the bundled defaults are the standard
prisoner's dilemma for the A-vs-B1 game and an asymmetric variant for
A-vs-B2 in which mutual defection pays B2 nothing.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from qgame.statevector import CHI_MAX, Gate, GateKind, StateVector, apply_gate, probabilities


class Strategy(IntEnum):
    """The four allowed single-qubit strategies, in profile-index order."""

    I = 0
    X = 1
    Y = 2
    Z = 3

    @property
    def gate_kind(self) -> GateKind:
        return GateKind[self.name]


STRATEGIES = tuple(Strategy)

Profile = tuple[Strategy, Strategy, Strategy]


def profile_from_names(names: str) -> Profile:
    """Parse e.g. "IXI" into a strategy triple."""
    if len(names) != 3 or any(c not in "IXYZ" for c in names):
        raise ValueError(f"bad profile string {names!r}")
    return tuple(Strategy[c] for c in names)  # type: ignore[return-value]


def profile_names(profile: Profile) -> str:
    return "".join(s.name for s in profile)


@dataclass(frozen=True)
class PayoffTable:
    """2x2 grid of (payoff_A, payoff_B) indexed by (outcome_A, outcome_B)."""

    a: np.ndarray  # shape (2, 2)
    b: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.a, dtype=float).copy()
        b = np.asarray(self.b, dtype=float).copy()
        if a.shape != (2, 2) or b.shape != (2, 2):
            raise ValueError("payoff tables are 2x2")
        if not (np.isfinite(a).all() and np.isfinite(b).all()):
            raise ValueError("payoffs must be finite")
        a.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_rows(cls, rows) -> "PayoffTable":
        """rows[outcome_A][outcome_B] = [payoff_A, payoff_B] (the JSON shape)."""
        arr = np.asarray(rows, dtype=float)
        if arr.shape != (2, 2, 2):
            raise ValueError(f"rows must be 2x2 pairs, got shape {arr.shape}")
        return cls(arr[:, :, 0], arr[:, :, 1])

    def to_rows(self) -> list:
        return np.stack([self.a, self.b], axis=-1).tolist()

    # flat views aligned with the outcome index 2*a + b
    @property
    def a_flat(self) -> np.ndarray:
        return self.a.reshape(4)

    @property
    def b_flat(self) -> np.ndarray:
        return self.b.reshape(4)


DEFAULT_PAYOFF_B1 = PayoffTable.from_rows([[[11, 9], [1, 10]], [[10, 1], [6, 6]]])
DEFAULT_PAYOFF_B2 = PayoffTable.from_rows([[[11, 9], [1, 6]], [[10, 1], [6, 0]]])


@dataclass(frozen=True)
class GameSpec:
    chi: float
    payoff_vs_b1: PayoffTable = DEFAULT_PAYOFF_B1
    payoff_vs_b2: PayoffTable = DEFAULT_PAYOFF_B2

    def __post_init__(self) -> None:
        if not 0.0 <= self.chi <= CHI_MAX + 1e-12:
            raise ValueError(f"chi={self.chi} outside [0, pi/4]")


@dataclass(frozen=True)
class PayoffTensor:
    """4x4 expected payoffs per (Strategy_A, Strategy_B), one game type."""

    a: np.ndarray
    b: np.ndarray
    chi: float

    def __post_init__(self) -> None:
        for name in ("a", "b"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            if arr.shape != (4, 4):
                raise ValueError("payoff tensor is 4x4")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def payoffs(self, s_a: Strategy, s_b: Strategy) -> tuple[float, float]:
        return float(self.a[s_a, s_b]), float(self.b[s_a, s_b])


def final_state(chi: float, u_a: Strategy, u_b: Strategy) -> StateVector:
    """Protocol state for one strategy pair on qubits (A, B) = (0, 1)."""
    if not 0.0 <= chi <= CHI_MAX + 1e-12:
        raise ValueError(f"chi={chi} outside [0, pi/4]")
    state = apply_gate(StateVector.ground(2), Gate(GateKind.J, (0, 1), chi))
    state = apply_gate(state, Gate(u_a.gate_kind, (0,)))
    state = apply_gate(state, Gate(u_b.gate_kind, (1,)))
    return apply_gate(state, Gate(GateKind.JDAG, (0, 1), chi))


def expected_payoff(dist: np.ndarray, table: PayoffTable) -> tuple[float, float]:
    """Weighted average of the table entries under a 4-outcome distribution."""
    dist = np.asarray(dist, dtype=float)
    if dist.shape != (4,):
        raise ValueError(f"distribution must have 4 entries, got {dist.shape}")
    if abs(dist.sum() - 1.0) > 1e-9:
        raise ValueError(f"distribution sums to {dist.sum()}, not 1")
    return float(dist @ table.a_flat), float(dist @ table.b_flat)


def payoff_tensor(spec: GameSpec, which_b: str) -> PayoffTensor:
    """Expected payoffs for all 16 strategy pairs of one game type."""
    if which_b not in ("B1", "B2"):
        raise ValueError(f"which_b must be B1 or B2, got {which_b!r}")
    table = spec.payoff_vs_b1 if which_b == "B1" else spec.payoff_vs_b2
    pay_a = np.empty((4, 4))
    pay_b = np.empty((4, 4))
    for i in STRATEGIES:
        for j in STRATEGIES:
            dist = probabilities(final_state(spec.chi, i, j))
            pay_a[i, j], pay_b[i, j] = expected_payoff(dist, table)
    return PayoffTensor(pay_a, pay_b, spec.chi)


def tensor_from_distributions(
    dists: dict[tuple[Strategy, Strategy], np.ndarray],
    table: PayoffTable,
    chi: float,
) -> PayoffTensor:
    """Build a payoff tensor from measured per-pair outcome distributions."""
    pay_a = np.empty((4, 4))
    pay_b = np.empty((4, 4))
    for i in STRATEGIES:
        for j in STRATEGIES:
            pay_a[i, j], pay_b[i, j] = expected_payoff(dists[(i, j)], table)
    return PayoffTensor(pay_a, pay_b, chi)
