"""Experiment emulation: finite shots, gate depolarization, angle
miscalibration, readout confusion, SPAM correction, stochastic type
assignment.

Noise is applied per shot (trajectory method): every shot evolves its own
statevector with a possibly perturbed entangling angle, stochastic Pauli
insertions after gates, and per-qubit readout flips. The statevector core
stays pure; all randomness lives here. When the evolution itself is
deterministic (no depolarization, no angle jitter) sampling collapses to
a single exact distribution, which is much faster and statistically
identical.

Reproducibility contract: one master seed; every consumer derives an
independent child stream keyed by integers (grid point, circuit variant,
purpose) so that evaluation order and grid subsetting cannot change any
cell's random numbers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields
from typing import NamedTuple

import numpy as np

from qgame.parallel import N_OUTCOMES, N_QUBITS, ParallelCircuit
from qgame.statevector import Gate, GateKind, apply_matrix, xx_rotation

# purpose tags for child stream derivation
PURPOSE_SAMPLE = 0
PURPOSE_SPLIT = 1
PURPOSE_CALIBRATION = 2

_CHUNK = 32768
_COND_LIMIT = 1e8
_NEGATIVE_FLOOR = 1e-3  # fraction of total population


class SpamCorrectionError(ValueError):
    """Confusion matrix unusable or corrected populations meaningfully negative."""


def child_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Deterministic child stream for (master seed, integer key path)."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=tuple(key)))


@dataclass(frozen=True)
class NoiseModel:
    single_qubit_depol: float = 0.0
    two_qubit_depol: float = 0.0
    readout_flip_0to1: float = 0.0
    readout_flip_1to0: float = 0.0
    chi_offset: float = 0.0
    chi_jitter_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("single_qubit_depol", "two_qubit_depol", "readout_flip_0to1", "readout_flip_1to0"):
            value = getattr(self, name)
            if not 0.0 <= value <= 0.5:
                raise ValueError(f"{name}={value} outside [0, 0.5]")
        if self.chi_jitter_sigma < 0:
            raise ValueError("chi_jitter_sigma must be >= 0")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 bits")

    @property
    def stochastic_evolution(self) -> bool:
        return self.single_qubit_depol > 0 or self.two_qubit_depol > 0 or self.chi_jitter_sigma > 0

    @property
    def has_readout_error(self) -> bool:
        return self.readout_flip_0to1 > 0 or self.readout_flip_1to0 > 0

    @classmethod
    def default_profile(cls, seed: int = 0) -> "NoiseModel":
        """Hardware-like emulation defaults: 0.5% / 1.5% depolarization per
        one-/two-qubit gate, 0.6% symmetric readout flips, and a small
        systematic offset plus shot-to-shot spread of the entangling angle.
        """
        return cls(
            single_qubit_depol=0.005,
            two_qubit_depol=0.015,
            readout_flip_0to1=0.006,
            readout_flip_1to0=0.006,
            chi_offset=0.002 * np.pi,
            chi_jitter_sigma=0.004 * np.pi,
            seed=seed,
        )

    def to_dict(self) -> dict:
        return {f.name: (int if f.name == "seed" else float)(getattr(self, f.name)) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseModel":
        known = {f.name for f in cls.__dataclass_fields__.values()}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown noise fields: {sorted(extra)}")
        return cls(**data)


@dataclass(frozen=True)
class PopulationVector:
    """Counts (or frequencies) over the 32 five-qubit outcomes."""

    counts: np.ndarray

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=float).copy()
        if counts.shape != (N_OUTCOMES,):
            raise ValueError(f"expected {N_OUTCOMES} entries, got {counts.shape}")
        if not np.isfinite(counts).all() or (counts < 0).any():
            raise ValueError("counts must be finite and nonnegative")
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_outcomes(cls, outcomes: np.ndarray) -> "PopulationVector":
        return cls(np.bincount(outcomes, minlength=N_OUTCOMES).astype(float))

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    @property
    def shot_count(self) -> int:
        return int(round(self.total))

    @property
    def frequencies(self) -> np.ndarray:
        total = self.total
        if total <= 0:
            raise ValueError("empty population vector has no frequencies")
        return self.counts / total


def _per_qubit_confusion(p01: float, p10: float) -> np.ndarray:
    # column j = true bit j, rows = observed bit
    return np.array([[1 - p01, p10], [p01, 1 - p10]])


def _crosstalk_map(gamma: float, n_qubits: int) -> np.ndarray:
    """Symmetric nearest-channel bleed: a bright channel lights up a dark
    neighbor with probability gamma, applied per ordered adjacent pair."""
    size = 2**n_qubits
    total = np.eye(size)
    for src in range(n_qubits - 1):
        for a, b in ((src, src + 1), (src + 1, src)):
            step = np.zeros((size, size))
            bit_a = 1 << (n_qubits - 1 - a)
            bit_b = 1 << (n_qubits - 1 - b)
            for s in range(size):
                if (s & bit_a) and not (s & bit_b):
                    step[s, s] = 1 - gamma
                    step[s | bit_b, s] = gamma
                else:
                    step[s, s] = 1.0
            total = step @ total
    return total


@dataclass(frozen=True)
class ConfusionMatrix:
    """Column-stochastic map from true to observed outcome probabilities."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        matrix = np.asarray(self.matrix, dtype=float).copy()
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError("confusion matrix must be square")
        if (matrix < -1e-12).any():
            raise ValueError("confusion entries must be nonnegative")
        sums = matrix.sum(axis=0)
        if np.abs(sums - 1.0).max() > 1e-9:
            raise ValueError("confusion matrix columns must sum to 1")
        matrix.flags.writeable = False
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def identity(cls, n_qubits: int = N_QUBITS) -> "ConfusionMatrix":
        return cls(np.eye(2**n_qubits))

    @classmethod
    def from_flips(
        cls, p01: float, p10: float, n_qubits: int = N_QUBITS, crosstalk: float = 0.0
    ) -> "ConfusionMatrix":
        single = _per_qubit_confusion(p01, p10)
        full = np.array([[1.0]])
        for _ in range(n_qubits):
            full = np.kron(full, single)
        if crosstalk > 0:
            full = _crosstalk_map(crosstalk, n_qubits) @ full
        return cls(full)

    @classmethod
    def from_noise(cls, noise: NoiseModel, n_qubits: int = N_QUBITS, crosstalk: float = 0.0) -> "ConfusionMatrix":
        return cls.from_flips(noise.readout_flip_0to1, noise.readout_flip_1to0, n_qubits, crosstalk)

    @classmethod
    def from_csv(cls, path) -> "ConfusionMatrix":
        with open(path, newline="") as handle:
            rows = [[float(cell) for cell in row] for row in csv.reader(handle) if row]
        return cls(np.array(rows))

    def apply(self, probs: np.ndarray) -> np.ndarray:
        return self.matrix @ probs


def spam_correct(populations: PopulationVector, confusion: ConfusionMatrix) -> PopulationVector:
    """Invert the confusion map. Small negative results (within 0.1% of the
    total) are clipped and the vector renormalized; anything worse means the
    confusion model does not match the data and raises."""
    if confusion.matrix.shape[0] != N_OUTCOMES:
        raise ValueError("confusion matrix size does not match population vector")
    cond = np.linalg.cond(confusion.matrix)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise SpamCorrectionError(f"confusion matrix ill-conditioned (cond={cond:.3g})")
    corrected = np.linalg.solve(confusion.matrix, populations.counts)
    total = populations.total
    worst = corrected.min()
    if worst < -_NEGATIVE_FLOOR * total:
        raise SpamCorrectionError(
            f"corrected population {worst:.4g} below -{_NEGATIVE_FLOOR} of total {total:.4g}"
        )
    clipped = np.clip(corrected, 0.0, None)
    scale = clipped.sum()
    if scale <= 0:
        raise SpamCorrectionError("correction wiped out all population")
    return PopulationVector(clipped * (total / scale))


class ChiEstimate(NamedTuple):
    value: float
    sigma: float


def estimate_chi_from_counts(ones: float, shots: int) -> ChiEstimate:
    """Invert P(|11>) = sin^2(chi). Binomial error propagation through
    arcsin(sqrt(.)) gives a constant sigma = 1/(2 sqrt(N)); the degenerate
    all-zero / all-one counts fall back to the rule-of-three 95% bound."""
    if shots <= 0:
        raise ValueError("shots must be positive")
    if not 0 <= ones <= shots:
        raise ValueError(f"count {ones} outside [0, {shots}]")
    bound = np.arcsin(np.sqrt(min(3.0 / shots, 1.0)))
    if ones == 0:
        return ChiEstimate(0.0, float(bound))
    if ones == shots:
        return ChiEstimate(float(np.pi / 2), float(bound))
    return ChiEstimate(float(np.arcsin(np.sqrt(ones / shots))), float(1.0 / (2.0 * np.sqrt(shots))))


# ---------------------------------------------------------------------------
# trajectory engine (vectorized over shots)

def _batch_apply(states: np.ndarray, mat: np.ndarray, targets: tuple[int, ...], n: int) -> np.ndarray:
    shots = states.shape[0]
    k = len(targets)
    rest = [q for q in range(n) if q not in targets]
    perm = [0] + [t + 1 for t in targets] + [q + 1 for q in rest]
    work = states.reshape([shots] + [2] * n).transpose(perm).reshape(shots, 2**k, -1)
    work = np.einsum("ab,sbr->sar", mat, work)
    shaped = [shots] + [2] * n
    return work.reshape([shaped[axis] for axis in perm]).transpose(np.argsort(perm)).reshape(shots, -1)


def _flip_mask(targets: tuple[int, ...], n: int) -> int:
    mask = 0
    for t in targets:
        mask |= 1 << (n - 1 - t)
    return mask


def _batch_entangle(states: np.ndarray, chis: np.ndarray, sign: float, targets, n: int) -> np.ndarray:
    """Per-shot application of the entangler: c*psi - i*sign*s*psi_flipped."""
    partner = np.arange(states.shape[1]) ^ _flip_mask(targets, n)
    c = np.cos(chis)[:, None]
    s = np.sin(sign * chis)[:, None]
    return c * states - 1j * s * states[:, partner]


def _apply_pauli_rows(states: np.ndarray, rows: np.ndarray, axis_code: int, qubit: int, n: int) -> None:
    """In-place X/Y/Z (code 1/2/3) on one qubit for the given shot rows."""
    dim = states.shape[1]
    bit = 1 << (n - 1 - qubit)
    idx = np.arange(dim)
    if axis_code == 1:  # X
        states[rows] = states[np.ix_(rows, idx ^ bit)]
    elif axis_code == 2:  # Y
        phase = np.where(idx & bit, 1j, -1j)
        states[rows] = states[np.ix_(rows, idx ^ bit)] * phase
    elif axis_code == 3:  # Z
        sign = np.where(idx & bit, -1.0, 1.0)
        states[rows] = states[rows] * sign
    else:
        raise ValueError(f"bad pauli code {axis_code}")


def _depolarize(states: np.ndarray, prob: float, targets, n: int, rng: np.random.Generator) -> None:
    if prob <= 0:
        return
    shots = states.shape[0]
    hit = np.flatnonzero(rng.random(shots) < prob)
    if hit.size == 0:
        return
    k = len(targets)
    codes = rng.integers(1, 4**k, size=hit.size)  # uniform non-identity Pauli
    for code in np.unique(codes):
        rows = hit[codes == code]
        remaining = int(code)
        for qubit in targets:
            axis = remaining % 4
            remaining //= 4
            if axis:
                _apply_pauli_rows(states, rows, axis, qubit, n)


def _measure(states: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    probs = np.abs(states) ** 2
    probs /= probs.sum(axis=1, keepdims=True)
    cdf = np.cumsum(probs, axis=1)
    draws = rng.random(states.shape[0])
    return np.minimum((cdf < draws[:, None]).sum(axis=1), states.shape[1] - 1)


def _readout_flips(outcomes: np.ndarray, noise: NoiseModel, n: int, rng: np.random.Generator) -> np.ndarray:
    if not noise.has_readout_error:
        return outcomes
    result = outcomes.copy()
    for qubit in range(n):
        bit = 1 << (n - 1 - qubit)
        draws = rng.random(result.shape[0])
        is_one = (result & bit) != 0
        flip = np.where(is_one, draws < noise.readout_flip_1to0, draws < noise.readout_flip_0to1)
        result[flip] ^= bit
    return result


def _trajectory_outcomes(
    gates: tuple[Gate, ...], n: int, nominal_chi: float, noise: NoiseModel, shots: int, rng: np.random.Generator
) -> np.ndarray:
    dim = 2**n
    if noise.chi_jitter_sigma > 0:
        chis = nominal_chi + noise.chi_offset + rng.normal(0.0, noise.chi_jitter_sigma, shots)
    else:
        chis = np.full(shots, nominal_chi + noise.chi_offset)
    outcomes = np.empty(shots, dtype=np.int64)
    for start in range(0, shots, _CHUNK):
        stop = min(start + _CHUNK, shots)
        size = stop - start
        states = np.zeros((size, dim), dtype=np.complex128)
        states[:, 0] = 1.0
        chunk_chis = chis[start:stop]
        for gate in gates:
            if gate.kind is GateKind.J:
                states = _batch_entangle(states, chunk_chis, 1.0, gate.targets, n)
            elif gate.kind is GateKind.JDAG:
                states = _batch_entangle(states, chunk_chis, -1.0, gate.targets, n)
            else:
                states = _batch_apply(states, gate.matrix(), gate.targets, n)
            prob = noise.two_qubit_depol if len(gate.targets) == 2 else noise.single_qubit_depol
            _depolarize(states, prob, gate.targets, n, rng)
        measured = _measure(states, rng)
        outcomes[start:stop] = _readout_flips(measured, noise, n, rng)
    return outcomes


def _exact_gate_distribution(gates: tuple[Gate, ...], n: int, chi_eff: float) -> np.ndarray:
    """Noise-free distribution with the entangling angle overridden; used by
    the deterministic-evolution fast path (chi_eff may sit outside the
    nominal gate range, e.g. from a calibration offset)."""
    amps = np.zeros(2**n, dtype=np.complex128)
    amps[0] = 1.0
    for gate in gates:
        if gate.kind is GateKind.J:
            amps = apply_matrix(amps, xx_rotation(chi_eff), gate.targets, n)
        elif gate.kind is GateKind.JDAG:
            amps = apply_matrix(amps, xx_rotation(-chi_eff), gate.targets, n)
        else:
            amps = apply_matrix(amps, gate.matrix(), gate.targets, n)
    return np.abs(amps) ** 2


def sample_gate_outcomes(
    gates: tuple[Gate, ...],
    n: int,
    nominal_chi: float,
    noise: NoiseModel,
    shots: int,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Per-shot outcome indices for an arbitrary gate list."""
    if shots <= 0:
        raise ValueError("shots must be positive")
    if rng is None:
        rng = np.random.default_rng(noise.seed)
    if noise.stochastic_evolution:
        return _trajectory_outcomes(gates, n, nominal_chi, noise, shots, rng)
    probs = _exact_gate_distribution(gates, n, nominal_chi + noise.chi_offset)
    if noise.has_readout_error:
        probs = ConfusionMatrix.from_flips(
            noise.readout_flip_0to1, noise.readout_flip_1to0, n
        ).apply(probs)
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum()
    return rng.choice(2**n, size=shots, p=probs)


def sample_outcomes(
    circuit: ParallelCircuit, noise: NoiseModel, shots: int, rng: np.random.Generator | None = None
) -> np.ndarray:
    return sample_gate_outcomes(circuit.gate_sequence, N_QUBITS, circuit.chi, noise, shots, rng)


def sample_shots(
    circuit: ParallelCircuit, noise: NoiseModel, shots: int, rng: np.random.Generator | None = None
) -> PopulationVector:
    """Aggregate per-shot noisy outcomes into a 32-entry count vector."""
    return PopulationVector.from_outcomes(sample_outcomes(circuit, noise, shots, rng))


def bayesian_split(
    outcomes: np.ndarray, p: float, seed: int | np.random.Generator = 0
) -> tuple[PopulationVector, PopulationVector]:
    """Assign each shot to the B1 pool with probability p, else B2."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    outcomes = np.asarray(outcomes)
    to_b1 = rng.random(outcomes.shape[0]) < p
    pool_b1 = np.bincount(outcomes[to_b1], minlength=N_OUTCOMES).astype(float)
    pool_b2 = np.bincount(outcomes[~to_b1], minlength=N_OUTCOMES).astype(float)
    return PopulationVector(pool_b1), PopulationVector(pool_b2)


_CALIBRATION_GATES = (Gate(GateKind.J, (0, 1), 0.0),)


def measure_chi(
    noise: NoiseModel, nominal_chi: float, shots: int, rng: np.random.Generator | None = None
) -> ChiEstimate:
    """Emulate a calibration run: prepare |00>, entangle, measure, and read
    the angle back from the |11> population."""
    outcomes = sample_gate_outcomes(_CALIBRATION_GATES, 2, nominal_chi, noise, shots, rng)
    return estimate_chi_from_counts(int((outcomes == 3).sum()), shots)
