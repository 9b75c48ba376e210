"""Best-response sets, Nash equilibria, transition detection, RMSD.

A profile (i, j, k) is a Nash equilibrium when each player's choice is
within delta of the best payoff available against the others' choices.
delta = 0 is the analytic case; shot-derived tensors conventionally use
delta = 0.1 to absorb statistical noise. A 1e-9 slack always applies on
top of delta so analytically degenerate profiles (floating-point ties)
are kept.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qgame.bayesian import BayesianTensor
from qgame.game import Profile, Strategy

TIE_EPS = 1e-9

DELTA_ANALYTIC = 0.0
DELTA_SHOTS = 0.1


class NoEquilibriumError(ValueError):
    """Raised when an operation needs at least one reference equilibrium."""


@dataclass(frozen=True)
class BestResponseSet:
    """Per-context sets of near-maximal strategies for one player.

    Context keys: (j, k) for player A; the A strategy i alone for B1 and
    B2, whose payoffs do not depend on the other B type's choice.
    """

    player: str
    delta: float
    contexts: dict

    def members(self, context) -> frozenset[Strategy]:
        return self.contexts[context]


def _near_max_set(values: np.ndarray, delta: float) -> frozenset[Strategy]:
    cutoff = values.max() - delta - TIE_EPS
    return frozenset(Strategy(i) for i in range(4) if values[i] >= cutoff)


def best_responses(tensor: BayesianTensor, player: str, delta: float) -> BestResponseSet:
    if delta < 0:
        raise ValueError(f"delta={delta} must be >= 0")
    contexts: dict = {}
    if player == "A":
        for j in Strategy:
            for k in Strategy:
                contexts[(j, k)] = _near_max_set(tensor.a[:, j, k], delta)
    elif player == "B1":
        for i in Strategy:
            contexts[i] = _near_max_set(tensor.b1[i, :], delta)
    elif player == "B2":
        for i in Strategy:
            contexts[i] = _near_max_set(tensor.b2[i, :], delta)
    else:
        raise ValueError(f"player must be A, B1 or B2, got {player!r}")
    return BestResponseSet(player, delta, contexts)


@dataclass(frozen=True)
class EquilibriumReport:
    """All Nash profiles at one (chi, p) grid point, with their payoffs."""

    profiles: tuple[Profile, ...]
    payoffs: tuple[tuple[float, float, float], ...]
    chi: float | None
    p: float
    delta: float

    def contains(self, profile: Profile) -> bool:
        return profile in self.profiles

    @property
    def empty(self) -> bool:
        return not self.profiles


def nash_equilibria(tensor: BayesianTensor, delta: float) -> EquilibriumReport:
    """Intersection of the three best-response sets, in profile order."""
    br_a = best_responses(tensor, "A", delta)
    br_b1 = best_responses(tensor, "B1", delta)
    br_b2 = best_responses(tensor, "B2", delta)
    profiles: list[Profile] = []
    payoffs: list[tuple[float, float, float]] = []
    for i in Strategy:
        good_j = br_b1.members(i)
        good_k = br_b2.members(i)
        for j in good_j:
            for k in good_k:
                if i in br_a.members((j, k)):
                    profiles.append((i, j, k))
    profiles.sort()
    for profile in profiles:
        payoffs.append(tensor.payoffs(profile))
    return EquilibriumReport(tuple(profiles), tuple(payoffs), tensor.chi, tensor.p, delta)


@dataclass(frozen=True)
class TransitionReport:
    tracked_profile: Profile
    thresholds: tuple[float, ...]
    stability_window: int


def detect_transitions(
    reports: list[EquilibriumReport], profile: Profile, window: int = 3
) -> TransitionReport:
    """p values where the profile's equilibrium membership flips and stays
    flipped for `window` consecutive grid points.

    Shorter excursions are treated as blur and ignored. A flip that runs
    to the end of the grid counts as sustained regardless of length.
    """
    if not reports:
        raise ValueError("no reports to scan")
    if window < 1:
        raise ValueError(f"window={window} must be >= 1")
    ps = [r.p for r in reports]
    if any(b <= a for a, b in zip(ps, ps[1:])):
        raise ValueError("reports must be ordered by strictly ascending p")
    member = [r.contains(profile) for r in reports]
    thresholds: list[float] = []
    current = member[0]
    idx = 1
    while idx < len(member):
        if member[idx] != current:
            run = 1
            while idx + run < len(member) and member[idx + run] == member[idx]:
                run += 1
            if run >= window or idx + run == len(member):
                thresholds.append(ps[idx])
                current = member[idx]
        idx += 1
    return TransitionReport(profile, tuple(thresholds), window)


def max_payoff_profile(report: EquilibriumReport) -> Profile:
    """Equilibrium with the highest payoff_A; ties break toward the
    lexicographically first profile."""
    if report.empty:
        raise NoEquilibriumError("report has no equilibria")
    ranked = sorted(zip(report.profiles, report.payoffs), key=lambda pp: (-pp[1][0], pp[0]))
    return ranked[0][0]


def rmsd_at_equilibrium(
    observed: BayesianTensor, reference: BayesianTensor, delta: float
) -> float:
    """Root-mean-square payoff deviation at the reference's best equilibrium."""
    ref_report = nash_equilibria(reference, delta)
    if ref_report.empty:
        raise NoEquilibriumError("reference tensor has no equilibria at this delta")
    profile = max_payoff_profile(ref_report)
    obs = np.array(observed.payoffs(profile))
    ref = np.array(reference.payoffs(profile))
    return float(np.sqrt(np.mean((obs - ref) ** 2)))
