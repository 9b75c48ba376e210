"""Parallelized circuits: branch structure, parsing, game equivalence."""

from __future__ import annotations

import numpy as np
import pytest

from qgame.game import Strategy, final_state
from qgame.parallel import (
    EmptyBranchError,
    Variant,
    branch_indices,
    branch_map,
    branch_strategies,
    build_circuit,
    exact_distribution,
    parse_branches,
)
from qgame.statevector import GateKind, probabilities

import oracles

CHI_GRID = [k * np.pi / 40 for k in range(11)]


def test_gate_sequence_layout():
    circuit = build_circuit(Variant.I_CIRCUIT, 0.2)
    kinds = [g.kind for g in circuit.gate_sequence]
    assert kinds == [
        GateKind.H,
        GateKind.H,
        GateKind.H,
        GateKind.J,
        GateKind.CNOT,
        GateKind.CZ,
        GateKind.CZ,
        GateKind.JDAG,
    ]
    x_kinds = [g.kind for g in build_circuit(Variant.X_CIRCUIT, 0.2).gate_sequence]
    assert x_kinds[-2:] == [GateKind.X, GateKind.JDAG]


def test_classical_branches_are_basis_outcomes():
    # chi=0: each branch is the classical outcome of its strategy pair
    dist = exact_distribution(build_circuit(Variant.I_CIRCUIT, 0.0))
    branches = parse_branches(dist, Variant.I_CIRCUIT)
    for (ua, ub), sub in branches.items():
        a = 1 if ua in (Strategy.X, Strategy.Y) else 0
        b = 1 if ub in (Strategy.X, Strategy.Y) else 0
        want = np.zeros(4)
        want[2 * a + b] = 1.0
        np.testing.assert_allclose(sub, want, atol=1e-12)


def test_aux_marginals_uniform():
    for variant in Variant:
        for chi in CHI_GRID:
            dist = exact_distribution(build_circuit(variant, chi))
            for x in (0, 1):
                for y in (0, 1):
                    for z in (0, 1):
                        marginal = dist[branch_indices(x, y, z)].sum()
                        assert abs(marginal - 0.125) < 1e-12


def test_branch_equals_direct_game_sampled_case():
    dist = exact_distribution(build_circuit(Variant.X_CIRCUIT, np.pi / 8))
    branches = parse_branches(dist, Variant.X_CIRCUIT)
    want = probabilities(final_state(np.pi / 8, Strategy.I, Strategy.X))
    np.testing.assert_allclose(branches[(Strategy.I, Strategy.X)], want, atol=1e-10)


def test_exhaustive_game_equivalence():
    # every chi on the grid, every variant, every branch: conditional
    # distribution matches the direct two-qubit game to 1e-10
    for chi in CHI_GRID:
        for variant in Variant:
            dist = exact_distribution(build_circuit(variant, chi))
            branches = parse_branches(dist, variant)
            assert len(branches) == 8
            for (ua, ub), sub in branches.items():
                want = probabilities(final_state(chi, ua, ub))
                np.testing.assert_allclose(
                    sub, want, atol=1e-10,
                    err_msg=f"chi={chi} {variant} ({ua.name},{ub.name})",
                )


def test_matches_independent_dense_circuit():
    for variant, tag in ((Variant.I_CIRCUIT, "I"), (Variant.X_CIRCUIT, "X")):
        for chi in (0.0, 0.3, np.pi / 4):
            got = exact_distribution(build_circuit(variant, chi))
            want = oracles.parallel_distribution_dense(tag, chi)
            np.testing.assert_allclose(got, want, atol=1e-12)


def test_branch_maps_cover_all_pairs_once():
    seen = []
    for variant in Variant:
        for pair in branch_map(variant).values():
            seen.append(pair)
    assert len(seen) == 16
    assert len(set(seen)) == 16
    # and the oracle's independent mapping table agrees
    for variant, tag in ((Variant.I_CIRCUIT, "I"), (Variant.X_CIRCUIT, "X")):
        for (x, y, z), (ua, ub) in branch_map(variant).items():
            assert (ua.name, ub.name) == oracles.branch_pair_dense(tag, x, y, z)


def test_phase_equivalent_composite_strategies():
    # branches with (x,y) = (1,1) realize ZX = iY; probabilities match the
    # direct game with an explicit Y
    for chi in (0.1, np.pi / 4):
        dist = exact_distribution(build_circuit(Variant.I_CIRCUIT, chi))
        branches = parse_branches(dist, Variant.I_CIRCUIT)
        for z, ub in ((0, Strategy.I), (1, Strategy.Z)):
            assert branch_strategies(Variant.I_CIRCUIT, 1, 1, z) == (Strategy.Y, ub)
            want = probabilities(final_state(chi, Strategy.Y, ub))
            np.testing.assert_allclose(branches[(Strategy.Y, ub)], want, atol=1e-10)


def test_uniform_population_parses_flat():
    flat = np.full(32, 10.0)
    branches = parse_branches(flat, Variant.I_CIRCUIT)
    for sub in branches.values():
        np.testing.assert_allclose(sub, [0.25, 0.25, 0.25, 0.25])


def test_empty_branch_rejected():
    counts = np.full(32, 5.0)
    counts[branch_indices(1, 0, 1)] = 0.0
    with pytest.raises(EmptyBranchError, match=r"\(1,0,1\)"):
        parse_branches(counts, Variant.I_CIRCUIT)


def test_chi_out_of_range_rejected():
    with pytest.raises(ValueError):
        build_circuit(Variant.I_CIRCUIT, np.pi)


def test_bad_population_shape_rejected():
    with pytest.raises(ValueError):
        parse_branches(np.ones(16), Variant.I_CIRCUIT)
    with pytest.raises(ValueError):
        parse_branches(-np.ones(32), Variant.I_CIRCUIT)
