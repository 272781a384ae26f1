"""Support-graph machinery: reachability, recurrent classes, irreducibility."""

import numpy as np
import pytest

import stategames as sg
from stategames import markov

CC = 0


def brute_reachable(matrix, start):
    """Oracle: accumulate supports of powers P^1..P^n."""
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    power = np.eye(n)
    mask = np.zeros(n, dtype=bool)
    for _ in range(n):
        power = power @ matrix
        mask |= power[start] > 0.0
    return {int(i) for i in np.flatnonzero(mask)}


def test_recurrent_classes_example9(ex9):
    assert sg.recurrent_classes(ex9.kernels[CC]) == [frozenset({0}), frozenset({1})]


def test_recurrent_classes_example4(ex4):
    a22 = ex4.action_index((1, 1))
    assert sg.recurrent_classes(ex4.kernels[a22]) == [frozenset({0, 1})]


def test_recurrent_classes_identity():
    classes = sg.recurrent_classes(np.eye(5))
    assert classes == [frozenset({i}) for i in range(5)]


def test_recurrent_classes_rejects_nonstochastic():
    with pytest.raises(ValueError):
        sg.recurrent_classes(np.array([[0.5, 0.3], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        sg.recurrent_classes(np.array([[1.5, -0.5], [0.0, 1.0]]))


def test_recurrent_class_structure_random():
    rng = np.random.default_rng(3)
    for _ in range(40):
        game = sg.random_game(rng)
        for a in range(game.num_joint_actions):
            matrix = game.kernels[a]
            succ = markov.support_successors(matrix)
            classes = sg.recurrent_classes(matrix)
            seen = set()
            for cls in classes:
                assert not (cls & seen)  # pairwise disjoint
                seen |= cls
                for x in cls:
                    targets = set(succ[x])
                    assert targets <= cls  # no outgoing support edge
                    # strongly connected: every member reached from every member
                    if len(cls) > 1:
                        assert cls <= markov.reachable_from(succ, x)


def test_reachable_matches_power_oracle():
    rng = np.random.default_rng(4)
    for _ in range(40):
        game = sg.random_game(rng)
        for a in range(game.num_joint_actions):
            succ = markov.support_successors(game.kernels[a])
            for x in range(game.m):
                assert markov.reachable_from(succ, x) == brute_reachable(game.kernels[a], x)


def test_average_kernel_irreducible(ex9):
    assert markov.is_irreducible(sg.average_kernel(ex9))


def test_not_irreducible(ex12):
    assert not markov.is_irreducible(sg.average_kernel(ex12))
