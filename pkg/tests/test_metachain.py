"""Induced chain: transition law, locked set, absorption, path witnesses."""

import itertools

import numpy as np
import pytest

import stategames as sg
from stategames.metachain import HistoryClass

CC, CD, DC, DD = 0, 1, 2, 3
EPS = (0.5, 0.5)


def random_meta_pair(game, rng):
    """A (w1, w2) pair with matching overlap and arbitrary new tail."""
    x1, x2, x3, y3 = (int(v) for v in rng.integers(0, game.m, size=4))
    a1, a2, b2 = (int(v) for v in rng.integers(0, game.num_joint_actions, size=3))
    w1 = (x1, a1, x2, a2, x3)
    w2 = (x2, a2, x3, b2, y3)
    return w1, w2


# -- transition probabilities ---------------------------------------------------


def test_mismatched_overlap_is_zero(ex9):
    w1 = (0, CC, 1, CC, 2)
    w2 = (1, CC, 3, CC, 2)  # third component disagrees with w1's tail
    assert sg.transition_prob(ex9, EPS, w1, w2) == 0.0
    w2 = (1, DD, 2, CC, 2)  # action component disagrees
    assert sg.transition_prob(ex9, EPS, w1, w2) == 0.0


def test_changed_history_case(ex9):
    # a1 != a2 = CC, both agents repeat, then kernel CC: 3 -> 2 has prob 1/2
    w1 = (0, DD, 0, CC, 2)
    w2 = (0, CC, 2, CC, 1)
    assert sg.transition_prob(ex9, EPS, w1, w2) == 0.5**2 * 0.5


def test_repeated_history_case(ex9):
    # repeated CC at state 2: agent 1 switches into B1={D}, agent 2 has no
    # better reply and repeats freely; kernel DC: 2 -> 4 has prob 1
    w1 = (3, CC, 2, CC, 1)
    w2 = (2, CC, 1, DC, 3)
    assert sg.transition_prob(ex9, EPS, w1, w2) == 0.5 * 1.0 * 1.0
    # switching agent 2 instead is killed by the empty better-reply set
    w2 = (2, CC, 1, CD, 3)
    assert sg.transition_prob(ex9, EPS, w1, w2) == 0.0


def test_rows_sum_to_one(ex9):
    rng = np.random.default_rng(14)
    for _ in range(200):
        x1, x2, x3 = (int(v) for v in rng.integers(0, 4, size=3))
        a1, a2 = (int(v) for v in rng.integers(0, 4, size=2))
        w1 = (x1, a1, x2, a2, x3)
        total = sum(sg.transition_distribution(ex9, EPS, w1).values())
        assert abs(total - 1.0) <= 1e-12


def test_equal_eps_closed_form_matches_product_form(ex9):
    rng = np.random.default_rng(15)
    checked = 0
    while checked < 1000:
        w1, w2 = random_meta_pair(ex9, rng)
        lhs = sg.transition_prob(ex9, EPS, w1, w2)
        rhs = sg.transition_prob_equal_eps(ex9, 0.5, w1, w2)
        assert lhs == rhs, (w1, w2, lhs, rhs)
        checked += 1


def test_equal_eps_closed_form_random_games():
    rng = np.random.default_rng(16)
    for _ in range(10):
        game = sg.random_game(rng, min_actions=2)
        eps = float(rng.uniform(0.1, 0.9))
        for _ in range(100):
            w1, w2 = random_meta_pair(game, rng)
            lhs = sg.transition_prob(game, (eps,) * game.n, w1, w2)
            rhs = sg.transition_prob_equal_eps(game, eps, w1, w2)
            assert lhs == pytest.approx(rhs, rel=1e-12, abs=0.0)


def test_closed_form_rejects_single_action_agents():
    game = sg.StateBasedGame((1, 2), np.zeros((1, 2, 2)), np.ones((2, 1, 1)))
    with pytest.raises(ValueError):
        sg.transition_prob_equal_eps(game, 0.5, (0, 0, 0, 0, 0), (0, 0, 0, 0, 0))


def test_per_agent_epsilons(ex9):
    # distinct inertias: repeated CC at state 2, agent 1 repeats (eps1),
    # agent 2 forced repeat (factor 1), kernel CC: 2 -> 2 prob 1
    w1 = (3, CC, 2, CC, 1)
    w2 = (2, CC, 1, CC, 1)
    assert sg.transition_prob(ex9, (0.3, 0.9), w1, w2) == pytest.approx(0.3, rel=1e-15)


# -- initial distribution and construction -----------------------------------------


def test_initial_distribution_formula(ex9):
    dist = sg.initial_distribution(ex9, EPS, initial=3)
    total = sum(dist.values())
    assert abs(total - 1.0) <= 1e-12
    # hand-computed entry: (1/4)^2 * P(CC; 4, 3) * P(CC; 3, 2)
    assert dist[(3, CC, 2, CC, 1)] == pytest.approx((1 / 16) * 0.5 * 0.5, rel=1e-15)
    assert all(w[0] == 3 for w in dist)


def test_build_reachable_subset(ex9):
    chain = sg.build_meta_chain(ex9, EPS)
    assert chain.full_space_size == 4**3 * 4**2 == 1024
    assert 0 < chain.reachable_count <= 1024
    sums = np.asarray(chain.matrix.sum(axis=1)).ravel()
    assert float(np.max(np.abs(sums - 1.0))) <= 1e-12
    assert abs(chain.initial.sum() - 1.0) <= 1e-12


def test_locked_set_closed(ex9, ex9_lazy):
    for game in (ex9, ex9_lazy):
        chain = sg.build_meta_chain(game, EPS)
        locked = sorted(chain.locked)
        if not locked:
            continue
        outside = np.flatnonzero(~chain.locked_mask)
        assert chain.matrix[locked][:, outside].nnz == 0


def test_single_state_single_action_chain():
    game = sg.StateBasedGame((1,), np.zeros((1, 1, 1)), np.ones((1, 1, 1)))
    chain = sg.build_meta_chain(game, (0.5,))
    assert chain.reachable_count == 1
    assert chain.matrix[0, 0] == 1.0
    assert chain.locked == {0}  # trivially at the equilibrium already
    result = sg.absorption_probabilities(chain)
    assert result.aggregate == 1.0


def test_budget_enforced(ex9):
    with pytest.raises(sg.BudgetExceededError):
        sg.build_meta_chain(ex9, EPS, budget=1000)


# -- absorption ----------------------------------------------------------------------


def test_absorption_zero_from_state4(ex9):
    chain = sg.build_meta_chain(ex9, EPS, initial=3)
    result = sg.absorption_probabilities(chain)
    assert result.aggregate == 0.0
    assert np.all(result.per_state == 0.0)


def test_absorption_one_everywhere_lazy(ex9_lazy):
    chain = sg.build_meta_chain(ex9_lazy, EPS)
    result = sg.absorption_probabilities(chain)
    assert np.max(np.abs(result.per_state - 1.0)) <= 1e-9
    assert result.aggregate == pytest.approx(1.0, abs=1e-9)
    assert result.residual <= 1e-10


def test_absorption_partial_from_uniform(ex9):
    chain = sg.build_meta_chain(ex9, EPS)
    result = sg.absorption_probabilities(chain)
    assert 0.0 < result.aggregate < 1.0


def test_locked_mass_monotone(ex9_lazy):
    chain = sg.build_meta_chain(ex9_lazy, EPS)
    masses = [sg.locked_mass_after(chain, k) for k in (0, 10, 100, 1000)]
    assert all(a <= b + 1e-15 for a, b in zip(masses, masses[1:]))
    absorbed = sg.absorption_probabilities(chain).aggregate
    assert masses[-1] <= absorbed + 1e-12


# -- path witnesses ---------------------------------------------------------------------


def test_path_none_iff_absorption_zero(ex9):
    chain = sg.build_meta_chain(ex9, EPS, initial=3)
    for w in chain.states:
        assert sg.find_rse_path(chain, w) is None  # locked set empty here

    chain = sg.build_meta_chain(ex9, EPS)
    result = sg.absorption_probabilities(chain)
    for w in chain.states:
        path = sg.find_rse_path(chain, w)
        has_path = path is not None
        assert has_path == (result.probability(w) > 1e-12)
        if path:
            assert chain.index[path[-1]] in chain.locked
            for u, v in zip(path[:-1], path[1:]):
                assert sg.transition_prob(ex9, EPS, u, v) > 0.0


def test_path_from_locked_is_empty(ex9_lazy):
    chain = sg.build_meta_chain(ex9_lazy, EPS)
    locked_state = chain.states[min(chain.locked)]
    assert sg.find_rse_path(chain, locked_state) == []


def test_path_exists_everywhere_lazy(ex9_lazy):
    chain = sg.build_meta_chain(ex9_lazy, EPS)
    assert all(sg.find_rse_path(chain, w) is not None for w in chain.states)


def test_path_unknown_state_rejected(ex9):
    chain = sg.build_meta_chain(ex9, EPS, initial=3)
    with pytest.raises(ValueError):
        sg.find_rse_path(chain, (0, CC, 0, CC, 0))


# -- history classification ----------------------------------------------------------


def test_classify_history_example4(ex4):
    a22, a11, a12 = 3, 0, 1
    assert sg.classify_history(ex4, (a22, 0), (a22, 1)) is HistoryClass.LOCKED
    assert sg.classify_history(ex4, (a12, 2), (a22, 0)) is HistoryClass.REACHED_RSE
    assert sg.classify_history(ex4, (a11, 0), (a11, 0)) is HistoryClass.SEARCHING_REPEATED
    assert sg.classify_history(ex4, (a11, 0), (a12, 2)) is HistoryClass.SEARCHING_CHANGED


def test_classify_history_partitions():
    rng = np.random.default_rng(17)
    for _ in range(10):
        game = sg.random_game(rng)
        pairs = list(itertools.product(range(game.num_joint_actions), range(game.m)))
        for p1, p2 in itertools.product(pairs, repeat=2):
            cls = sg.classify_history(game, p1, p2)
            equivalent = sg.pairs_equivalent(game, p1, p2)
            if cls is HistoryClass.LOCKED:
                assert equivalent
            else:
                assert not equivalent
            if cls is HistoryClass.REACHED_RSE:
                assert sg.is_rse(game, *p2)
            if cls in (HistoryClass.SEARCHING_CHANGED, HistoryClass.SEARCHING_REPEATED):
                assert not sg.is_rse(game, *p2)
                assert (p1[0] != p2[0]) == (cls is HistoryClass.SEARCHING_CHANGED)


# -- empirical cross-check --------------------------------------------------------------


def test_trajectory_windows_alignment(ex9):
    cfg = sg.LearnerConfig(epsilons=EPS, horizon=50, seed=3, initial_state=3)
    traj = sg.run(ex9, cfg)
    windows = sg.trajectory_windows(traj)
    assert len(windows) == 49
    first = windows[0]
    assert first == (
        int(traj.states[0]), int(traj.actions[0]),
        int(traj.states[1]), int(traj.actions[1]), int(traj.states[2]),
    )


def test_short_run_soundness(ex9):
    # every realized one-step transition has positive exact probability
    chain = sg.build_meta_chain(ex9, EPS)
    cfg = sg.LearnerConfig(epsilons=EPS, horizon=200, seed=21)
    report = sg.empirical_validation(ex9, cfg, chain, min_visits=10**9)
    assert report.ok
    assert report.total_transitions == 198


def test_empirical_frequencies_converge(ex9):
    chain = sg.build_meta_chain(ex9, EPS, initial=3)
    cfg = sg.LearnerConfig(epsilons=EPS, horizon=50_000, seed=9, initial_state=3)
    report = sg.empirical_validation(ex9, cfg, chain, runs=2, min_visits=5000)
    assert report.ok
    assert report.compared_sources > 0
    assert report.max_abs_deviation <= 0.02


def test_empirical_validation_epsilon_mismatch(ex9):
    chain = sg.build_meta_chain(ex9, EPS)
    cfg = sg.LearnerConfig(epsilons=(0.4, 0.5), horizon=100, seed=1)
    with pytest.raises(ValueError):
        sg.empirical_validation(ex9, cfg, chain)
