"""Acceptance suite: one test per release criterion, one PASS line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the PASS lines
and timings.  Every tolerance is pinned here; the random-game suites use
frozen seeds so results are reproducible bit for bit.
"""

import time

import numpy as np
import pytest

import stategames as sg
from stategames import markov
from stategames.potential import synthesize_potential, verify_potential

CC, CD, DC, DD = 0, 1, 2, 3
EPS = (0.5, 0.5)


class Timer:
    def __init__(self, limit):
        self.limit = limit

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        return False

    def check(self):
        assert self.elapsed < self.limit, f"runtime {self.elapsed:.2f}s over {self.limit}s limit"


def passed(num, timer, detail):
    timer.check()
    print(f"PASS criterion {num} ({timer.elapsed:.2f}s < {timer.limit:g}s): {detail}")


def test_criterion_1_example9_exact_facts():
    with Timer(1.0) as t:
        game = sg.example9()
        assert sg.enumerate_rse(game) == {(CC, 0)}
        assert game.better_reply_set(0, CC, 1) == {1}
        assert game.better_reply_set(1, CC, 1) == frozenset()
        assert markov.is_irreducible(sg.average_kernel(game))
        verdict = sg.check_convergence(game)
        assert verdict.every_recurrent_class_hosts_rse is True
        assert verdict.self_loops_hold is False
        assert sg.detect_trap(game) == frozenset()
    passed(1, t, "example9: unique RSE (11,1), reply sets, irreducible average, "
                 "condition (i) holds, condition (ii) fails, no trap")


def test_criterion_2_example9_unreachable_from_state4():
    with Timer(30.0) as t:
        game = sg.example9()
        chain = sg.build_meta_chain(game, EPS, initial=3)
        result = sg.absorption_probabilities(chain)
        assert abs(result.aggregate) <= 1e-12
        assert np.all(np.abs(result.per_state) <= 1e-12)

        config = sg.ExperimentConfig(
            runs=1000, horizon=2000, epsilons=EPS, master_seed=2024,
            initial_policy="fixed", initial_state=3,
        )
        batch = sg.montecarlo(game, config)
        assert batch.locked_runs == 0
        assert batch.lockin_frequency == 0.0
    passed(2, t, "example9 from state 4: absorption exactly 0, "
                 "0 of 1000 runs lock in")


def test_criterion_3_lazy_example9_guarantee_holds():
    with Timer(120.0) as t:
        game = sg.example9_lazy()
        assert sg.check_convergence(game).applies

        chain = sg.build_meta_chain(game, EPS)
        result = sg.absorption_probabilities(chain)
        assert np.max(np.abs(result.per_state - 1.0)) <= 1e-9

        horizon = 10_000
        truncated = sg.locked_mass_after(chain, horizon - 2)
        config = sg.ExperimentConfig(
            runs=1000, horizon=horizon, epsilons=EPS, master_seed=7,
            initial_policy="uniform",
        )
        batch = sg.montecarlo(game, config)
        assert abs(batch.lockin_frequency - truncated) <= 0.02
        for rec in batch.records:
            if rec.lockin_tau is not None:
                assert rec.final_action == CC
                assert rec.final_state == 0
                assert rec.locked_class == 0
    passed(3, t, f"lazy example9: guarantee applies, absorption 1 everywhere, "
                 f"lock-in frequency within 0.02 of oracle, all locked at (11, 1)")


def test_criterion_4_example12_trap():
    with Timer(1.0) as t:
        expected_rse = frozenset({(CC, 0), (CC, 1)})
        for p in (0.1, 0.5, 0.9):
            game = sg.example12(p)
            assert sg.enumerate_rse(game) == expected_rse
            report = sg.analyze(game)
            assert report.rse_classes == (expected_rse,)
            assert sg.detect_trap(game) == {2, 3}
    passed(4, t, "example12: one RSE class {(11,1),(11,2)}, trap {3,4}, "
                 "invariant over p in {0.1, 0.5, 0.9}")


def test_criterion_5_example4_facts():
    with Timer(1.0) as t:
        game = sg.example4()
        assert sg.is_rse(game, DD, 0) and sg.is_rse(game, DD, 1)
        assert sg.rse_class(game, DD, 0) == {(DD, 0), (DD, 1)}
        assert len(sg.analyze(game).rse_classes) == 1
        assert not sg.is_rse(game, CC, 0)
        assert game.is_pure_nash(CC, 0)
        classes = sg.recurrent_classes(game.kernels[DD])
        assert frozenset().union(*classes) == {0, 1}
    passed(5, t, "example4: (22,1)~(22,2) one class, (11,1) Nash but not RSE, "
                 "recurrent states of P(22) are {1,2}")


def test_criterion_6_induced_chain_fidelity():
    with Timer(120.0) as t:
        game = sg.example9()
        chain = sg.build_meta_chain(game, EPS)
        sums = np.asarray(chain.matrix.sum(axis=1)).ravel()
        assert float(np.max(np.abs(sums - 1.0))) <= 1e-12

        chain4 = sg.build_meta_chain(game, EPS, initial=3)
        config = sg.LearnerConfig(
            epsilons=EPS, horizon=100_002, seed=1234, initial_state=3
        )
        report = sg.empirical_validation(game, config, chain4, runs=4, min_visits=20_000)
        assert report.total_transitions >= 100_000
        assert not report.forbidden
        assert report.compared_sources >= 1
        assert report.max_abs_deviation <= 0.01

        rng = np.random.default_rng(99)
        checked = 0
        while checked < 1000:
            x1, x2, x3, y3 = (int(v) for v in rng.integers(0, 4, size=4))
            a1, a2, b2 = (int(v) for v in rng.integers(0, 4, size=3))
            w1 = (x1, a1, x2, a2, x3)
            w2 = (x2, a2, x3, b2, y3)
            assert sg.transition_prob(game, EPS, w1, w2) == sg.transition_prob_equal_eps(
                game, 0.5, w1, w2
            )
            checked += 1
    passed(6, t, f"induced chain: rows sum to 1 within 1e-12, "
                 f"{report.total_transitions} simulated transitions deviate "
                 f"<= {report.max_abs_deviation:.4f} with 0 forbidden, "
                 f"closed form matches exactly on 1000 samples")


def test_criterion_7_oracle_equivalence():
    with Timer(120.0) as t:
        rng = np.random.default_rng(4242)
        for _ in range(100):
            game = sg.random_game(rng, num_agents=2, max_actions=3, max_states=4)
            assert sg.enumerate_rse(game) == sg.enumerate_rse_bruteforce(game)

        path_rng = np.random.default_rng(777)
        for _ in range(20):
            game = sg.random_game(path_rng, num_agents=2, max_actions=3, max_states=4)
            chain = sg.build_meta_chain(game, (0.5,) * game.n)
            absorption = sg.absorption_probabilities(chain)
            for w in chain.states:
                has_path = sg.find_rse_path(chain, w) is not None
                assert has_path == (absorption.probability(w) > 1e-12), (game, w)
    passed(7, t, "100 random games: fast enumeration equals literal brute force; "
                 "20 random games: path existence matches absorption positivity")


def test_criterion_8_potential_round_trip():
    with Timer(60.0) as t:
        rng = np.random.default_rng(31337)
        for _ in range(50):
            game, _ = sg.random_potential_game(rng)
            result = synthesize_potential(game)
            assert result.ok
            assert verify_potential(game, result.phi, mode="strict").ok
            top = result.phi.max()
            argmax = list(zip(*np.nonzero(result.phi == top)))
            assert argmax
            for x, a in argmax:
                assert sg.is_rse(game, int(a), int(x))

        result = synthesize_potential(sg.example4())
        assert not result.ok
        assert result.failure_state == 2
    passed(8, t, "50 synthesized potentials verify strictly with all maximizer "
                 "pairs RSEs; example4 certified unsynthesizable at state 3")


def test_criterion_9_determinism():
    with Timer(60.0) as t:
        game = sg.example9_lazy()
        cfg = sg.LearnerConfig(epsilons=(0.4, 0.7), horizon=5000, seed=31415)
        t1, t2 = sg.run(game, cfg), sg.run(game, cfg)
        assert np.array_equal(t1.actions, t2.actions)
        assert np.array_equal(t1.states, t2.states)

        def batch(workers):
            config = sg.ExperimentConfig(
                runs=50, horizon=2000, epsilons=EPS, master_seed=99,
                initial_policy="sweep", workers=workers,
            )
            return sg.montecarlo(game, config)

        serial, once_more, threaded = batch(1), batch(1), batch(4)
        assert serial.records == once_more.records
        assert serial.records == threaded.records
        assert serial.lockin_frequency == threaded.lockin_frequency
        assert serial.tau_quartiles == threaded.tau_quartiles
        assert serial.per_initial_state == threaded.per_initial_state
    passed(9, t, "bit-identical trajectories and batch aggregates, "
                 "serial and with 4 workers")
