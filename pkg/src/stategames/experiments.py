"""Batch Monte Carlo experiments, result export, and the self-check suite.

A batch runs R independent learning runs whose seeds derive from one
master seed, so run ``r`` reproduces exactly as a single simulation with
``derive_seed(master, r)``.  Runs may execute on a thread pool; records
are keyed by run index and aggregation is a deterministic reduction, so
results are bit-identical regardless of worker count or completion order.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import analysis, metachain
from .analysis import AnalysisReport
from .game import StateBasedGame, validate
from .io import pair_to_dict, report_to_dict, sig12
from .learner import LearnerConfig, derive_seed, detect_lockin, response_distribution, run

INITIAL_POLICIES = ("fixed", "uniform", "sweep")


@dataclass(frozen=True)
class ExperimentConfig:
    """Configuration of one Monte Carlo batch.

    ``initial_policy`` is ``"fixed"`` (every run starts at
    ``initial_state``), ``"uniform"`` (each run draws its start from its
    own seed), or ``"sweep"`` (run ``r`` starts at state ``(r-1) mod m``).
    """

    runs: int
    horizon: int
    epsilons: tuple[float, ...]
    master_seed: int
    initial_policy: str = "uniform"
    initial_state: int | None = None
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if self.horizon < 3:
            raise ValueError("horizon must be at least 3")
        if self.initial_policy not in INITIAL_POLICIES:
            raise ValueError(f"initial_policy must be one of {INITIAL_POLICIES}")
        if self.initial_policy == "fixed" and self.initial_state is None:
            raise ValueError("fixed initial policy requires initial_state")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


@dataclass(frozen=True)
class RunRecord:
    run: int
    seed: int
    initial_state: int
    lockin_tau: int | None
    final_action: int
    final_state: int
    locked_class: int | None


@dataclass(frozen=True, eq=False)
class BatchResult:
    """Per-run records plus deterministic aggregates of one batch."""

    game_fingerprint: str
    config: ExperimentConfig
    records: tuple[RunRecord, ...]
    lockin_frequency: float
    tau_quartiles: tuple[float, float, float] | None
    per_initial_state: dict[int, tuple[int, int]]  # state -> (runs, locked)

    @property
    def locked_runs(self) -> int:
        return sum(1 for r in self.records if r.lockin_tau is not None)


def montecarlo(game: StateBasedGame, config: ExperimentConfig) -> BatchResult:
    """Run the batch; deterministic given (game, config) at any worker count."""
    if len(config.epsilons) != game.n:
        raise ValueError(f"expected {game.n} inertias, got {len(config.epsilons)}")
    if config.initial_state is not None:
        game._check_state(config.initial_state)

    rse_set = analysis.enumerate_rse(game)
    report = analysis.analyze(game)
    class_of: dict = {}
    for idx, cls in enumerate(report.rse_classes):
        for pair in cls:
            class_of[pair] = idx

    def initial_for(r: int) -> int | None:
        if config.initial_policy == "fixed":
            return config.initial_state
        if config.initial_policy == "sweep":
            return (r - 1) % game.m
        return None

    def one(r: int) -> RunRecord:
        seed = derive_seed(config.master_seed, r)
        cfg = LearnerConfig(
            epsilons=config.epsilons,
            horizon=config.horizon,
            seed=seed,
            initial_state=initial_for(r),
        )
        traj = run(game, cfg)
        lock = detect_lockin(game, traj, rse_set)
        locked_class = None
        if lock is not None:
            locked_class = class_of[(lock.action, int(traj.states[lock.tau]))]
        return RunRecord(
            run=r,
            seed=seed,
            initial_state=int(traj.states[0]),
            lockin_tau=None if lock is None else lock.tau,
            final_action=int(traj.actions[-1]),
            final_state=int(traj.states[-1]),
            locked_class=locked_class,
        )

    indices = range(1, config.runs + 1)
    if config.workers == 1:
        records = [one(r) for r in indices]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(one, indices))
    records.sort(key=lambda rec: rec.run)

    taus = sorted(rec.lockin_tau for rec in records if rec.lockin_tau is not None)
    quartiles = None
    if taus:
        q1, q2, q3 = np.percentile(taus, [25, 50, 75])
        quartiles = (float(q1), float(q2), float(q3))
    per_initial: dict[int, tuple[int, int]] = {}
    for rec in records:
        total, locked = per_initial.get(rec.initial_state, (0, 0))
        per_initial[rec.initial_state] = (total + 1, locked + (rec.lockin_tau is not None))

    return BatchResult(
        game_fingerprint=game.fingerprint(),
        config=config,
        records=tuple(records),
        lockin_frequency=len(taus) / config.runs,
        tau_quartiles=quartiles,
        per_initial_state=per_initial,
    )


def write_batch_csv(game: StateBasedGame, batch: BatchResult, path: str) -> None:
    """One CSV row per run, 1-based indices and digit-string actions."""
    if not batch.records:
        raise ValueError("refusing to write an empty batch")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["run", "seed", "initial_state", "lockin_tau", "final_action", "final_state", "locked_class"]
        )
        for rec in batch.records:
            writer.writerow(
                [
                    rec.run,
                    rec.seed,
                    rec.initial_state + 1,
                    rec.lockin_tau if rec.lockin_tau is not None else "none",
                    game.action_label(rec.final_action),
                    rec.final_state + 1,
                    rec.locked_class if rec.locked_class is not None else "none",
                ]
            )


def batch_summary(
    game: StateBasedGame,
    batch: BatchResult,
    report: AnalysisReport,
    oracle: dict | None = None,
) -> dict:
    """JSON-ready batch summary embedding the analysis report.

    Raises when the batch and the report describe different games.  With
    oracle aggregates supplied, includes the exact-vs-empirical absorption
    comparison with its absolute deviation.
    """
    if not batch.records:
        raise ValueError("refusing to summarize an empty batch")
    if batch.game_fingerprint != report.game_fingerprint:
        raise ValueError("batch and analysis report describe different games")
    if game.fingerprint() != batch.game_fingerprint:
        raise ValueError("batch was produced by a different game")

    warnings = []
    trap = sorted(x + 1 for x in report.trap_states)
    if trap:
        warnings.append(
            f"states {trap} form a trap: closed under every action and containing no "
            "recurrent state equilibrium; no uncoupled learning dynamics can converge "
            "to an equilibrium from inside"
        )
    summary = {
        "game_fingerprint": batch.game_fingerprint,
        "config": {
            "runs": batch.config.runs,
            "horizon": batch.config.horizon,
            "epsilons": [sig12(e) for e in batch.config.epsilons],
            "master_seed": batch.config.master_seed,
            "initial_policy": batch.config.initial_policy,
            "initial_state": (
                None if batch.config.initial_state is None else batch.config.initial_state + 1
            ),
        },
        "lockin_frequency": sig12(batch.lockin_frequency),
        "locked_runs": batch.locked_runs,
        "tau_quartiles": (
            None if batch.tau_quartiles is None else [sig12(q) for q in batch.tau_quartiles]
        ),
        "per_initial_state": {
            str(x + 1): {"runs": total, "locked": locked, "frequency": sig12(locked / total)}
            for x, (total, locked) in sorted(batch.per_initial_state.items())
        },
        "analysis": report_to_dict(game, report),
        "warnings": warnings,
    }
    if oracle is not None:
        deviation = abs(batch.lockin_frequency - oracle["truncated_absorption"])
        summary["oracle"] = {
            "aggregate_absorption": sig12(oracle["aggregate_absorption"]),
            "truncated_absorption": sig12(oracle["truncated_absorption"]),
            "empirical_lockin_frequency": sig12(batch.lockin_frequency),
            "abs_deviation": sig12(deviation),
        }
    return summary


def write_batch_summary(
    game: StateBasedGame,
    batch: BatchResult,
    report: AnalysisReport,
    path: str,
    oracle: dict | None = None,
) -> dict:
    summary = batch_summary(game, batch, report, oracle)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return summary


# -- self-check suite ---------------------------------------------------------


@dataclass(frozen=True)
class SelfCheckResult:
    passed: bool
    checks: tuple[tuple[str, bool, str], ...]


def selfcheck(random_games: int = 100, seed: int = 20240817) -> SelfCheckResult:
    """Deterministic cross-module invariant suite on fixtures and random games."""
    from . import fixtures

    checks: list[tuple[str, bool, str]] = []

    def record(name: str, fn) -> None:
        try:
            detail = fn()
            checks.append((name, True, detail or ""))
        except Exception as exc:  # noqa: BLE001 - failures are data here
            checks.append((name, False, f"{type(exc).__name__}: {exc}"))

    def check_example4():
        fixtures.example4()  # load-time fact assertions
        return "fixture facts hold"

    def check_example9():
        game = fixtures.example9()
        rse = analysis.enumerate_rse(game)
        assert rse == {(0, 0)}, rse
        assert game.better_reply_set(0, 0, 1) == {1}
        assert game.better_reply_set(1, 0, 1) == frozenset()
        from . import markov

        assert markov.is_irreducible(analysis.average_kernel(game))
        verdict = analysis.check_convergence(game)
        assert verdict.every_recurrent_class_hosts_rse
        assert not verdict.self_loops_hold and not verdict.applies
        assert analysis.detect_trap(game) == frozenset()
        return "unique equilibrium, guarantee correctly rejected"

    def check_example12():
        expected = frozenset({(0, 0), (0, 1)})
        for p in (0.1, 0.5, 0.9):
            game = fixtures.example12(p)
            assert analysis.enumerate_rse(game) == expected, p
            assert analysis.detect_trap(game) == frozenset({2, 3}), p
        return "trap {3,4} invariant across p in {0.1, 0.5, 0.9}"

    def check_random_rse():
        rng = np.random.default_rng(seed)
        for _ in range(random_games):
            game = fixtures.random_game(rng)
            fast = analysis.enumerate_rse(game)
            brute = analysis.enumerate_rse_bruteforce(game)
            assert fast == brute, (fast, brute)
        return f"{random_games} games, fast enumeration equals literal definition"

    def check_chain_rows():
        game = fixtures.example9()
        chain = metachain.build_meta_chain(game, (0.5, 0.5))
        sums = np.asarray(chain.matrix.sum(axis=1)).ravel()
        worst = float(np.max(np.abs(sums - 1.0)))
        assert worst <= 1e-12, worst
        outside = np.flatnonzero(~chain.locked_mask)
        leak = chain.matrix[sorted(chain.locked)][:, outside]
        assert leak.nnz == 0
        return f"{chain.reachable_count} reachable rows sum to 1, locked set closed"

    def check_equal_eps():
        game = fixtures.example9()
        rng = np.random.default_rng(seed + 1)
        states = rng.integers(0, game.m, size=(200, 3))
        acts = rng.integers(0, game.num_joint_actions, size=(200, 4))
        for (x1, x2, x3), (a1, a2, b2, _) in zip(states, acts):
            for y3 in range(game.m):
                w1 = (int(x1), int(a1), int(x2), int(a2), int(x3))
                w2 = (int(x2), int(a2), int(x3), int(b2), int(y3))
                lhs = metachain.transition_prob(game, (0.5, 0.5), w1, w2)
                rhs = metachain.transition_prob_equal_eps(game, 0.5, w1, w2)
                assert lhs == rhs, (w1, w2, lhs, rhs)
        return "per-agent factors equal the shared-inertia closed form"

    def check_response_sums():
        from .learner import History

        game = fixtures.example9()
        for a in range(game.num_joint_actions):
            for x in range(game.m):
                for i in range(game.n):
                    for eps in (0.3, 0.5, 0.7):
                        rep = response_distribution(game, i, History(a, a, x), eps)
                        chg = response_distribution(game, i, History((a + 1) % 4, a, x), eps)
                        assert float(rep.sum()) == 1.0 and float(chg.sum()) == 1.0
        return "response vectors sum to 1 exactly"

    def check_seed_derivation():
        game = fixtures.example9_lazy()
        config = ExperimentConfig(
            runs=3, horizon=50, epsilons=(0.5, 0.5), master_seed=99, initial_policy="fixed",
            initial_state=0,
        )
        batch = montecarlo(game, config)
        for rec in batch.records:
            cfg = LearnerConfig(
                epsilons=(0.5, 0.5), horizon=50, seed=derive_seed(99, rec.run), initial_state=0
            )
            traj = run(game, cfg)
            assert int(traj.actions[-1]) == rec.final_action
            assert int(traj.states[-1]) == rec.final_state
        return "batch runs replay as single simulations with derived seeds"

    record("example4 fixture facts", check_example4)
    record("example9 equilibrium facts", check_example9)
    record("example12 trap, parameter sweep", check_example12)
    record("random games: fast vs literal enumeration", check_random_rse)
    record("meta chain rows and locked-set closure", check_chain_rows)
    record("shared-inertia closed-form equivalence", check_equal_eps)
    record("response distribution normalization", check_response_sums)
    record("derived-seed reproducibility", check_seed_derivation)

    return SelfCheckResult(all(ok for _, ok, _ in checks), tuple(checks))
