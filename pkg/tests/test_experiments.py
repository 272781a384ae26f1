"""Batch experiments: derived seeds, determinism, aggregation, reporting."""

import numpy as np
import pytest

import stategames as sg

EPS = (0.5, 0.5)


def small_config(**overrides):
    defaults = dict(
        runs=20, horizon=300, epsilons=EPS, master_seed=11, initial_policy="uniform", workers=1
    )
    defaults.update(overrides)
    return sg.ExperimentConfig(**defaults)


def test_batch_matches_single_runs(ex9_lazy):
    config = small_config(runs=5, initial_policy="fixed", initial_state=1)
    batch = sg.montecarlo(ex9_lazy, config)
    assert len(batch.records) == 5
    for rec in batch.records:
        cfg = sg.LearnerConfig(
            epsilons=EPS, horizon=300, seed=sg.derive_seed(11, rec.run), initial_state=1
        )
        traj = sg.run(ex9_lazy, cfg)
        lock = sg.detect_lockin(ex9_lazy, traj)
        assert rec.seed == cfg.seed
        assert rec.final_action == int(traj.actions[-1])
        assert rec.final_state == int(traj.states[-1])
        assert rec.lockin_tau == (lock.tau if lock else None)


def test_batch_deterministic_across_workers(ex9_lazy):
    serial = sg.montecarlo(ex9_lazy, small_config(workers=1))
    threaded = sg.montecarlo(ex9_lazy, small_config(workers=4))
    assert serial.records == threaded.records
    assert serial.lockin_frequency == threaded.lockin_frequency
    assert serial.per_initial_state == threaded.per_initial_state
    assert serial.tau_quartiles == threaded.tau_quartiles


def test_sweep_policy_covers_states(ex9):
    batch = sg.montecarlo(ex9, small_config(runs=8, initial_policy="sweep"))
    initials = [rec.initial_state for rec in batch.records]
    assert initials == [0, 1, 2, 3, 0, 1, 2, 3]
    assert set(batch.per_initial_state) == {0, 1, 2, 3}
    for total, _ in batch.per_initial_state.values():
        assert total == 2


def test_locked_class_ids(ex4):
    batch = sg.montecarlo(ex4, small_config(runs=30, horizon=500))
    report = sg.analyze(ex4)
    for rec in batch.records:
        if rec.lockin_tau is not None:
            assert rec.locked_class == 0  # single equilibrium class
            assert (rec.final_action, rec.final_state) in report.rse_classes[0]


def test_config_validation():
    with pytest.raises(ValueError):
        small_config(runs=0)
    with pytest.raises(ValueError):
        small_config(initial_policy="fixed")  # missing state
    with pytest.raises(ValueError):
        small_config(initial_policy="nope")


def test_csv_and_summary_files(tmp_path, ex12):
    config = small_config(runs=6, horizon=200)
    batch = sg.montecarlo(ex12, config)
    report = sg.analyze(ex12)
    csv_path = tmp_path / "runs.csv"
    json_path = tmp_path / "summary.json"
    sg.write_batch_csv(ex12, batch, str(csv_path))
    summary = sg.write_batch_summary(ex12, batch, report, str(json_path))

    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "run,seed,initial_state,lockin_tau,final_action,final_state,locked_class"
    assert len(lines) == 7
    assert any("trap" in w for w in summary["warnings"])
    assert summary["analysis"]["trap_states"] == [3, 4]
    assert json_path.exists()


def test_summary_includes_oracle_comparison(ex9_lazy):
    config = small_config(runs=10, horizon=2000)
    batch = sg.montecarlo(ex9_lazy, config)
    report = sg.analyze(ex9_lazy)
    chain = sg.build_meta_chain(ex9_lazy, EPS)
    oracle = {
        "aggregate_absorption": sg.absorption_probabilities(chain).aggregate,
        "truncated_absorption": sg.locked_mass_after(chain, config.horizon - 2),
    }
    summary = sg.batch_summary(ex9_lazy, batch, report, oracle)
    assert summary["oracle"]["abs_deviation"] == pytest.approx(
        abs(batch.lockin_frequency - oracle["truncated_absorption"]), abs=1e-9
    )


def test_summary_rejects_mismatched_game(ex9, ex12):
    batch = sg.montecarlo(ex9, small_config(runs=2, horizon=100))
    report = sg.analyze(ex12)
    with pytest.raises(ValueError, match="different game"):
        sg.batch_summary(ex9, batch, report)


def test_selfcheck_passes():
    result = sg.selfcheck(random_games=30)
    failures = [(name, detail) for name, ok, detail in result.checks if not ok]
    assert result.passed, failures
    assert len(result.checks) == 8
