"""Command-line interface.

Subcommands: ``validate``, ``analyze``, ``simulate``, ``montecarlo``,
``oracle``, ``potential``, ``selfcheck``.  Exit codes: 0 success, 1 usage
or parse error, 2 game validation failure, 3 internal invariant failure.
Output files default into ``$STATEGAMES_OUTDIR`` (current directory when
unset); game arguments accept a JSON path or a built-in fixture name.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import analysis, experiments, io, metachain
from .errors import GameFileError, GameValidationError, InternalInvariantError
from .fixtures import load_game
from .game import StateBasedGame, validate
from .learner import LearnerConfig, detect_lockin, run


class CliUsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 instead of argparse's 2
        raise CliUsageError(message)


def _outdir() -> str:
    return os.environ.get("STATEGAMES_OUTDIR", ".")


def _outpath(explicit: str | None, default_name: str) -> str:
    if explicit:
        return explicit
    directory = _outdir()
    os.makedirs(directory, exist_ok=True)
    return os.path.join(directory, default_name)


def _stem(game_arg: str) -> str:
    base = os.path.basename(game_arg)
    return base[:-5] if base.endswith(".json") else base


def _add_game_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("game", help="game file (JSON) or fixture name: example4, example9, example9-lazy, example12")
    parser.add_argument(
        "--fixture-p",
        type=float,
        default=None,
        help="override the free transition parameter of parametric fixtures (example12)",
    )


def _load(args) -> StateBasedGame:
    return load_game(args.game, fixture_p=args.fixture_p)


def _epsilons(game: StateBasedGame, args) -> tuple[float, ...]:
    eps = [args.epsilon] * game.n
    for spec in args.epsilon_i or []:
        try:
            agent, value = spec.split("=", 1)
            agent = int(agent)
            value = float(value)
        except ValueError as exc:
            raise CliUsageError(f"--epsilon-i expects i=E, got {spec!r}") from exc
        if not 1 <= agent <= game.n:
            raise CliUsageError(f"--epsilon-i agent {agent} out of range 1..{game.n}")
        eps[agent - 1] = value
    return tuple(eps)


def _parse_init(value: str, game: StateBasedGame) -> int | None:
    if value == "uniform":
        return None
    try:
        state = int(value)
    except ValueError as exc:
        raise CliUsageError(f"--init expects a 1-based state or 'uniform', got {value!r}") from exc
    if not 1 <= state <= game.m:
        raise CliUsageError(f"--init state {state} out of range 1..{game.m}")
    return state - 1


def build_parser() -> _Parser:
    parser = _Parser(prog="stategames", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a game file against every content invariant")
    _add_game_argument(p)

    p = sub.add_parser("analyze", help="equilibrium analysis; prints a summary and writes a JSON report")
    _add_game_argument(p)
    p.add_argument("--out", default=None, help="report path (default analysis_<game>.json in the output dir)")

    p = sub.add_parser("simulate", help="one learning run; writes the trajectory as CSV")
    _add_game_argument(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=1000, help="horizon T (at least 3)")
    p.add_argument("--epsilon", type=float, default=0.5, help="shared inertia")
    p.add_argument("--epsilon-i", action="append", metavar="i=E", help="per-agent inertia override (1-based)")
    p.add_argument("--init", default="uniform", help="1-based initial state, or 'uniform'")
    p.add_argument("--out", default=None, help="trajectory CSV path")

    p = sub.add_parser("montecarlo", help="batch of independent runs with derived seeds")
    _add_game_argument(p)
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--epsilon-i", action="append", metavar="i=E")
    p.add_argument("--init", default="uniform", help="1-based state, 'uniform', or 'sweep'")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--oracle", action="store_true", help="include the exact absorption comparison")
    p.add_argument("--out-csv", default=None)
    p.add_argument("--out-json", default=None)

    p = sub.add_parser("oracle", help="exact induced-chain analysis: absorption into the locked set")
    _add_game_argument(p)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--epsilon-i", action="append", metavar="i=E")
    p.add_argument("--init", default="uniform", help="1-based initial state or 'uniform'")
    p.add_argument("--budget", type=int, default=10**6, help="max size of the full meta state space")
    p.add_argument(
        "--validate",
        nargs="*",
        metavar="key=value",
        default=None,
        help="run the empirical cross-check; accepts seeds=K and steps=T",
    )

    p = sub.add_parser("potential", help="verify a potential table, or synthesize one")
    _add_game_argument(p)
    p.add_argument("--phi", default=None, help="potential file to verify (omit to synthesize)")
    p.add_argument("--relaxed", action="store_true", help="verify the relaxed transition condition")
    p.add_argument("--out", default=None, help="where synthesis writes phi.json")

    p = sub.add_parser("selfcheck", help="cross-module invariant suite on fixtures and random games")
    p.add_argument("--games", type=int, default=100, help="number of random games")

    return parser


def _cmd_validate(args) -> int:
    if os.path.exists(args.game):
        game = io.load_game_file(args.game)
    else:
        game = load_game(args.game, fixture_p=args.fixture_p)
    report = validate(game)
    print(report)
    return 0 if report.ok else 2


def _cmd_analyze(args) -> int:
    game = _load(args)
    report = analysis.analyze(game)
    print(io.format_report(game, report))
    out = _outpath(args.out, f"analysis_{_stem(args.game)}.json")
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(io.report_to_dict(game, report), fh, indent=2)
        fh.write("\n")
    print(f"report written to {out}")
    return 0


def _cmd_simulate(args) -> int:
    game = _load(args)
    config = LearnerConfig(
        epsilons=_epsilons(game, args),
        horizon=args.steps,
        seed=args.seed,
        initial_state=_parse_init(args.init, game),
    )
    traj = run(game, config)
    lock = detect_lockin(game, traj)
    out = _outpath(args.out, f"trajectory_{_stem(args.game)}_seed{args.seed}.csv")
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "x", "a_digits", "locked"])
        locked_from = lock.tau if lock is not None else None
        for t in range(1, traj.horizon + 1):
            flag = int(locked_from is not None and t >= locked_from)
            writer.writerow([t, int(traj.states[t - 1]) + 1, game.action_label(int(traj.actions[t - 1])), flag])
        final_flag = int(locked_from is not None)
        writer.writerow([traj.horizon + 1, int(traj.states[-1]) + 1, "", final_flag])
    if lock is None:
        print("lockin none")
    else:
        print(f"lockin tau={lock.tau} action={game.action_label(lock.action)}")
    print(f"trajectory written to {out}")
    return 0


def _cmd_montecarlo(args) -> int:
    game = _load(args)
    epsilons = _epsilons(game, args)
    if args.init == "sweep":
        policy, init_state = "sweep", None
    elif args.init == "uniform":
        policy, init_state = "uniform", None
    else:
        policy, init_state = "fixed", _parse_init(args.init, game)
    config = experiments.ExperimentConfig(
        runs=args.runs,
        horizon=args.steps,
        epsilons=epsilons,
        master_seed=args.seed,
        initial_policy=policy,
        initial_state=init_state,
        workers=args.workers,
    )
    batch = experiments.montecarlo(game, config)
    report = analysis.analyze(game)

    oracle = None
    if args.oracle:
        initial = init_state if policy == "fixed" else None
        chain = metachain.build_meta_chain(game, epsilons, initial=initial)
        absorption = metachain.absorption_probabilities(chain)
        oracle = {
            "aggregate_absorption": absorption.aggregate,
            "truncated_absorption": metachain.locked_mass_after(chain, max(config.horizon - 2, 0)),
        }

    csv_path = _outpath(args.out_csv, f"montecarlo_{_stem(args.game)}.csv")
    json_path = _outpath(args.out_json, f"montecarlo_{_stem(args.game)}.json")
    experiments.write_batch_csv(game, batch, csv_path)
    summary = experiments.write_batch_summary(game, batch, report, json_path, oracle)
    print(f"lock-in frequency {summary['lockin_frequency']} over {config.runs} runs")
    if oracle is not None:
        print(
            f"oracle absorption {summary['oracle']['aggregate_absorption']} "
            f"(truncated {summary['oracle']['truncated_absorption']}), "
            f"deviation {summary['oracle']['abs_deviation']}"
        )
    for warning in summary["warnings"]:
        print(f"warning: {warning}")
    print(f"records written to {csv_path}")
    print(f"summary written to {json_path}")
    return 0


def _cmd_oracle(args) -> int:
    game = _load(args)
    epsilons = _epsilons(game, args)
    initial = _parse_init(args.init, game) if args.init != "uniform" else None
    chain = metachain.build_meta_chain(game, epsilons, initial=initial, budget=args.budget)
    absorption = metachain.absorption_probabilities(chain)
    print(f"meta state space {chain.full_space_size}, reachable {chain.reachable_count}, "
          f"locked {len(chain.locked)}")
    print(f"aggregate absorption probability {io.sig12(absorption.aggregate)}")

    per_state: dict[int, float] = {}
    weight: dict[int, float] = {}
    for w, p in zip(chain.states, chain.initial):
        if p > 0.0:
            x0 = w[0]
            per_state[x0] = per_state.get(x0, 0.0) + p * absorption.per_state[chain.index[w]]
            weight[x0] = weight.get(x0, 0.0) + p
    for x0 in sorted(per_state):
        print(f"  from state {x0 + 1}: {io.sig12(per_state[x0] / weight[x0])}")

    if args.validate is not None:
        options = {"seeds": 1, "steps": 10_000}
        for token in args.validate:
            try:
                key, value = token.split("=", 1)
                value = int(value)
            except ValueError as exc:
                raise CliUsageError(f"--validate expects seeds=K steps=T, got {token!r}") from exc
            if key not in ("seeds", "steps"):
                raise CliUsageError(f"--validate got unknown key {key!r}")
            options[key] = value
        config = LearnerConfig(
            epsilons=epsilons, horizon=max(options["steps"], 4), seed=0, initial_state=initial
        )
        divergence = metachain.empirical_validation(
            game, config, chain, runs=options["seeds"]
        )
        print(
            f"empirical check: {divergence.total_transitions} transitions, "
            f"{divergence.compared_sources} sources >= {divergence.min_visits} visits, "
            f"max deviation {io.sig12(divergence.max_abs_deviation)}, "
            f"forbidden {len(divergence.forbidden)}"
        )
        if not divergence.ok:
            raise InternalInvariantError(
                f"observed {len(divergence.forbidden)} transitions of exact probability zero"
            )
    return 0


def _cmd_potential(args) -> int:
    from . import potential as pot

    game = _load(args)
    if args.phi is not None:
        phi = io.load_phi_file(args.phi, game)
        verdict = pot.verify_potential(game, phi, mode="relaxed" if args.relaxed else "strict")
        mode = "relaxed" if args.relaxed else "strict"
        if verdict.ok:
            print(f"potential holds ({mode})")
        else:
            print(f"potential fails ({mode}): {len(verdict.violations)} violation(s)")
            for v in verdict.violations[:10]:
                print(f"  {v}")
        return 0
    result = pot.synthesize_potential(game)
    if not result.ok:
        if result.failure_state is not None:
            print(f"no potential: state {result.failure_state + 1} admits no exact potential")
        else:
            cycle = [x + 1 for x in result.failure_cycle]
            print(f"no potential: offset constraints contain a negative cycle through states {cycle}")
        return 0
    out = _outpath(args.out, f"phi_{_stem(args.game)}.json")
    io.save_phi_file(result.phi, game, out)
    print(f"potential synthesized; written to {out}")
    return 0


def _cmd_selfcheck(args) -> int:
    result = experiments.selfcheck(random_games=args.games)
    for name, ok, detail in result.checks:
        status = "PASS" if ok else "FAIL"
        suffix = f" ({detail})" if detail else ""
        print(f"{status} {name}{suffix}")
    if not result.passed:
        print("selfcheck FAILED")
        return 3
    print("selfcheck passed")
    return 0


_COMMANDS = {
    "validate": _cmd_validate,
    "analyze": _cmd_analyze,
    "simulate": _cmd_simulate,
    "montecarlo": _cmd_montecarlo,
    "oracle": _cmd_oracle,
    "potential": _cmd_potential,
    "selfcheck": _cmd_selfcheck,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except CliUsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except GameFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except GameValidationError as exc:
        print(f"validation failed:\n{exc}", file=sys.stderr)
        return 2
    except InternalInvariantError as exc:
        print(f"internal invariant failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
