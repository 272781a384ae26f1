"""File formats and the 0-based/1-based boundary.

Game file (JSON)::

    {
      "agents": n,
      "actions": [k_1, ..., k_n],
      "states": m,
      "payoffs": [state][flat_joint_action][agent],
      "kernels": [flat_joint_action][state_from][state_to]
    }

Flat joint actions are mixed-radix with agent 1 most significant.  All
indices inside files and emitted reports are 1-based, and joint actions
appear as digit-string labels; the in-memory API is 0-based throughout.
Parse errors name the exact path of the offending element.  Emitted
result numbers are decimal with 12 significant digits so that
oracle-vs-empirical comparisons stay auditable; game files keep full
float precision and round-trip bit-identically.
"""

from __future__ import annotations

import json
import os
from typing import Any

import numpy as np

from .analysis import AnalysisReport, ConvergenceVerdict
from .errors import GameFileError
from .game import StateBasedGame


def sig12(value: float) -> float:
    """Round to 12 significant decimal digits (report output format)."""
    return float(f"{float(value):.12g}")


# -- game files -------------------------------------------------------------


def _expect_list(obj: Any, path: str, length: int | None = None) -> list:
    if not isinstance(obj, list):
        raise GameFileError(f"{path}: expected a list, found {type(obj).__name__}")
    if length is not None and len(obj) != length:
        raise GameFileError(f"{path}: expected {length} entries, found {len(obj)}")
    return obj

def _expect_number(obj: Any, path: str) -> float:
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise GameFileError(f"{path}: expected a number, found {type(obj).__name__}")
    return float(obj)

def _expect_int(obj: Any, path: str) -> int:
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise GameFileError(f"{path}: expected an integer, found {type(obj).__name__}")
    return obj


def game_from_dict(data: Any) -> StateBasedGame:
    """Build a game from parsed JSON, naming the path of any bad element."""
    if not isinstance(data, dict):
        raise GameFileError(f"top level: expected an object, found {type(data).__name__}")
    for key in ("agents", "actions", "states", "payoffs", "kernels"):
        if key not in data:
            raise GameFileError(f"top level: missing key {key!r}")

    n = _expect_int(data["agents"], "agents")
    if n < 1:
        raise GameFileError(f"agents: must be at least 1, found {n}")
    actions = _expect_list(data["actions"], "actions", n)
    counts = []
    for i, k in enumerate(actions):
        k = _expect_int(k, f"actions[{i}]")
        if k < 1:
            raise GameFileError(f"actions[{i}]: must be at least 1, found {k}")
        counts.append(k)
    m = _expect_int(data["states"], "states")
    if m < 1:
        raise GameFileError(f"states: must be at least 1, found {m}")
    num_joint = int(np.prod(counts))

    payoffs = np.empty((m, num_joint, n))
    rows = _expect_list(data["payoffs"], "payoffs", m)
    for x, per_state in enumerate(rows):
        per_state = _expect_list(per_state, f"payoffs[{x}]", num_joint)
        for a, per_action in enumerate(per_state):
            per_action = _expect_list(per_action, f"payoffs[{x}][{a}]", n)
            for i, value in enumerate(per_action):
                payoffs[x, a, i] = _expect_number(value, f"payoffs[{x}][{a}][{i}]")

    kernels = np.empty((num_joint, m, m))
    mats = _expect_list(data["kernels"], "kernels", num_joint)
    for a, matrix in enumerate(mats):
        matrix = _expect_list(matrix, f"kernels[{a}]", m)
        for x, row in enumerate(matrix):
            row = _expect_list(row, f"kernels[{a}][{x}]", m)
            for y, value in enumerate(row):
                kernels[a, x, y] = _expect_number(value, f"kernels[{a}][{x}][{y}]")

    return StateBasedGame(counts, payoffs, kernels)


def load_game_file(path: str) -> StateBasedGame:
    """Parse a game file.  Content validation is the caller's concern."""
    if not os.path.exists(path):
        raise GameFileError(f"{path}: no such file and not a built-in fixture name")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GameFileError(f"{path}: invalid JSON ({exc})") from exc
    return game_from_dict(data)


def game_to_dict(game: StateBasedGame) -> dict:
    return {
        "agents": game.n,
        "actions": list(game.action_counts),
        "states": game.m,
        "payoffs": game.payoffs.tolist(),
        "kernels": game.kernels.tolist(),
    }


def save_game_file(game: StateBasedGame, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(game_to_dict(game), fh)
        fh.write("\n")


# -- potential files ----------------------------------------------------------


def load_phi_file(path: str, game: StateBasedGame) -> np.ndarray:
    """Read a potential table ``phi[state][flat_joint_action]``."""
    if not os.path.exists(path):
        raise GameFileError(f"{path}: no such file")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GameFileError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict) or "phi" not in data:
        raise GameFileError("top level: expected an object with key 'phi'")
    phi = np.empty((game.m, game.num_joint_actions))
    rows = _expect_list(data["phi"], "phi", game.m)
    for x, row in enumerate(rows):
        row = _expect_list(row, f"phi[{x}]", game.num_joint_actions)
        for a, value in enumerate(row):
            phi[x, a] = _expect_number(value, f"phi[{x}][{a}]")
    return phi


def save_phi_file(phi: np.ndarray, game: StateBasedGame, path: str) -> None:
    data = {
        "actions": list(game.action_counts),
        "states": game.m,
        "phi": np.asarray(phi).tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh)
        fh.write("\n")


# -- report serialization (1-based boundary) ----------------------------------


def pair_to_dict(game: StateBasedGame, pair) -> dict:
    action, state = pair
    return {"action": game.action_label(action), "state": state + 1}


def _states_1based(states) -> list[int]:
    return sorted(x + 1 for x in states)


def convergence_to_dict(game: StateBasedGame, verdict: ConvergenceVerdict) -> dict:
    return {
        "rse_exists": verdict.rse_exists,
        "full_coverage": verdict.full_coverage,
        "recurrent_classes": [
            {
                "states": _states_1based(w.states),
                "rse_witness": pair_to_dict(game, w.witness) if w.witness else None,
            }
            for w in verdict.class_witnesses
        ],
        "every_recurrent_class_hosts_rse": verdict.every_recurrent_class_hosts_rse,
        "self_loop_violations": [pair_to_dict(game, v) for v in verdict.self_loop_violations],
        "self_loops_hold": verdict.self_loops_hold,
        "verdict": verdict.verdict,
    }


def report_to_dict(game: StateBasedGame, report: AnalysisReport) -> dict:
    return {
        "game_fingerprint": report.game_fingerprint,
        "rse": [pair_to_dict(game, p) for p in sorted(report.rse_set)],
        "rse_classes": [
            [pair_to_dict(game, p) for p in sorted(cls)] for cls in report.rse_classes
        ],
        "equilibrium_actions": sorted(game.action_label(a) for a in report.equilibrium_actions),
        "reaching_states": {
            game.action_label(a): _states_1based(states)
            for a, states in sorted(report.reaching_states.items())
        },
        "covered_states": _states_1based(report.covered_states),
        "averaged_kernel": [[sig12(v) for v in row] for row in report.averaged_kernel],
        "averaged_kernel_recurrent_classes": [
            _states_1based(cls) for cls in report.averaged_kernel_recurrent_classes
        ],
        "convergence": convergence_to_dict(game, report.convergence),
        "trap_states": _states_1based(report.trap_states),
    }


def format_report(game: StateBasedGame, report: AnalysisReport) -> str:
    """Human-readable analysis summary."""
    lines = []
    rse = sorted(report.rse_set)
    lines.append(f"recurrent state equilibria: {len(rse)}")
    for a, x in rse:
        lines.append(f"  ({game.action_label(a)}, {x + 1})")
    lines.append(f"equilibrium classes: {len(report.rse_classes)}")
    for cls in report.rse_classes:
        label = ", ".join(f"({game.action_label(a)}, {x + 1})" for a, x in sorted(cls))
        lines.append(f"  {{{label}}}")
    lines.append(f"covered states: {_states_1based(report.covered_states) or 'none'}")
    verdict = report.convergence
    lines.append(f"lock-in guarantee: {verdict.verdict}")
    if verdict.self_loop_violations:
        shown = ", ".join(
            f"({game.action_label(a)}, {x + 1})" for a, x in verdict.self_loop_violations[:6]
        )
        more = len(verdict.self_loop_violations)
        lines.append(f"  self-loop condition fails at {more} pair(s): {shown}")
    trap = _states_1based(report.trap_states)
    if trap:
        lines.append(
            f"trap states {trap}: closed under every action and free of equilibria; "
            "no uncoupled learner can reach an equilibrium from inside"
        )
    else:
        lines.append("trap states: none")
    return "\n".join(lines)
