"""Per-action chain analysis and equilibrium structure of a game.

A recurrent state equilibrium (RSE) is an action-state pair ``(a, x)``
such that (i) ``x`` is recurrent under the chain of the held-fixed action
``a``, and (ii) ``a`` is a pure Nash equilibrium of the state game at
every state reachable from ``x`` under ``a``.  Two pairs are equivalent
when they share the action, the first is an RSE, and the second's state is
reachable from the first's; the classes of that relation are the
absorbing targets the learning dynamics can lock into.

Two implementations of recurrence are kept on purpose: the production
path classifies states by strongly-connected-component condensation,
while :func:`is_rse_literal` re-checks the double-reachability definition
directly and serves as an independent oracle in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import markov
from .game import StateBasedGame

Pair = tuple[int, int]  # (flat joint action, state)


# -- reachability and recurrence ------------------------------------------


def reachable_states(game: StateBasedGame, action: int, state: int) -> frozenset[int]:
    """States reachable from ``state`` in >= 1 steps while holding ``action``.

    ``state`` itself is a member only when the chain can return to it.
    """
    game._check_action(action)
    game._check_state(state)
    cache = game._cache.setdefault("reach", {})
    key = (action, state)
    if key not in cache:
        successors = _action_successors(game, action)
        cache[key] = frozenset(markov.reachable_from(successors, state))
    return cache[key]


def _action_successors(game: StateBasedGame, action: int) -> list[list[int]]:
    cache = game._cache.setdefault("succ", {})
    if action not in cache:
        cache[action] = markov.support_successors(game.kernels[action])
    return cache[action]


def action_recurrent_classes(game: StateBasedGame, action: int) -> list[frozenset[int]]:
    """Closed communicating classes of the kernel selected by ``action``."""
    game._check_action(action)
    cache = game._cache.setdefault("classes", {})
    if action not in cache:
        cache[action] = markov.sink_components(game.kernels[action])
    return cache[action]


def recurrent_classes(matrix: np.ndarray) -> list[frozenset[int]]:
    """Closed communicating classes of an arbitrary row-stochastic matrix."""
    return markov.recurrent_classes(matrix)


# -- recurrent state equilibria --------------------------------------------


def is_rse(game: StateBasedGame, action: int, state: int) -> bool:
    """Whether ``(action, state)`` is a recurrent state equilibrium."""
    game._check_state(state)
    for cls in action_recurrent_classes(game, action):
        if state in cls:
            return all(game.is_pure_nash(action, y) for y in cls)
    return False


def is_rse_literal(game: StateBasedGame, action: int, state: int) -> bool:
    """Definition-literal RSE check via double reachability.

    Independent of the SCC-based classification: computes the reachable
    set, then requires a positive-probability return path from each of its
    members and a pure Nash equilibrium at each of them.
    """
    reach = reachable_states(game, action, state)
    if not all(state in reachable_states(game, action, y) for y in reach):
        return False
    return all(game.is_pure_nash(action, y) for y in reach)


def enumerate_rse(game: StateBasedGame) -> frozenset[Pair]:
    """All recurrent state equilibria of the game.

    Fast path: a pair ``(a, x)`` qualifies exactly when ``x`` lies in a
    closed class of the kernel of ``a`` on which ``a`` is everywhere a
    pure Nash equilibrium.
    """
    if "rse" not in game._cache:
        found: set[Pair] = set()
        for a in range(game.num_joint_actions):
            for cls in action_recurrent_classes(game, a):
                if all(game.is_pure_nash(a, y) for y in cls):
                    found.update((a, x) for x in cls)
        game._cache["rse"] = frozenset(found)
    return game._cache["rse"]


def enumerate_rse_bruteforce(game: StateBasedGame) -> frozenset[Pair]:
    """RSE enumeration by applying the literal definition at every pair."""
    return frozenset(
        (a, x)
        for a in range(game.num_joint_actions)
        for x in range(game.m)
        if is_rse_literal(game, a, x)
    )


def pairs_equivalent(game: StateBasedGame, pair1: Pair, pair2: Pair) -> bool:
    """Equivalence of two action-state pairs.

    Holds when the actions agree, ``pair1`` is an RSE, and ``pair2``'s
    state is reachable from ``pair1``'s state under the shared action.
    """
    (a, x), (b, y) = pair1, pair2
    return a == b and is_rse(game, a, x) and y in reachable_states(game, a, x)


def rse_class(game: StateBasedGame, action: int, state: int) -> frozenset[Pair]:
    """The equivalence class generated by the RSE ``(action, state)``."""
    if not is_rse(game, action, state):
        raise ValueError(
            f"({game.action_label(action)}, {state + 1}) is not a recurrent state equilibrium"
        )
    reach = reachable_states(game, action, state)
    return frozenset((action, y) for y in reach) | {(action, state)}


# -- aggregate structure ----------------------------------------------------


def average_kernel(game: StateBasedGame) -> np.ndarray:
    """Arithmetic mean of all per-action transition matrices (row stochastic)."""
    return game.kernels.mean(axis=0)


@dataclass(frozen=True)
class EquilibriumCoverage:
    """Which actions host equilibria and which states can reach them.

    ``reaching_states[a]`` holds every state from which holding ``a``
    fixed reaches, with positive probability, a state forming an RSE with
    ``a`` (a state already in such a pair counts as reaching itself).
    ``covered_states`` is the union over equilibrium actions.
    """

    equilibrium_actions: frozenset[int]
    reaching_states: Mapping[int, frozenset[int]]
    covered_states: frozenset[int]


def equilibrium_coverage(game: StateBasedGame) -> EquilibriumCoverage:
    """Compute equilibrium actions, their reaching sets, and the covered states."""
    rse = enumerate_rse(game)
    actions = frozenset(a for a, _ in rse)
    reaching: dict[int, frozenset[int]] = {}
    for a in sorted(actions):
        rse_states = {x for b, x in rse if b == a}
        members = set()
        for x in range(game.m):
            candidates = reachable_states(game, a, x) | {x}
            if candidates & rse_states:
                members.add(x)
        reaching[a] = frozenset(members)
    covered = frozenset().union(*reaching.values()) if reaching else frozenset()
    return EquilibriumCoverage(actions, reaching, covered)


@dataclass(frozen=True)
class ClassWitness:
    """One recurrent class of the averaged kernel plus an RSE inside it, if any."""

    states: frozenset[int]
    witness: Pair | None


@dataclass(frozen=True)
class ConvergenceVerdict:
    """Whether the learning dynamics are guaranteed to lock into an RSE class.

    The guarantee holds when equilibria exist and either every state can
    reach an equilibrium class under its own action (``full_coverage``),
    or both structural conditions hold: every recurrent class of the
    averaged kernel contains an RSE state, and every action keeps a
    positive self-transition at each uncovered state.
    """

    rse_exists: bool
    full_coverage: bool
    class_witnesses: tuple[ClassWitness, ...]
    every_recurrent_class_hosts_rse: bool
    self_loop_violations: tuple[Pair, ...]
    self_loops_hold: bool
    applies: bool

    @property
    def verdict(self) -> str:
        if self.applies:
            return "applies"
        if not self.rse_exists:
            return "does not apply (no recurrent state equilibrium)"
        return "does not apply"


def check_convergence(game: StateBasedGame) -> ConvergenceVerdict:
    """Evaluate the structural conditions behind the lock-in guarantee."""
    rse = enumerate_rse(game)
    rse_exists = bool(rse)
    coverage = equilibrium_coverage(game)
    full = coverage.covered_states == frozenset(range(game.m))

    witnesses = []
    for cls in markov.sink_components(average_kernel(game)):
        inside = sorted((a, x) for a, x in rse if x in cls)
        witnesses.append(ClassWitness(cls, inside[0] if inside else None))
    cond_classes = all(w.witness is not None for w in witnesses)

    violations = []
    uncovered = sorted(frozenset(range(game.m)) - coverage.covered_states)
    for a in range(game.num_joint_actions):
        for x in uncovered:
            if not game.kernels[a, x, x] > 0.0:
                violations.append((a, x))
    cond_loops = not violations

    applies = rse_exists and (full or (cond_classes and cond_loops))
    return ConvergenceVerdict(
        rse_exists=rse_exists,
        full_coverage=full,
        class_witnesses=tuple(witnesses),
        every_recurrent_class_hosts_rse=cond_classes,
        self_loop_violations=tuple(violations),
        self_loops_hold=cond_loops,
        applies=applies,
    )


def detect_trap(game: StateBasedGame) -> frozenset[int]:
    """Largest state set closed under every kernel and containing no RSE state.

    Computed as a greatest fixed point: starting from the states hosting
    no equilibrium under any action, repeatedly delete states that can
    leak outside the candidate set under some action.  An empty result
    means no trap exists; any trap of the game is a subset of this one.
    """
    rse_states = {x for _, x in enumerate_rse(game)}
    candidate = set(range(game.m)) - rse_states
    changed = True
    while changed and candidate:
        changed = False
        for x in sorted(candidate):
            for a in range(game.num_joint_actions):
                succ = _action_successors(game, a)[x]
                if any(y not in candidate for y in succ):
                    candidate.discard(x)
                    changed = True
                    break
    return frozenset(candidate)


@dataclass(frozen=True, eq=False)
class AnalysisReport:
    """Full equilibrium analysis of one game."""

    game_fingerprint: str
    rse_set: frozenset[Pair]
    rse_classes: tuple[frozenset[Pair], ...]
    equilibrium_actions: frozenset[int]
    reaching_states: Mapping[int, frozenset[int]]
    covered_states: frozenset[int]
    averaged_kernel: np.ndarray = field(repr=False)
    averaged_kernel_recurrent_classes: tuple[frozenset[int], ...]
    convergence: ConvergenceVerdict
    trap_states: frozenset[int]


def analyze(game: StateBasedGame) -> AnalysisReport:
    """Aggregate every analysis of this module into one report."""
    rse = enumerate_rse(game)
    classes = sorted({rse_class(game, a, x) for a, x in rse}, key=lambda c: min(c))
    coverage = equilibrium_coverage(game)
    pbar = average_kernel(game)
    return AnalysisReport(
        game_fingerprint=game.fingerprint(),
        rse_set=rse,
        rse_classes=tuple(classes),
        equilibrium_actions=coverage.equilibrium_actions,
        reaching_states=coverage.reaching_states,
        covered_states=coverage.covered_states,
        averaged_kernel=pbar,
        averaged_kernel_recurrent_classes=tuple(markov.sink_components(pbar)),
        convergence=check_convergence(game),
        trap_states=detect_trap(game),
    )
