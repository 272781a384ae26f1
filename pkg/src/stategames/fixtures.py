"""Built-in example games and random-game generators.

The named fixtures (``example4``, ``example9``, ``example9-lazy``,
``example12``) are small two-agent games exercising the interesting
regimes: a unique equilibrium only reachable from part of the state
space, a lazified variant where the lock-in guarantee holds from
everywhere, a game whose equilibrium class spans two communicating
states, and a game with a trap — a state set closed under every action
that hosts no equilibrium, from which no uncoupled learner can escape.

``example4`` ships with load-time assertions of its defining facts; the
loader refuses to serve the fixture if any of them fails, so the kernel
encoding cannot silently drift from the facts the tests rely on.
"""

from __future__ import annotations

import os

import numpy as np

from . import analysis
from .game import StateBasedGame, validate
from .errors import GameValidationError


def example9() -> StateBasedGame:
    """Two binary agents, four states; the unique RSE is (action 11, state 1).

    From state 4 the dynamics can only reach state 2 by holding joint
    action 11 twice, after which the restricted search support excludes
    the one action that leads onward to state 1 — so the equilibrium is
    unreachable from state 4 even though the averaged kernel is
    irreducible.
    """
    payoffs = [
        [[5, 4], [2, 3], [4, 2], [3, 1]],
        [[1, 2], [3, 1], [2, 0], [2, 1]],
        [[-1, 1], [1, -1], [1, -1], [-1, 1]],
        [[2, 2], [2, 3], [0, 3], [3, 1]],
    ]
    half = 0.5
    kernels = [
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, half, half, 0], [0, 0, half, half]],
        [[1, 0, 0, 0], [half, half, 0, 0], [0, 0, 0, 1], [0, 0, 0, 1]],
        [[half, half, 0, 0], [0, 0, 0, 1], [0, 0, 0, 1], [0, 0, 0, 1]],
        [[1, 0, 0, 0], [0, half, 0, half], [0, 0, 0, 1], [0, 0, 0, 1]],
    ]
    return StateBasedGame((2, 2), payoffs, kernels)


def lazify(game: StateBasedGame, weight: float = 0.5) -> StateBasedGame:
    """Blend every kernel with the identity: ``P' = w*I + (1-w)*P``.

    Adds a self-loop of at least ``weight`` everywhere while preserving
    all support reachability between distinct states, hence closed
    classes and the equilibrium set.
    """
    if not 0.0 < weight < 1.0:
        raise ValueError("weight must lie strictly inside (0, 1)")
    eye = np.eye(game.m)
    kernels = weight * eye[None, :, :] + (1.0 - weight) * game.kernels
    return StateBasedGame(game.action_counts, game.payoffs, kernels)


def example9_lazy() -> StateBasedGame:
    """Lazy variant of :func:`example9`; the lock-in guarantee applies."""
    return lazify(example9(), 0.5)


def example4() -> StateBasedGame:
    """Three-state game: coordination, prisoner's dilemma, matching pennies.

    The kernels are a canonical encoding chosen to reproduce the
    fixture's defining facts, which are asserted on every load:
    action 22 keeps states {1, 2} as one closed communicating class and
    is a pure Nash equilibrium on both, so (22, 1) and (22, 2) form one
    equilibrium class; action 11 makes state 1 transient, so (11, 1) is
    a pure Nash equilibrium but not an RSE.
    """
    payoffs = [
        [[4, 4], [1, 3], [3, 1], [2, 2]],
        [[2, 2], [0, 3], [3, 0], [1, 1]],
        [[-1, 1], [1, -1], [1, -1], [-1, 1]],
    ]
    kernels = [
        [[0, 1, 0], [0, 1, 0], [0, 0, 1]],
        [[0, 0, 1], [0, 0, 1], [0, 0, 1]],
        [[0, 0, 1], [0, 0, 1], [0, 0, 1]],
        [[0.5, 0.5, 0], [0.5, 0.5, 0], [1, 0, 0]],
    ]
    game = StateBasedGame((2, 2), payoffs, kernels)

    a22 = game.action_index((1, 1))
    a11 = game.action_index((0, 0))
    facts = (
        analysis.enumerate_rse(game) == frozenset({(a22, 0), (a22, 1)}),
        analysis.rse_class(game, a22, 0) == frozenset({(a22, 0), (a22, 1)}),
        not analysis.is_rse(game, a11, 0),
        game.is_pure_nash(a11, 0),
        analysis.action_recurrent_classes(game, a22) == [frozenset({0, 1})],
    )
    if not all(facts):
        raise RuntimeError(f"example4 fixture self-check failed: facts={facts}")
    return game


def example12(p: float = 0.5) -> StateBasedGame:
    """Two decoupled state blocks; {3, 4} is a trap under every action.

    Every kernel keeps states {1, 2} and {3, 4} closed with all
    within-block transition probabilities strictly inside (0, 1); ``p``
    sets them all.  (11, 1) and (11, 2) are the only RSEs, so no learner
    that enters the {3, 4} block can ever reach an equilibrium.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly inside (0, 1)")
    payoffs = [
        [[5, 4], [2, 3], [4, 2], [3, 1]],
        [[2, 2], [3, 1], [0, 3], [2, 1]],
        [[-1, 1], [1, -1], [1, -1], [-1, 1]],
        [[2, 2], [2, 3], [0, 3], [3, 1]],
    ]
    block = [
        [p, 1 - p, 0, 0],
        [p, 1 - p, 0, 0],
        [0, 0, p, 1 - p],
        [0, 0, p, 1 - p],
    ]
    kernels = [block, block, block, block]
    return StateBasedGame((2, 2), payoffs, kernels)


def random_game(
    rng: np.random.Generator,
    num_agents: int = 2,
    max_actions: int = 3,
    max_states: int = 4,
    min_actions: int = 1,
) -> StateBasedGame:
    """Small random game with integer payoffs and sparse rational kernels.

    Supports are drawn per row, so deterministic rows, absorbing states,
    and multi-class kernels all occur; payoffs in [-3, 3] produce ties
    often enough to exercise strictness of the better-reply comparison.
    """
    counts = [int(rng.integers(min_actions, max_actions + 1)) for _ in range(num_agents)]
    m = int(rng.integers(1, max_states + 1))
    num_actions = int(np.prod(counts))
    payoffs = rng.integers(-3, 4, size=(m, num_actions, num_agents)).astype(float)
    kernels = np.zeros((num_actions, m, m))
    for a in range(num_actions):
        for x in range(m):
            size = int(rng.integers(1, m + 1))
            support = rng.choice(m, size=size, replace=False)
            weights = rng.integers(1, 5, size=size).astype(float)
            kernels[a, x, support] = weights / weights.sum()
    return StateBasedGame(counts, payoffs, kernels)


def random_potential_game(
    rng: np.random.Generator,
    num_agents: int = 2,
    max_actions: int = 3,
    max_states: int = 4,
) -> tuple[StateBasedGame, np.ndarray]:
    """Random game admitting a strict potential, returned with that potential.

    Payoffs are an integer potential plus per-agent terms that depend only
    on the opponents' actions, so every state game shares the potential
    exactly.  Kernel rows either move to strictly potential-improving
    states or, at a per-action maximum, mix uniformly over the tied
    maximizers — making every global maximizer pair a recurrent state
    equilibrium by construction.  The potential's anchor row (joint
    action 0) is pinned to zero across states so synthesis reproduces the
    generator's table with zero offsets.
    """
    counts = [int(rng.integers(2, max_actions + 1)) for _ in range(num_agents)]
    m = int(rng.integers(2, max_states + 1))
    num_actions = int(np.prod(counts))
    phi = rng.integers(-4, 5, size=(m, num_actions)).astype(float)
    phi -= phi[:, :1]  # anchor row zero per state

    game_probe = StateBasedGame(counts, np.zeros((m, num_actions, num_agents)), _lazy_eye(num_actions, m))
    payoffs = np.empty((m, num_actions, num_agents))
    for i in range(num_agents):
        dummy = rng.integers(-2, 3, size=(m, num_actions)).astype(float)
        for a in range(num_actions):
            masked = game_probe.replace_component(a, i, 0)
            payoffs[:, a, i] = phi[:, a] + dummy[:, masked]

    kernels = np.zeros((num_actions, m, m))
    for a in range(num_actions):
        column = phi[:, a]
        for x in range(m):
            improving = np.flatnonzero(column > column[x])
            if improving.size:
                size = int(rng.integers(1, improving.size + 1))
                support = rng.choice(improving, size=size, replace=False)
                weights = rng.integers(1, 5, size=size).astype(float)
                kernels[a, x, support] = weights / weights.sum()
            else:
                tied = np.flatnonzero(column == column.max())
                kernels[a, x, tied] = 1.0 / tied.size
    return StateBasedGame(counts, payoffs, kernels), phi


def _lazy_eye(num_actions: int, m: int) -> np.ndarray:
    return np.broadcast_to(np.eye(m), (num_actions, m, m)).copy()


FIXTURE_NAMES = ("example4", "example9", "example9-lazy", "example12")


def load_game(name_or_path: str, fixture_p: float | None = None) -> StateBasedGame:
    """Resolve a built-in fixture name, or load and validate a game file.

    ``fixture_p`` overrides the free transition parameter of fixtures that
    have one (currently ``example12``); passing it with any other name is
    an error so typos cannot be silently ignored.
    """
    name = name_or_path.replace("_", "-") if not os.path.exists(name_or_path) else name_or_path
    if name in FIXTURE_NAMES:
        if name == "example12":
            return example12(0.5 if fixture_p is None else fixture_p)
        if fixture_p is not None:
            raise ValueError(f"fixture {name!r} has no free transition parameter")
        return {"example4": example4, "example9": example9, "example9-lazy": example9_lazy}[name]()
    from .io import load_game_file  # local import: io depends on game only

    game = load_game_file(name_or_path)
    report = validate(game)
    if not report.ok:
        raise GameValidationError(report)
    return game
