"""Two-memory better-reply learning dynamics with inertia.

Each agent observes the last two joint actions and the current state.
When the two remembered joint actions agree, an agent with no strict
better reply repeats its action; otherwise it repeats with probability
``epsilon`` (its inertia) and spreads the rest uniformly over its strict
better replies.  When the remembered joint actions differ, every agent
searches globally: it repeats with probability ``epsilon`` and spreads
the rest uniformly over all its other actions.  The first two joint
actions of a run are drawn uniformly, and the state follows the kernel of
the realized joint action at every step.

Sampling is inverse-CDF over ascending action/state order, one uniform
variate per non-degenerate draw (point masses consume no randomness), with
agents drawn in ascending index order.  Runs are bit-reproducible from the
configured seed; Monte Carlo batches derive per-run seeds with
:func:`derive_seed` so that each run is individually reproducible.
"""

from __future__ import annotations

import hashlib
from bisect import bisect_right
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .analysis import enumerate_rse
from .game import StateBasedGame


@dataclass(frozen=True)
class LearnerConfig:
    """Reproducible configuration of one learning run.

    ``epsilons`` holds one inertia per agent, each strictly inside (0, 1).
    ``initial_state`` of ``None`` draws the first state uniformly.
    """

    epsilons: tuple[float, ...]
    horizon: int
    seed: int
    initial_state: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        for e in self.epsilons:
            if not 0.0 < e < 1.0:
                raise ValueError(f"inertia {e} must lie strictly inside (0, 1)")
        if self.horizon < 3:
            raise ValueError(f"horizon {self.horizon} must be at least 3")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class History:
    """The decision context of one step: the last two joint actions and the state."""

    a_prev2: int
    a_prev1: int
    x_now: int


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Realized play: joint actions ``a(1..T)`` and states ``x(1..T+1)``.

    ``actions[t-1]`` holds ``a(t)`` and ``states[t-1]`` holds ``x(t)``;
    every recorded transition is supported by the kernel of its action.
    """

    actions: np.ndarray
    states: np.ndarray
    config: LearnerConfig

    @property
    def horizon(self) -> int:
        return int(self.actions.shape[0])


class LockIn(NamedTuple):
    """First time ``tau`` with a repeated action forming an RSE with ``x(tau+1)``."""

    tau: int
    action: int


def response_distribution(
    game: StateBasedGame, agent: int, hist: History, epsilon: float
) -> np.ndarray:
    """Probability vector over ``agent``'s actions given its decision context.

    The vector sums to 1 exactly: the last supported entry absorbs the
    floating-point residual.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"inertia {epsilon} must lie strictly inside (0, 1)")
    game._check_agent(agent)
    game._check_action(hist.a_prev2)
    game._check_action(hist.a_prev1)
    game._check_state(hist.x_now)

    k = game.action_counts[agent]
    own = game.action_components(hist.a_prev1)[agent]
    p = np.zeros(k)
    if hist.a_prev2 == hist.a_prev1:
        replies = game.better_reply_set(agent, hist.a_prev1, hist.x_now)
        if not replies:
            p[own] = 1.0
            return p
        p[own] = epsilon
        for c in replies:
            p[c] = (1.0 - epsilon) / len(replies)
    else:
        if k == 1:
            p[own] = 1.0
            return p
        p[:] = (1.0 - epsilon) / (k - 1)
        p[own] = epsilon
    last = int(np.flatnonzero(p > 0.0)[-1])
    p[last] = 1.0 - (p.sum() - p[last])
    return p


def _draw_from_vector(p: np.ndarray, rng: np.random.Generator) -> int:
    support = np.flatnonzero(p > 0.0)
    if support.size == 1:
        return int(support[0])
    cum = np.cumsum(p[support])
    i = int(np.searchsorted(cum, rng.random(), side="right"))
    return int(support[min(i, support.size - 1)])


def step(
    game: StateBasedGame, hist: History, rng: np.random.Generator, epsilons=None
) -> tuple[int, int]:
    """Sample one joint action and the ensuing state from a decision context.

    Agents draw independently in ascending index order from their response
    distributions; the next state is then drawn from the kernel row of the
    realized joint action at ``hist.x_now``.
    """
    if epsilons is None:
        epsilons = (0.5,) * game.n
    comps = []
    for i in range(game.n):
        p = response_distribution(game, i, hist, epsilons[i])
        comps.append(_draw_from_vector(p, rng))
    action = game.action_index(comps)
    next_state = _draw_from_vector(game.kernels[action, hist.x_now], rng)
    return action, next_state


class _SamplingTables:
    """Precomputed support/CDF tables driving the inner simulation loop.

    Distributions are built through :func:`response_distribution` so the
    fast loop and the public single-step API share one source of truth.
    """

    def __init__(self, game: StateBasedGame, epsilons):
        self.game = game
        self.epsilons = tuple(epsilons)
        self.strides = game._strides
        self._kernel: dict = {}
        self._repeated: dict = {}
        self._changed: dict = {}
        self.uniform = [self._cdf(np.full(k, 1.0 / k)) for k in game.action_counts]
        self.state_uniform = self._cdf(np.full(game.m, 1.0 / game.m))

    @staticmethod
    def _cdf(p: np.ndarray) -> tuple[list[int], list[float]]:
        support = np.flatnonzero(np.asarray(p) > 0.0)
        return [int(c) for c in support], [float(v) for v in np.cumsum(p[support])]

    def kernel_row(self, action: int, state: int):
        key = (action, state)
        row = self._kernel.get(key)
        if row is None:
            row = self._cdf(self.game.kernels[action, state])
            self._kernel[key] = row
        return row

    def repeated(self, prev: int, state: int):
        key = (prev, state)
        rows = self._repeated.get(key)
        if rows is None:
            hist = History(prev, prev, state)
            rows = [
                self._cdf(response_distribution(self.game, i, hist, self.epsilons[i]))
                for i in range(self.game.n)
            ]
            self._repeated[key] = rows
        return rows

    def changed(self, prev: int):
        rows = self._changed.get(prev)
        if rows is None:
            other = (prev + 1) % self.game.num_joint_actions
            hist = History(other, prev, 0)
            rows = [
                self._cdf(response_distribution(self.game, i, hist, self.epsilons[i]))
                for i in range(self.game.n)
            ]
            self._changed[prev] = rows
        return rows


def run(game: StateBasedGame, config: LearnerConfig) -> Trajectory:
    """Simulate one full learning run; bit-identical for identical inputs."""
    if len(config.epsilons) != game.n:
        raise ValueError(f"expected {game.n} inertias, got {len(config.epsilons)}")
    if config.initial_state is not None:
        game._check_state(config.initial_state)

    tables = _SamplingTables(game, config.epsilons)
    return _run_with_tables(game, config, tables)


def _run_with_tables(
    game: StateBasedGame, config: LearnerConfig, tables: _SamplingTables
) -> Trajectory:
    T = config.horizon
    rng = np.random.Generator(np.random.Philox(config.seed))
    uniforms = rng.random(T * (game.n + 1) + 1)
    pos = 0

    def draw(choices: list[int], cum: list[float]) -> int:
        nonlocal pos
        if len(choices) == 1:
            return choices[0]
        u = uniforms[pos]
        pos += 1
        i = bisect_right(cum, u)
        return choices[i if i < len(choices) else len(choices) - 1]

    def draw_action(rows) -> int:
        flat = 0
        for stride, (choices, cum) in zip(tables.strides, rows):
            flat += stride * draw(choices, cum)
        return flat

    actions = np.empty(T, dtype=np.int64)
    states = np.empty(T + 1, dtype=np.int64)
    if config.initial_state is None:
        states[0] = draw(*tables.state_uniform)
    else:
        states[0] = config.initial_state

    prev2 = draw_action(tables.uniform)
    actions[0] = prev2
    states[1] = draw(*tables.kernel_row(prev2, int(states[0])))
    prev1 = draw_action(tables.uniform)
    actions[1] = prev1
    states[2] = draw(*tables.kernel_row(prev1, int(states[1])))

    for t in range(2, T):
        x = int(states[t])
        rows = tables.repeated(prev1, x) if prev1 == prev2 else tables.changed(prev1)
        a = draw_action(rows)
        actions[t] = a
        states[t + 1] = draw(*tables.kernel_row(a, x))
        prev2, prev1 = prev1, a
    return Trajectory(actions=actions, states=states, config=config)


def check_trajectory(game: StateBasedGame, traj: Trajectory) -> None:
    """Raise ``ValueError`` unless the trajectory is consistent with the game."""
    actions, states = traj.actions, traj.states
    if states.shape[0] != actions.shape[0] + 1:
        raise ValueError("trajectory lengths inconsistent")
    if actions.min(initial=0) < 0 or actions.max(initial=0) >= game.num_joint_actions:
        raise ValueError("trajectory action out of range for this game")
    if states.min(initial=0) < 0 or states.max(initial=0) >= game.m:
        raise ValueError("trajectory state out of range for this game")
    probs = game.kernels[actions, states[:-1], states[1:]]
    if np.any(probs <= 0.0):
        t = int(np.flatnonzero(probs <= 0.0)[0])
        raise ValueError(
            f"transition at t={t + 1} has zero probability under the recorded action"
        )


def detect_lockin(
    game: StateBasedGame, traj: Trajectory, rse_set: frozenset | None = None
) -> LockIn | None:
    """Earliest lock-in of a trajectory, or ``None`` within the horizon.

    Lock-in happens at the smallest ``tau`` with ``a(tau-1) == a(tau)``
    and ``(a(tau), x(tau+1))`` a recurrent state equilibrium; from there
    the dynamics repeat the action forever.
    """
    check_trajectory(game, traj)
    if rse_set is None:
        rse_set = enumerate_rse(game)
    mask = np.zeros((game.num_joint_actions, game.m), dtype=bool)
    for a, x in rse_set:
        mask[a, x] = True
    actions, states = traj.actions, traj.states
    hits = (actions[:-1] == actions[1:]) & mask[actions[1:], states[2:]]
    if not hits.any():
        return None
    tau = int(np.argmax(hits)) + 2
    return LockIn(tau=tau, action=int(actions[tau - 1]))


def derive_seed(master_seed: int, run_index: int) -> int:
    """Per-run 64-bit seed derived from a master seed; stable across platforms."""
    payload = int(master_seed).to_bytes(8, "little") + int(run_index).to_bytes(8, "little")
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")
