"""Verification and synthesis of state-based potential functions.

A potential for a state-based game is a table ``phi(a, x)`` that (1)
reproduces every unilateral payoff difference exactly at every state, and
(2) never decreases along a supported state transition under the action
that drives it.  The relaxed variant of (2) only requires the set of
potential maximizers to be closed under recurrence: if a pair maximizes
``phi``, so does every pair reached by holding that action until the
chain settles into a recurrent state.

Synthesis works in two stages: per state, the deviation differences are
integrated into a candidate table anchored at the lexicographically first
joint action (failure certifies the state); then per-state offsets are
chosen by a difference-constraint system — one inequality per supported
transition — solved as a shortest-path problem, where a negative cycle
certifies that no offsets can make the table monotone along transitions.

Internally ``phi`` is an array of shape ``(m, num_joint_actions)`` indexed
``phi[state, action]``, matching the payoff table layout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import action_recurrent_classes, reachable_states
from .game import StateBasedGame

DEVIATION_TOL = 1e-9


@dataclass(frozen=True)
class DeviationMismatch:
    """Condition (1) failure: a payoff difference the table does not reproduce."""

    agent: int
    state: int
    action: int
    deviation: int
    payoff_delta: float
    potential_delta: float


@dataclass(frozen=True)
class TransitionDecrease:
    """Condition (2) failure: the table drops along a supported transition."""

    action: int
    state_from: int
    state_to: int
    phi_from: float
    phi_to: float


@dataclass(frozen=True)
class RecurrentEscape:
    """Relaxed condition (2) failure: a maximizer recurs to a non-maximizer."""

    action: int
    state: int
    recurrent_state: int
    phi_max: float
    phi_at: float


@dataclass(frozen=True)
class PotentialVerdict:
    ok: bool
    violations: tuple


def verify_potential(
    game: StateBasedGame, phi: np.ndarray, mode: str = "strict"
) -> PotentialVerdict:
    """Check a candidate potential table against the game.

    ``mode`` selects the transition condition: ``"strict"`` requires the
    table to be non-decreasing along every supported transition,
    ``"relaxed"`` only requires the maximizer set to be closed under
    recurrence.  The deviation condition is tested within 1e-9; transition
    and maximizer comparisons are exact on the stored floats.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (game.m, game.num_joint_actions):
        raise ValueError(
            f"phi must have shape {(game.m, game.num_joint_actions)}, got {phi.shape}"
        )
    if not np.all(np.isfinite(phi)):
        raise ValueError("phi must be finite everywhere")
    if mode not in ("strict", "relaxed"):
        raise ValueError(f"unknown mode {mode!r}")

    violations: list = []
    for x in range(game.m):
        violations.extend(_deviation_mismatches(game, phi, x))

    if mode == "strict":
        for a in range(game.num_joint_actions):
            for x in range(game.m):
                for y in np.flatnonzero(game.kernels[a, x] > 0.0):
                    if phi[y, a] < phi[x, a]:
                        violations.append(
                            TransitionDecrease(a, x, int(y), float(phi[x, a]), float(phi[y, a]))
                        )
    else:
        top = float(phi.max())
        maximizers = {(int(a), int(x)) for x, a in zip(*np.nonzero(phi == top))}
        for a, x in sorted(maximizers):
            recurrent = set()
            reach = reachable_states(game, a, x) | {x}
            for cls in action_recurrent_classes(game, a):
                if cls & reach:
                    recurrent |= cls
            for y in sorted(recurrent):
                if phi[y, a] != top:
                    violations.append(RecurrentEscape(a, x, y, top, float(phi[y, a])))
    return PotentialVerdict(not violations, tuple(violations))


def _deviation_mismatches(game: StateBasedGame, phi: np.ndarray, state: int):
    """Condition (1) failures at one state, each unordered pair reported once."""
    found = []
    for a in range(game.num_joint_actions):
        comps = game.action_components(a)
        for i in range(game.n):
            for c in range(game.action_counts[i]):
                if c <= comps[i]:
                    continue  # each unordered deviation pair once
                b = game.replace_component(a, i, c)
                payoff_delta = game.payoffs[state, b, i] - game.payoffs[state, a, i]
                potential_delta = phi[state, b] - phi[state, a]
                if abs(payoff_delta - potential_delta) > DEVIATION_TOL:
                    found.append(
                        DeviationMismatch(
                            i, state, a, b, float(payoff_delta), float(potential_delta)
                        )
                    )
    return found


def integrate_state_potential(
    game: StateBasedGame, state: int, agent_order=None
) -> np.ndarray:
    """Integrate deviation differences into a per-state candidate potential.

    Moves agent components one at a time (in ``agent_order``, default
    ascending) from the anchor joint action 0 to each target action,
    summing the mover's payoff differences.  For an exact potential game
    the result is path independent and anchored at 0.
    """
    game._check_state(state)
    order = list(agent_order) if agent_order is not None else list(range(game.n))
    if sorted(order) != list(range(game.n)):
        raise ValueError("agent_order must be a permutation of all agents")
    values = np.zeros(game.num_joint_actions)
    for a in range(game.num_joint_actions):
        comps = game.action_components(a)
        total = 0.0
        current = 0  # anchor: every component 0
        for i in order:
            target = game.replace_component(current, i, comps[i])
            total += game.payoffs[state, target, i] - game.payoffs[state, current, i]
            current = target
        values[a] = total
    return values


@dataclass(frozen=True, eq=False)
class SynthesisResult:
    """Outcome of potential synthesis: a table, or a failure certificate.

    Exactly one of ``phi`` and a certificate is set.  ``failure_state``
    names a state whose one-shot game admits no exact potential;
    ``failure_cycle`` lists states of a negative cycle in the offset
    constraint graph, certifying that no per-state offsets can make the
    table monotone along supported transitions.
    """

    phi: np.ndarray | None
    failure_state: int | None = None
    failure_cycle: tuple[int, ...] | None = None

    @property
    def ok(self) -> bool:
        return self.phi is not None


def synthesize_potential(game: StateBasedGame) -> SynthesisResult:
    """Construct a strict potential for the game, or certify that none exists."""
    tables = []
    for x in range(game.m):
        candidate = integrate_state_potential(game, x)
        phi_x = np.zeros((game.m, game.num_joint_actions))
        phi_x[x] = candidate
        if _deviation_mismatches(game, phi_x, x):
            return SynthesisResult(None, failure_state=x)
        tables.append(candidate)

    # One difference constraint per supported transition:
    #   offset[x] - offset[y] <= min over driving actions of
    #       tables[y][a] - tables[x][a]
    weight: dict[tuple[int, int], float] = {}
    for a in range(game.num_joint_actions):
        for x in range(game.m):
            for y in np.flatnonzero(game.kernels[a, x] > 0.0):
                y = int(y)
                w = tables[y][a] - tables[x][a]
                key = (y, x)  # edge y -> x with weight w bounds offset[x]
                if key not in weight or w < weight[key]:
                    weight[key] = w

    offsets, cycle = _solve_difference_constraints(game.m, weight)
    if cycle is not None:
        return SynthesisResult(None, failure_cycle=tuple(cycle))
    phi = np.stack([tables[x] + offsets[x] for x in range(game.m)])
    return SynthesisResult(phi)


def _solve_difference_constraints(n: int, weight: dict[tuple[int, int], float]):
    """Bellman-Ford feasibility for ``offset[v] <= offset[u] + w(u, v)``.

    All nodes start at distance 0 (an implicit zero-weight source).
    Returns ``(offsets, None)`` when feasible and ``(None, cycle)`` when a
    negative cycle makes the system infeasible.
    """
    dist = [0.0] * n
    pred: list[int | None] = [None] * n
    edges = [(u, v, w) for (u, v), w in sorted(weight.items())]
    relaxed_node = None
    for round_no in range(n + 1):
        changed = False
        for u, v, w in edges:
            if dist[u] + w < dist[v]:
                dist[v] = dist[u] + w
                pred[v] = u
                changed = True
                relaxed_node = v
        if not changed:
            return dist, None
    # A relaxation on round n+1 proves a negative cycle; walk predecessors
    # until a node repeats to extract it.
    node = relaxed_node
    for _ in range(n):
        node = pred[node]
    cycle = [node]
    cur = pred[node]
    while cur != node:
        cycle.append(cur)
        cur = pred[cur]
    cycle.reverse()
    return None, cycle
