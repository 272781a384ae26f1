"""Exact Markov chain induced by the learning dynamics.

The two-memory dynamics make the 5-tuple ``(x(t), a(t), x(t+1), a(t+1),
x(t+2))`` a Markov chain on ``X x A x X x A x X``: the next tuple must
overlap the last three components of the current one, and the new action
is drawn agent-by-agent from the same response rule the learner applies.
The chain is the ground-truth oracle for the simulator — its transition
probabilities are closed-form, its locked set (action-invariant
equilibrium windows) is absorbing, and absorption probabilities come from
a direct sparse linear solve, so convergence statements can be verified
exactly at desk scale instead of sampled.

The construction materializes only meta-states reachable from the support
of the initial distribution (two uniform joint actions around the initial
state draw); the full space grows as ``m**3 * |A|**2`` and is guarded by
an explicit budget.
"""

from __future__ import annotations

import enum
from collections import Counter, deque
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from . import markov
from .analysis import enumerate_rse, is_rse, pairs_equivalent, reachable_states
from .errors import BudgetExceededError, InternalInvariantError
from .game import StateBasedGame
from .learner import LearnerConfig, Trajectory, derive_seed, run

MetaState = tuple[int, int, int, int, int]  # (x, a, x', a', x'')

ROW_SUM_TOL = 1e-9


def transition_prob(game: StateBasedGame, epsilons, w1: MetaState, w2: MetaState) -> float:
    """Exact one-step probability from meta-state ``w1`` to ``w2``.

    Zero unless ``w2``'s first three components repeat ``w1``'s last
    three.  Otherwise the probability factors over agents: with a changed
    action history an agent contributes ``eps`` for repeating and
    ``(1-eps)/(k-1)`` for each other action (1 when it has a single
    action); with a repeated history it contributes 1 for repeating with
    no strict better reply, ``eps`` for repeating otherwise,
    ``(1-eps)/|B|`` for switching into its better-reply set ``B``, and 0
    for any other switch.  The product is then scaled by the kernel
    probability of the final state component.
    """
    x1, a1, x2, a2, x3 = w1
    y1, b1, y2, b2, y3 = w2
    if (y1, b1, y2) != (x2, a2, x3):
        return 0.0
    changed = a1 != a2
    prev_comps = game.action_components(b1)
    next_comps = game.action_components(b2)
    prob = 1.0
    for i in range(game.n):
        k = game.action_counts[i]
        if changed:
            if k == 1:
                factor = 1.0
            elif next_comps[i] == prev_comps[i]:
                factor = epsilons[i]
            else:
                factor = (1.0 - epsilons[i]) / (k - 1)
        else:
            replies = game.better_reply_set(i, b1, y2)
            if not replies:
                factor = 1.0 if next_comps[i] == prev_comps[i] else 0.0
            elif next_comps[i] == prev_comps[i]:
                factor = epsilons[i]
            elif next_comps[i] in replies:
                factor = (1.0 - epsilons[i]) / len(replies)
            else:
                factor = 0.0
        if factor == 0.0:
            return 0.0
        prob *= factor
    return prob * float(game.kernels[b2, y2, y3])


def transition_prob_equal_eps(
    game: StateBasedGame, epsilon: float, w1: MetaState, w2: MetaState
) -> float:
    """Closed-form transition probability for one shared inertia.

    Exponent form: ``eps**(n-|H|) * prod_{i in H} (1-eps)/(k_i-1)`` after a
    changed history and ``eps**(n-|H|-|N|) * prod_{i in H} (1-eps)/|B_i|``
    after a repeated one, where ``H`` is the set of switching agents and
    ``N`` the set with empty better-reply sets.  Used as an independent
    cross-check of :func:`transition_prob`; requires every agent to have
    at least two actions, which the exponent form presumes.
    """
    if any(k < 2 for k in game.action_counts):
        raise ValueError("closed form requires every agent to have at least two actions")
    x1, a1, x2, a2, x3 = w1
    y1, b1, y2, b2, y3 = w2
    if (y1, b1, y2) != (x2, a2, x3):
        return 0.0
    prev_comps = game.action_components(b1)
    next_comps = game.action_components(b2)
    switching = [i for i in range(game.n) if prev_comps[i] != next_comps[i]]
    if a1 != a2:
        prob = epsilon ** (game.n - len(switching))
        for i in switching:
            prob *= (1.0 - epsilon) / (game.action_counts[i] - 1)
        return prob * float(game.kernels[b2, y2, y3])
    replies = [game.better_reply_set(i, b1, y2) for i in range(game.n)]
    satisfied = [i for i in range(game.n) if not replies[i]]
    for i in switching:
        if next_comps[i] not in replies[i]:
            return 0.0
    prob = epsilon ** (game.n - len(switching) - len(satisfied))
    for i in switching:
        prob *= (1.0 - epsilon) / len(replies[i])
    return prob * float(game.kernels[b2, y2, y3])


def transition_distribution(
    game: StateBasedGame, epsilons, w: MetaState
) -> dict[MetaState, float]:
    """All positive-probability successors of ``w`` with their probabilities."""
    _, a1, x2, a2, x3 = w
    if a1 != a2:
        candidates = range(game.num_joint_actions)
    else:
        candidates = sorted(game.restricted_joint_support(a2, x3))
    out: dict[MetaState, float] = {}
    for b2 in candidates:
        row = game.kernels[b2, x3]
        for y3 in np.flatnonzero(row > 0.0):
            w2 = (x2, a2, x3, int(b2), int(y3))
            p = transition_prob(game, epsilons, w, w2)
            if p > 0.0:
                out[w2] = p
    return out


@dataclass(frozen=True, eq=False)
class MetaChain:
    """Reachable portion of the induced chain, with its locked (absorbing) set.

    ``states`` lists reachable meta-states in deterministic construction
    order; ``matrix[i, j]`` is the transition probability between them,
    ``initial`` the restriction of the initial distribution, and
    ``locked`` the indices of action-invariant equilibrium windows — those
    ``(x, a, x', a', x'')`` with ``a == a'``, ``(a, x')`` a recurrent
    state equilibrium, and ``x''`` reachable from ``x'`` under ``a``.
    """

    game: StateBasedGame
    epsilons: tuple[float, ...]
    states: tuple[MetaState, ...]
    index: dict[MetaState, int]
    matrix: sparse.csr_matrix
    initial: np.ndarray
    locked: frozenset[int]

    @property
    def full_space_size(self) -> int:
        return self.game.m**3 * self.game.num_joint_actions**2

    @property
    def reachable_count(self) -> int:
        return len(self.states)

    @property
    def locked_mask(self) -> np.ndarray:
        mask = np.zeros(len(self.states), dtype=bool)
        mask[sorted(self.locked)] = True
        return mask


def initial_distribution(
    game: StateBasedGame, epsilons, initial=None
) -> dict[MetaState, float]:
    """Distribution of the first meta-state under two uniform joint actions.

    ``(prod_i 1/k_i)**2 * p(x0) * P(a0; x0, x1) * P(a1; x1, x2)`` for every
    combination with positive probability, where ``p`` is the initial
    state distribution (uniform for ``None``, point mass for an int).
    """
    if initial is None:
        p0 = np.full(game.m, 1.0 / game.m)
    elif np.isscalar(initial):
        game._check_state(int(initial))
        p0 = np.zeros(game.m)
        p0[int(initial)] = 1.0
    else:
        p0 = np.asarray(initial, dtype=float)
        if p0.shape != (game.m,) or np.any(p0 < 0) or abs(p0.sum() - 1.0) > ROW_SUM_TOL:
            raise ValueError("initial must be a probability distribution over states")
    uniform_sq = (1.0 / game.num_joint_actions) ** 2
    dist: dict[MetaState, float] = {}
    for x0 in np.flatnonzero(p0 > 0.0):
        for a0 in range(game.num_joint_actions):
            row0 = game.kernels[a0, x0]
            for x1 in np.flatnonzero(row0 > 0.0):
                for a1 in range(game.num_joint_actions):
                    row1 = game.kernels[a1, x1]
                    for x2 in np.flatnonzero(row1 > 0.0):
                        w = (int(x0), a0, int(x1), a1, int(x2))
                        dist[w] = uniform_sq * float(p0[x0] * row0[x1] * row1[x2])
    return dist


def build_meta_chain(
    game: StateBasedGame, epsilons, initial=None, budget: int = 10**6
) -> MetaChain:
    """Materialize the chain reachable from the initial distribution's support."""
    epsilons = tuple(float(e) for e in epsilons)
    if len(epsilons) != game.n:
        raise ValueError(f"expected {game.n} inertias, got {len(epsilons)}")
    for e in epsilons:
        if not 0.0 < e < 1.0:
            raise ValueError(f"inertia {e} must lie strictly inside (0, 1)")
    full = game.m**3 * game.num_joint_actions**2
    if full > budget:
        raise BudgetExceededError(
            f"meta state space has {full} states, exceeding the budget of {budget}"
        )

    init = initial_distribution(game, epsilons, initial)
    order: list[MetaState] = sorted(init)
    index: dict[MetaState, int] = {w: i for i, w in enumerate(order)}
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    queue = deque(order)
    while queue:
        w = queue.popleft()
        i = index[w]
        successors = transition_distribution(game, epsilons, w)
        total = 0.0
        for w2 in sorted(successors):
            p = successors[w2]
            total += p
            j = index.get(w2)
            if j is None:
                j = len(order)
                index[w2] = j
                order.append(w2)
                queue.append(w2)
            rows.append(i)
            cols.append(j)
            vals.append(p)
        if abs(total - 1.0) > ROW_SUM_TOL:
            raise InternalInvariantError(
                f"meta-state {w} row sums to {total:.15g}, not 1"
            )

    size = len(order)
    matrix = sparse.csr_matrix(
        (vals, (rows, cols)), shape=(size, size), dtype=float
    )
    initial_vec = np.zeros(size)
    for w, p in init.items():
        initial_vec[index[w]] = p

    rse = enumerate_rse(game)
    locked = frozenset(
        index[w]
        for w in order
        if w[1] == w[3] and (w[1], w[2]) in rse and w[4] in reachable_states(game, w[1], w[2])
    )
    return MetaChain(
        game=game,
        epsilons=epsilons,
        states=tuple(order),
        index=index,
        matrix=matrix,
        initial=initial_vec,
        locked=locked,
    )


@dataclass(frozen=True, eq=False)
class AbsorptionResult:
    """Per-meta-state probabilities of eventually entering the locked set."""

    chain: MetaChain
    per_state: np.ndarray
    aggregate: float
    residual: float

    def probability(self, w: MetaState) -> float:
        return float(self.per_state[self.chain.index[w]])


def absorption_probabilities(chain: MetaChain) -> AbsorptionResult:
    """Solve for the probability of reaching the locked set from every state.

    States with no path into the locked set get an exact 0 (found by
    reverse reachability, not by the solver); locked states get an exact
    1.  The remaining transient block yields a nonsingular linear system
    whose residual is checked against 1e-10.
    """
    size = len(chain.states)
    h = np.zeros(size)
    if not chain.locked:
        return AbsorptionResult(chain, h, float(chain.initial @ h), 0.0)

    locked_idx = np.array(sorted(chain.locked), dtype=int)
    h[locked_idx] = 1.0

    transpose = chain.matrix.transpose().tocsr()
    can_reach = np.zeros(size, dtype=bool)
    can_reach[locked_idx] = True
    queue = deque(locked_idx.tolist())
    while queue:
        j = queue.popleft()
        start, end = transpose.indptr[j], transpose.indptr[j + 1]
        for i in transpose.indices[start:end]:
            if not can_reach[i]:
                can_reach[i] = True
                queue.append(int(i))

    locked_mask = np.zeros(size, dtype=bool)
    locked_mask[locked_idx] = True
    transient = np.flatnonzero(can_reach & ~locked_mask)
    residual = 0.0
    if transient.size:
        Q = chain.matrix[transient][:, transient]
        b = np.asarray(chain.matrix[transient][:, locked_idx].sum(axis=1)).ravel()
        system = sparse.identity(transient.size, format="csr") - Q
        solution = spsolve(system.tocsc(), b)
        residual = float(np.max(np.abs(system @ solution - b))) if transient.size else 0.0
        if residual > 1e-10:
            raise InternalInvariantError(
                f"absorption solve residual {residual:.3g} exceeds 1e-10"
            )
        h[transient] = solution
    return AbsorptionResult(chain, h, float(chain.initial @ h), residual)


def locked_mass_after(chain: MetaChain, steps: int) -> float:
    """Probability of being locked after ``steps`` transitions from the start.

    The locked set is closed, so this is the probability that lock-in has
    happened within the first ``steps`` decisions of the dynamics; it
    increases to the aggregate absorption probability as ``steps`` grows.
    """
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    mask = chain.locked_mask
    mu = chain.initial.copy()
    mass = float(mu[mask].sum())
    for _ in range(steps):
        if 1.0 - mass < 1e-15:
            break
        mu = mu @ chain.matrix
        mass = float(mu[mask].sum())
    return mass


def find_rse_path(chain: MetaChain, start: MetaState) -> list[MetaState] | None:
    """Shortest positive-probability path from ``start`` into the locked set.

    Returns the empty list when ``start`` is already locked and ``None``
    when no path exists (equivalently, its absorption probability is 0).
    """
    i = chain.index.get(start)
    if i is None:
        raise ValueError(f"meta state {start} is not reachable in this chain")
    if i in chain.locked:
        return []
    parent: dict[int, int] = {i: -1}
    queue = deque([i])
    matrix = chain.matrix
    while queue:
        u = queue.popleft()
        lo, hi = matrix.indptr[u], matrix.indptr[u + 1]
        for v in matrix.indices[lo:hi]:
            v = int(v)
            if v in parent:
                continue
            parent[v] = u
            if v in chain.locked:
                path = [v]
                while path[-1] != i:
                    path.append(parent[path[-1]])
                return [chain.states[j] for j in reversed(path)]
            queue.append(v)
    return None


class HistoryClass(enum.Enum):
    """Classification of two consecutive action-state pairs.

    ``LOCKED``: the pairs are equivalent — play already sits inside an
    equilibrium class and repeats forever.  ``REACHED_RSE``: the newer
    pair is an equilibrium but equivalence has not been established yet.
    ``SEARCHING_CHANGED`` and ``SEARCHING_REPEATED``: the newer pair is
    no equilibrium, split by whether the joint action changed.
    """

    LOCKED = "locked"
    REACHED_RSE = "reached-rse"
    SEARCHING_CHANGED = "searching-changed"
    SEARCHING_REPEATED = "searching-repeated"


def classify_history(game: StateBasedGame, pair1, pair2) -> HistoryClass:
    """Assign two consecutive action-state pairs to their dynamics regime."""
    (a, x), (b, y) = pair1, pair2
    if pairs_equivalent(game, (a, x), (b, y)):
        return HistoryClass.LOCKED
    if is_rse(game, b, y):
        return HistoryClass.REACHED_RSE
    if a != b:
        return HistoryClass.SEARCHING_CHANGED
    return HistoryClass.SEARCHING_REPEATED


@dataclass(frozen=True)
class DivergenceReport:
    """Empirical-vs-exact comparison of one-step transition frequencies."""

    total_transitions: int
    min_visits: int
    compared_sources: int
    max_abs_deviation: float
    forbidden: tuple[tuple[MetaState, MetaState], ...]

    @property
    def ok(self) -> bool:
        return not self.forbidden


def trajectory_windows(traj: Trajectory) -> list[MetaState]:
    """Meta-states swept by a trajectory, one per decision of the dynamics."""
    actions, states = traj.actions, traj.states
    T = actions.shape[0]
    return [
        (int(states[k]), int(actions[k]), int(states[k + 1]), int(actions[k + 1]), int(states[k + 2]))
        for k in range(T - 1)
    ]


def empirical_validation(
    game: StateBasedGame,
    config: LearnerConfig,
    chain: MetaChain,
    runs: int = 1,
    min_visits: int = 1000,
) -> DivergenceReport:
    """Cross-check the simulator against the chain's exact transition law.

    Runs the learner (``runs`` trajectories with seeds derived from
    ``config.seed``), maps each trajectory to meta-states, and compares
    empirical one-step transition frequencies with the exact
    probabilities.  Any observed transition of exact probability zero is
    a hard failure and is returned in ``forbidden``.  The maximum absolute
    deviation is taken over source states visited at least ``min_visits``
    times, including exact successors that were never observed.
    """
    if tuple(config.epsilons) != tuple(chain.epsilons):
        raise ValueError("chain was built with different inertias than the config")
    if chain.game.fingerprint() != game.fingerprint():
        raise ValueError("chain was built for a different game")

    observed: dict[MetaState, Counter] = {}
    total = 0
    for r in range(1, runs + 1):
        cfg = (
            config
            if runs == 1
            else LearnerConfig(
                epsilons=config.epsilons,
                horizon=config.horizon,
                seed=derive_seed(config.seed, r),
                initial_state=config.initial_state,
            )
        )
        windows = trajectory_windows(run(game, cfg))
        for w, w2 in zip(windows[:-1], windows[1:]):
            observed.setdefault(w, Counter())[w2] += 1
            total += 1

    forbidden = []
    for w in sorted(observed):
        for w2 in sorted(observed[w]):
            if transition_prob(game, chain.epsilons, w, w2) == 0.0:
                forbidden.append((w, w2))

    max_dev = 0.0
    compared = 0
    for w, targets_seen in observed.items():
        v = sum(targets_seen.values())
        if v < min_visits:
            continue
        compared += 1
        exact = transition_distribution(game, chain.epsilons, w)
        for w2 in set(exact) | set(targets_seen):
            freq = targets_seen.get(w2, 0) / v
            max_dev = max(max_dev, abs(freq - exact.get(w2, 0.0)))
    return DivergenceReport(
        total_transitions=total,
        min_visits=min_visits,
        compared_sources=compared,
        max_abs_deviation=max_dev,
        forbidden=tuple(forbidden),
    )
