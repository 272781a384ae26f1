"""Finite state-based games.

A state-based game couples a finite normal-form game at every environment
state with a controlled Markov chain over the states: each joint action
selects an m-by-m row-stochastic transition matrix, and the realized state
selects which payoff table is in force.

Representation conventions
--------------------------
* Everything is 0-based internally.  File formats and printed reports use
  1-based indices and digit-string joint-action labels; the converters in
  :mod:`stategames.io` own that boundary.
* A joint action is a flat integer in ``range(game.num_joint_actions)``,
  mixed-radix encoded with agent 0 as the most significant digit, so for
  two binary agents the flat order is ``(0,0), (0,1), (1,0), (1,1)``.
  :meth:`StateBasedGame.action_components` and
  :meth:`StateBasedGame.action_index` convert both ways.
* An action-state pair is a plain ``(action, state)`` tuple of ints.

Payoff comparisons use exact strict ``>`` on the stored float64 values, no
epsilon: better-reply sets are defined by strict improvement, and the
bundled fixtures use small integers so exactness is safe.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass

import numpy as np

# Kernel rows must sum to 1 within this tolerance.  Offending games are
# rejected rather than renormalized so that fixture typos stay visible.
ROW_SUM_TOL = 1e-9


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of :func:`validate`: ``ok`` plus one message per violation."""

    ok: bool
    violations: tuple[str, ...] = ()

    def __str__(self) -> str:
        return "OK" if self.ok else "\n".join(self.violations)


class StateBasedGame:
    """A finite state-based game.

    Parameters
    ----------
    action_counts : sequence of int
        Number of actions per agent; agent ``i`` plays
        ``range(action_counts[i])``.
    payoffs : array_like, shape (m, num_joint_actions, n)
        ``payoffs[x, a, i]`` is agent ``i``'s payoff under flat joint
        action ``a`` in state ``x``.
    kernels : array_like, shape (num_joint_actions, m, m)
        ``kernels[a]`` is the state transition matrix selected by ``a``.

    Notes
    -----
    Instances are immutable after construction (the arrays are locked) and
    safe to share across threads; every query method is a pure function.
    Construction enforces only structural shape consistency; content rules
    (row sums, entry ranges, finite payoffs) are checked by
    :func:`validate`, which reports violations instead of raising.
    """

    def __init__(self, action_counts, payoffs, kernels):
        self.action_counts = tuple(int(k) for k in action_counts)
        self.n = len(self.action_counts)
        self.num_joint_actions = int(np.prod(self.action_counts)) if self.n else 0

        payoffs = np.array(payoffs, dtype=float)
        kernels = np.array(kernels, dtype=float)
        if kernels.ndim != 3 or kernels.shape[1] != kernels.shape[2]:
            raise ValueError(f"kernels must have shape (actions, m, m), got {kernels.shape}")
        self.m = int(kernels.shape[1])
        if kernels.shape[0] != self.num_joint_actions:
            raise ValueError(
                f"expected {self.num_joint_actions} kernels for action counts "
                f"{self.action_counts}, got {kernels.shape[0]}"
            )
        expected = (self.m, self.num_joint_actions, self.n)
        if payoffs.shape != expected:
            raise ValueError(f"payoffs must have shape {expected}, got {payoffs.shape}")
        payoffs.flags.writeable = False
        kernels.flags.writeable = False
        self.payoffs = payoffs
        self.kernels = kernels

        # Mixed-radix strides, agent 0 most significant.
        strides = []
        acc = 1
        for k in reversed(self.action_counts):
            strides.append(acc)
            acc *= k
        self._strides = tuple(reversed(strides))
        self._components_table: list[tuple[int, ...]] | None = None
        self._br_cache: dict[tuple[int, int, int], frozenset[int]] = {}
        self._cache: dict = {}  # scratch space for analysis-level memoization

    # -- joint-action encoding -------------------------------------------

    def action_index(self, components) -> int:
        """Flat index of a joint action given per-agent components."""
        components = tuple(int(c) for c in components)
        if len(components) != self.n:
            raise ValueError(f"expected {self.n} components, got {len(components)}")
        flat = 0
        for c, k, s in zip(components, self.action_counts, self._strides):
            if not 0 <= c < k:
                raise IndexError(f"action component {c} out of range for {k} actions")
            flat += c * s
        return flat

    def action_components(self, action: int) -> tuple[int, ...]:
        """Per-agent components of a flat joint action index."""
        if self._components_table is None:
            self._components_table = [
                tuple(comps) for comps in itertools.product(*(range(k) for k in self.action_counts))
            ]
        return self._components_table[action]

    def replace_component(self, action: int, agent: int, component: int) -> int:
        """Flat action equal to ``action`` except agent ``agent`` plays ``component``."""
        own = self.action_components(action)[agent]
        return action + (component - own) * self._strides[agent]

    def action_label(self, action: int) -> str:
        """1-based digit-string label, e.g. flat 3 of two binary agents -> ``"22"``.

        Falls back to ``-``-separated components when an agent has more
        than nine actions, where a digit string would be ambiguous.
        """
        comps = self.action_components(action)
        if all(k <= 9 for k in self.action_counts):
            return "".join(str(c + 1) for c in comps)
        return "-".join(str(c + 1) for c in comps)

    def action_from_label(self, label: str) -> int:
        """Inverse of :meth:`action_label`."""
        if all(k <= 9 for k in self.action_counts):
            parts = [int(ch) - 1 for ch in label]
        else:
            parts = [int(p) - 1 for p in label.split("-")]
        return self.action_index(parts)

    # -- queries ----------------------------------------------------------

    def payoff(self, agent: int, action: int, state: int) -> float:
        """Payoff of ``agent`` under joint ``action`` in ``state``."""
        self._check_agent(agent)
        self._check_action(action)
        self._check_state(state)
        return float(self.payoffs[state, action, agent])

    def kernel(self, action: int) -> np.ndarray:
        """Read-only view of the transition matrix selected by ``action``."""
        self._check_action(action)
        return self.kernels[action]

    def better_reply_set(self, agent: int, action: int, state: int) -> frozenset[int]:
        """Actions of ``agent`` strictly improving its payoff at ``(action, state)``.

        Opponents' components are held fixed; the comparison is exact
        strict ``>``, so the agent's current component is never a member.
        """
        self._check_agent(agent)
        self._check_action(action)
        self._check_state(state)
        key = (agent, action, state)
        cached = self._br_cache.get(key)
        if cached is None:
            own = self.action_components(action)[agent]
            base = self.payoffs[state, action, agent]
            stride = self._strides[agent]
            cached = frozenset(
                c
                for c in range(self.action_counts[agent])
                if c != own and self.payoffs[state, action + (c - own) * stride, agent] > base
            )
            self._br_cache[key] = cached
        return cached

    def is_pure_nash(self, action: int, state: int) -> bool:
        """Whether no agent has a strict better reply at ``(action, state)``."""
        return all(not self.better_reply_set(i, action, state) for i in range(self.n))

    def restricted_joint_support(self, action: int, state: int) -> frozenset[int]:
        """Joint actions whose components are better replies or repeats.

        The Cartesian product over agents of ``better_reply_set(i) | {own}``;
        always contains ``action`` itself, and equals ``{action}`` exactly
        when ``action`` is a pure Nash equilibrium of the state game.
        """
        per_agent = []
        comps = self.action_components(action)
        for i in range(self.n):
            choices = sorted(self.better_reply_set(i, action, state) | {comps[i]})
            per_agent.append(choices)
        return frozenset(self.action_index(c) for c in itertools.product(*per_agent))

    def fingerprint(self) -> str:
        """Content hash identifying the game across report files."""
        h = hashlib.blake2b(digest_size=16)
        h.update(repr((self.n, self.m, self.action_counts)).encode())
        h.update(self.payoffs.tobytes())
        h.update(self.kernels.tobytes())
        return h.hexdigest()

    # -- bounds checks ----------------------------------------------------

    def _check_agent(self, agent: int) -> None:
        if not 0 <= agent < self.n:
            raise IndexError(f"agent {agent} out of range for {self.n} agents")

    def _check_action(self, action: int) -> None:
        if not 0 <= action < self.num_joint_actions:
            raise IndexError(f"joint action {action} out of range for {self.num_joint_actions} actions")

    def _check_state(self, state: int) -> None:
        if not 0 <= state < self.m:
            raise IndexError(f"state {state} out of range for {self.m} states")

    def __repr__(self) -> str:
        return (
            f"StateBasedGame(n={self.n}, action_counts={self.action_counts}, "
            f"m={self.m})"
        )


def validate(game: StateBasedGame) -> ValidationReport:
    """Check every content invariant of a game, reporting all violations.

    Violations are reported with 1-based indices and digit-string action
    labels; an empty list means the game is usable by every other module.
    """
    violations: list[str] = []
    if game.n < 1:
        violations.append("agent count must be at least 1")
    for i, k in enumerate(game.action_counts):
        if k < 1:
            violations.append(f"agent {i + 1}: action count {k} must be at least 1")
    if game.m < 1:
        violations.append("state count must be at least 1")
    if violations:
        return ValidationReport(False, tuple(violations))

    bad = np.argwhere(~np.isfinite(game.payoffs))
    for x, a, i in bad:
        violations.append(
            f"payoff missing or non-finite for agent {i + 1}, action "
            f"{game.action_label(int(a))}, state {x + 1}"
        )

    for a in range(game.num_joint_actions):
        label = game.action_label(a)
        matrix = game.kernels[a]
        if not np.all(np.isfinite(matrix)):
            violations.append(f"kernel {label}: non-finite entry")
            continue
        if np.any(matrix < 0.0) or np.any(matrix > 1.0):
            rows = sorted(set(int(r) for r, _ in np.argwhere((matrix < 0.0) | (matrix > 1.0))))
            for r in rows:
                violations.append(f"kernel {label} row {r + 1}: entry outside [0, 1]")
        sums = matrix.sum(axis=1)
        for r in np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL):
            violations.append(f"kernel {label} row {int(r) + 1}: row sum {sums[r]:.12g}")

    return ValidationReport(not violations, tuple(violations))
