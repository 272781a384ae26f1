#!/usr/bin/env python3
# Build a state-based game and walk through its equilibrium structure.

import numpy as np

import stategames as sg

game = sg.example9()
print("game:", game)
print("joint actions:", [game.action_label(a) for a in range(game.num_joint_actions)])

# Payoffs depend on the environment state.
print("\nagent 1 payoff at (11, state 1):", game.payoff(0, 0, 0))
print("agent 2 payoff at (12, state 4):", game.payoff(1, 1, 3))

# Strict better replies at joint action 11 in state 2: agent 1 can improve
# by switching, agent 2 cannot.
print("\nbetter replies at (11, state 2):")
for i in range(game.n):
    replies = sorted(c + 1 for c in game.better_reply_set(i, 0, 1))
    print(f"  agent {i + 1}: {replies or 'none'}")
print("restricted search support:",
      sorted(game.action_label(a) for a in game.restricted_joint_support(0, 1)))

# A recurrent state equilibrium needs a state that is recurrent under a
# fixed joint action AND a pure Nash equilibrium everywhere that action
# can take the chain.
print("\nrecurrent state equilibria:")
for a, x in sorted(sg.enumerate_rse(game)):
    print(f"  ({game.action_label(a)}, state {x + 1}), class "
          f"{sorted((game.action_label(b), y + 1) for b, y in sg.rse_class(game, a, x))}")

pbar = sg.average_kernel(game)
print("\naveraged kernel (row 1):", pbar[0])

verdict = sg.check_convergence(game)
print("\nlock-in guarantee:", verdict.verdict)
print("  every recurrent class of the average hosts an RSE:",
      verdict.every_recurrent_class_hosts_rse)
print("  self-loops at uncovered states:", verdict.self_loops_hold)
print("  violations:", [(game.action_label(a), x + 1) for a, x in verdict.self_loop_violations])

# The full report, serialized the way the CLI writes it.
from stategames.io import format_report

print("\n--- analyze ---")
print(format_report(game, sg.analyze(game)))
