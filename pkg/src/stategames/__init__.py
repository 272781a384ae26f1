"""Finite state-based games: equilibrium structure, learning dynamics, and
exact convergence oracles.

The package models games whose per-state payoff tables are coupled by a
joint-action-controlled Markov chain over environment states, enumerates
their recurrent state equilibria, simulates two-memory better-reply
dynamics with inertia, and verifies convergence claims exactly through
the Markov chain the dynamics induce on action-state windows.
"""

from .game import ROW_SUM_TOL, StateBasedGame, ValidationReport, validate
from .errors import (
    BudgetExceededError,
    GameFileError,
    GameValidationError,
    InternalInvariantError,
)
from .analysis import (
    AnalysisReport,
    ClassWitness,
    ConvergenceVerdict,
    EquilibriumCoverage,
    analyze,
    action_recurrent_classes,
    average_kernel,
    check_convergence,
    detect_trap,
    enumerate_rse,
    enumerate_rse_bruteforce,
    equilibrium_coverage,
    is_rse,
    is_rse_literal,
    pairs_equivalent,
    reachable_states,
    recurrent_classes,
    rse_class,
)
from .learner import (
    History,
    LearnerConfig,
    LockIn,
    Trajectory,
    check_trajectory,
    derive_seed,
    detect_lockin,
    response_distribution,
    run,
    step,
)
from .metachain import (
    AbsorptionResult,
    DivergenceReport,
    HistoryClass,
    MetaChain,
    absorption_probabilities,
    build_meta_chain,
    classify_history,
    empirical_validation,
    find_rse_path,
    initial_distribution,
    locked_mass_after,
    trajectory_windows,
    transition_distribution,
    transition_prob,
    transition_prob_equal_eps,
)
from .potential import (
    PotentialVerdict,
    SynthesisResult,
    integrate_state_potential,
    synthesize_potential,
    verify_potential,
)
from .fixtures import (
    FIXTURE_NAMES,
    example4,
    example9,
    example9_lazy,
    example12,
    lazify,
    load_game,
    random_game,
    random_potential_game,
)
from .experiments import (
    BatchResult,
    ExperimentConfig,
    RunRecord,
    SelfCheckResult,
    batch_summary,
    montecarlo,
    selfcheck,
    write_batch_csv,
    write_batch_summary,
)

__version__ = "0.1.0"
