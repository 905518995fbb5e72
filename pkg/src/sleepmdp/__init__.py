"""sleepmdp: optimal sleep/wake scheduling of parallel servers under bursty
MMPP traffic.

Builds the slotted discounted-cost decision process for a fleet of M servers
draining one shared queue, solves it by value or policy iteration, checks the
monotone/hysteretic threshold structure of the optimal policy numerically,
extracts the queue thresholds, and validates solver output against a slotted
Monte-Carlo simulator.
"""

__version__ = "0.1.0"

from .errors import (
    BadParameter,
    ConfigError,
    InvalidSlot,
    NotMonotone,
    ReducibleChain,
    ScenarioError,
    SlotTooLarge,
    Violation,
)
from .mdp import (
    Kernel,
    StateSpace,
    SysState,
    build_kernel,
    enumerate_states,
    stage_cost,
    transition_distribution,
)
from .model import (
    AUTO_SLOT,
    MmppModel,
    PhaseStats,
    SystemParams,
    choose_slot_duration,
    discount_for_slot,
    discretize,
    phase_statistics,
    validate_model,
    validation_errors,
)
from .sim import (
    EpisodeResult,
    SimConfig,
    SimReport,
    classify_events,
    default_initial_state,
    discounted_horizon,
    estimate_discounted_cost,
    make_baseline_policy,
    max_stage_cost,
    replication_seed,
    simulate_episode,
    write_trace,
)
from .solver import (
    SolveReport,
    bellman_backup,
    contraction_history,
    finite_horizon_values,
    policy_evaluation,
    policy_iteration,
    qfactor_table,
    value_iteration,
)
from .structure import (
    StructureReport,
    ThresholdTable,
    check_hysteretic,
    check_monotone,
    check_partial_submodular,
    check_partial_submodular_exhaustive,
    check_value_difference_props,
    extract_thresholds,
    search_full_submodularity_violation,
)
