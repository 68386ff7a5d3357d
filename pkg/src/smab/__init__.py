"""Survival multi-armed bandits with ruin-averse bootstrap policies."""

from smab.core import (
    ArmSpec,
    ConfigurationError,
    Environment,
    EnvironmentSpec,
    RewardHistory,
    RunState,
    draw_reward,
    sample_environment,
    update_budget,
)
from smab.estimators import (
    bootstrap_action_value,
    bootstrap_stats,
    exact_action_value,
    q_value,
    simulate_path,
)
from smab.harness import (
    ExperimentConfig,
    ExperimentResult,
    run_episode,
    run_experiment,
    seed_schedule,
)
from smab.policies import PolicyConfig, PolicyKind, budget_bonus, select_action, ucb_bonus

__version__ = "0.1.0"

__all__ = [
    "ArmSpec",
    "ConfigurationError",
    "Environment",
    "EnvironmentSpec",
    "ExperimentConfig",
    "ExperimentResult",
    "PolicyConfig",
    "PolicyKind",
    "RewardHistory",
    "RunState",
    "bootstrap_action_value",
    "bootstrap_stats",
    "budget_bonus",
    "draw_reward",
    "exact_action_value",
    "q_value",
    "run_episode",
    "run_experiment",
    "sample_environment",
    "seed_schedule",
    "select_action",
    "simulate_path",
    "ucb_bonus",
    "update_budget",
]
