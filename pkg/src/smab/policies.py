"""UCB-style action selection, with and without ruin aversion."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from smab.core import ConfigurationError, RunState
from smab.estimators import bootstrap_action_value, q_value


class PolicyKind(str, enum.Enum):
    UCB = "UCB"
    UCB_BUDGET = "UCBBudget"
    RUIN_AVERSE = "RuinAverse"
    RUIN_AVERSE_UCB_BUDGET = "RuinAverseUCBBudget"

    @property
    def ruin_averse(self) -> bool:
        return self in (PolicyKind.RUIN_AVERSE, PolicyKind.RUIN_AVERSE_UCB_BUDGET)

    @property
    def budget_bonus(self) -> bool:
        return self in (PolicyKind.UCB_BUDGET, PolicyKind.RUIN_AVERSE_UCB_BUDGET)


@dataclass(frozen=True)
class PolicyConfig:
    kind: PolicyKind
    alpha: float = 10.0
    lam: float = 0.0
    paths: int = 100

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", PolicyKind(self.kind))
        if not self.alpha > 0:
            raise ConfigurationError(f"alpha must be > 0, got {self.alpha!r}")
        if not self.lam >= 0:
            raise ConfigurationError(f"lambda must be >= 0, got {self.lam!r}")
        if int(self.paths) != self.paths or self.paths < 1:
            raise ConfigurationError(f"paths must be a positive integer, got {self.paths!r}")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "paths", int(self.paths))

    @property
    def label(self) -> str:
        if self.kind.ruin_averse:
            return f"{self.kind.value}(lambda={self.lam:g})"
        return self.kind.value

    def identity(self) -> str:
        """Canonical text that determines this policy's random streams.

        Only fields that affect the policy's behaviour take part, so the
        baselines ignore ``lam`` and ``paths``.
        """
        if self.kind.ruin_averse:
            return f"{self.kind.value}|alpha={self.alpha!r}|lambda={self.lam!r}|paths={self.paths}"
        return f"{self.kind.value}|alpha={self.alpha!r}"


def ucb_bonus(alpha: float, t: int, n: int) -> float:
    return math.sqrt(alpha * math.log(t) / n)


def budget_bonus(alpha: float, b: float, n: int) -> float:
    # b + 1 keeps the logarithm non-negative for budgets below one
    return math.sqrt(alpha * math.log(b + 1.0) / n)


@dataclass(frozen=True)
class ActionScores:
    values: np.ndarray
    bonuses: np.ndarray
    chosen: int
    forced: bool = False


def score_actions(
    config: PolicyConfig, state: RunState, horizon: int, rng: np.random.Generator
) -> ActionScores:
    """Score every arm and pick one for stage ``state.t``.

    Unpulled arms are played first, lowest index first. Afterwards the arm
    maximising value + bonus is chosen, exact ties broken uniformly at random.
    The budget used is the one carried into the stage.
    """
    if state.ruined:
        raise RuntimeError("select_action called on a ruined run")
    t = state.t
    if t > horizon:
        raise ValueError(f"stage {t} is past the horizon {horizon}")
    k = state.arm_count
    counts = state.pull_counts
    unpulled = np.flatnonzero(counts == 0)
    if unpulled.size:
        nan = np.full(k, np.nan)
        return ActionScores(nan, nan.copy(), int(unpulled[0]), forced=True)

    values = np.empty(k)
    bonuses = np.empty(k)
    remaining = horizon - t + 1
    for arm in range(k):
        z = state.history.rewards(arm)
        if config.kind.ruin_averse:
            values[arm] = bootstrap_action_value(z, state.budget, remaining, config.lam, config.paths, rng)
        else:
            values[arm] = q_value(z)
        n = int(counts[arm])
        if config.kind.budget_bonus:
            bonuses[arm] = budget_bonus(config.alpha, state.budget, n)
        else:
            bonuses[arm] = ucb_bonus(config.alpha, t, n)
    return ActionScores(values, bonuses, argmax_random_tie(values + bonuses, rng))


def select_action(
    config: PolicyConfig, state: RunState, horizon: int, rng: np.random.Generator
) -> int:
    return score_actions(config, state, horizon, rng).chosen


def argmax_random_tie(scores: np.ndarray, rng: Optional[np.random.Generator]) -> int:
    """Index of the maximum; exact ties are broken uniformly via ``rng``.

    No random draw is consumed when the maximum is unique.
    """
    best = np.flatnonzero(scores == scores.max())
    if best.size == 1 or rng is None:
        return int(best[0])
    return int(best[rng.integers(0, best.size)])
