"""Environment, budget dynamics and per-run bookkeeping."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class ConfigurationError(ValueError):
    """Raised when an experiment or environment configuration is invalid."""


class DistributionKind(str, enum.Enum):
    NORMAL = "Normal"


@dataclass(frozen=True)
class ArmSpec:
    mean: float
    std_dev: float
    distribution_kind: DistributionKind = DistributionKind.NORMAL

    def __post_init__(self) -> None:
        if not self.std_dev >= 0.0:
            raise ConfigurationError(f"std_dev must be >= 0, got {self.std_dev!r}")


@dataclass(frozen=True)
class EnvironmentSpec:
    """Recipe for random environments.

    Arm means are drawn from ``Uniform(mean_low, mean_high)`` and arm standard
    deviations from a gamma law with the given shape and *rate*, so the
    default ``Gamma(1, 10)`` has mean 0.1.
    """

    arm_count: int = 8
    mean_low: float = -0.01
    mean_high: float = 0.01
    sigma_shape: float = 1.0
    sigma_rate: float = 10.0

    def validate(self) -> None:
        if int(self.arm_count) != self.arm_count or self.arm_count < 1:
            raise ConfigurationError(f"arm_count must be a positive integer, got {self.arm_count!r}")
        if not self.mean_low <= self.mean_high:
            raise ConfigurationError(
                f"mean_low ({self.mean_low!r}) must not exceed mean_high ({self.mean_high!r})"
            )
        if not self.sigma_shape > 0:
            raise ConfigurationError(f"sigma_shape must be > 0, got {self.sigma_shape!r}")
        if not self.sigma_rate > 0:
            raise ConfigurationError(f"sigma_rate must be > 0, got {self.sigma_rate!r}")


@dataclass(frozen=True)
class Environment:
    arms: tuple[ArmSpec, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "arms", tuple(self.arms))
        if not self.arms:
            raise ConfigurationError("an environment needs at least one arm")

    @property
    def arm_count(self) -> int:
        return len(self.arms)

    @classmethod
    def from_params(cls, means: Sequence[float], std_devs: Sequence[float]) -> "Environment":
        if len(means) != len(std_devs):
            raise ConfigurationError("means and std_devs must have equal length")
        return cls(tuple(ArmSpec(float(m), float(s)) for m, s in zip(means, std_devs)))


def sample_environment(spec: EnvironmentSpec, rng: np.random.Generator) -> Environment:
    spec.validate()
    k = int(spec.arm_count)
    means = rng.uniform(spec.mean_low, spec.mean_high, size=k)
    # numpy's gamma takes a scale, the inverse of the rate
    sigmas = rng.gamma(spec.sigma_shape, 1.0 / spec.sigma_rate, size=k)
    return Environment.from_params(means, sigmas)


def draw_reward(env: Environment, arm: int, rng: np.random.Generator) -> float:
    """Draw one reward from ``arm`` (0-based index)."""
    if not 0 <= arm < env.arm_count:
        raise IndexError(f"arm {arm} out of range for {env.arm_count} arms")
    spec = env.arms[arm]
    return float(rng.normal(spec.mean, spec.std_dev))


def update_budget(b_prev: float, r: float) -> float:
    """Return the next budget: zero is absorbing and negative sums clamp to zero."""
    if b_prev <= 0.0:
        return 0.0
    return max(0.0, b_prev + r)


class RewardHistory:
    """Per-arm observed rewards, kept in contiguous buffers so an arm's
    rewards can be handed to compiled code as a view without copying."""

    def __init__(self, arm_count: int, capacity: int = 16) -> None:
        self._buf = np.zeros((arm_count, max(1, capacity)), dtype=np.float64)
        self._counts = np.zeros(arm_count, dtype=np.int64)

    @property
    def arm_count(self) -> int:
        return self._buf.shape[0]

    def append(self, arm: int, reward: float) -> None:
        n = self._counts[arm]
        if n == self._buf.shape[1]:
            grown = np.zeros((self._buf.shape[0], 2 * self._buf.shape[1]), dtype=np.float64)
            grown[:, :n] = self._buf
            self._buf = grown
        self._buf[arm, n] = reward
        self._counts[arm] = n + 1

    def rewards(self, arm: int) -> np.ndarray:
        return self._buf[arm, : self._counts[arm]]

    def count(self, arm: int) -> int:
        return int(self._counts[arm])

    def __len__(self) -> int:
        return int(self._counts.sum())


@dataclass
class RunState:
    """Mutable state of a single run.

    ``t`` is the stage about to be played (1-based). ``budget`` is the budget
    carried into that stage, so before any action it equals the initial budget.
    ``budget_trajectory[s - 1]`` holds the budget after stage ``s``.
    """

    arm_count: int
    initial_budget: float
    t: int = 1
    budget: float = field(init=False)
    ruined: bool = False
    ruin_time: Optional[int] = None
    pull_counts: np.ndarray = field(init=False)
    history: RewardHistory = field(init=False)
    budget_trajectory: list[float] = field(default_factory=list)
    capacity: int = 16

    def __post_init__(self) -> None:
        if not self.initial_budget > 0:
            raise ConfigurationError(f"initial budget must be > 0, got {self.initial_budget!r}")
        self.budget = float(self.initial_budget)
        self.pull_counts = np.zeros(self.arm_count, dtype=np.int64)
        self.history = RewardHistory(self.arm_count, self.capacity)

    def record(self, arm: int, reward: float) -> float:
        """Apply the outcome of playing ``arm`` at the current stage."""
        if self.ruined:
            raise RuntimeError("cannot act after ruin")
        self.pull_counts[arm] += 1
        self.history.append(arm, reward)
        self.budget = update_budget(self.budget, reward)
        self.budget_trajectory.append(self.budget)
        if self.budget == 0.0:
            self.ruined = True
            self.ruin_time = self.t
        self.t += 1
        return self.budget
