"""Seeded episodes and Monte Carlo experiments.

Every random stream is derived from ``(master_seed, run, policy, purpose)``
through :func:`seed_schedule`, so a run's result does not depend on which
worker executed it, nor on the position of its policy in the policy list.
Per-run traces are collected by run index and reduced in that order, which
makes serial and parallel execution produce identical numbers.
"""

from __future__ import annotations

import enum
import hashlib
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from smab.core import (
    ConfigurationError,
    Environment,
    EnvironmentSpec,
    RunState,
    draw_reward,
    sample_environment,
)
from smab.policies import PolicyConfig, select_action

logger = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1


class SeedPurpose(enum.IntEnum):
    ENVIRONMENT = 0
    REWARDS = 1
    POLICY_RNG = 2
    # used instead of ENVIRONMENT when policies do not share environments
    PRIVATE_ENVIRONMENT = 3


def policy_key(policy: Union[PolicyConfig, str, int]) -> int:
    """Stable 64-bit key for a policy, from its behavioural identity."""
    if isinstance(policy, PolicyConfig):
        policy = policy.identity()
    if isinstance(policy, int):
        return policy & _MASK64
    digest = hashlib.blake2b(str(policy).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def seed_schedule(
    master_seed: int,
    run_index: int,
    policy: Union[PolicyConfig, str, int],
    purpose: Union[SeedPurpose, str],
) -> int:
    """Derive a 64-bit seed for one stream of one run.

    Environment seeds ignore ``policy`` so all policies of a run face the
    same arms.
    """
    if isinstance(purpose, str):
        purpose = SeedPurpose[purpose.upper()]
    key = 0 if purpose is SeedPurpose.ENVIRONMENT else policy_key(policy)
    seq = np.random.SeedSequence(
        entropy=int(master_seed) & _MASK64,
        spawn_key=(int(run_index), key, int(purpose)),
    )
    return int(seq.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class RunTrace:
    budget_trajectory: np.ndarray
    ruin_time: Optional[int]
    actions: np.ndarray
    rewards: np.ndarray
    final_budget: float


def run_episode(
    env: Environment,
    policy: PolicyConfig,
    initial_budget: float,
    horizon: int,
    rng: np.random.Generator,
    policy_rng: Optional[np.random.Generator] = None,
) -> RunTrace:
    """Play one run of ``horizon`` stages.

    ``rng`` drives reward draws; ``policy_rng`` (defaulting to ``rng``) drives
    bootstrap resampling and tie-breaking.
    """
    if policy_rng is None:
        policy_rng = rng
    state = RunState(env.arm_count, initial_budget, capacity=horizon)
    actions = []
    rewards = []
    while state.t <= horizon and not state.ruined:
        arm = select_action(policy, state, horizon, policy_rng)
        reward = draw_reward(env, arm, rng)
        actions.append(arm)
        rewards.append(reward)
        state.record(arm, reward)
    trajectory = np.zeros(horizon)
    trajectory[: len(state.budget_trajectory)] = state.budget_trajectory
    return RunTrace(
        budget_trajectory=trajectory,
        ruin_time=state.ruin_time,
        actions=np.asarray(actions, dtype=np.int64),
        rewards=np.asarray(rewards, dtype=np.float64),
        final_budget=float(trajectory[-1]),
    )


@dataclass(frozen=True)
class ExperimentConfig:
    env_spec: Union[EnvironmentSpec, Environment]
    policies: tuple[PolicyConfig, ...]
    runs: int = 1000
    horizon: int = 500
    initial_budget: float = 0.5
    master_seed: int = 0
    shared_environments: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "policies", tuple(self.policies))

    def validate(self) -> None:
        if isinstance(self.env_spec, EnvironmentSpec):
            self.env_spec.validate()
        elif not isinstance(self.env_spec, Environment):
            raise ConfigurationError("env_spec must be an EnvironmentSpec or a fixed Environment")
        if not self.policies:
            raise ConfigurationError("at least one policy is required")
        for name in ("runs", "horizon"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ConfigurationError(f"{name} must be a positive integer, got {value!r}")
        if not self.initial_budget > 0:
            raise ConfigurationError(f"initial_budget must be > 0, got {self.initial_budget!r}")


@dataclass
class PolicyResult:
    policy: PolicyConfig
    trajectories: np.ndarray  # (runs, horizon)
    ruin_times: np.ndarray  # (runs,), -1 when the run survived
    survival_curve: np.ndarray = field(init=False)
    average_budget_curve: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        horizon = self.trajectories.shape[1]
        stages = np.arange(1, horizon + 1)
        alive = (self.ruin_times[:, None] < 0) | (self.ruin_times[:, None] > stages[None, :])
        self.survival_curve = alive.mean(axis=0)
        self.average_budget_curve = self.trajectories.mean(axis=0)

    @property
    def survival_frequency(self) -> float:
        return float(self.survival_curve[-1])

    @property
    def average_budget(self) -> float:
        return float(self.average_budget_curve[-1])

    @property
    def survival_stderr(self) -> float:
        p = self.survival_frequency
        return float(np.sqrt(p * (1 - p) / len(self.ruin_times)))

    @property
    def budget_stderr(self) -> float:
        final = self.trajectories[:, -1]
        if final.size < 2:
            return 0.0
        return float(final.std(ddof=1) / np.sqrt(final.size))


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    results: list[PolicyResult]

    def __getitem__(self, index: int) -> PolicyResult:
        return self.results[index]

    def summary(self) -> list[dict]:
        rows = []
        for res in self.results:
            rows.append(
                {
                    "policy": res.policy.kind.value,
                    "lambda": res.policy.lam if res.policy.kind.ruin_averse else None,
                    "survival_frequency": res.survival_frequency,
                    "average_budget": res.average_budget,
                    "survival_stderr": res.survival_stderr,
                    "average_budget_stderr": res.budget_stderr,
                }
            )
        return rows


def _environment_for(config: ExperimentConfig, run_index: int, policy: PolicyConfig) -> Environment:
    if isinstance(config.env_spec, Environment):
        return config.env_spec
    purpose = SeedPurpose.ENVIRONMENT if config.shared_environments else SeedPurpose.PRIVATE_ENVIRONMENT
    seed = seed_schedule(config.master_seed, run_index, policy, purpose)
    return sample_environment(config.env_spec, np.random.default_rng(seed))


def _run_one(config: ExperimentConfig, run_index: int) -> list[tuple[np.ndarray, int]]:
    out = []
    for policy in config.policies:
        env = _environment_for(config, run_index, policy)
        rng = np.random.default_rng(seed_schedule(config.master_seed, run_index, policy, SeedPurpose.REWARDS))
        prng = np.random.default_rng(
            seed_schedule(config.master_seed, run_index, policy, SeedPurpose.POLICY_RNG)
        )
        trace = run_episode(env, policy, config.initial_budget, config.horizon, rng, prng)
        out.append((trace.budget_trajectory, -1 if trace.ruin_time is None else trace.ruin_time))
    return out


def _run_chunk(config: ExperimentConfig, run_indices: Sequence[int]) -> list[tuple[int, list]]:
    return [(i, _run_one(config, i)) for i in run_indices]


def run_experiment(config: ExperimentConfig, workers: Optional[int] = 1) -> ExperimentResult:
    """Run every policy on ``config.runs`` seeded runs and aggregate curves.

    ``workers`` > 1 spreads runs over processes; ``None`` uses every CPU.
    The result is identical for any worker count.
    """
    config.validate()
    runs = int(config.runs)
    if workers is None:
        workers = os.cpu_count() or 1
    workers = max(1, min(int(workers), runs))

    per_run: dict[int, list] = {}
    if workers == 1:
        for i in range(runs):
            per_run[i] = _run_one(config, i)
            if (i + 1) % max(1, runs // 10) == 0:
                logger.info("completed %d/%d runs", i + 1, runs)
    else:
        chunks = [list(range(start, runs, workers * 4)) for start in range(workers * 4)]
        chunks = [c for c in chunks if c]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for done in pool.map(_run_chunk, [config] * len(chunks), chunks):
                for i, traces in done:
                    per_run[i] = traces
                logger.info("completed %d/%d runs", len(per_run), runs)

    results = []
    for p, policy in enumerate(config.policies):
        trajectories = np.stack([per_run[i][p][0] for i in range(runs)])
        ruin_times = np.array([per_run[i][p][1] for i in range(runs)], dtype=np.int64)
        results.append(PolicyResult(policy, trajectories, ruin_times))
    return ExperimentResult(config, results)
