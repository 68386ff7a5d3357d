"""Action-value estimators.

``q_value`` is the plain sample mean. ``bootstrap_action_value`` estimates
the ruin-averse value of committing to an arm for the rest of the horizon by
resampling the arm's observed rewards: each simulated path pays the sum of
its rewards if the budget survives every step, and ``-b_prev - lam`` if the
budget is exhausted at any step. ``exact_action_value`` computes the same
expectation by exhaustive enumeration and serves as a test oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from smab.core import update_budget

MAX_ENUMERATED_PATHS = 1_000_000


@dataclass(frozen=True)
class PathOutcome:
    ruined: bool
    reward_sum: float | None
    steps: int


@dataclass(frozen=True)
class BootstrapStats:
    """Aggregates over ``paths`` resampled paths for one (arm, stage)."""

    value: float
    ruined_fraction: float
    payoff_std: float
    mean_path_length: float
    paths: int

    @property
    def standard_error(self) -> float:
        return self.payoff_std / math.sqrt(self.paths)


def _check_inputs(arm_rewards, b_prev: float, horizon: int, lam: float = 0.0, paths: int = 1) -> np.ndarray:
    z = np.ascontiguousarray(arm_rewards, dtype=np.float64)
    if z.ndim != 1 or z.size == 0:
        raise ValueError("arm_rewards must be a non-empty 1-d collection")
    if not b_prev > 0:
        raise ValueError(f"b_prev must be > 0, got {b_prev!r}")
    if int(horizon) != horizon or horizon < 1:
        raise ValueError(f"horizon must be a positive integer, got {horizon!r}")
    if not lam >= 0:
        raise ValueError(f"lam must be >= 0, got {lam!r}")
    if int(paths) != paths or paths < 1:
        raise ValueError(f"paths must be a positive integer, got {paths!r}")
    return z


def q_value(arm_rewards) -> float:
    z = np.asarray(arm_rewards, dtype=np.float64)
    if z.size == 0:
        raise ValueError("q_value needs at least one observed reward")
    return float(z.mean())


def simulate_path(arm_rewards, b_prev: float, horizon: int, rng: np.random.Generator) -> PathOutcome:
    """Resample one path of at most ``horizon`` rewards, stopping at ruin.

    A plain-Python reference: one ``rng.integers`` draw per simulated step.
    ``bootstrap_stats`` follows the same path law with a compiled stream.
    """
    z = _check_inputs(arm_rewards, b_prev, horizon)
    n = z.size
    b = float(b_prev)
    total = 0.0
    for step in range(1, horizon + 1):
        r = z[rng.integers(0, n)]
        total += r
        b = update_budget(b, r)
        if b == 0.0:
            return PathOutcome(True, None, step)
    return PathOutcome(False, total, horizon)


_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_INV_2_53 = 1.0 / 9007199254740992.0


@numba.njit(inline="always")
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@numba.njit(cache=True)
def _bootstrap_kernel(seed, z, b_prev, horizon, paths):
    # xoshiro256** seeded through splitmix64; numba's Generator.integers costs
    # ~20x more per draw than this inline stream
    state = np.empty(4, np.uint64)
    x = np.uint64(seed)
    for i in range(4):
        x += _GOLDEN
        w = x
        w = (w ^ (w >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        w = (w ^ (w >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        state[i] = w ^ (w >> np.uint64(31))
    s0, s1, s2, s3 = state[0], state[1], state[2], state[3]

    n = float(z.size)
    survivor_sum = 0.0
    survivor_sq = 0.0
    ruined = 0
    steps = 0
    for _ in range(paths):
        b = b_prev
        s = 0.0
        dead = False
        for _h in range(horizon):
            out = _rotl(s1 * np.uint64(5), 7) * np.uint64(9)
            t = s1 << np.uint64(17)
            s2 ^= s0
            s3 ^= s1
            s1 ^= s2
            s0 ^= s3
            s2 ^= t
            s3 = _rotl(s3, 45)
            # 53-bit uniform scaled to an index; bias is below n / 2**53
            r = z[int(float(out >> np.uint64(11)) * _INV_2_53 * n)]
            s += r
            b += r
            steps += 1
            if b <= 0.0:
                dead = True
                break
        if dead:
            ruined += 1
        else:
            survivor_sum += s
            survivor_sq += s * s
    return survivor_sum, survivor_sq, ruined, steps


def bootstrap_stats(
    arm_rewards, b_prev: float, horizon: int, lam: float, paths: int, rng: np.random.Generator
) -> BootstrapStats:
    z = _check_inputs(arm_rewards, b_prev, horizon, lam, paths)
    seed = rng.integers(0, 2**64, dtype=np.uint64)
    survivor_sum, survivor_sq, ruined, steps = _bootstrap_kernel(
        seed, z, float(b_prev), int(horizon), int(paths)
    )
    ruin_payoff = -float(b_prev) - float(lam)
    value = (survivor_sum + ruined * ruin_payoff) / paths
    second = (survivor_sq + ruined * ruin_payoff * ruin_payoff) / paths
    var = max(0.0, second - value * value)
    return BootstrapStats(
        value=value,
        ruined_fraction=ruined / paths,
        payoff_std=math.sqrt(var * paths / (paths - 1)) if paths > 1 else 0.0,
        mean_path_length=steps / paths,
        paths=int(paths),
    )


def bootstrap_action_value(
    arm_rewards, b_prev: float, horizon: int, lam: float, paths: int, rng: np.random.Generator
) -> float:
    """Average path payoff over ``paths`` resampled paths."""
    return bootstrap_stats(arm_rewards, b_prev, horizon, lam, paths, rng).value


def exact_action_value(
    arm_rewards, b_prev: float, horizon: int, lam: float, max_paths: int = MAX_ENUMERATED_PATHS
) -> float:
    """Expected path payoff under uniform resampling, by enumeration.

    Subtrees are pruned at ruin since the ruined payoff no longer depends on
    later draws. Raises ``ValueError`` when ``len(arm_rewards) ** horizon``
    exceeds ``max_paths``.
    """
    z = _check_inputs(arm_rewards, b_prev, horizon, lam)
    n = z.size
    if n**horizon > max_paths:
        raise ValueError(f"{n}**{horizon} paths exceed the enumeration cap of {max_paths}")
    ruin_payoff = -float(b_prev) - float(lam)

    def expand(b: float, total: float, depth: int) -> float:
        if depth == horizon:
            return total
        acc = 0.0
        for r in z:
            nb = update_budget(b, r)
            if nb == 0.0:
                acc += ruin_payoff
            else:
                acc += expand(nb, total + r, depth + 1)
        return acc / n

    return expand(float(b_prev), 0.0, 0)
