"""Bandits with advice from sleeping experts (SE-EXP4), virtual experts and restarts."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .algos.base import Policy, check_nonnegative, check_positive
from .core import ActiveRound, DegenerateEstimate, InvalidDistribution, InvalidParameter, SomnusError

DEFAULT_POOL_CAP = 5_000_000


class PoolTooLarge(SomnusError):
    pass


@dataclass(frozen=True)
class AdviceMatrix:
    """Awake experts and their advice rows (one distribution over arms each)."""

    awake: np.ndarray
    advice: np.ndarray

    def __post_init__(self):
        awake = np.asarray(self.awake, dtype=np.int64)
        advice = np.atleast_2d(np.asarray(self.advice, dtype=float))
        if awake.ndim != 1 or awake.size == 0:
            raise InvalidParameter("awake set must be a nonempty 1-d index array")
        if advice.shape[0] != awake.size:
            raise InvalidParameter("one advice row per awake expert is required")
        if np.any(advice < 0) or np.any(np.abs(advice.sum(axis=1) - 1.0) > 1e-9):
            raise InvalidDistribution("advice rows must be distributions")
        object.__setattr__(self, "awake", awake)
        object.__setattr__(self, "advice", advice)


def arm_estimates(probs, chosen, observed, gamma: float) -> np.ndarray:
    """observed * 1{k = chosen} / (p_k + gamma) over all arms (no confidence factor)."""
    probs = np.asarray(probs, dtype=float)
    chosen = np.asarray(chosen)
    p_ch = np.take_along_axis(probs, chosen[:, None], axis=1)[:, 0]
    if np.any(p_ch + gamma <= 0.0):
        raise DegenerateEstimate("p[chosen] + gamma is zero")
    est = np.zeros(probs.shape)
    np.put_along_axis(est, chosen[:, None], (np.asarray(observed) / (p_ch + gamma))[:, None], axis=1)
    return est


def _softmax(logits: np.ndarray) -> np.ndarray:
    w = np.exp(logits - logits.max(axis=1, keepdims=True))
    return w / w.sum(axis=1, keepdims=True)


class SeExp4(Policy):
    """EXP4 where experts may sleep: awake experts are treated as sleeping arms.

    ``advisor(t)`` returns the :class:`AdviceMatrix` for 1-based round ``t``.
    The per-expert accumulator sums ``observed - gamma * sum_k est_k - x_m``
    over the rounds the expert was awake, with ``x_m = <E_m, est>``.
    """

    def __init__(self, eta: float, n_experts: int, advisor: Callable[[int], AdviceMatrix],
                 gamma: float = 0.0):
        super().__init__()
        self.eta = check_positive("eta", eta)
        self.gamma = check_nonnegative("gamma", gamma)
        self.n_experts = int(n_experts)
        self.advisor = advisor
        self.acc = np.zeros((0, self.n_experts))
        self.current: AdviceMatrix | None = None
        self.z = None

    def reset(self, n_replicates: int = 1):
        super().reset(n_replicates)
        self.acc = np.zeros((self.n_replicates, self.n_experts))
        self.current = None
        self.z = None
        return self

    def expert_distribution(self, advice: AdviceMatrix) -> np.ndarray:
        return _softmax(self.eta * self.acc[:, advice.awake])

    def distribution(self, round_: ActiveRound) -> np.ndarray:
        self.check_round(round_)
        adv = self.advisor(self.t + 1)
        self.current = adv
        self.z = self.expert_distribution(adv)
        # row-wise reduction keeps each replicate independent of batch size
        p = (self.z[:, :, None] * adv.advice[None, :, :]).sum(axis=1)
        if np.any(p[:, ~round_.mask] > 0.0):
            raise InvalidDistribution("advice puts mass on an inactive arm")
        return p

    def update(self, round_: ActiveRound, probs, chosen, observed):
        adv = self.current
        chosen = np.asarray(chosen)
        observed = np.asarray(observed, dtype=float)
        est = arm_estimates(probs, chosen, observed, self.gamma)
        est_ch = est[np.arange(est.shape[0]), chosen]
        x = adv.advice[:, chosen].T * est_ch[:, None]
        self.acc[:, adv.awake] += (observed - self.gamma * est_ch)[:, None] - x
        self.current = None
        self.t += 1
        return self


class ExpertLedger:
    """R(m) = sum_t I_m (observed - <E_m, losses>) per replicate and expert."""

    def __init__(self, n_replicates: int, n_experts: int):
        self.regret = np.zeros((n_replicates, n_experts))

    def update(self, advice: AdviceMatrix, losses, observed):
        expert_loss = advice.advice @ np.asarray(losses, dtype=float)
        self.regret[:, advice.awake] += np.asarray(observed, dtype=float)[:, None] - expert_loss[None, :]
        return self


class VirtualExpertPool:
    """Experts ``(k, t1, t2)`` awake on rounds ``t1..t2`` advising arm ``k``.

    Rounds are 1-based, arms 0-based. Experts are stored sorted by arm, then
    ``t1``, then ``t2``; the pool has ``K * T (T + 1) / 2`` members
    (singleton intervals included).
    """

    def __init__(self, n_arms: int, horizon: int, cap: int = DEFAULT_POOL_CAP):
        if n_arms < 1 or horizon < 1:
            raise InvalidParameter("n_arms and horizon must be positive")
        self.n_arms = int(n_arms)
        self.horizon = int(horizon)
        self.size = self.n_arms * self.horizon * (self.horizon + 1) // 2
        if self.size > cap:
            raise PoolTooLarge(f"{self.size} virtual experts exceed the cap of {cap}")
        t1, t2 = np.triu_indices(self.horizon)
        n_int = t1.size
        self.arm = np.repeat(np.arange(self.n_arms), n_int)
        self.t1 = np.tile(t1 + 1, self.n_arms)
        self.t2 = np.tile(t2 + 1, self.n_arms)

    def __len__(self):
        return self.size

    def expert(self, index: int) -> tuple[int, int, int]:
        return int(self.arm[index]), int(self.t1[index]), int(self.t2[index])

    def awake(self, t: int) -> np.ndarray:
        return np.flatnonzero((self.t1 <= t) & (t <= self.t2))

    def awake_count(self, t: int) -> int:
        return self.n_arms * t * (self.horizon - t + 1)

    def advice(self, t: int) -> AdviceMatrix:
        idx = self.awake(t)
        return AdviceMatrix(idx, np.eye(self.n_arms)[self.arm[idx]])


class VirtualSeExp4(Policy):
    """SE-EXP4 over the full virtual pool for one horizon.

    Equivalent to ``SeExp4(advisor=pool.advice)`` but exploits basis-vector
    advice: the arm distribution is a grouped sum of expert weights and only
    experts advising the chosen arm pay the estimated loss.
    """

    def __init__(self, eta: float, n_arms: int, horizon: int, gamma: float = 0.0,
                 cap: int = DEFAULT_POOL_CAP):
        super().__init__()
        self.eta = check_positive("eta", eta)
        self.gamma = check_nonnegative("gamma", gamma)
        self.n_arms = int(n_arms)
        self.horizon = int(horizon)
        self.cap = cap
        self.pool = VirtualExpertPool(n_arms, horizon, cap)
        self.acc = np.zeros((0, len(self.pool)))
        self._awake = None

    def reset(self, n_replicates: int = 1):
        super().reset(n_replicates)
        self.acc = np.zeros((self.n_replicates, len(self.pool)))
        self._awake = None
        return self

    def distribution(self, round_: ActiveRound) -> np.ndarray:
        self.check_round(round_)
        if round_.n_arms != self.n_arms or round_.size != self.n_arms:
            raise InvalidParameter("virtual experts need every arm active")
        t = self.t + 1
        if t > self.horizon:
            raise InvalidParameter(f"round {t} beyond the pool horizon {self.horizon}")
        idx = self.pool.awake(t)
        arms = self.pool.arm[idx]
        bounds = np.searchsorted(arms, np.arange(self.n_arms + 1))
        z = _softmax(self.eta * self.acc[:, idx])
        p = np.stack([z[:, bounds[k]:bounds[k + 1]].sum(axis=1) for k in range(self.n_arms)], axis=1)
        self._awake = (idx, arms)
        return p

    def update(self, round_: ActiveRound, probs, chosen, observed):
        idx, arms = self._awake
        chosen = np.asarray(chosen)
        observed = np.asarray(observed, dtype=float)
        est = arm_estimates(probs, chosen, observed, self.gamma)
        est_ch = est[np.arange(est.shape[0]), chosen]
        hit = arms[None, :] == chosen[:, None]
        self.acc[:, idx] += (observed - self.gamma * est_ch)[:, None] - hit * est_ch[:, None]
        self._awake = None
        self.t += 1
        return self


class Restarted(Policy):
    """Run a fresh inner policy on consecutive episodes of ``ceil(T / S)`` rounds.

    ``factory(length)`` builds the inner policy for an episode of ``length``
    rounds; the last episode is shorter when ``S`` does not divide ``T``.
    """

    binary_only = False

    def __init__(self, factory: Callable[[int], Policy], horizon: int, episodes: int):
        super().__init__()
        if episodes < 1 or horizon < 1:
            raise InvalidParameter("horizon and episodes must be positive")
        self.factory = factory
        self.horizon = int(horizon)
        self.episodes = int(episodes)
        self.episode_length = math.ceil(self.horizon / self.episodes)
        self.inner: Policy | None = None
        self.restarts: list[int] = []

    def reset(self, n_replicates: int = 1):
        super().reset(n_replicates)
        self.inner = None
        self.restarts = []
        return self

    def distribution(self, round_: ActiveRound) -> np.ndarray:
        if self.t % self.episode_length == 0:
            length = min(self.episode_length, self.horizon - self.t) if self.t < self.horizon \
                else self.episode_length
            self.inner = self.factory(length).reset(self.n_replicates)
            self.restarts.append(self.t + 1)
        return self.inner.distribution(round_)

    def update(self, round_: ActiveRound, probs, chosen, observed):
        self.inner.update(round_, probs, chosen, observed)
        self.t += 1
        return self
