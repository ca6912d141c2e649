"""Exponential weights on estimated per-action regret (SB-EXP3)."""

from __future__ import annotations

import numpy as np

from ..core import ActiveRound, InvalidDistribution
from ..estimators import ix_estimate, weighted_estimate_sum
from .base import Policy, check_nonnegative, check_positive


def regret_increments(round_: ActiveRound, estimates, observed, gamma: float) -> np.ndarray:
    """I_i * (observed - est_i - gamma * sum_j I_j est_j) for every arm."""
    observed = np.asarray(observed, dtype=float)
    corr = gamma * weighted_estimate_sum(round_, estimates)
    return round_.confidences * (observed[..., None] - estimates - corr[..., None])


class SbExp3(Policy):
    """Sleeping-bandit EXP3 / EXP3-IX.

    The state is the raw accumulator ``Z_i`` of estimated regret; sampling
    weights are ``I_i * exp(eta * Z_i)``, normalized over the active set in
    log space. The number of arms is never required: storage grows to the
    widest round seen. With real-valued confidences the same code runs the
    confidence-regret variant (arm-dependent exploration ``gamma * I_i``).
    """

    binary_only = False

    def __init__(self, eta: float, gamma: float = 0.0):
        super().__init__()
        self.eta = check_positive("eta", eta)
        self.gamma = check_nonnegative("gamma", gamma)
        self.Z = np.zeros((0, 0))

    def reset(self, n_replicates: int = 1):
        super().reset(n_replicates)
        self.Z = np.zeros((self.n_replicates, 0))
        return self

    def _grow(self, n_arms: int):
        if n_arms > self.Z.shape[1]:
            self.Z = np.pad(self.Z, ((0, 0), (0, n_arms - self.Z.shape[1])))

    def zero_accumulators(self):
        self.Z[:] = 0.0

    def log_weights(self, n_arms: int | None = None) -> np.ndarray:
        """eta * Z, i.e. log of the unnormalized weights, for every stored arm."""
        if n_arms is not None:
            self._grow(n_arms)
        return self.eta * self.Z

    def distribution(self, round_: ActiveRound) -> np.ndarray:
        self.check_round(round_)
        k = round_.n_arms
        self._grow(k)
        mask = round_.mask
        with np.errstate(divide="ignore"):
            logw = np.where(mask, self.eta * self.Z[:, :k] + np.log(round_.confidences), -np.inf)
        top = logw.max(axis=1, keepdims=True)
        if not np.all(np.isfinite(top)):
            raise InvalidDistribution("all active weights are degenerate")
        w = np.exp(logw - top)
        return w / w.sum(axis=1, keepdims=True)

    def update(self, round_: ActiveRound, probs, chosen, observed):
        k = round_.n_arms
        est = ix_estimate(round_, probs, chosen, observed, self.gamma)
        self.Z[:, :k] += regret_increments(round_, est, observed, self.gamma)
        self.t += 1
        return self
