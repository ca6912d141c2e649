"""Follow-the-active-and-regularized-leader (FTARL)."""

from __future__ import annotations

import numpy as np

from ..core import ActiveRound, InvalidParameter
from ..estimators import inactive_fill, ix_estimate
from .base import Policy, check_nonnegative, check_positive
from .tsallis import shannon_weights, tsallis_weights


class Ftarl(Policy):
    """FTRL over all ``n_arms`` arms, restricted and renormalized to the active set.

    ``beta`` in (0, 1) selects the Tsallis regularizer; ``beta="shannon"``
    selects negative Shannon entropy. Inactive arms are charged the observed
    loss minus the IX correction, which keeps every cumulative loss
    nonnegative.
    """

    def __init__(self, eta: float, n_arms: int, gamma: float = 0.0, beta=0.5):
        super().__init__()
        self.eta = check_positive("eta", eta)
        self.gamma = check_nonnegative("gamma", gamma)
        if n_arms is None or int(n_arms) < 1:
            raise InvalidParameter("n_arms must be a positive integer")
        self.n_arms = int(n_arms)
        if beta != "shannon" and not (isinstance(beta, (int, float)) and 0.0 < beta < 1.0):
            raise InvalidParameter(f"beta must be in (0, 1) or 'shannon', got {beta!r}")
        self.beta = beta
        self.L = np.zeros((0, self.n_arms))
        self.q = None
        self._shift = None

    @property
    def shannon(self) -> bool:
        return self.beta == "shannon"

    def reset(self, n_replicates: int = 1):
        super().reset(n_replicates)
        self.L = np.zeros((self.n_replicates, self.n_arms))
        self.q = None
        self._shift = None
        return self

    def solve(self) -> np.ndarray:
        """FTRL weights over all arms, shape ``(R, K)``."""
        if self.shannon:
            return shannon_weights(self.L, self.eta)
        q, self._shift = tsallis_weights(self.L, self.eta, self.beta, shift0=self._shift)
        return q

    def distribution(self, round_: ActiveRound) -> np.ndarray:
        self.check_round(round_)
        if round_.n_arms != self.n_arms:
            raise InvalidParameter(f"round has {round_.n_arms} arms, policy expects {self.n_arms}")
        self.q = self.solve()
        w = self.q * round_.mask
        return w / w.sum(axis=1, keepdims=True)

    def loss_estimates(self, round_: ActiveRound, probs, chosen, observed) -> np.ndarray:
        est = ix_estimate(round_, probs, chosen, observed, self.gamma)
        fill = inactive_fill(observed, est, round_, self.gamma)
        return np.where(round_.mask, est, fill[:, None])

    def update(self, round_: ActiveRound, probs, chosen, observed):
        self.L += self.loss_estimates(round_, probs, chosen, observed)
        self.t += 1
        return self
