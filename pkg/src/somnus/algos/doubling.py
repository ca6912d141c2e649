"""Anytime SB-EXP3 via a two-level doubling trick on ln|V| and sum A_t."""

from __future__ import annotations

import math

import numpy as np

from ..core import ActiveRound
from .base import Policy, check_nonnegative
from .sb_exp3 import SbExp3


class SbExp3Anytime(Policy):
    """SB-EXP3 that guesses ``ln G_T`` and ``sum_t A_t`` with doubling.

    Schedule state (shared by all replicates since it depends only on the
    active sets): ``C`` bounds ``ln|V|`` by ``2**C``, ``b`` bounds the
    running sum ``U`` of active-set sizes by ``2**b``. Either overflow zeroes
    the accumulators; the learning rate is ``sqrt(2**(C+1) / 2**b)``.
    """

    def __init__(self, gamma: float = 0.0):
        super().__init__()
        self.gamma = check_nonnegative("gamma", gamma)
        self.inner = SbExp3(eta=1.0, gamma=self.gamma)
        self._init_schedule()

    def _init_schedule(self):
        self.C = 1
        self.b = 1
        self.U = 0
        self.V: set[int] = set()
        self.resets: list[tuple[int, str]] = []

    def reset(self, n_replicates: int = 1):
        super().reset(n_replicates)
        self.inner.reset(n_replicates)
        self._init_schedule()
        return self

    @property
    def eta(self) -> float:
        return self.inner.eta

    def admit(self, round_: ActiveRound) -> float:
        """Run the admission logic for one round and return the learning rate."""
        active = round_.active_set
        a_t = len(active)
        if math.log(len(self.V.union(active))) > 2.0**self.C:
            self.C += 1
            while math.log(a_t) > 2.0**self.C:
                self.C += 1
            self.V = set()
            self.U, self.b = 0, 1
            self.inner.zero_accumulators()
            self.resets.append((self.t + 1, "episode"))
        if self.U + a_t > 2**self.b:
            self.b += 1
            while a_t > 2**self.b:
                self.b += 1
            self.U = 0
            self.inner.zero_accumulators()
            self.resets.append((self.t + 1, "block"))
        self.V.update(active)
        self.U += a_t
        self.inner.eta = math.sqrt(2.0 ** (self.C + 1) / 2.0**self.b)
        return self.inner.eta

    def distribution(self, round_: ActiveRound) -> np.ndarray:
        self.check_round(round_)
        self.admit(round_)
        return self.inner.distribution(round_)

    def update(self, round_: ActiveRound, probs, chosen, observed):
        self.inner.update(round_, probs, chosen, observed)
        self.t += 1
        return self
