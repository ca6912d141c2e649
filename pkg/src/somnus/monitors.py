"""Per-round inequality monitors evaluated while an episode runs.

Each monitor gets ``before`` right after the distribution is computed and
``after`` right after the policy update, and records a violation whenever
its inequality fails beyond the relative tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .algos import Ftarl, SbExp3
from .core import ActiveRound, InvalidParameter
from .estimators import ix_estimate, weighted_estimate_sum

RTOL = 1e-9


@dataclass(frozen=True)
class Violation:
    monitor: str
    replicate: int
    round: int
    lhs: float
    rhs: float

    def to_dict(self):
        return {"monitor": self.monitor, "replicate": self.replicate, "round": self.round,
                "lhs": self.lhs, "rhs": self.rhs}


class Monitor:
    name = "monitor"

    def __init__(self, rtol: float = RTOL):
        self.rtol = rtol
        self.violations: list[Violation] = []
        self.checks = 0
        self.replicate_offset = 0

    def attach(self, policy) -> None:
        pass

    def before(self, t: int, policy, round_: ActiveRound, probs) -> None:
        pass

    def after(self, t: int, policy, round_: ActiveRound, probs, chosen, observed) -> None:
        pass

    def _record(self, t, lhs, rhs, rtol=None):
        rtol = self.rtol if rtol is None else rtol
        lhs = np.atleast_1d(lhs)
        rhs = np.atleast_1d(rhs)
        self.checks += lhs.size
        bad = ~(lhs <= rhs + rtol * np.abs(rhs))
        for r in np.flatnonzero(bad):
            self.violations.append(Violation(self.name, int(r) + self.replicate_offset, t + 1,
                                             float(lhs[r]), float(rhs[r])))


class PotentialGrowthMonitor(Monitor):
    """Growth of the potential sum_{i in G_T} exp(eta Z_i) for SB-EXP3.

    ``Q_{t+1} / Q_t <= sum_{i active} p_i exp(eta (obs - est_i - gamma sum_j est_j))``,
    compared in log space. Needs the set of arms ever active over the whole
    horizon, so only scripted environments qualify.
    """

    name = "potential-growth"

    def __init__(self, seen_mask, rtol: float = RTOL):
        super().__init__(rtol)
        self.seen = np.asarray(seen_mask, dtype=bool)

    def attach(self, policy):
        if not isinstance(policy, SbExp3):
            raise InvalidParameter("the potential-growth monitor applies to SB-EXP3 only")

    def _log_potential(self, policy):
        logw = policy.log_weights(self.seen.size)[:, : self.seen.size]
        return logsumexp(logw[:, self.seen], axis=1)

    def before(self, t, policy, round_, probs):
        if not round_.binary:
            raise InvalidParameter("the potential-growth monitor needs binary activity")
        self._log_q = self._log_potential(policy)

    def after(self, t, policy, round_, probs, chosen, observed):
        est = ix_estimate(round_, probs, chosen, observed, policy.gamma)
        corr = policy.gamma * weighted_estimate_sum(round_, est)
        expo = policy.eta * (np.asarray(observed)[:, None] - est - corr[:, None])
        with np.errstate(divide="ignore"):
            log_rhs = logsumexp(np.where(round_.mask, expo + np.log(probs), -np.inf), axis=1)
        log_lhs = self._log_potential(policy) - self._log_q
        # a relative tolerance on the ratio is an additive one in log space
        self._record(t, log_lhs, log_rhs + np.log1p(self.rtol), rtol=0.0)


class LocalNormMonitor(Monitor):
    """sum_i est_i^2 q_i^(2-beta) <= sum_{i active} est_i^2 p_i^(2-beta) for Tsallis FTARL."""

    name = "local-norm"

    def attach(self, policy):
        if not isinstance(policy, Ftarl) or policy.shannon:
            raise InvalidParameter("the local-norm monitor applies to Tsallis FTARL only")

    def after(self, t, policy, round_, probs, chosen, observed):
        est = policy.loss_estimates(round_, probs, chosen, observed)
        expo = 2.0 - policy.beta
        lhs = np.sum(est**2 * policy.q**expo, axis=1)
        rhs = np.sum(np.where(round_.mask, est**2 * probs**expo, 0.0), axis=1)
        self._record(t, lhs, rhs)


class IXIdentityMonitor(Monitor):
    """sum_i p_i est_i == obs - gamma sum_j I_j est_j (checked both ways)."""

    name = "ix-identity"

    def attach(self, policy):
        if not hasattr(policy, "gamma"):
            raise InvalidParameter("the IX identity monitor needs a policy with gamma")

    def after(self, t, policy, round_, probs, chosen, observed):
        est = ix_estimate(round_, probs, chosen, observed, policy.gamma)
        lhs = np.sum(probs * est, axis=1)
        rhs = np.asarray(observed) - policy.gamma * weighted_estimate_sum(round_, est)
        scale = np.maximum(np.abs(rhs), 1.0)
        self._record(t, np.abs(lhs - rhs) / scale, np.full(lhs.shape, 1e-12), rtol=0.0)


def default_monitors(policy, script=None) -> list[Monitor]:
    """Monitors that apply to ``policy`` on ``script``."""
    out: list[Monitor] = []
    if type(policy) is SbExp3 and script is not None and script.binary:
        out.append(PotentialGrowthMonitor(script.seen))
    if isinstance(policy, Ftarl) and not policy.shannon:
        out.append(LocalNormMonitor())
    if isinstance(policy, (SbExp3, Ftarl)) and (script is None or script.binary or isinstance(policy, SbExp3)):
        out.append(IXIdentityMonitor())
    return out
