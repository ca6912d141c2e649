"""Shared domain types, categorical sampling and the per-action regret ledger.

Arms are indexed from 0 internally. Anything written to disk for humans
(trace CSVs, report summaries) uses 1-based arm numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DIST_ATOL = 1e-6


class SomnusError(Exception):
    """Base class for all library errors."""


class ProtocolViolation(SomnusError):
    """The interaction protocol was broken (empty round, inactive pick, ...)."""


class InvalidDistribution(SomnusError):
    pass


class DegenerateEstimate(SomnusError):
    """An importance weight would divide by zero."""


class InvalidParameter(SomnusError, ValueError):
    pass


@dataclass(frozen=True)
class ActiveRound:
    """Activity information revealed at the start of a round.

    ``confidences[i]`` is the confidence of arm ``i``; in binary mode every
    entry is exactly 0.0 or 1.0.
    """

    confidences: np.ndarray
    binary: bool = True

    def __post_init__(self):
        conf = np.asarray(self.confidences, dtype=float)
        if conf.ndim != 1 or conf.size == 0:
            raise ProtocolViolation("confidences must be a non-empty 1-d vector")
        if np.any(conf < 0.0) or np.any(conf > 1.0) or not np.all(np.isfinite(conf)):
            raise ProtocolViolation("confidences must lie in [0, 1]")
        if self.binary and np.any((conf != 0.0) & (conf != 1.0)):
            raise ProtocolViolation("binary round with non-binary confidence")
        if not np.any(conf > 0.0):
            raise ProtocolViolation("empty active set")
        conf.setflags(write=False)
        object.__setattr__(self, "confidences", conf)

    @classmethod
    def from_active(cls, active, n_arms: int) -> "ActiveRound":
        conf = np.zeros(n_arms)
        conf[list(active)] = 1.0
        return cls(conf, binary=True)

    @property
    def n_arms(self) -> int:
        return self.confidences.size

    @property
    def mask(self) -> np.ndarray:
        return self.confidences > 0.0

    @property
    def active_set(self) -> list[int]:
        return np.flatnonzero(self.mask).tolist()

    @property
    def size(self) -> int:
        return int(np.count_nonzero(self.mask))


def check_losses(round_: ActiveRound, losses) -> np.ndarray:
    """Validate a loss assignment for ``round_`` and return it as a dense vector.

    Entries for inactive arms are ignored and returned as 0.
    """
    losses = np.asarray(losses, dtype=float)
    if losses.shape != (round_.n_arms,):
        raise ProtocolViolation(f"loss vector has shape {losses.shape}, expected ({round_.n_arms},)")
    active = losses[round_.mask]
    if np.any(active < 0.0) or np.any(active > 1.0) or not np.all(np.isfinite(active)):
        raise ProtocolViolation("losses of active arms must lie in [0, 1]")
    return np.where(round_.mask, losses, 0.0)


def check_distribution(probs, round_: ActiveRound | None = None, atol: float = DIST_ATOL) -> np.ndarray:
    probs = np.asarray(probs, dtype=float)
    if np.any(probs < 0.0) or not np.all(np.isfinite(probs)):
        raise InvalidDistribution("probabilities must be finite and nonnegative")
    sums = probs.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > atol):
        raise InvalidDistribution(f"probabilities sum to {sums!r}")
    if round_ is not None and np.any(probs[..., ~round_.mask] > 0.0):
        raise InvalidDistribution("positive probability on an inactive arm")
    return probs


def sample(probs, u) -> np.ndarray | int:
    """Inverse-CDF draw over ascending arm index.

    ``probs`` has shape ``(..., K)`` and ``u`` holds one uniform in [0, 1)
    per leading index. Arm ``i`` is returned when ``cdf[i-1] <= u < cdf[i]``,
    so zero-probability arms are never selected and ties go to the lowest
    index.
    """
    probs = check_distribution(probs)
    cdf = np.cumsum(probs, axis=-1)
    cdf /= cdf[..., -1:]
    u = np.asarray(u, dtype=float)
    chosen = np.count_nonzero(cdf <= u[..., None], axis=-1)
    if chosen.ndim == 0:
        return int(chosen)
    return chosen


def sample_with(probs, rng: np.random.Generator) -> int:
    """Draw a single arm from a 1-d distribution using ``rng``."""
    return sample(probs, rng.random())


@dataclass
class RegretLedger:
    """Per-action regret accumulators for a batch of independent replicates.

    ``learner[r, a]`` sums ``I_a * observed`` and ``comparator[r, a]`` sums
    ``I_a * loss_a`` over the rounds processed so far. Activity is shared by
    all replicates (the environment is the same), so ``active_rounds`` and
    ``seen`` are per-arm only.
    """

    n_replicates: int = 1
    n_arms: int = 0
    learner: np.ndarray = field(init=False)
    comparator: np.ndarray = field(init=False)
    active_rounds: np.ndarray = field(init=False)
    t: int = field(init=False, default=0)

    def __post_init__(self):
        self.learner = np.zeros((self.n_replicates, self.n_arms))
        self.comparator = np.zeros((self.n_replicates, self.n_arms))
        self.active_rounds = np.zeros(self.n_arms, dtype=np.int64)

    def _grow(self, n_arms: int):
        if n_arms <= self.n_arms:
            return
        pad = n_arms - self.n_arms
        self.learner = np.pad(self.learner, ((0, 0), (0, pad)))
        self.comparator = np.pad(self.comparator, ((0, 0), (0, pad)))
        self.active_rounds = np.pad(self.active_rounds, (0, pad))
        self.n_arms = n_arms

    def update(self, round_: ActiveRound, losses, chosen, observed) -> "RegretLedger":
        self._grow(round_.n_arms)
        losses = check_losses(round_, losses)
        chosen = np.atleast_1d(np.asarray(chosen))
        observed = np.atleast_1d(np.asarray(observed, dtype=float))
        if chosen.shape != (self.n_replicates,):
            raise ProtocolViolation("one chosen arm per replicate is required")
        if not np.all(round_.mask[chosen]):
            bad = int(chosen[~round_.mask[chosen]][0])
            raise ProtocolViolation(f"chosen arm {bad} is inactive")
        conf = round_.confidences
        k = round_.n_arms
        self.learner[:, :k] += observed[:, None] * conf
        self.comparator[:, :k] += conf * losses
        self.active_rounds[:k] += round_.mask
        self.t += 1
        return self

    @property
    def regret(self) -> np.ndarray:
        """R(a) for every replicate and arm, shape ``(R, K)``."""
        return self.learner - self.comparator

    @property
    def seen(self) -> np.ndarray:
        return self.active_rounds > 0

    @property
    def max_regret(self) -> np.ndarray:
        """max_a R(a) per replicate (arms never active contribute 0)."""
        if self.n_arms == 0:
            return np.zeros(self.n_replicates)
        return self.regret.max(axis=1)

    def select(self, rows) -> "RegretLedger":
        out = RegretLedger(len(rows), self.n_arms)
        out.learner = self.learner[rows].copy()
        out.comparator = self.comparator[rows].copy()
        out.active_rounds = self.active_rounds.copy()
        out.t = self.t
        return out
