"""Environment generators: scripted (oblivious) adversaries and adaptive ones.

A script holds dense ``(T, K)`` arrays of confidences and losses; the loss
of an inactive arm is stored as 0 and never read.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
import numpy as np

from .core import ActiveRound, InvalidParameter, ProtocolViolation

SCRIPT_SCHEMA = 1


@dataclass
class EnvironmentScript:
    confidences: np.ndarray
    losses: np.ndarray
    binary: bool = True
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.confidences = np.asarray(self.confidences, dtype=float)
        self.losses = np.asarray(self.losses, dtype=float)
        if self.confidences.ndim != 2 or self.confidences.shape != self.losses.shape:
            raise InvalidParameter("confidences and losses must be matching (T, K) arrays")
        self.losses = np.where(self.confidences > 0, self.losses, 0.0)
        self.validate()

    def validate(self):
        c, l = self.confidences, self.losses
        if np.any(c < 0) or np.any(c > 1):
            raise ProtocolViolation("confidences outside [0, 1]")
        if self.binary and np.any((c != 0) & (c != 1)):
            raise ProtocolViolation("binary script with fractional confidence")
        empty = np.flatnonzero(~np.any(c > 0, axis=1))
        if empty.size:
            raise ProtocolViolation(f"round {int(empty[0]) + 1} has no active arm")
        if np.any(l < 0) or np.any(l > 1):
            raise ProtocolViolation("losses outside [0, 1]")

    @property
    def horizon(self) -> int:
        return self.confidences.shape[0]

    @property
    def n_arms(self) -> int:
        return self.confidences.shape[1]

    @property
    def mode(self) -> str:
        return "binary" if self.binary else "confidence"

    @property
    def active_counts(self) -> np.ndarray:
        return np.count_nonzero(self.confidences > 0, axis=1)

    @property
    def max_active(self) -> int:
        return int(self.active_counts.max())

    @property
    def sum_active(self) -> int:
        return int(self.active_counts.sum())

    @property
    def sum_confidence(self) -> float:
        return float(self.confidences.sum())

    @property
    def seen(self) -> np.ndarray:
        return np.any(self.confidences > 0, axis=0)

    @property
    def n_seen(self) -> int:
        return int(np.count_nonzero(self.seen))

    def round(self, t: int) -> ActiveRound:
        """ActiveRound for 0-based round index ``t``."""
        return ActiveRound(self.confidences[t], binary=self.binary)

    def truncated(self, horizon: int) -> "EnvironmentScript":
        return EnvironmentScript(self.confidences[:horizon], self.losses[:horizon], self.binary,
                                 dict(self.metadata))

    def to_dict(self) -> dict:
        rounds = []
        for c_row, l_row in zip(self.confidences, self.losses):
            idx = np.flatnonzero(c_row > 0)
            entry = {"active": [int(i) + 1 for i in idx], "losses": [float(v) for v in l_row[idx]]}
            if not self.binary:
                entry["confidences"] = [float(v) for v in c_row[idx]]
            rounds.append(entry)
        return {
            "schema": SCRIPT_SCHEMA,
            "header": {"T": self.horizon, "K": self.n_arms, "mode": self.mode, "index_base": 1},
            "metadata": _jsonable(self.metadata),
            "rounds": rounds,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def save(self, path):
        Path(path).write_text(self.dumps())

    @classmethod
    def from_dict(cls, doc: dict) -> "EnvironmentScript":
        if doc.get("schema") != SCRIPT_SCHEMA:
            raise InvalidParameter(f"unsupported script schema {doc.get('schema')!r}")
        head = doc["header"]
        T, K = int(head["T"]), int(head["K"])
        base = int(head.get("index_base", 1))
        binary = head.get("mode", "binary") == "binary"
        if len(doc["rounds"]) != T:
            raise InvalidParameter(f"header declares T={T} but {len(doc['rounds'])} rounds follow")
        conf = np.zeros((T, K))
        losses = np.zeros((T, K))
        for t, entry in enumerate(doc["rounds"]):
            idx = np.asarray(entry["active"], dtype=int) - base
            if idx.size and (idx.min() < 0 or idx.max() >= K):
                raise ProtocolViolation(f"round {t + 1}: arm index out of range")
            conf[t, idx] = entry.get("confidences", 1.0)
            losses[t, idx] = entry["losses"]
        return cls(conf, losses, binary, doc.get("metadata", {}))

    @classmethod
    def loads(cls, text: str) -> "EnvironmentScript":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path) -> "EnvironmentScript":
        return cls.loads(Path(path).read_text())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed))


def stochastic_env(n_arms: int, n_active: int, loss_means, horizon: int, seed=0) -> EnvironmentScript:
    """Uniformly random ``n_active``-subsets with Bernoulli losses."""
    loss_means = np.asarray(loss_means, dtype=float)
    if not 2 <= n_active <= n_arms:
        raise InvalidParameter("need 2 <= A <= K")
    if loss_means.shape != (n_arms,) or np.any(loss_means < 0) or np.any(loss_means > 1):
        raise InvalidParameter("loss_means must be K values in [0, 1]")
    if horizon < 0:
        raise InvalidParameter("horizon must be nonnegative")
    rng = _rng(seed)
    keys = rng.random((horizon, n_arms))
    # the n_active smallest keys form a uniform random subset
    order = np.argsort(keys, axis=1, kind="stable")[:, :n_active]
    conf = np.zeros((horizon, n_arms))
    np.put_along_axis(conf, order, 1.0, axis=1)
    losses = (rng.random((horizon, n_arms)) < loss_means).astype(float)
    return EnvironmentScript(conf, losses, True, {
        "generator": "stochastic", "K": n_arms, "A": n_active, "loss_means": loss_means, "seed": seed})


def minimax_env(n_arms: int, n_active: int, horizon: int, scale: float = 0.5, seed=0) -> EnvironmentScript:
    """Stochastic instance whose gap shrinks with the horizon.

    Arm 0 has mean ``0.5 - scale * sqrt(K / T)``, every other arm 0.5. This
    is the usual hard family for which tuned exponential weights pay order
    ``sqrt(T)`` regret at every horizon.
    """
    if horizon < 1:
        raise InvalidParameter("horizon must be positive")
    eps = scale * math.sqrt(n_arms / horizon)
    if not 0.0 < eps <= 0.5:
        raise InvalidParameter(f"gap {eps:.4g} must lie in (0, 0.5]")
    means = np.full(n_arms, 0.5)
    means[0] -= eps
    script = stochastic_env(n_arms, n_active, means, horizon, seed)
    script.metadata.update(generator="minimax", scale=scale, gap=eps)
    return script


def random_env(n_arms: int, horizon: int, seed=0, min_active: int = 1, max_active: int | None = None
               ) -> EnvironmentScript:
    """Active-set sizes uniform in ``[min_active, max_active]``, uniform losses."""
    max_active = n_arms if max_active is None else max_active
    if not 1 <= min_active <= max_active <= n_arms:
        raise InvalidParameter("need 1 <= min_active <= max_active <= K")
    rng = _rng(seed)
    sizes = rng.integers(min_active, max_active + 1, size=horizon)
    keys = rng.random((horizon, n_arms))
    ranks = np.argsort(np.argsort(keys, axis=1, kind="stable"), axis=1, kind="stable")
    conf = (ranks < sizes[:, None]).astype(float)
    losses = rng.random((horizon, n_arms))
    return EnvironmentScript(conf, losses, True, {
        "generator": "random", "K": n_arms, "seed": seed, "min_active": min_active,
        "max_active": max_active})


def lower_bound_env(horizon: int, f: int, variant: int | None = None) -> EnvironmentScript:
    """Two-active-arm construction with ``K = 1 + 4f`` arms.

    Arm 0 is always active with loss 0.5. Arm ``k >= 1`` is active exactly on
    the 1-based rounds ``(k-1) L + 1 .. k L`` with ``L = T / (4f)``, with
    loss 1. ``variant=k`` sets arm ``k``'s losses to 0 (``None`` is the
    neutral environment).
    """
    if f < 1 or horizon < 1 or horizon % (4 * f):
        raise InvalidParameter(f"4f must divide T (T={horizon}, f={f})")
    n_arms = 1 + 4 * f
    seg = horizon // (4 * f)
    if variant is not None and not 1 <= variant < n_arms:
        raise InvalidParameter(f"variant must be an arm in 1..{n_arms - 1}")
    t = np.arange(horizon)
    owner = 1 + t // seg
    conf = np.zeros((horizon, n_arms))
    conf[:, 0] = 1.0
    conf[t, owner] = 1.0
    losses = np.zeros((horizon, n_arms))
    losses[:, 0] = 0.5
    losses[t, owner] = np.where(owner == variant, 0.0, 1.0)
    return EnvironmentScript(conf, losses, True, {
        "generator": "lower-bound", "f": f, "L": seg, "variant": variant})


def lower_bound_interval(arm: int, horizon: int, f: int) -> tuple[int, int]:
    """1-based inclusive rounds on which ``arm`` (>= 1) is active."""
    seg = horizon // (4 * f)
    return (arm - 1) * seg + 1, arm * seg


def default_lower_bound_f(horizon: int) -> int:
    """floor(sqrt(2 T ln 2)) rounded down until 4f divides T."""
    f = int(math.floor(math.sqrt(2.0 * horizon * math.log(2.0))))
    while f > 1 and horizon % (4 * f):
        f -= 1
    if horizon % (4 * f):
        raise InvalidParameter(f"no f with 4f dividing T={horizon}")
    return f


def switching_env(n_arms: int, horizon: int, segment_best_arms, gap: float, seed=0,
                  segment_lengths=None) -> EnvironmentScript:
    """All arms active; the designated arm of each segment has mean 0.5 - gap."""
    best = list(segment_best_arms)
    if not 0.0 < gap <= 0.5:
        raise InvalidParameter("gap must lie in (0, 0.5]")
    if not best or any(not 0 <= a < n_arms for a in best):
        raise InvalidParameter("segment arms must be valid arm indices")
    if segment_lengths is None:
        edges = np.linspace(0, horizon, len(best) + 1).round().astype(int)
        segment_lengths = np.diff(edges)
    segment_lengths = [int(n) for n in segment_lengths]
    if len(segment_lengths) != len(best) or sum(segment_lengths) != horizon or min(segment_lengths) < 1:
        raise InvalidParameter("segments must partition the horizon")
    comparator = np.repeat(best, segment_lengths)
    means = np.full((horizon, n_arms), 0.5 + gap)
    means[np.arange(horizon), comparator] = 0.5 - gap
    rng = _rng(seed)
    losses = (rng.random((horizon, n_arms)) < means).astype(float)
    return EnvironmentScript(np.ones((horizon, n_arms)), losses, True, {
        "generator": "switching", "gap": gap, "seed": seed, "segment_best_arms": best,
        "segment_lengths": segment_lengths, "comparator": comparator})


CONFIDENCE_LAWS = ("ones", "uniform", "bernoulli")


def confidence_env(n_arms: int, horizon: int, confidence_law, loss_means, seed=0, floor: float = 0.05
                   ) -> EnvironmentScript:
    """Real-valued confidences with Bernoulli losses.

    ``confidence_law`` is ``"ones"``, ``"uniform"`` (i.i.d. U[0,1] with arm 0
    floored at ``floor`` so that every round has an active arm),
    ``"bernoulli:p"`` (binary activity with rate ``p``; arm 0 always on) or a
    callable ``law(rng, K) -> vector``.
    """
    loss_means = np.asarray(loss_means, dtype=float)
    if loss_means.shape != (n_arms,):
        raise InvalidParameter("loss_means must have K entries")
    rng = _rng(seed)
    binary = False
    if callable(confidence_law):
        conf = np.array([confidence_law(rng, n_arms) for _ in range(horizon)], dtype=float)
        conf = conf.reshape(horizon, n_arms)
    elif confidence_law == "ones":
        conf = np.ones((horizon, n_arms))
    elif confidence_law == "uniform":
        conf = rng.random((horizon, n_arms))
        conf[:, 0] = np.maximum(conf[:, 0], floor)
    elif isinstance(confidence_law, str) and confidence_law.startswith("bernoulli"):
        p = float(confidence_law.split(":", 1)[1]) if ":" in confidence_law else 0.5
        conf = (rng.random((horizon, n_arms)) < p).astype(float)
        conf[:, 0] = 1.0
        binary = True
    else:
        raise InvalidParameter(f"unknown confidence law {confidence_law!r}")
    if np.any(~np.any(conf > 0, axis=1)):
        raise ProtocolViolation("confidence law produced an all-zero round")
    losses = (rng.random((horizon, n_arms)) < loss_means).astype(float)
    law_name = getattr(confidence_law, "__name__", confidence_law)
    return EnvironmentScript(conf, losses, binary, {
        "generator": "confidence", "law": str(law_name), "seed": seed, "loss_means": loss_means})


class AdaptiveEnvironment:
    """Stateful adversary that sees the learner's chosen arm after each round."""

    n_arms: int
    binary = True

    def reset(self, seed) -> "AdaptiveEnvironment":
        raise NotImplementedError

    def reveal(self, t: int) -> tuple[ActiveRound, np.ndarray]:
        """Activity and losses for 0-based round ``t``."""
        raise NotImplementedError

    def observe(self, chosen: int) -> None:
        pass


class ChasingAdversary(AdaptiveEnvironment):
    """Random ``A``-subsets; the arm the learner picked most often so far gets loss 1.

    Every other active arm draws a Bernoulli(``base``) loss.
    """

    def __init__(self, n_arms: int, n_active: int, base: float = 0.5):
        if not 1 <= n_active <= n_arms:
            raise InvalidParameter("need 1 <= A <= K")
        self.n_arms = n_arms
        self.n_active = n_active
        self.base = base
        self.reset(0)

    def reset(self, seed):
        self._rng = _rng(seed)
        self.counts = np.zeros(self.n_arms, dtype=np.int64)
        return self

    def reveal(self, t):
        active = np.sort(self._rng.permutation(self.n_arms)[: self.n_active])
        losses = np.zeros(self.n_arms)
        losses[active] = (self._rng.random(active.size) < self.base).astype(float)
        target = int(np.argmax(self.counts))
        if target in active:
            losses[target] = 1.0
        return ActiveRound.from_active(active, self.n_arms), losses

    def observe(self, chosen):
        self.counts[chosen] += 1
