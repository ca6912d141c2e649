from __future__ import annotations

import inspect

import numpy as np

from ..core import ActiveRound, InvalidParameter


def check_positive(name: str, value) -> float:
    if value is None or not np.isfinite(value) or value <= 0:
        raise InvalidParameter(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


def check_nonnegative(name: str, value) -> float:
    if value is None or not np.isfinite(value) or value < 0:
        raise InvalidParameter(f"{name} must be nonnegative, got {value!r}")
    return float(value)


class Policy:
    """A batch of independent learners that see the same rounds.

    Subclasses keep their state with a leading replicate axis of length
    ``n_replicates``. ``distribution`` must be called exactly once per round,
    followed by ``update`` with the arms drawn from it.
    """

    binary_only = True

    def __init__(self):
        self.n_replicates = 0
        self.t = 0

    def get_params(self) -> dict:
        names = [p for p in inspect.signature(type(self).__init__).parameters if p != "self"]
        return {name: getattr(self, name) for name in names}

    def reset(self, n_replicates: int = 1) -> "Policy":
        self.n_replicates = int(n_replicates)
        self.t = 0
        return self

    def check_round(self, round_: ActiveRound):
        if self.binary_only and not round_.binary:
            raise InvalidParameter(f"{type(self).__name__} needs binary activity")

    def distribution(self, round_: ActiveRound) -> np.ndarray:
        raise NotImplementedError

    def update(self, round_: ActiveRound, probs, chosen, observed) -> "Policy":
        raise NotImplementedError

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"
