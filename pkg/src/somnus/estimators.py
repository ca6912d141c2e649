"""Importance-weighted loss estimates with implicit exploration (IX).

All functions broadcast over leading replicate dimensions: ``probs`` has
shape ``(..., K)`` while ``chosen`` and ``observed`` have shape ``(...)``.
"""

from __future__ import annotations

import numpy as np

from .core import ActiveRound, DegenerateEstimate, InvalidParameter, ProtocolViolation


def _as_batch(probs, chosen, observed):
    probs = np.asarray(probs, dtype=float)
    chosen = np.asarray(chosen)
    observed = np.asarray(observed, dtype=float)
    if chosen.shape != probs.shape[:-1] or observed.shape != chosen.shape:
        raise ValueError("chosen/observed must match the leading shape of probs")
    return probs, chosen, observed


def ix_estimate(round_: ActiveRound, probs, chosen, observed, gamma: float = 0.0) -> np.ndarray:
    """Loss estimate vector: only the chosen arm gets a nonzero entry.

    The chosen arm receives ``observed / (p[chosen] + gamma * I[chosen])``.
    With ``gamma == 0`` this is the unbiased importance weight; with real
    confidences the exploration factor is arm dependent.
    """
    if gamma < 0:
        raise InvalidParameter("gamma must be nonnegative")
    probs, chosen, observed = _as_batch(probs, chosen, observed)
    conf = round_.confidences
    if not np.all(round_.mask[chosen]):
        raise ProtocolViolation("chosen arm is inactive")
    if np.any(observed < 0.0) or np.any(observed > 1.0):
        raise ProtocolViolation("observed loss outside [0, 1]")
    p_ch = np.take_along_axis(probs, chosen[..., None], axis=-1)[..., 0]
    denom = p_ch + gamma * conf[chosen]
    if np.any(denom <= 0.0):
        raise DegenerateEstimate("p[chosen] + gamma * I[chosen] is zero")
    est = np.zeros(probs.shape)
    np.put_along_axis(est, chosen[..., None], (observed / denom)[..., None], axis=-1)
    return est


def weighted_estimate_sum(round_: ActiveRound, estimates) -> np.ndarray:
    """sum_j I_j * est_j over the active set."""
    return (np.asarray(estimates) * round_.confidences).sum(axis=-1)


def inactive_fill(observed, estimates, round_: ActiveRound, gamma: float = 0.0) -> np.ndarray:
    """Loss assigned to every inactive arm by FTARL.

    Equals ``observed - gamma * sum_{j active} est_j`` which simplifies to
    ``p * observed / (p + gamma)`` and therefore lies in ``[0, observed]``.
    """
    observed = np.asarray(observed, dtype=float)
    active_sum = np.asarray(estimates)[..., round_.mask].sum(axis=-1)
    fill = observed - gamma * active_sum
    # cancellation can leave a tiny negative residue when p << gamma
    return np.clip(fill, 0.0, observed)
