"""FTRL step on the probability simplex for Tsallis and Shannon regularizers."""

from __future__ import annotations

import numpy as np

from ..core import SomnusError

SUM_TOL = 1e-12


class SolverFailure(SomnusError):
    pass


def tsallis_objective(q, cum_loss, eta: float, beta: float) -> np.ndarray:
    """(1 - sum q^beta) / (eta (1 - beta)) + <q, L>, evaluated row-wise."""
    q = np.clip(np.asarray(q, dtype=float), 0.0, None)
    reg = (1.0 - np.sum(q**beta, axis=-1)) / (eta * (1.0 - beta))
    return reg + np.sum(q * cum_loss, axis=-1)


def shannon_objective(q, cum_loss, eta: float) -> np.ndarray:
    q = np.clip(np.asarray(q, dtype=float), 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = np.where(q > 0.0, q * np.log(q), 0.0)
    return np.sum(ent, axis=-1) / eta + np.sum(q * cum_loss, axis=-1)


def shannon_weights(cum_loss, eta: float) -> np.ndarray:
    """Closed-form minimizer: softmax of ``-eta * L``."""
    z = -eta * np.asarray(cum_loss, dtype=float)
    z -= z.max(axis=-1, keepdims=True)
    w = np.exp(z)
    return w / w.sum(axis=-1, keepdims=True)


def tsallis_weights(cum_loss, eta: float, beta: float, shift0=None, tol: float = SUM_TOL,
                    max_iter: int = 200):
    """Minimize the Tsallis-regularized linear objective over the simplex.

    Stationarity gives ``q_i = (c * (L_i - min L + s))^(-1/(1-beta))`` with
    ``c = eta (1-beta) / beta`` and a scalar ``s > 0`` chosen so that the
    weights sum to one. ``sum q(s)`` is strictly decreasing and convex in
    ``s``; the root is bracketed by ``[1/c, K^(1-beta)/c]`` and found with
    Newton steps that fall back to bisection whenever they leave the bracket.

    Returns ``(q, s)``; pass ``s`` back as ``shift0`` to warm start the next
    solve. Works row-wise on 2-d input.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    if eta <= 0.0:
        raise ValueError("eta must be positive")
    L = np.atleast_2d(np.asarray(cum_loss, dtype=float))
    if not np.all(np.isfinite(L)):
        raise SolverFailure("cumulative losses must be finite")
    n, k = L.shape
    if k == 1:
        q = np.ones((n, 1))
        return (q if np.ndim(cum_loss) == 2 else q[0]), np.full(n, np.nan)
    c = eta * (1.0 - beta) / beta
    expo = -1.0 / (1.0 - beta)
    D = L - L.min(axis=1, keepdims=True)
    lo = np.full(n, 1.0 / c)
    hi = np.full(n, k ** (1.0 - beta) / c)
    if shift0 is None:
        s = lo.copy()
    else:
        s = np.clip(np.asarray(shift0, dtype=float), lo, hi)
        s = np.where(np.isfinite(s), s, lo)

    for _ in range(max_iter):
        x = D + s[:, None]
        q = (c * x) ** expo
        g = q.sum(axis=1) - 1.0
        if np.all(np.abs(g) <= tol):
            break
        lo = np.where(g > 0.0, s, lo)
        hi = np.where(g < 0.0, s, hi)
        dg = expo * np.sum(q / x, axis=1)
        step = s - g / dg
        bad = ~((step > lo) & (step < hi))
        s = np.where(bad, 0.5 * (lo + hi), step)
    else:
        raise SolverFailure(f"normalization not reached within {max_iter} iterations")
    q = q / q.sum(axis=1, keepdims=True)
    if np.ndim(cum_loss) == 1:
        return q[0], s
    return q, s
