"""Learning-rate tuning that minimizes the closed-form regret bounds."""

from __future__ import annotations

import math
from typing import NamedTuple

from ..core import InvalidParameter

MODES = ("expectation", "high-probability", "ftarl", "confidence", "se-exp4", "tracking")


class Tuning(NamedTuple):
    eta: float
    gamma: float
    beta: float | None = None


def _need(name, value, minimum=0.0, strict=True):
    if value is None:
        raise InvalidParameter(f"tuning needs '{name}'")
    if (strict and value <= minimum) or (not strict and value < minimum):
        raise InvalidParameter(f"invalid horizon: {name}={value!r}")
    return float(value)


def tune(mode: str, *, g_T=None, sum_a=None, delta=None, n_arms=None, horizon=None,
         max_active=None, sum_conf=None, n_experts=None, switches=None) -> Tuning:
    """Return ``(eta, gamma, beta)`` for one of :data:`MODES`.

    ``expectation``       eta = sqrt(2 ln G / sum A), gamma = 0
    ``high-probability``  gamma = eta / 2 and eta minimizing the resulting
                          bound, sqrt((ln G + 2 ln(2G/delta)) / sum A)
    ``ftarl``             beta = 1/2, eta = sqrt(2 sqrt(K) / (T sqrt(A)))
    ``confidence``        gamma = eta = sqrt(ln(G/delta) / sum of confidences)
    ``se-exp4``           eta = 2 gamma = sqrt((ln M + ln(2M/delta)) / (T K))
    ``tracking``          eta = 2 gamma = sqrt(2 S ln(KT/(S delta)) / (T K))
    """
    if mode == "expectation":
        g = _need("g_T", g_T, 1.0)
        s = _need("sum_a", sum_a)
        eta = math.sqrt(2.0 * math.log(g) / s)
        return Tuning(eta, 0.0)
    if mode == "high-probability":
        g = _need("g_T", g_T, 1.0, strict=False)
        s = _need("sum_a", sum_a)
        d = _need("delta", delta)
        eta = math.sqrt((math.log(g) + 2.0 * math.log(2.0 * g / d)) / s)
        return Tuning(eta, eta / 2.0)
    if mode == "ftarl":
        k = _need("n_arms", n_arms)
        t = _need("horizon", horizon)
        a = _need("max_active", max_active)
        return Tuning(math.sqrt(2.0 * math.sqrt(k) / (t * math.sqrt(a))), 0.0, 0.5)
    if mode == "confidence":
        g = _need("g_T", g_T, 1.0, strict=False)
        s = _need("sum_conf", sum_conf)
        d = _need("delta", delta)
        if math.log(g / d) <= 0:
            raise InvalidParameter("invalid horizon: ln(G/delta) must be positive")
        eta = math.sqrt(math.log(g / d) / s)
        return Tuning(eta, eta)
    if mode == "se-exp4":
        m = _need("n_experts", n_experts, 1.0, strict=False)
        t = _need("horizon", horizon)
        k = _need("n_arms", n_arms)
        d = _need("delta", delta)
        eta = math.sqrt((math.log(m) + math.log(2.0 * m / d)) / (t * k))
        return Tuning(eta, eta / 2.0)
    if mode == "tracking":
        t = _need("horizon", horizon)
        k = _need("n_arms", n_arms)
        s = _need("switches", switches)
        d = _need("delta", delta)
        inner = math.log(k * t / (s * d))
        if inner <= 0:
            raise InvalidParameter("invalid horizon: ln(KT/(S delta)) must be positive")
        eta = math.sqrt(2.0 * s * inner / (t * k))
        return Tuning(eta, eta / 2.0)
    raise InvalidParameter(f"unknown tuning mode {mode!r}; expected one of {MODES}")
