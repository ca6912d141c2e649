"""Closed-form regret bounds, evaluated exactly as stated.

Parameter names: ``g_T`` (arms ever active), ``sum_a`` (sum of active-set
sizes), ``sum_conf`` (sum of all confidences), ``n_arms`` (K), ``horizon``
(T), ``max_active`` (A), ``n_experts`` (M), ``switches`` (S), plus ``eta``,
``gamma``, ``beta`` and ``delta``.
"""

from __future__ import annotations

import math

from .core import InvalidParameter

ANYTIME_CONSTANT = 4.0 / (math.sqrt(2.0) - 1.0) ** 2


def _sb_exp3_expectation(g_T, sum_a, eta):
    return math.log(g_T) / eta + eta / 2.0 * sum_a


def _sb_exp3_high_prob(g_T, sum_a, eta, gamma, delta):
    return (math.log(g_T) / eta + math.log(2.0 * g_T / delta) / gamma
            + (eta / 2.0 + gamma) * sum_a)


def _ftarl_expectation(n_arms, horizon, max_active, eta, beta):
    return (n_arms ** (1.0 - beta) / (eta * (1.0 - beta))
            + eta / (2.0 * beta) * horizon * max_active**beta)


def _ftarl_high_prob(n_arms, horizon, max_active, eta, beta, gamma, delta):
    return (n_arms ** (1.0 - beta) / (eta * (1.0 - beta))
            + eta * max_active**beta * horizon / beta
            + gamma * max_active * horizon
            + ((eta + beta) / (2.0 * beta * gamma) + 0.5) * math.log(3.0 / delta))


def _confidence(g_T, sum_conf, gamma, delta):
    return 3.0 * math.log(g_T / delta) / gamma + 3.0 * gamma * sum_conf


def _anytime(g_T, sum_a):
    return ANYTIME_CONSTANT * math.sqrt(math.log(g_T) * sum_a)


def _se_exp4(n_experts, horizon, n_arms, eta, gamma, delta):
    return (math.log(n_experts) / eta + math.log(2.0 * n_experts / delta) / (2.0 * gamma)
            + (gamma + eta / 2.0) * horizon * n_arms + math.log(2.0 / delta))


def _adaptive(horizon, n_arms, eta, gamma, delta):
    kt = n_arms * horizon
    return (2.0 * math.log(kt) / eta + math.log(kt / delta) / gamma
            + (gamma + eta / 2.0) * horizon * n_arms + math.log(2.0 / delta))


def _tracking(horizon, n_arms, switches, eta, delta):
    s = switches
    return (4.0 * s / eta * math.log(n_arms * horizon / (s * delta))
            + 2.0 * eta * horizon * n_arms + 2.0 * s * math.log(2.0 * s / delta))


THEOREMS = {
    "3.1": (_sb_exp3_expectation, ("g_T", "sum_a", "eta")),
    "3.2": (_sb_exp3_high_prob, ("g_T", "sum_a", "eta", "gamma", "delta")),
    "3.4": (_ftarl_expectation, ("n_arms", "horizon", "max_active", "eta", "beta")),
    "3.5": (_ftarl_high_prob, ("n_arms", "horizon", "max_active", "eta", "beta", "gamma", "delta")),
    "3.7": (_confidence, ("g_T", "sum_conf", "gamma", "delta")),
    "3.8": (_anytime, ("g_T", "sum_a")),
    "4.1": (_se_exp4, ("n_experts", "horizon", "n_arms", "eta", "gamma", "delta")),
    "4.2": (_adaptive, ("horizon", "n_arms", "eta", "gamma", "delta")),
    "4.3": (_tracking, ("horizon", "n_arms", "switches", "eta", "delta")),
}


def required_params(theorem: str) -> tuple[str, ...]:
    try:
        return THEOREMS[str(theorem)][1]
    except KeyError:
        raise InvalidParameter(f"unknown theorem {theorem!r}; known: {sorted(THEOREMS)}") from None


def theoretical_bound(theorem: str, **params) -> float:
    """Evaluate the regret bound of ``theorem`` (e.g. ``"3.1"``)."""
    names = required_params(theorem)
    missing = [n for n in names if params.get(n) is None]
    if missing:
        raise InvalidParameter(f"theorem {theorem} needs parameter(s): {', '.join(missing)}")
    fn = THEOREMS[str(theorem)][0]
    try:
        return float(fn(**{n: float(params[n]) for n in names}))
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidParameter(f"theorem {theorem}: invalid parameters ({exc})") from None
