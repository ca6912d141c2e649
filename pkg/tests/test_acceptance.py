"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

from __future__ import annotations

import math
import time

import numpy as np

from somnus.algos import Ftarl, SbExp3, tsallis_objective, tsallis_weights, tune
from somnus.config import ExperimentConfig
from somnus.core import ActiveRound
from somnus.envs import lower_bound_env, lower_bound_interval, random_env
from somnus.estimators import ix_estimate, weighted_estimate_sum
from somnus.harness import lockstep_gap, run_experiment, simulate
from somnus.monitors import IXIdentityMonitor, LocalNormMonitor, PotentialGrowthMonitor
from somnus.oracle import GridSpec, exhaustive_expectation, grid_minimize

STOCHASTIC = {"name": "stochastic",
              "params": {"n_arms": 16, "n_active": 4, "mean_range": [0.2, 0.8], "seed": 0}}

CONFIGS = {
    1: {"algo": {"name": "sb-exp3", "tune": "expectation"}, "env": STOCHASTIC,
        "horizon": 4096, "replicates": 200, "base_seed": 1},
    2: {"algo": {"name": "ftarl", "tune": "ftarl"}, "env": STOCHASTIC,
        "horizon": 4096, "replicates": 200, "base_seed": 2},
    3: {"algo": {"name": "sb-exp3-anytime"}, "env": STOCHASTIC,
        "horizon": 4096, "replicates": 200, "base_seed": 3},
}

_reports: dict[int, str] = {}


def _run(number, threads=None):
    cfg = ExperimentConfig.from_dict(CONFIGS[number])
    t0 = time.perf_counter()
    rep = run_experiment(cfg, threads=threads)
    return rep, time.perf_counter() - t0


def _bound_check(number, theorem, verdict):
    rep, secs = _run(number)
    _reports[number] = rep.to_json()
    b = rep.bound
    assert b["theorem"] == theorem
    ok = rep.mean <= b["value"] and not rep.violations
    if number == 1:
        ok = ok and secs < 60
    verdict(number, ok, f"mean max-regret {rep.mean:.2f} +- {rep.summary['stderr']:.2f} vs bound "
                        f"{b['value']:.2f} (ratio {b['ratio']:.3f}, theorem {theorem}), "
                        f"{len(rep.violations)} violations, {secs:.1f}s")
    return ok


def test_criterion_01_sb_exp3_bound(verdict):
    assert _bound_check(1, "3.1", verdict)


def test_criterion_02_ftarl_bound(verdict):
    assert _bound_check(2, "3.4", verdict)


def test_criterion_03_anytime_bound(verdict):
    assert _bound_check(3, "3.8", verdict)


SCRIPT_SEEDS = range(10)


def _scripts():
    return [random_env(8, 1000, seed=100 + s, min_active=1, max_active=8) for s in SCRIPT_SEEDS]


def test_criterion_04_potential_growth_monitor(verdict):
    checks, violations = 0, 0
    for env in _scripts():
        eta = tune("expectation", g_T=env.n_seen, sum_a=env.sum_active).eta
        for gamma in (0.0, 0.05):
            mons = [PotentialGrowthMonitor(env.seen, rtol=1e-9), IXIdentityMonitor()]
            res = simulate(SbExp3(eta, gamma), env, 1000, base_seed=4, replicates=range(10),
                           monitors=mons)
            checks += sum(m.checks for m in mons[:1])
            violations += len(res.violations)
    ok = violations == 0
    verdict(4, ok, f"{checks} potential-growth checks over 10 scripts x 2 gammas, {violations} violations")
    assert ok


def test_criterion_05_local_norm_monitor(verdict):
    checks, violations = 0, 0
    for env in _scripts():
        eta = tune("ftarl", n_arms=env.n_arms, horizon=1000, max_active=env.max_active).eta
        for beta in (0.3, 0.5, 0.7):
            for gamma in (0.0, 0.05):
                mon = LocalNormMonitor(rtol=1e-9)
                res = simulate(Ftarl(eta, env.n_arms, gamma, beta), env, 1000, base_seed=5,
                               replicates=range(10), monitors=[mon])
                checks += mon.checks
                violations += len(res.violations)
    ok = violations == 0
    verdict(5, ok, f"{checks} local-norm checks over 10 scripts x 3 betas x 2 gammas, {violations} violations")
    assert ok


def test_criterion_06_shannon_equivalence(verdict):
    # learning rates: the tuned one, twice it, and 0.1; far larger rates let
    # roundoff compound through 1/p importance weights
    worst, runs = 0.0, 0
    for seed in range(3):
        env = random_env(10, 500, seed=200 + seed)
        tuned = tune("expectation", g_T=env.n_seen, sum_a=env.sum_active).eta
        for eta in (tuned, 2 * tuned, 0.1):
            for gamma in (0.0, 0.05):
                gaps = lockstep_gap(SbExp3(eta, gamma), Ftarl(eta, 10, gamma, "shannon"), env, 500, seed)
                worst = max(worst, float(gaps.max()))
                runs += 1
    ok = worst < 1e-9
    verdict(6, ok, f"max elementwise gap {worst:.2e} over 500 rounds, {runs} runs")
    assert ok


def test_criterion_07_solver_vs_oracle(verdict):
    rng = np.random.default_rng(7)
    worst_gap, worst_sum = -np.inf, 0.0
    for _ in range(100):
        k = int(rng.integers(2, 6))
        beta = float(rng.choice([0.3, 0.5, 0.7]))
        eta = float(rng.uniform(0.01, 1.0))
        L = rng.uniform(0.0, 10.0, k)
        q, _ = tsallis_weights(L, eta, beta)
        _, oracle = grid_minimize(lambda x: tsallis_objective(x, L, eta, beta), GridSpec(k))
        worst_gap = max(worst_gap, float(tsallis_objective(q, L, eta, beta)) - oracle)
        worst_sum = max(worst_sum, abs(math.fsum(q) - 1.0))
    ok = worst_gap <= 1e-6 and worst_sum <= 1e-12
    verdict(7, ok, f"max(solver - oracle) {worst_gap:.2e}, max |sum q - 1| {worst_sum:.1e} on 100 instances")
    assert ok


def test_criterion_08_estimator_identities(verdict):
    rng = np.random.default_rng(8)
    worst_bias, worst_ix = 0.0, 0.0
    for n in range(50):
        k = int(rng.integers(2, 6))
        binary = n % 2 == 0
        conf = (rng.random(k) < 0.6).astype(float) if binary else rng.random(k) * (rng.random(k) < 0.8)
        if not np.any(conf > 0):
            conf[int(rng.integers(k))] = 1.0
        r = ActiveRound(conf, binary=binary)
        w = conf * rng.uniform(0.1, 1.0, k)
        p = w / w.sum()
        losses = rng.random(k)
        gamma = float(rng.uniform(0.0, 0.5))
        mean = exhaustive_expectation(p, lambda i: ix_estimate(r, p, i, losses[i], 0.0))
        worst_bias = max(worst_bias, float(np.abs(mean - losses)[r.mask].max()))

        def ix_gap(i):
            est = ix_estimate(r, p, i, losses[i], gamma)
            return abs(np.sum(p * est) - (losses[i] - gamma * weighted_estimate_sum(r, est)))

        for i in r.active_set:
            worst_ix = max(worst_ix, ix_gap(i))
        worst_ix = max(worst_ix, exhaustive_expectation(p, ix_gap))
    ok = worst_bias <= 1e-12 and worst_ix <= 1e-12
    verdict(8, ok, f"max unbiasedness error {worst_bias:.1e}, max IX identity error {worst_ix:.1e} "
                   f"on 50 instances")
    assert ok


def test_criterion_09_scaling_law(verdict):
    horizons = [2**k for k in range(10, 15)]
    means = []
    for T in horizons:
        cfg = ExperimentConfig.from_dict({
            "algo": {"name": "sb-exp3", "tune": "expectation"},
            "env": {"name": "minimax", "params": {"n_arms": 16, "n_active": 4, "scale": 0.5, "seed": 0}},
            "horizon": T, "replicates": 100, "base_seed": 9, "monitors": False})
        means.append(run_experiment(cfg).mean)
    slope = float(np.polyfit(np.log(horizons), np.log(means), 1)[0])
    ok = 0.40 <= slope <= 0.60
    verdict(9, ok, f"log-log slope {slope:.3f}; mean max-regret "
                   + ", ".join(f"{m:.1f}" for m in means))
    assert ok


def test_criterion_10_tracking(verdict):
    env = {"name": "switching", "params": {"n_arms": 3, "segment_best_arms": [0, 1, 2], "gap": 0.4,
                                           "seed": 10}}
    t0 = time.perf_counter()
    restart = run_experiment(ExperimentConfig.from_dict({
        "algo": {"name": "se-exp4-restart", "tune": "tracking", "params": {"switches": 3}},
        "env": env, "horizon": 600, "replicates": 100, "base_seed": 10, "delta": 0.1}))
    baseline = run_experiment(ExperimentConfig.from_dict({
        "algo": {"name": "sb-exp3", "tune": "expectation"},
        "env": env, "horizon": 600, "replicates": 100, "base_seed": 10, "delta": 0.1}))
    secs = time.perf_counter() - t0
    ours, base = restart.tracking["mean"], baseline.tracking["mean"]
    bound = restart.bound
    ok = bound["theorem"] == "4.3" and ours <= bound["value"] and ours < base and secs < 300
    verdict(10, ok, f"tracking regret {ours:.1f} (restarted virtual SE-EXP4) vs bound {bound['value']:.1f}, "
                    f"baseline SB-EXP3 {base:.1f}, {secs:.0f}s")
    assert ok


def test_criterion_11_lower_bound(verdict):
    T, f, R = 1024, 64, 500
    v0 = lower_bound_env(T, f)
    L = T // (4 * f)
    eta = tune("expectation", g_T=v0.n_seen, sum_a=v0.sum_active).eta
    res = simulate(SbExp3(eta), v0, T, base_seed=11, replicates=range(R), record=True)
    chosen = np.zeros((R, T), dtype=int)
    for rec in res.records:
        chosen[rec["replicate"], rec["t"] - 1] = rec["chosen"]
    only_base = (chosen.reshape(R, 4 * f, L) == 0).all(axis=2)
    freq = only_base.mean(axis=0)
    k_star = int(np.argmax(freq)) + 1
    lo, hi = lower_bound_interval(k_star, T, f)
    vk = lower_bound_env(T, f, k_star)
    res_k = simulate(SbExp3(eta), vk, T, base_seed=11, replicates=range(R))
    regret = float(res_k.ledger.regret[:, k_star].mean())
    ok = freq[k_star - 1] >= 0.5 and regret >= 0.15 * L
    verdict(11, ok, f"k*={k_star} (rounds {lo}-{hi}) with P(only arm 1 on it)={freq[k_star - 1]:.3f}; "
                    f"E[R(k*)] on V_k* = {regret:.3f} vs 0.15 L = {0.15 * L:.2f}")
    assert ok


def test_criterion_12_determinism(verdict):
    missing = [n for n in CONFIGS if n not in _reports]
    for n in missing:
        _reports[n] = _run(n)[0].to_json()
    same_serial = all(_run(n)[0].to_json() == _reports[n] for n in CONFIGS)
    same_parallel = all(_run(n, threads=4)[0].to_json() == _reports[n] for n in CONFIGS)
    ok = same_serial and same_parallel
    verdict(12, ok, f"reports of criteria 1-3 byte-identical on rerun: serial {same_serial}, "
                    f"4 threads {same_parallel}")
    assert ok
