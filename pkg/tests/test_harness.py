from __future__ import annotations

import csv
import math

import numpy as np
import pytest

from somnus.algos import Ftarl, SbExp3
from somnus.bounds import ANYTIME_CONSTANT, THEOREMS, required_params, theoretical_bound
from somnus.config import ExperimentConfig
from somnus.core import InvalidParameter
from somnus.envs import ChasingAdversary, EnvironmentScript, random_env, stochastic_env
from somnus.harness import (EpisodeError, checkpoint_rounds, run_episode, run_experiment,
                            run_replicates, simulate, write_trace_csv)
from somnus.monitors import (IXIdentityMonitor, LocalNormMonitor, PotentialGrowthMonitor,
                             default_monitors)


def _cfg(**over):
    doc = {"algo": {"name": "sb-exp3", "tune": "expectation"},
           "env": {"name": "random", "params": {"n_arms": 6, "seed": 3}},
           "horizon": 200, "replicates": 8, "base_seed": 5}
    doc.update(over)
    return ExperimentConfig.from_dict(doc)


# --- episodes

def test_empty_episode():
    env = random_env(3, 10, seed=0)
    tr = run_episode(SbExp3(0.1), env, 0, seed=1)
    assert len(tr) == 0
    assert np.all(tr.ledger.regret == 0.0)


def test_forced_play_has_zero_regret():
    conf = np.zeros((50, 4))
    conf[np.arange(50), np.arange(50) % 4] = 1.0
    losses = np.random.default_rng(0).random((50, 4))
    env = EnvironmentScript(conf, losses, True)
    tr = run_episode(SbExp3(0.5), env, 50, seed=2)
    assert np.all(tr.ledger.regret == 0.0)


def test_same_seed_same_trace():
    env = random_env(5, 100, seed=1)
    a = run_episode(SbExp3(0.2), env, 100, seed=9)
    b = run_episode(SbExp3(0.2), env, 100, seed=9)
    c = run_episode(SbExp3(0.2), env, 100, seed=10)
    assert a.records == b.records
    assert a.records != c.records


def test_trace_consistent_with_ledger():
    env = random_env(4, 60, seed=2)
    tr = run_episode(Ftarl(0.3, 4), env, 60, seed=3)
    assert len(tr) == 60
    regret = np.zeros(4)
    for rec in tr.records:
        t = rec["t"] - 1
        mask = env.confidences[t] > 0
        regret[mask] += rec["observed"] - env.losses[t][mask]
    np.testing.assert_allclose(tr.ledger.regret[0], regret, atol=1e-12)


def test_replicate_independent_of_batch():
    env = random_env(5, 150, seed=4)
    solo = simulate(SbExp3(0.3), env, 150, base_seed=7, replicates=[3])
    batch = simulate(SbExp3(0.3), env, 150, base_seed=7, replicates=range(6))
    np.testing.assert_array_equal(solo.ledger.regret[0], batch.ledger.regret[3])
    ep = run_episode(SbExp3(0.3), env, 150, seed=7)
    np.testing.assert_array_equal(ep.ledger.regret[0], batch.ledger.regret[0])


def test_errors_carry_round_index():
    class Broken(SbExp3):
        def distribution(self, round_):
            p = super().distribution(round_)
            if self.t == 4:
                p = p * 2
            return p

    env = random_env(3, 10, seed=0)
    with pytest.raises(EpisodeError) as info:
        simulate(Broken(0.1), env, 10)
    assert info.value.round_index == 5
    with pytest.raises(EpisodeError) as info:
        run_replicates(lambda: Broken(0.1), env, 10, 3, threads=3)
    assert info.value.replicate == 0


def test_checkpoints():
    assert checkpoint_rounds(0) == []
    assert checkpoint_rounds(1) == [1]
    assert checkpoint_rounds(8) == [1, 2, 4, 8]
    assert checkpoint_rounds(10) == [1, 2, 4, 8, 10]


def test_adaptive_environment_runs():
    env = ChasingAdversary(5, 3)
    res = run_replicates(lambda: SbExp3(0.2), env, 100, 3, base_seed=1)
    again = run_replicates(lambda: SbExp3(0.2), env, 100, 3, base_seed=1, threads=2)
    np.testing.assert_array_equal(res.ledger.regret, again.ledger.regret)
    assert res.ledger.regret.shape == (3, 5)


# --- experiments

def test_single_replicate_report():
    rep = run_experiment(_cfg(replicates=1))
    pol = SbExp3(rep.tuning["eta"])
    env = random_env(6, 200, seed=3)
    tr = run_episode(pol, env, 200, seed=5)
    assert rep.per_replicate == [float(tr.ledger.max_regret[0])]
    assert rep.summary["mean"] == rep.summary["min"] == rep.summary["max"]
    assert rep.summary["stderr"] == 0.0


def test_report_mean_within_range_and_bound_uses_run_parameters():
    rep = run_experiment(_cfg())
    assert rep.summary["min"] <= rep.mean <= rep.summary["max"]
    b = rep.bound
    assert b["theorem"] == "3.1"
    assert b["params"]["eta"] == rep.tuning["eta"]
    env = random_env(6, 200, seed=3)
    assert b["params"]["g_T"] == env.n_seen and b["params"]["sum_a"] == env.sum_active
    assert b["value"] == theoretical_bound("3.1", **b["params"])
    assert rep.checkpoints[-1] == 200
    assert rep.mean_max_regret_at[-1] == pytest.approx(rep.mean)


def test_stderr_scaling():
    small = run_experiment(_cfg(replicates=400, monitors=False))
    big = run_experiment(_cfg(replicates=800, monitors=False))
    ratio = big.summary["stderr"] / small.summary["stderr"]
    assert abs(ratio - 1 / math.sqrt(2)) <= 0.3 / math.sqrt(2)


def test_parallel_report_is_bit_identical(monkeypatch):
    serial = run_experiment(_cfg(replicates=10), threads=1).to_json()
    assert run_experiment(_cfg(replicates=10), threads=4).to_json() == serial
    monkeypatch.setenv("SOMNUS_THREADS", "3")
    assert run_experiment(_cfg(replicates=10)).to_json() == serial


def test_trace_csv(tmp_path):
    rep = run_experiment(_cfg(replicates=2, horizon=5), record=True)
    path = tmp_path / "t.csv"
    write_trace_csv(path, rep.records)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["replicate", "t", "chosen_arm", "observed_loss"]
    assert len(rows) == 11
    assert [r[:2] for r in rows[1:4]] == [["0", "1"], ["0", "2"], ["0", "3"]]
    assert all(1 <= int(r[2]) <= 6 for r in rows[1:])


# --- bounds

def test_bound_examples():
    assert theoretical_bound("3.1", g_T=16, sum_a=4096, eta=0.03679) == pytest.approx(150.7, abs=0.05)
    expected = 4 / (math.sqrt(2) - 1) ** 2 * math.sqrt(math.log(16) * 4096)
    assert theoretical_bound("3.8", g_T=16, sum_a=4096) == pytest.approx(expected, rel=1e-15)
    assert ANYTIME_CONSTANT == pytest.approx(23.3137, abs=1e-4)


def test_bound_large_eta_limit():
    vals = [theoretical_bound("3.1", g_T=16, sum_a=4096, eta=e) for e in (10.0, 100.0, 1000.0)]
    assert vals == sorted(vals)
    assert vals[-1] / (1000.0 / 2 * 4096) == pytest.approx(1.0, rel=1e-8)


def test_bound_missing_parameter():
    with pytest.raises(InvalidParameter, match="eta"):
        theoretical_bound("3.1", g_T=16, sum_a=4096)
    with pytest.raises(InvalidParameter):
        theoretical_bound("9.9")


def test_every_theorem_evaluates():
    values = dict(g_T=16, sum_a=4096, sum_conf=2000.0, n_arms=16, horizon=1024, max_active=4,
                  n_experts=64, switches=3, eta=0.05, gamma=0.025, beta=0.5, delta=0.1)
    for thm in THEOREMS:
        v = theoretical_bound(thm, **{k: values[k] for k in required_params(thm)})
        assert math.isfinite(v) and v > 0


# --- monitors

def _run_with(policy, env, monitors, hooks=()):
    return simulate(policy, env, env.horizon, base_seed=1, replicates=range(4), monitors=monitors,
                    hooks=hooks)


@pytest.mark.parametrize("gamma", [0.0, 0.05])
def test_potential_growth_clean(gamma):
    env = random_env(8, 300, seed=6)
    res = _run_with(SbExp3(0.2, gamma), env, [PotentialGrowthMonitor(env.seen)])
    assert res.violations == [] and res.monitor_checks == 4 * 300


@pytest.mark.parametrize("beta", [0.3, 0.7])
def test_local_norm_clean(beta):
    env = random_env(6, 300, seed=7)
    res = _run_with(Ftarl(0.3, 6, 0.05, beta), env, [LocalNormMonitor(), IXIdentityMonitor()])
    assert res.violations == []


def test_potential_growth_detects_corruption():
    env = random_env(5, 50, seed=1)

    def corrupt(t, policy):
        if t == 9:
            policy.Z[:, 0] += 50.0

    res = _run_with(SbExp3(0.2), env, [PotentialGrowthMonitor(env.seen)], hooks=[corrupt])
    assert {v.round for v in res.violations} == {10}
    assert sorted(v.replicate for v in res.violations) == [0, 1, 2, 3]


def test_default_monitors_selection():
    env = random_env(4, 10, seed=0)
    names = lambda ms: sorted(m.name for m in ms)
    assert names(default_monitors(SbExp3(0.1), env)) == ["ix-identity", "potential-growth"]
    assert names(default_monitors(Ftarl(0.1, 4), env)) == ["ix-identity", "local-norm"]
    assert names(default_monitors(Ftarl(0.1, 4, beta="shannon"), env)) == ["ix-identity"]
    with pytest.raises(InvalidParameter):
        LocalNormMonitor().attach(SbExp3(0.1))


def test_stochastic_run_reports_zero_violations():
    rep = run_experiment(ExperimentConfig.from_dict({
        "algo": {"name": "ftarl", "tune": "ftarl"},
        "env": {"name": "stochastic", "params": {"n_arms": 6, "n_active": 3}},
        "horizon": 300, "replicates": 5}))
    assert rep.monitors["checks"] > 0 and rep.violations == []
