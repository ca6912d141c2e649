"""Episode runner, replicate orchestration and regret aggregation."""

from __future__ import annotations

import copy
import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .algos.base import Policy
from .bounds import theoretical_bound
from .core import RegretLedger, SomnusError, check_distribution, check_losses, sample
from .envs import AdaptiveEnvironment, EnvironmentScript
from .monitors import Monitor, Violation, default_monitors

THREADS_ENV = "SOMNUS_THREADS"


class EpisodeError(SomnusError):
    def __init__(self, message, round_index=None, replicate=None):
        super().__init__(message)
        self.round_index = round_index
        self.replicate = replicate


def replicate_stream(base_seed: int, replicate: int) -> np.random.Generator:
    """Independent stream for ``replicate``, derived from ``(base_seed, replicate)``."""
    return np.random.default_rng(np.random.SeedSequence([int(base_seed), int(replicate)]))


def replicate_uniforms(base_seed: int, replicates: Sequence[int], horizon: int) -> np.ndarray:
    """Pre-drawn sampling uniforms, one row per replicate."""
    return np.stack([replicate_stream(base_seed, r).random(horizon) for r in replicates]) \
        if len(replicates) else np.zeros((0, horizon))


def checkpoint_rounds(horizon: int) -> list[int]:
    """Powers of two up to ``horizon``, plus ``horizon`` itself."""
    out = [1 << k for k in range(max(horizon, 1).bit_length()) if (1 << k) <= horizon]
    if horizon and (not out or out[-1] != horizon):
        out.append(horizon)
    return out


@dataclass
class BatchResult:
    """Raw outcome of a batch of replicates on one environment."""

    replicates: list[int]
    ledger: RegretLedger
    checkpoints: list[int]
    max_regret_at: np.ndarray          # (n_checkpoints, R)
    regret_at: np.ndarray              # (n_checkpoints, R, K)
    tracking: np.ndarray | None        # (R,) or None
    violations: list[Violation]
    monitor_checks: int
    records: list[dict] | None = None

    @property
    def max_regret(self) -> np.ndarray:
        return self.ledger.max_regret


Hook = Callable[[int, Policy], None]


def simulate(policy: Policy, env, horizon: int, base_seed: int = 0,
             replicates: Sequence[int] = (0,), monitors: Sequence[Monitor] = (),
             hooks: Sequence[Hook] = (), record: bool = False,
             comparator=None) -> BatchResult:
    """Run ``len(replicates)`` independent learners for ``horizon`` rounds.

    On a scripted environment all replicates advance together; each one
    samples with its own pre-drawn uniforms, so a replicate's trajectory does
    not depend on which other replicates share the batch. Adaptive
    environments are run one replicate at a time.
    """
    replicates = [int(r) for r in replicates]
    if isinstance(env, AdaptiveEnvironment):
        parts = [_simulate_adaptive(policy, env, horizon, base_seed, r, monitors, hooks, record)
                 for r in replicates]
        return merge_batches(parts)
    if not isinstance(env, EnvironmentScript):
        raise SomnusError("environment must be a script or an AdaptiveEnvironment")
    if horizon > env.horizon:
        raise SomnusError(f"horizon {horizon} exceeds the script length {env.horizon}")
    if comparator is None:
        comparator = env.metadata.get("comparator")
    comparator = None if comparator is None else np.asarray(comparator, dtype=int)

    n = len(replicates)
    uniforms = replicate_uniforms(base_seed, replicates, horizon)
    policy.reset(n)
    for m in monitors:
        m.attach(policy)
        m.replicate_offset = replicates[0] if replicates else 0
    ledger = RegretLedger(n, env.n_arms)
    cps = checkpoint_rounds(horizon)
    max_at = np.zeros((len(cps), n))
    reg_at = np.zeros((len(cps), n, env.n_arms))
    tracking = np.zeros(n) if comparator is not None else None
    records = [] if record else None
    ci = 0
    for t in range(horizon):
        round_ = env.round(t)
        losses = env.losses[t]
        try:
            probs = check_distribution(policy.distribution(round_), round_)
            for m in monitors:
                m.before(t, policy, round_, probs)
            chosen = sample(probs, uniforms[:, t])
            observed = losses[chosen]
            policy.update(round_, probs, chosen, observed)
            for h in hooks:
                h(t, policy)
            for m in monitors:
                m.after(t, policy, round_, probs, chosen, observed)
            ledger.update(round_, losses, chosen, observed)
        except SomnusError as exc:
            raise EpisodeError(f"round {t + 1}: {exc}", round_index=t + 1) from exc
        if tracking is not None:
            tracking += observed - losses[comparator[t]]
        if records is not None:
            for j, r in enumerate(replicates):
                records.append({"replicate": r, "t": t + 1, "chosen": int(chosen[j]),
                                "observed": float(observed[j]),
                                "p_chosen": float(probs[j, chosen[j]])})
        if ci < len(cps) and t + 1 == cps[ci]:
            max_at[ci] = ledger.max_regret
            reg_at[ci] = ledger.regret
            ci += 1
    violations = [v for m in monitors for v in m.violations]
    return BatchResult(replicates, ledger, cps, max_at, reg_at, tracking, violations,
                       sum(m.checks for m in monitors), records)


def _simulate_adaptive(policy, env: AdaptiveEnvironment, horizon, base_seed, replicate, monitors,
                       hooks, record) -> BatchResult:
    uniforms = replicate_uniforms(base_seed, [replicate], horizon)
    env.reset([int(base_seed), int(replicate), 1])
    policy.reset(1)
    start = [(len(m.violations), m.checks) for m in monitors]
    for m in monitors:
        m.attach(policy)
        m.replicate_offset = replicate
    ledger = RegretLedger(1, env.n_arms)
    cps = checkpoint_rounds(horizon)
    max_at = np.zeros((len(cps), 1))
    reg_at = np.zeros((len(cps), 1, env.n_arms))
    records = [] if record else None
    ci = 0
    for t in range(horizon):
        try:
            round_, losses = env.reveal(t)
            losses = check_losses(round_, losses)
            probs = check_distribution(policy.distribution(round_), round_)
            for m in monitors:
                m.before(t, policy, round_, probs)
            chosen = sample(probs, uniforms[:, t])
            observed = losses[chosen]
            policy.update(round_, probs, chosen, observed)
            for h in hooks:
                h(t, policy)
            for m in monitors:
                m.after(t, policy, round_, probs, chosen, observed)
            ledger.update(round_, losses, chosen, observed)
            env.observe(int(chosen[0]))
        except SomnusError as exc:
            raise EpisodeError(f"round {t + 1}: {exc}", round_index=t + 1, replicate=replicate) from exc
        if records is not None:
            records.append({"replicate": replicate, "t": t + 1, "chosen": int(chosen[0]),
                            "observed": float(observed[0]), "p_chosen": float(probs[0, chosen[0]])})
        if ci < len(cps) and t + 1 == cps[ci]:
            max_at[ci] = ledger.max_regret
            reg_at[ci] = ledger.regret
            ci += 1
    violations = [v for m, (n, _) in zip(monitors, start) for v in m.violations[n:]]
    checks = sum(m.checks - c for m, (_, c) in zip(monitors, start))
    return BatchResult([replicate], ledger, cps, max_at, reg_at, None, violations, checks, records)


def merge_batches(parts: Sequence[BatchResult]) -> BatchResult:
    """Concatenate batches in replicate order."""
    parts = sorted(parts, key=lambda b: b.replicates[0] if b.replicates else -1)
    if len(parts) == 1:
        return parts[0]
    k = max(p.ledger.n_arms for p in parts)
    ledger = RegretLedger(sum(len(p.replicates) for p in parts), k)
    ledger.learner = np.concatenate([np.pad(p.ledger.learner, ((0, 0), (0, k - p.ledger.n_arms)))
                                     for p in parts])
    ledger.comparator = np.concatenate([np.pad(p.ledger.comparator, ((0, 0), (0, k - p.ledger.n_arms)))
                                        for p in parts])
    ledger.active_rounds = np.pad(parts[0].ledger.active_rounds, (0, k - parts[0].ledger.n_arms))
    ledger.t = parts[0].ledger.t
    reg_at = np.concatenate([np.pad(p.regret_at, ((0, 0), (0, 0), (0, k - p.regret_at.shape[2])))
                             for p in parts], axis=1)
    tracking = None
    if all(p.tracking is not None for p in parts):
        tracking = np.concatenate([p.tracking for p in parts])
    records = None
    if all(p.records is not None for p in parts):
        records = [rec for p in parts for rec in p.records]
    return BatchResult(
        [r for p in parts for r in p.replicates], ledger, parts[0].checkpoints,
        np.concatenate([p.max_regret_at for p in parts], axis=1), reg_at, tracking,
        sorted((v for p in parts for v in p.violations), key=lambda v: (v.replicate, v.round, v.monitor)),
        sum(p.monitor_checks for p in parts), records)


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise SomnusError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def run_replicates(policy_factory: Callable[[], Policy], env, horizon: int, n_replicates: int,
                   base_seed: int = 0, monitor_factory: Callable[[Policy], list] | None = None,
                   threads: int | None = None, hooks: Sequence[Hook] = (), record: bool = False,
                   comparator=None) -> BatchResult:
    """Run replicates ``0..n-1``, split into ``threads`` chunks executed concurrently.

    Chunking never changes any replicate's numbers, so the merged result is
    identical for every thread count.
    """
    if n_replicates < 1:
        raise SomnusError("replicates must be >= 1")
    threads = thread_count() if threads is None else max(1, int(threads))
    chunks = [c.tolist() for c in np.array_split(np.arange(n_replicates), min(threads, n_replicates))]

    def work(chunk):
        policy = policy_factory()
        # adaptive environments are stateful: one instance per chunk
        local_env = copy.deepcopy(env) if isinstance(env, AdaptiveEnvironment) else env
        monitors = monitor_factory(policy) if monitor_factory else []
        try:
            return simulate(policy, local_env, horizon, base_seed, chunk, monitors, hooks, record, comparator)
        except EpisodeError as exc:
            if exc.replicate is None and len(chunk) == 1:
                exc.replicate = chunk[0]
            raise

    if len(chunks) == 1:
        return work(chunks[0])
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        parts = list(pool.map(work, chunks))
    return merge_batches(parts)


@dataclass
class EpisodeTrace:
    records: list[dict]
    ledger: RegretLedger
    violations: list[Violation] = field(default_factory=list)

    def __len__(self):
        return len(self.records)


def run_episode(policy: Policy, env, horizon: int, seed: int = 0, monitors: Sequence[Monitor] = (),
                hooks: Sequence[Hook] = ()) -> EpisodeTrace:
    """One episode with full per-round records (replicate 0 of ``seed``)."""
    res = simulate(policy, env, horizon, seed, [0], monitors, hooks, record=True)
    return EpisodeTrace(res.records, res.ledger, res.violations)


def summarize(values) -> dict:
    values = np.asarray(values, dtype=float)
    n = values.size
    mean = float(values.mean()) if n else math.nan
    stderr = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return {"mean": mean, "stderr": stderr, "min": float(values.min()) if n else math.nan,
            "max": float(values.max()) if n else math.nan}


def write_trace_csv(path, records: Sequence[dict]):
    """Trace CSV with 1-based arms and rounds."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["replicate", "t", "chosen_arm", "observed_loss"])
        for rec in sorted(records, key=lambda r: (r["replicate"], r["t"])):
            w.writerow([rec["replicate"], rec["t"], rec["chosen"] + 1, repr(float(rec["observed"]))])


@dataclass
class RegretReport:
    """Aggregated outcome of one experiment; ``to_json`` is deterministic."""

    config: dict
    tuning: dict
    stats: dict
    per_replicate: list[float]
    summary: dict
    checkpoints: list[int]
    mean_max_regret_at: list[float]
    mean_regret_at: list[list[float]]
    tracking: dict | None
    bound: dict | None
    monitors: dict
    records: list[dict] | None = field(default=None, repr=False)

    @property
    def mean(self) -> float:
        return self.summary["mean"]

    @property
    def violations(self) -> list[dict]:
        return self.monitors["violations"]

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "config": self.config,
            "tuning": self.tuning,
            "environment": self.stats,
            "max_regret": dict(self.summary, per_replicate=self.per_replicate),
            "checkpoints": {"t": self.checkpoints, "mean_max_regret": self.mean_max_regret_at,
                            "mean_regret_by_arm": self.mean_regret_at},
            "tracking_regret": self.tracking,
            "bound": self.bound,
            "monitors": self.monitors,
        }

    def to_json(self) -> str:
        return json.dumps(_plain(self.to_dict()), sort_keys=True, indent=2) + "\n"

    def summary_line(self) -> str:
        line = f"mean max-regret {self.mean:.4f} (stderr {self.summary['stderr']:.4f}, " \
               f"{len(self.per_replicate)} replicates)"
        if self.bound is not None:
            line += f"; bound {self.bound['value']:.4f} (theorem {self.bound['theorem']}); " \
                    f"ratio {self.bound['ratio']:.4f}"
        if self.tracking is not None:
            line += f"; tracking {self.tracking['mean']:.4f}"
        n = len(self.violations)
        if self.monitors["enabled"]:
            line += f"; {n} monitor violation{'s' if n != 1 else ''}"
        return line


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def run_experiment(config, hooks: Sequence[Hook] = (), record: bool = False,
                   threads: int | None = None) -> RegretReport:
    """Monte-Carlo estimate of the configured experiment's regret.

    ``config`` is an :class:`~somnus.config.ExperimentConfig` (or a dict in
    its JSON layout). Replicate ``r`` draws from ``(base_seed, r)``.
    """
    from .config import ExperimentConfig, plan

    if isinstance(config, dict):
        config = ExperimentConfig.from_dict(config)
    pl = plan(config)
    script = pl.env if isinstance(pl.env, EnvironmentScript) else None
    monitor_factory = (lambda p: default_monitors(p, script)) if config.monitors else None
    res = run_replicates(pl.factory, pl.env, config.horizon, config.replicates, config.base_seed,
                         monitor_factory, threads, hooks, record)
    per_rep = res.max_regret
    summary = summarize(per_rep)
    tracking = None
    if res.tracking is not None:
        tracking = dict(summarize(res.tracking), per_replicate=res.tracking.tolist())
    bound = None
    if pl.theorem is not None and config.horizon > 0:
        value = theoretical_bound(pl.theorem, **pl.bound_params)
        ref = tracking["mean"] if pl.theorem == "4.3" and tracking is not None else summary["mean"]
        bound = {"theorem": pl.theorem, "params": pl.bound_params, "value": value,
                 "ratio": ref / value if value else None}
    return RegretReport(
        config=config.to_dict(),
        tuning={"eta": pl.eta, "gamma": pl.gamma, "beta": pl.beta},
        stats=pl.stats,
        per_replicate=per_rep.tolist(),
        summary=summary,
        checkpoints=list(res.checkpoints),
        mean_max_regret_at=res.max_regret_at.mean(axis=1).tolist() if res.checkpoints else [],
        mean_regret_at=res.regret_at.mean(axis=1).tolist() if res.checkpoints else [],
        tracking=tracking,
        bound=bound,
        monitors={"enabled": config.monitors, "checks": res.monitor_checks,
                  "violations": [v.to_dict() for v in res.violations]},
        records=res.records,
    )


def lockstep_gap(first: Policy, second: Policy, env: EnvironmentScript, horizon: int,
                 seed: int = 0) -> np.ndarray:
    """Per-round max elementwise gap between two policies' distributions.

    Both policies see the same rounds and are updated with the same arm,
    drawn from ``first``'s distribution with replicate-0 uniforms of ``seed``.
    """
    u = replicate_uniforms(seed, [0], horizon)
    first.reset(1)
    second.reset(1)
    gaps = np.zeros(horizon)
    for t in range(horizon):
        round_ = env.round(t)
        p = check_distribution(first.distribution(round_), round_)
        q = check_distribution(second.distribution(round_), round_)
        gaps[t] = np.max(np.abs(p - q))
        chosen = sample(p, u[:, t])
        observed = env.losses[t][chosen]
        first.update(round_, p, chosen, observed)
        second.update(round_, q, chosen, observed)
    return gaps
