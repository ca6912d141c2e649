"""Experiment configuration (JSON, ``"schema": 1``) and the builders it drives."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .algos import Ftarl, Policy, SbExp3, SbExp3Anytime, tune
from .core import InvalidParameter, SomnusError
from .envs import (AdaptiveEnvironment, ChasingAdversary, EnvironmentScript, confidence_env,
                   default_lower_bound_f, lower_bound_env, minimax_env, random_env, stochastic_env, switching_env)
from .experts import AdviceMatrix, Restarted, SeExp4, VirtualSeExp4

CONFIG_SCHEMA = 1

ALGORITHMS = ("sb-exp3", "sb-exp3-confidence", "ftarl", "ftarl-shannon", "sb-exp3-anytime",
              "se-exp4", "se-exp4-virtual", "se-exp4-restart")
ENVIRONMENTS = ("stochastic", "minimax", "random", "lower-bound", "switching", "confidence", "script", "chasing")

# tune modes each algorithm accepts; the first is the default suggestion
_TUNE_MODES = {
    "sb-exp3": ("expectation", "high-probability"),
    "sb-exp3-confidence": ("confidence",),
    "ftarl": ("ftarl",),
    "ftarl-shannon": ("expectation", "high-probability"),
    "sb-exp3-anytime": (),
    "se-exp4": ("se-exp4",),
    "se-exp4-virtual": ("se-exp4",),
    "se-exp4-restart": ("tracking",),
}


class ConfigError(SomnusError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, message, field=None, path=None):
        where = f"{path}: " if path else ""
        what = f"{field}: " if field else ""
        super().__init__(f"{where}{what}{message}")
        self.field = field
        self.path = path


@dataclass
class AlgoConfig:
    name: str
    eta: float | None = None
    gamma: float | None = None
    beta: float | str | None = None
    tune: str | None = None
    # algorithm extras: se-exp4 advisor/n_experts/seed, restart switches
    params: dict = field(default_factory=dict)


@dataclass
class EnvConfig:
    name: str
    params: dict = field(default_factory=dict)


@dataclass
class ExperimentConfig:
    algo: AlgoConfig
    env: EnvConfig
    horizon: int
    replicates: int = 1
    base_seed: int = 0
    delta: float = 0.1
    monitors: bool = True
    report: str | None = None
    trace: str | None = None
    schema: int = CONFIG_SCHEMA

    def to_dict(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, doc: dict, path=None) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object", path=path)
        schema = doc.get("schema", CONFIG_SCHEMA)
        if schema != CONFIG_SCHEMA:
            raise ConfigError(f"unsupported schema {schema!r}", "schema", path)
        known = {"algo", "env", "horizon", "replicates", "base_seed", "delta", "monitors",
                 "report", "trace", "schema"}
        extra = sorted(set(doc) - known)
        if extra:
            raise ConfigError(f"unknown field(s) {extra}", extra[0], path)
        for key in ("algo", "env", "horizon"):
            if key not in doc:
                raise ConfigError("missing required field", key, path)
        algo, env = doc["algo"], doc["env"]
        if not isinstance(algo, dict) or "name" not in algo:
            raise ConfigError("needs an object with a 'name'", "algo", path)
        if not isinstance(env, dict) or "name" not in env:
            raise ConfigError("needs an object with a 'name'", "env", path)
        bad = sorted(set(algo) - {"name", "eta", "gamma", "beta", "tune", "params"})
        if bad:
            raise ConfigError(f"unknown field(s) {bad}", f"algo.{bad[0]}", path)
        bad = sorted(set(env) - {"name", "params"})
        if bad:
            raise ConfigError(f"unknown field(s) {bad}", f"env.{bad[0]}", path)
        cfg = cls(
            algo=AlgoConfig(**{k: v for k, v in algo.items()}),
            env=EnvConfig(env["name"], dict(env.get("params") or {})),
            horizon=doc["horizon"],
            **{k: doc[k] for k in ("replicates", "base_seed", "delta", "monitors", "report", "trace")
               if k in doc},
        )
        cfg.validate(path)
        return cfg

    @classmethod
    def loads(cls, text: str, path=None) -> "ExperimentConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"not valid JSON ({exc})", path=path) from None
        return cls.from_dict(doc, path)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config ({exc.strerror})", path=str(path)) from None
        return cls.loads(text, str(path))

    def validate(self, path=None) -> "ExperimentConfig":
        a = self.algo
        if a.name not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {a.name!r}; expected one of {ALGORITHMS}", "algo.name", path)
        if self.env.name not in ENVIRONMENTS:
            raise ConfigError(f"unknown environment {self.env.name!r}; expected one of {ENVIRONMENTS}",
                              "env.name", path)
        if not _is_int(self.horizon) or self.horizon < 0:
            raise ConfigError("must be a nonnegative integer", "horizon", path)
        if not _is_int(self.replicates) or self.replicates < 1:
            raise ConfigError("must be an integer >= 1", "replicates", path)
        if not _is_int(self.base_seed) or self.base_seed < 0:
            raise ConfigError("must be a nonnegative integer", "base_seed", path)
        if not _is_num(self.delta) or not 0.0 < self.delta < 1.0:
            raise ConfigError("must lie in (0, 1)", "delta", path)
        if not isinstance(self.monitors, bool):
            raise ConfigError("must be true or false", "monitors", path)
        for name in ("eta", "gamma"):
            v = getattr(a, name)
            if v is not None and (not _is_num(v) or not math.isfinite(v)):
                raise ConfigError("must be a number", f"algo.{name}", path)
        if a.eta is not None and a.eta <= 0:
            raise ConfigError(f"must be positive, got {a.eta}", "algo.eta", path)
        if a.gamma is not None and a.gamma < 0:
            raise ConfigError(f"must be nonnegative, got {a.gamma}", "algo.gamma", path)
        if a.beta is not None:
            if a.name == "ftarl-shannon" and a.beta != "shannon":
                raise ConfigError("ftarl-shannon takes no beta", "algo.beta", path)
            if a.name == "ftarl" and not (_is_num(a.beta) and 0.0 < a.beta < 1.0):
                raise ConfigError(f"must lie in (0, 1), got {a.beta!r}", "algo.beta", path)
            if a.name not in ("ftarl", "ftarl-shannon"):
                raise ConfigError(f"{a.name} takes no beta", "algo.beta", path)
        modes = _TUNE_MODES[a.name]
        explicit = a.eta is not None or a.gamma is not None or (a.beta is not None and a.name == "ftarl")
        if a.name == "sb-exp3-anytime":
            if a.eta is not None or a.tune is not None:
                raise ConfigError("the anytime variant sets its own learning rate; give only gamma",
                                  "algo.eta" if a.eta is not None else "algo.tune", path)
        else:
            if a.tune is not None and explicit:
                raise ConfigError("give either explicit eta/gamma/beta or a tune mode, not both",
                                  "algo.tune", path)
            if a.tune is None and a.eta is None:
                raise ConfigError(f"give eta or a tune mode (one of {modes})", "algo.eta", path)
            if a.tune is not None and a.tune not in modes:
                raise ConfigError(f"{a.name} supports tune modes {modes}, got {a.tune!r}", "algo.tune", path)
        if not isinstance(a.params, dict) or not isinstance(self.env.params, dict):
            raise ConfigError("params must be an object", "algo.params", path)
        self._check_modes(path)
        return self

    def _check_modes(self, path):
        algo, env = self.algo.name, self.env.name
        real_valued = env == "confidence" and not str(self.env.params.get("law", "uniform")).startswith(
            ("bernoulli", "ones"))
        if real_valued and algo != "sb-exp3-confidence":
            raise ConfigError(f"{algo} needs binary activity but {env} reports real-valued confidences",
                              "algo.name", path)
        full = ("switching",)
        if algo in ("se-exp4-virtual", "se-exp4-restart") and env not in full and not (
                env == "confidence" and self.env.params.get("law") == "ones"):
            raise ConfigError(f"{algo} needs every arm active every round (e.g. env 'switching')",
                              "env.name", path)
        if env == "chasing" and algo in ("se-exp4-virtual", "se-exp4-restart"):
            raise ConfigError(f"{algo} cannot run on an adaptive environment", "env.name", path)


def _is_int(v) -> bool:
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)


# ----------------------------------------------------------------------------- environments

def build_env(cfg: ExperimentConfig):
    """Script (or adaptive environment) described by ``cfg.env``."""
    p = dict(cfg.env.params)
    name = cfg.env.name
    T = cfg.horizon
    try:
        if name == "stochastic":
            k = int(p.get("n_arms", 16))
            means = p.get("loss_means")
            if means is None:
                lo, hi = p.get("mean_range", (0.2, 0.8))
                means = np.linspace(lo, hi, k)
            return stochastic_env(k, int(p.get("n_active", 4)), means, T, p.get("seed", 0))
        if name == "minimax":
            return minimax_env(int(p.get("n_arms", 16)), int(p.get("n_active", 4)), T,
                               float(p.get("scale", 0.5)), p.get("seed", 0))
        if name == "random":
            return random_env(int(p.get("n_arms", 8)), T, p.get("seed", 0), int(p.get("min_active", 1)),
                              p.get("max_active"))
        if name == "lower-bound":
            f = p.get("f")
            f = default_lower_bound_f(T) if f is None else int(f)
            return lower_bound_env(T, f, p.get("variant"))
        if name == "switching":
            k = int(p.get("n_arms", 3))
            best = p.get("segment_best_arms", list(range(k)))
            return switching_env(k, T, best, float(p.get("gap", 0.4)), p.get("seed", 0),
                                 p.get("segment_lengths"))
        if name == "confidence":
            k = int(p.get("n_arms", 8))
            means = p.get("loss_means")
            if means is None:
                lo, hi = p.get("mean_range", (0.2, 0.8))
                means = np.linspace(lo, hi, k)
            return confidence_env(k, T, p.get("law", "uniform"), means, p.get("seed", 0),
                                  float(p.get("floor", 0.05)))
        if name == "script":
            if "path" not in p:
                raise ConfigError("needs a 'path'", "env.params.path")
            script = EnvironmentScript.load(p["path"])
            if script.horizon < T:
                raise ConfigError(f"script has {script.horizon} rounds, horizon is {T}", "horizon")
            return script.truncated(T)
        if name == "chasing":
            return ChasingAdversary(int(p.get("n_arms", 8)), int(p.get("n_active", 4)),
                                    float(p.get("base", 0.5)))
    except ConfigError:
        raise
    except (InvalidParameter, TypeError, ValueError, OSError, KeyError) as exc:
        raise ConfigError(str(exc), "env.params") from None
    raise ConfigError(f"unknown environment {name!r}", "env.name")


def env_stats(env, horizon: int) -> dict:
    """Horizon information used for tuning and the bound (upper bounds when adaptive)."""
    if isinstance(env, AdaptiveEnvironment):
        k, a = env.n_arms, getattr(env, "n_active", env.n_arms)
        return {"g_T": k, "sum_a": horizon * a, "n_arms": k, "max_active": a, "horizon": horizon,
                "sum_conf": float(horizon * a)}
    return {"g_T": env.n_seen, "sum_a": env.sum_active, "n_arms": env.n_arms,
            "max_active": env.max_active, "horizon": horizon, "sum_conf": env.sum_confidence}


# ----------------------------------------------------------------------------- algorithms

@dataclass
class Plan:
    """Everything needed to run one configuration."""

    factory: Callable[[], Policy]
    env: object
    stats: dict
    eta: float | None
    gamma: float
    beta: float | str | None
    theorem: str | None
    bound_params: dict


def basis_advisor(env) -> tuple[int, Callable[[int], AdviceMatrix]]:
    """One expert per arm, awake when its arm is active, advising that arm."""
    k = env.n_arms
    eye = np.eye(k)

    def advisor(t):
        active = np.flatnonzero(env.confidences[t - 1] > 0)
        return AdviceMatrix(active, eye[active])

    return k, advisor


def random_advisor(env, n_experts: int, seed: int, wake: float = 0.7):
    """Random sleeping experts with Dirichlet advice over the active arms.

    Expert ``m`` is awake with probability ``wake``; at least one expert is
    always awake. Draws depend only on ``(seed, t)``.
    """
    k = env.n_arms

    def advisor(t):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(t)]))
        mask = env.confidences[t - 1] > 0
        awake = rng.random(n_experts) < wake
        if not awake.any():
            awake[rng.integers(n_experts)] = True
        idx = np.flatnonzero(awake)
        advice = np.zeros((idx.size, k))
        advice[:, mask] = rng.dirichlet(np.ones(int(mask.sum())), size=idx.size)
        advice /= advice.sum(axis=1, keepdims=True)
        return AdviceMatrix(idx, advice)

    return n_experts, advisor


def plan(cfg: ExperimentConfig) -> Plan:
    """Resolve tuning, build the environment and a policy factory."""
    cfg.validate()
    env = build_env(cfg)
    stats = env_stats(env, cfg.horizon)
    a = cfg.algo
    delta = cfg.delta
    name = a.name
    extras = dict(a.params)

    def tuned(mode, **more):
        info = dict(stats, delta=delta, **more)
        try:
            return tune(mode, g_T=info["g_T"], sum_a=info["sum_a"], delta=delta, n_arms=info["n_arms"],
                        horizon=info["horizon"], max_active=info["max_active"], sum_conf=info["sum_conf"],
                        n_experts=info.get("n_experts"), switches=info.get("switches"))
        except InvalidParameter as exc:
            raise ConfigError(str(exc), "algo.tune") from None

    eta, gamma, beta = a.eta, a.gamma, a.beta
    if a.tune is not None and name not in ("se-exp4", "se-exp4-virtual", "se-exp4-restart"):
        eta, gamma, beta_t = tuned(a.tune)
        if name == "ftarl":
            beta = beta_t
    gamma = 0.0 if gamma is None else float(gamma)
    g, s = stats["g_T"], stats["sum_a"]
    K, T, A = stats["n_arms"], stats["horizon"], stats["max_active"]

    if name in ("sb-exp3", "sb-exp3-confidence"):
        e, gm = eta, gamma
        factory = lambda: SbExp3(e, gm)
        if name == "sb-exp3-confidence":
            theorem, params = "3.7", {"g_T": g, "sum_conf": stats["sum_conf"], "gamma": gm, "delta": delta}
        elif gm == 0.0:
            theorem, params = "3.1", {"g_T": g, "sum_a": s, "eta": e}
        else:
            theorem, params = "3.2", {"g_T": g, "sum_a": s, "eta": e, "gamma": gm, "delta": delta}
    elif name in ("ftarl", "ftarl-shannon"):
        if name == "ftarl-shannon":
            beta = "shannon"
        elif beta is None:
            beta = 0.5
        e, gm, b = eta, gamma, beta
        factory = lambda: Ftarl(e, K, gm, b)
        if b == "shannon":
            # equivalent to SB-EXP3, so its bounds carry over
            theorem, params = ("3.1", {"g_T": g, "sum_a": s, "eta": e}) if gm == 0.0 else \
                ("3.2", {"g_T": g, "sum_a": s, "eta": e, "gamma": gm, "delta": delta})
        elif gm == 0.0:
            theorem, params = "3.4", {"n_arms": K, "horizon": T, "max_active": A, "eta": e, "beta": b}
        else:
            theorem, params = "3.5", {"n_arms": K, "horizon": T, "max_active": A, "eta": e, "beta": b,
                                      "gamma": gm, "delta": delta}
    elif name == "sb-exp3-anytime":
        gm = gamma
        factory = lambda: SbExp3Anytime(gm)
        eta = None
        theorem, params = "3.8", {"g_T": g, "sum_a": s}
    elif name == "se-exp4":
        if isinstance(env, AdaptiveEnvironment):
            raise ConfigError("se-exp4 advisors need a scripted environment", "env.name")
        kind = extras.get("advisor", "basis")
        if kind == "basis":
            m, advisor = basis_advisor(env)
        elif kind == "random":
            m, advisor = random_advisor(env, int(extras.get("n_experts", 8)),
                                        int(extras.get("seed", cfg.base_seed)), float(extras.get("wake", 0.7)))
        else:
            raise ConfigError(f"unknown advisor {kind!r} (basis or random)", "algo.params.advisor")
        if a.tune is not None:
            eta, gamma, _ = tuned("se-exp4", n_experts=m)
        e, gm = eta, gamma
        factory = lambda: SeExp4(e, m, advisor, gm)
        theorem, params = ("4.1", {"n_experts": m, "horizon": T, "n_arms": K, "eta": e, "gamma": gm,
                                   "delta": delta}) if gm > 0 else (None, {})
    elif name == "se-exp4-virtual":
        m = K * T * (T + 1) // 2
        if a.tune is not None:
            eta, gamma, _ = tuned("se-exp4", n_experts=m)
        e, gm = eta, gamma
        cap = int(extras.get("cap", 5_000_000))
        factory = lambda: VirtualSeExp4(e, K, T, gm, cap)
        theorem, params = ("4.2", {"horizon": T, "n_arms": K, "eta": e, "gamma": gm, "delta": delta}) \
            if gm > 0 else (None, {})
    elif name == "se-exp4-restart":
        switches = int(extras.get("switches", extras.get("episodes", 1)))
        if switches < 1:
            raise ConfigError("must be >= 1", "algo.params.switches")
        if a.tune is not None:
            eta, gamma, _ = tuned("tracking", switches=switches)
        e, gm = eta, gamma
        cap = int(extras.get("cap", 5_000_000))
        factory = lambda: Restarted(lambda n: VirtualSeExp4(e, K, n, gm, cap), T, switches)
        # the corollary's bound holds at eta = 2 gamma
        theorem, params = ("4.3", {"horizon": T, "n_arms": K, "switches": switches, "eta": e,
                                   "delta": delta}) if math.isclose(e, 2 * gm) else (None, {})
    else:  # pragma: no cover - validate() rejects this
        raise ConfigError(f"unknown algorithm {name!r}", "algo.name")

    if theorem in ("3.2", "4.1", "4.2") and params["gamma"] < params["eta"] / 2.0 * (1 - 1e-12):
        # these bounds need gamma >= eta / 2
        theorem, params = None, {}
    try:
        factory()  # surface parameter errors before any run
    except InvalidParameter as exc:
        raise ConfigError(str(exc), "algo") from None
    except SomnusError as exc:
        raise ConfigError(str(exc), "algo") from None
    return Plan(factory, env, stats, eta, gamma, beta, theorem, params)
