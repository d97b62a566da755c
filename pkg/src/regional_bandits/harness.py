"""Config-driven experiment runner, presets and CSV output.

A config is a JSON object::

    {
      "name": "basic-stationary",
      "instance": {"groups": [{"domain": [0, 1], "arms": [{"kind": ..., "params": {...},
                                                          "holder": {...}}]}],
                   "theta_true": [...], "noise": {"kind": "bernoulli"}},
      "drift": {"kind": "constant"},
      "policies": [{"name": "ucb-g", "params": {"alphas": [5, 5, 5, 5]}}, ...],
      "horizon": 10000, "replications": 100, "base_seed": 0,
      "window": null, "grid_step": 0.0001, "output_dir": "out", "thin": false
    }

``window`` is an integer, ``"auto"`` (derived from the drift speed) or null;
a policy's own ``params.window`` takes precedence.
"""
from __future__ import annotations

import copy
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .analysis import RegretSummary, regret_summary, window_rule
from .environment import BanditInstance, DriftSchedule, Environment, NoiseModel, RegretTrace, \
    replication_streams, simulate
from .policies import POLICY_NAMES, WINDOWED, _check_alphas, make_policy
from .reward_model import BASIC_HOLDER, IDENTITY_HOLDER, ConfigError, GroupSpec, RewardFunction, affine, \
    fig1_arms, pricing, verify_holder

TRACE_HEADER = "policy,replication,t,group,arm,reward,inst_regret,cum_regret"
SUMMARY_HEADER = "policy,t,mean_cum,stderr_cum,mean_per_unit,stderr_per_unit"
PLOT_HEADER = "series,t,mean,stderr"
OUTPUT_ENV_VAR = "REGIONAL_BANDITS_OUTPUT_DIR"
THIN_FULL_UNTIL = 1000
THIN_EVERY = 10
HOLDER_CHECK_STEP = 1e-2
_POLICY_PARAMS = {"window", "alphas", "alpha", "init"}


class ValidationError(ConfigError):
    """Config error located at a JSON path (and a line, when known)."""

    def __init__(self, path: tuple, message: str, line: int | None = None):
        self.path = tuple(path)
        self.message = message
        self.line = line
        super().__init__(str(self))

    def __str__(self):
        where = ".".join(str(p) if isinstance(p, str) else f"[{p}]" for p in self.path).replace(".[", "[")
        prefix = f"line {self.line}: " if self.line is not None else ""
        return f"{prefix}{where or '<root>'}: {self.message}"


def fmt(x) -> str:
    return format(float(x), ".17g")


@dataclass
class PolicySpec:
    name: str
    params: dict = field(default_factory=dict)
    label: str | None = None

    def to_dict(self) -> dict:
        d = {"name": self.name, "params": copy.deepcopy(self.params)}
        if self.label is not None:
            d["label"] = self.label
        return d


@dataclass
class ExperimentConfig:
    instance: BanditInstance
    policies: list
    horizon: int
    replications: int = 1
    base_seed: int = 0
    drift: DriftSchedule = field(default_factory=DriftSchedule)
    window: int | str | None = None
    grid_step: float = 1e-4
    output_dir: str = "out"
    thin: bool = False
    name: str = "experiment"

    def resolved_window(self, spec: PolicySpec) -> int | None:
        w = spec.params.get("window", self.window)
        if spec.name not in WINDOWED:
            return None
        if w is None:
            raise ConfigError(f"policy {spec.name} needs a window")
        if w == "auto":
            if self.drift.tau is None:
                raise ConfigError("window 'auto' needs a drift tau")
            return window_rule(self.drift.tau, self.instance.groups)
        return int(w)

    def label(self, spec: PolicySpec) -> str:
        if spec.label:
            return spec.label
        w = self.resolved_window(spec)
        return spec.name if w is None else f"{spec.name}(tau_w={w})"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "instance": self.instance.to_dict(),
            "drift": self.drift.to_dict(),
            "policies": [p.to_dict() for p in self.policies],
            "horizon": self.horizon,
            "replications": self.replications,
            "base_seed": self.base_seed,
            "window": self.window,
            "grid_step": self.grid_step,
            "output_dir": self.output_dir,
            "thin": self.thin,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def replace(self, **changes) -> "ExperimentConfig":
        d = self.to_dict()
        d.update({k: v for k, v in changes.items() if v is not None})
        return config_from_dict(d)


def _at(path, fn, *args):
    try:
        return fn(*args)
    except ValidationError:
        raise
    except (ConfigError, KeyError, TypeError, ValueError) as exc:
        msg = f"missing key {exc}" if isinstance(exc, KeyError) else str(exc)
        raise ValidationError(path, msg) from exc


def _require(d, key, path):
    if not isinstance(d, dict):
        raise ValidationError(path, "expected an object")
    if key not in d:
        raise ValidationError(path, f"missing key {key!r}")
    return d[key]


def config_from_dict(d: dict) -> ExperimentConfig:
    """Parse and validate a config object; errors carry the offending JSON path."""
    inst_d = _require(d, "instance", ())
    groups = []
    for m, g in enumerate(_require(inst_d, "groups", ("instance",))):
        gpath = ("instance", "groups", m)
        arms = []
        for k, a in enumerate(_require(g, "arms", gpath)):
            apath = gpath + ("arms", k)
            f = _at(apath, RewardFunction.from_dict, a)
            arms.append(f)
        grp = _at(gpath, GroupSpec, tuple(arms), tuple(g.get("domain", (0.0, 1.0))))
        for k, f in enumerate(arms):
            rep = verify_holder(f, grp.domain, HOLDER_CHECK_STEP)
            if not rep.passed:
                side = "lower" if not rep.lower_ok else "upper"
                raise ValidationError(
                    gpath + ("arms", k, "holder"),
                    f"{side} Hoelder inequality fails at theta pair {rep.lower_witness if side == 'lower' else rep.upper_witness}",
                )
        groups.append(grp)
    noise = _at(("instance", "noise"), NoiseModel.from_dict, inst_d.get("noise", {"kind": "bernoulli"}))
    theta = _require(inst_d, "theta_true", ("instance",))
    instance = _at(("instance", "theta_true"), BanditInstance, tuple(groups), tuple(theta), noise)
    drift = _at(("drift",), DriftSchedule.from_dict, d.get("drift", {"kind": "constant"}))

    horizon = d.get("horizon")
    if not isinstance(horizon, int) or horizon < 1:
        raise ValidationError(("horizon",), f"must be a positive integer, got {horizon!r}")
    reps = d.get("replications", 1)
    if not isinstance(reps, int) or reps < 1:
        raise ValidationError(("replications",), f"must be a positive integer, got {reps!r}")
    seed = d.get("base_seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ValidationError(("base_seed",), f"must be a non-negative integer, got {seed!r}")
    window = d.get("window")
    if not (window is None or window == "auto" or (isinstance(window, int) and window >= 1)):
        raise ValidationError(("window",), f"must be a positive integer, 'auto' or null, got {window!r}")
    grid_step = d.get("grid_step", 1e-4)
    if not isinstance(grid_step, (int, float)) or not 0 < grid_step <= 1e-2:
        raise ValidationError(("grid_step",), f"must lie in (0, 0.01], got {grid_step!r}")

    cfg = ExperimentConfig(
        instance=instance,
        policies=[],
        horizon=horizon,
        replications=reps,
        base_seed=seed,
        drift=drift,
        window=window,
        grid_step=float(grid_step),
        output_dir=str(d.get("output_dir", "out")),
        thin=bool(d.get("thin", False)),
        name=str(d.get("name", "experiment")),
    )
    # the environment constructor checks drift-in-domain and the bernoulli range
    _at(("drift",), Environment, instance, drift, horizon)

    specs = _require(d, "policies", ())
    if not specs:
        raise ValidationError(("policies",), "at least one policy is required")
    labels = set()
    for i, p in enumerate(specs):
        path = ("policies", i)
        name = _require(p, "name", path)
        if name not in POLICY_NAMES:
            raise ValidationError(path + ("name",), f"unknown policy {name!r}; expected one of {POLICY_NAMES}")
        params = dict(p.get("params", {}))
        unknown = set(params) - _POLICY_PARAMS
        if unknown:
            raise ValidationError(path + ("params",), f"unknown parameters {sorted(unknown)}")
        spec = PolicySpec(name, params, p.get("label"))
        if name in ("ucb-g", "sw-ucb-g"):
            _at(path + ("params", "alphas"), _check_alphas, instance, params.get("alphas"))
        if "alpha" in params and not params["alpha"] > 0:
            raise ValidationError(path + ("params", "alpha"), "must be positive")
        _at(path, cfg.resolved_window, spec)
        label = cfg.label(spec)
        if label in labels:
            raise ValidationError(path, f"duplicate policy label {label!r}")
        labels.add(label)
        cfg.policies.append(spec)
    return cfg


def _line_of(text: str, path: tuple) -> int | None:
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return None
    line = node.start_mark.line + 1 if node is not None else None
    for key in path:
        if isinstance(node, yaml.MappingNode) and isinstance(key, str):
            nxt = [(k, v) for k, v in node.value if k.value == key]
            if not nxt:
                break
            line = nxt[0][0].start_mark.line + 1
            node = nxt[0][1]
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
            line = node.start_mark.line + 1
        else:
            break
    return line


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    return parse_config(text)


def parse_config(text: str) -> ExperimentConfig:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError((), exc.msg, exc.lineno) from exc
    try:
        return config_from_dict(d)
    except ValidationError as exc:
        exc.line = _line_of(text, exc.path)
        raise


# presets ------------------------------------------------------------------

BASIC_THETA = (0.1, 0.4, 0.7, 1.0)
PRICE_SETS = ((0.35, 0.5), (0.35, 0.5, 0.7), (0.5, 0.7), (0.35, 0.5, 0.7, 0.95))
PRICING_THETA = (0.35, 0.5, 0.7, 0.9)


def basic_instance(noise: NoiseModel | None = None, theta=BASIC_THETA) -> BanditInstance:
    groups = tuple(GroupSpec(fig1_arms(BASIC_HOLDER)) for _ in theta)
    return BanditInstance(groups, theta, noise or NoiseModel("bernoulli"))


def pricing_instance(noise: NoiseModel | None = None) -> BanditInstance:
    groups = tuple(GroupSpec(tuple(pricing(p, BASIC_HOLDER) for p in prices)) for prices in PRICE_SETS)
    return BanditInstance(groups, PRICING_THETA, noise or NoiseModel("gaussian", 1.0))


def classic_instance(theta=(0.1, 0.4, 0.7, 0.9)) -> BanditInstance:
    groups = tuple(GroupSpec((affine(1.0, 0.0, IDENTITY_HOLDER),)) for _ in theta)
    return BanditInstance(groups, theta, NoiseModel("bernoulli"))


def global_instance(theta: float = 0.7) -> BanditInstance:
    return BanditInstance((GroupSpec(fig1_arms(BASIC_HOLDER)),), (theta,), NoiseModel("bernoulli"))


def _pol(name, **params):
    return PolicySpec(name, params)


def presets() -> dict[str, ExperimentConfig]:
    windows = (100, 200, 500)
    triangular = DriftSchedule("triangular", tau=1000.0)
    return {
        "basic-stationary": ExperimentConfig(
            basic_instance(), [_pol("ucb-g"), _pol("ucb1")], horizon=10_000, replications=100,
            name="basic-stationary", output_dir="out/basic-stationary"),
        "basic-nonstationary": ExperimentConfig(
            basic_instance(),
            [_pol("sw-ucb-g", window=w) for w in windows] + [_pol("sw-ucb", window=w) for w in windows],
            horizon=10_000, replications=50, drift=triangular,
            name="basic-nonstationary", output_dir="out/basic-nonstationary"),
        "global-case": ExperimentConfig(
            global_instance(), [_pol("ucb-g"), _pol("ucb1")], horizon=100_000, replications=100,
            name="global-case", output_dir="out/global-case"),
        "classic-case": ExperimentConfig(
            classic_instance(), [_pol("ucb-g"), _pol("ucb1")], horizon=10_000, replications=100,
            name="classic-case", output_dir="out/classic-case"),
        "pricing-stationary": ExperimentConfig(
            pricing_instance(), [_pol("ucb-g"), _pol("ucb1")], horizon=10_000, replications=100,
            name="pricing-stationary", output_dir="out/pricing-stationary"),
        "pricing-nonstationary": ExperimentConfig(
            pricing_instance(), [_pol("sw-ucb-g", window=200), _pol("sw-ucb", window=200)],
            horizon=10_000, replications=50,
            drift=DriftSchedule("triangular", tau=1000.0, groups=(0, 1)),
            name="pricing-nonstationary", output_dir="out/pricing-nonstationary"),
    }


def preset(name: str, **overrides) -> ExperimentConfig:
    table = presets()
    if name not in table:
        raise ConfigError(f"unknown preset {name!r}; available: {sorted(table)}")
    cfg = table[name]
    return cfg.replace(**overrides) if overrides else cfg


# running ------------------------------------------------------------------

@dataclass
class ExperimentResult:
    config: ExperimentConfig
    traces: dict
    summaries: dict


def run_replication(cfg: ExperimentConfig, spec: PolicySpec, replication: int,
                    env: Environment | None = None) -> RegretTrace:
    env = env or Environment(cfg.instance, cfg.drift, cfg.horizon)
    seed = cfg.base_seed + replication
    env_rng, pol_rng = replication_streams(cfg.base_seed, replication)
    params = {k: v for k, v in spec.params.items() if k != "window"}
    policy = make_policy(spec.name, env, pol_rng, window=cfg.resolved_window(spec), **params)
    return simulate(env, policy, cfg.horizon, env_rng, cfg.label(spec), replication, seed)


_WORKER_STATE = {}


def _job(config_json: str, policy_index: int, replication: int) -> RegretTrace:
    cfg = _WORKER_STATE.get(config_json)
    if cfg is None:
        cfg = parse_config(config_json)
        _WORKER_STATE.clear()
        _WORKER_STATE[config_json] = cfg
    return run_replication(cfg, cfg.policies[policy_index], replication)


def run(cfg: ExperimentConfig, workers: int | None = None, policies=None) -> ExperimentResult:
    """Simulate every (policy, replication) pair; results are in replication order.

    ``policies`` optionally restricts the run to the given labels.
    """
    specs = [(i, s) for i, s in enumerate(cfg.policies) if policies is None or cfg.label(s) in policies]
    jobs = [(i, r) for i, _ in specs for r in range(cfg.replications)]
    workers = workers or os.cpu_count() or 1
    if workers <= 1 or len(jobs) <= 1:
        env = Environment(cfg.instance, cfg.drift, cfg.horizon)
        results = [run_replication(cfg, cfg.policies[i], r, env) for i, r in jobs]
    else:
        payload = cfg.to_json()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_job, payload, i, r) for i, r in jobs]
            results = [f.result() for f in futures]

    traces = {}
    for (i, _), tr in zip(jobs, results):
        traces.setdefault(cfg.label(cfg.policies[i]), []).append(tr)
    summaries = {label: regret_summary(trs, label) for label, trs in traces.items()}
    return ExperimentResult(cfg, traces, summaries)


def _rows_kept(horizon: int, thin: bool) -> np.ndarray:
    t = np.arange(1, horizon + 1)
    if not thin:
        return t - 1
    keep = (t <= THIN_FULL_UNTIL) | (t % THIN_EVERY == 0)
    return np.flatnonzero(keep)


def trace_lines(trace: RegretTrace, thin: bool = False) -> list[str]:
    idx = _rows_kept(trace.horizon, thin)
    g, a = trace.groups.tolist(), trace.arms.tolist()
    x, r, c = trace.rewards.tolist(), trace.inst_regret.tolist(), trace.cum_regret.tolist()
    head = f"{trace.policy},{trace.replication},"
    return [
        f"{head}{i + 1},{g[i]},{a[i]},{fmt(x[i])},{fmt(r[i])},{fmt(c[i])}" for i in idx.tolist()
    ]


def write_traces(path, traces: dict, thin: bool = False) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(TRACE_HEADER + "\n")
        for label in traces:
            for tr in traces[label]:
                lines = trace_lines(tr, thin)
                if lines:
                    fh.write("\n".join(lines) + "\n")


def write_summaries(path, summaries: dict, thin: bool = False) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(SUMMARY_HEADER + "\n")
        for label, s in summaries.items():
            for i in _rows_kept(len(s.t), thin).tolist():
                fh.write(f"{label},{int(s.t[i])},{fmt(s.mean_cum[i])},{fmt(s.se_cum[i])},"
                         f"{fmt(s.mean_unit[i])},{fmt(s.se_unit[i])}\n")


def emit_plot_data(summaries: dict, path=None, quantity: str = "cumulative", bounds: dict | None = None,
                   thin: bool = False) -> str:
    """Long-format ``series,t,mean,stderr`` CSV; bound curves are extra series with zero stderr.

    ``bounds`` maps a series name to ``(t, values)``.
    """
    if quantity not in ("cumulative", "per-unit"):
        raise ValueError(f"quantity must be 'cumulative' or 'per-unit', got {quantity!r}")
    lines = [PLOT_HEADER]
    for label, s in summaries.items():
        mean, se = (s.mean_cum, s.se_cum) if quantity == "cumulative" else (s.mean_unit, s.se_unit)
        for i in _rows_kept(len(s.t), thin).tolist():
            lines.append(f"{label},{int(s.t[i])},{fmt(mean[i])},{fmt(se[i])}")
    for name, (ts, values) in (bounds or {}).items():
        for t, v in zip(np.asarray(ts).tolist(), np.asarray(values).tolist()):
            lines.append(f"{name},{int(t)},{fmt(v)},{fmt(0.0)}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def output_dir(cfg: ExperimentConfig, override=None) -> Path:
    return Path(override or os.environ.get(OUTPUT_ENV_VAR) or cfg.output_dir)


def write_outputs(result: ExperimentResult, out=None) -> Path:
    cfg = result.config
    out = output_dir(cfg, out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(cfg.to_json())
    write_traces(out / "traces.csv", result.traces, cfg.thin)
    write_summaries(out / "summary.csv", result.summaries, cfg.thin)
    emit_plot_data(result.summaries, out / "plot_cumulative.csv", "cumulative", thin=cfg.thin)
    emit_plot_data(result.summaries, out / "plot_per_unit.csv", "per-unit", thin=cfg.thin)
    return out


def summary_at(s: RegretSummary, t: int) -> tuple[float, float, float, float]:
    i = t - 1
    return float(s.mean_cum[i]), float(s.se_cum[i]), float(s.mean_unit[i]), float(s.se_unit[i])
