"""The regional bandit machine: true parameters, drift, noise and regret."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .reward_model import ConfigError, GroupSpec


@dataclass(frozen=True)
class NoiseModel:
    kind: str = "bernoulli"
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "bernoulli"):
            raise ConfigError(f"unknown noise kind {self.kind!r}")
        if self.kind == "gaussian" and not self.sigma >= 0:
            raise ConfigError(f"gaussian sigma must be >= 0, got {self.sigma}")

    def draw(self, rng: np.random.Generator, size=None):
        """Raw draws: uniforms for bernoulli, standard normals for gaussian."""
        if self.kind == "bernoulli":
            return rng.random(size)
        return rng.standard_normal(size)

    def to_dict(self) -> dict:
        if self.kind == "gaussian":
            return {"kind": "gaussian", "sigma": self.sigma}
        return {"kind": "bernoulli"}

    @classmethod
    def from_dict(cls, d) -> "NoiseModel":
        return cls(d["kind"], float(d.get("sigma", 1.0)))


@dataclass(frozen=True)
class DriftSchedule:
    """Time-indexed parameter trajectory obeying ``|dtheta| <= |dt| / tau``.

    ``triangular`` bounces between ``low`` and ``high`` with slope exactly
    ``1/tau``; ``sinusoidal`` oscillates with amplitude times angular
    frequency equal to ``1/tau``.  Group ``m`` is phase-shifted by
    ``m * tau / M`` steps.  ``low``/``high`` default to each group's domain;
    ``groups`` restricts drift to a subset (others stay at ``theta_true``).
    """

    kind: str = "constant"
    tau: float | None = None
    low: float | None = None
    high: float | None = None
    groups: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("constant", "triangular", "sinusoidal"):
            raise ConfigError(f"unknown drift kind {self.kind!r}")
        if self.kind != "constant" and not (self.tau is not None and self.tau > 0):
            raise ConfigError(f"{self.kind} drift needs tau > 0")
        if self.groups is not None:
            object.__setattr__(self, "groups", tuple(int(m) for m in self.groups))

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    def trajectory(self, theta_true, domains, ts) -> np.ndarray:
        """Parameters at times ``ts`` (1-based); shape ``(len(ts), M)``."""
        ts = np.asarray(ts, dtype=float)
        n_groups = len(theta_true)
        out = np.empty((ts.size, n_groups))
        for m in range(n_groups):
            if self.is_constant or (self.groups is not None and m not in self.groups):
                out[:, m] = theta_true[m]
                continue
            low = domains[m][0] if self.low is None else self.low
            high = domains[m][1] if self.high is None else self.high
            span = high - low
            shift = m * self.tau / n_groups
            if self.kind == "triangular":
                u = np.mod((ts + shift) / self.tau, 2.0 * span)
                out[:, m] = low + np.where(u <= span, u, 2.0 * span - u)
            else:
                amp = span / 2.0
                omega = 1.0 / (self.tau * amp)
                out[:, m] = low + amp + amp * np.sin(omega * (ts + shift))
        return out

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        for key in ("tau", "low", "high"):
            if getattr(self, key) is not None:
                d[key] = getattr(self, key)
        if self.groups is not None:
            d["groups"] = list(self.groups)
        return d

    @classmethod
    def from_dict(cls, d) -> "DriftSchedule":
        groups = d.get("groups")
        return cls(
            d.get("kind", "constant"),
            None if d.get("tau") is None else float(d["tau"]),
            None if d.get("low") is None else float(d["low"]),
            None if d.get("high") is None else float(d["high"]),
            None if groups is None else tuple(groups),
        )


CONSTANT = DriftSchedule()


@dataclass(frozen=True)
class BanditInstance:
    groups: tuple
    theta_true: tuple
    noise: NoiseModel = field(default_factory=NoiseModel)

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(self.groups))
        object.__setattr__(self, "theta_true", tuple(float(x) for x in self.theta_true))
        if not self.groups:
            raise ConfigError("an instance needs at least one group")
        if len(self.theta_true) != len(self.groups):
            raise ConfigError(
                f"theta_true has {len(self.theta_true)} entries for {len(self.groups)} groups"
            )
        for m, (g, th) in enumerate(zip(self.groups, self.theta_true)):
            if not g.domain[0] <= th <= g.domain[1]:
                raise ConfigError(f"theta_true[{m}]={th} outside domain {g.domain}")

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    @property
    def arm_counts(self) -> list[int]:
        return [g.n_arms for g in self.groups]

    @property
    def n_arms(self) -> int:
        return sum(self.arm_counts)

    @property
    def offsets(self) -> list[int]:
        """Flat index of each group's first arm."""
        return [int(x) for x in np.cumsum([0] + self.arm_counts[:-1])]

    def arm_pairs(self) -> list[tuple[int, int]]:
        return [(m, k) for m, g in enumerate(self.groups) for k in range(g.n_arms)]

    def mean_matrix(self, thetas) -> np.ndarray:
        """Flattened arm means for each row of ``thetas`` (shape ``(T, M)``)."""
        thetas = np.atleast_2d(thetas)
        cols = [g.means(thetas[:, m]) for m, g in enumerate(self.groups)]
        return np.concatenate(cols, axis=0).T

    def check_noise(self, means: np.ndarray) -> None:
        if self.noise.kind == "bernoulli" and (means.min() < 0.0 or means.max() > 1.0):
            raise ConfigError("bernoulli noise needs every arm mean in [0, 1] over the whole trajectory")

    def to_dict(self) -> dict:
        return {
            "groups": [g.to_dict() for g in self.groups],
            "theta_true": list(self.theta_true),
            "noise": self.noise.to_dict(),
        }

    @classmethod
    def from_dict(cls, d) -> "BanditInstance":
        return cls(
            tuple(GroupSpec.from_dict(g) for g in d["groups"]),
            tuple(d["theta_true"]),
            NoiseModel.from_dict(d.get("noise", {"kind": "bernoulli"})),
        )


class Environment:
    """An instance under a drift schedule, with means precomputed for ``t <= horizon``.

    Time is 1-based.  For constant drift the horizon may be omitted.
    """

    def __init__(self, instance: BanditInstance, schedule: DriftSchedule = CONSTANT,
                 horizon: int | None = None):
        if horizon is None and not schedule.is_constant:
            raise ConfigError("a drifting environment needs a horizon")
        self.instance = instance
        self.schedule = schedule
        self.horizon = horizon
        self.offsets = instance.offsets
        domains = [g.domain for g in instance.groups]
        n_rows = 1 if schedule.is_constant else horizon
        self.thetas = schedule.trajectory(instance.theta_true, domains, np.arange(1, n_rows + 1))
        for m, g in enumerate(instance.groups):
            col = self.thetas[:, m]
            if col.min() < g.domain[0] - 1e-12 or col.max() > g.domain[1] + 1e-12:
                raise ConfigError(f"drift trajectory of group {m} leaves domain {g.domain}")
        np.clip(self.thetas, [d[0] for d in domains], [d[1] for d in domains], out=self.thetas)
        self.means = instance.mean_matrix(self.thetas)
        instance.check_noise(self.means)
        self.best_mean = self.means.max(axis=1)
        self.best_arm = self.means.argmax(axis=1)  # first maximum = lexicographic (m, k)

    def _row(self, t: int) -> int:
        if t < 1:
            raise ValueError(f"time starts at 1, got {t}")
        if self.schedule.is_constant:
            return 0
        if t > self.horizon:
            raise ValueError(f"t={t} beyond horizon {self.horizon}")
        return t - 1

    def _flat(self, m: int, k: int) -> int:
        groups = self.instance.groups
        if not 0 <= m < len(groups) or not 0 <= k < groups[m].n_arms:
            raise IndexError(f"no arm ({m}, {k})")
        return self.offsets[m] + k

    def theta(self, t: int) -> np.ndarray:
        return self.thetas[self._row(t)]

    def mean(self, t: int, m: int, k: int) -> float:
        return float(self.means[self._row(t), self._flat(m, k)])

    def sample_reward(self, m: int, k: int, t: int, rng: np.random.Generator) -> float:
        """One noisy reward; consumes exactly one draw from ``rng``."""
        mu = self.mean(t, m, k)
        noise = self.instance.noise
        if noise.kind == "bernoulli":
            return 1.0 if rng.random() < mu else 0.0
        return mu + noise.sigma * rng.standard_normal()

    def reward_from_draw(self, mu: float, draw: float) -> float:
        noise = self.instance.noise
        if noise.kind == "bernoulli":
            return 1.0 if draw < mu else 0.0
        return mu + noise.sigma * draw

    def oracle_best(self, t: int) -> tuple[int, int, float]:
        row = self._row(t)
        flat = int(self.best_arm[row])
        m = max(i for i, off in enumerate(self.offsets) if off <= flat)
        return m, flat - self.offsets[m], float(self.best_mean[row])

    def instantaneous_regret(self, t: int, chosen: tuple[int, int]) -> float:
        row = self._row(t)
        return float(self.best_mean[row] - self.means[row, self._flat(*chosen)])

    def group_envelopes(self) -> np.ndarray:
        """Envelope value of every group at every precomputed time; shape ``(rows, M)``."""
        cols = []
        for m, off in enumerate(self.offsets):
            k = self.instance.groups[m].n_arms
            cols.append(self.means[:, off:off + k].max(axis=1))
        return np.stack(cols, axis=1)


@dataclass
class RegretTrace:
    """Per-step record of one policy on one replication (time 1..T)."""

    policy: str
    replication: int
    seed: int
    groups: np.ndarray
    arms: np.ndarray
    rewards: np.ndarray
    inst_regret: np.ndarray
    cum_regret: np.ndarray

    @property
    def horizon(self) -> int:
        return len(self.groups)

    @property
    def actions(self) -> list[tuple[int, int]]:
        return list(zip(self.groups.tolist(), self.arms.tolist()))


def replication_streams(base_seed: int, replication: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (environment, policy) generators for one replication.

    The environment stream depends only on the replication seed, so every
    policy faces the same noise realisation.
    """
    env_seq, pol_seq = np.random.SeedSequence(base_seed + replication).spawn(2)
    return np.random.default_rng(env_seq), np.random.default_rng(pol_seq)


def simulate(env: Environment, policy, horizon: int, env_rng: np.random.Generator,
             label: str = "", replication: int = 0, seed: int = 0) -> RegretTrace:
    """Run ``policy`` for ``horizon`` steps; step ``t`` consumes draw ``t`` of ``env_rng``."""
    if env.horizon is not None and horizon > env.horizon:
        raise ValueError(f"horizon {horizon} exceeds environment horizon {env.horizon}")
    draws = env.instance.noise.draw(env_rng, horizon).tolist()
    bernoulli = env.instance.noise.kind == "bernoulli"
    sigma = env.instance.noise.sigma
    constant = env.schedule.is_constant
    means = env.means.tolist()
    offsets = env.offsets
    select, update = policy.select, policy.update

    flat = np.empty(horizon, dtype=np.int64)
    groups = np.empty(horizon, dtype=np.int64)
    arms = np.empty(horizon, dtype=np.int64)
    rewards = np.empty(horizon)
    row = means[0]
    for i in range(horizon):
        t = i + 1
        if not constant:
            row = means[i]
        m, k = select(t)
        a = offsets[m] + k
        mu = row[a]
        if bernoulli:
            x = 1.0 if draws[i] < mu else 0.0
        else:
            x = mu + sigma * draws[i]
        update(t, m, k, x)
        groups[i], arms[i], flat[i], rewards[i] = m, k, a, x

    rows = np.zeros(horizon, dtype=np.int64) if constant else np.arange(horizon)
    inst = env.best_mean[rows] - env.means[rows, flat]
    return RegretTrace(label, replication, seed, groups, arms, rewards, inst, np.cumsum(inst))


def lipschitz_ok(thetas: np.ndarray, tau: float) -> bool:
    """Check ``|theta_t - theta_s| <= |t - s| / tau`` for all pairs of rows.

    By the triangle inequality it suffices that every unit step is at most
    ``1/tau`` (up to float rounding).
    """
    steps = np.abs(np.diff(thetas, axis=0))
    return bool(np.all(steps <= (1.0 / tau) * (1 + 1e-9)))
