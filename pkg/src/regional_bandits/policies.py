"""Arm-selection policies sharing a ``select(t) -> (m, k)`` / ``update(t, m, k, x)`` contract.

``UCBG`` and ``SWUCBG`` run a UCB index over groups and pick greedily inside
the chosen group from the current parameter estimate.  ``UCB1`` and ``SWUCB``
are the per-arm baselines; ``Oracle`` and ``RandomPolicy`` bracket them.

Empirical means are kept as exactly rounded sums divided by counts, so a
sliding window that never evicts reproduces the stationary statistics bit
for bit.  Ties are broken by the smallest index everywhere.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .environment import BanditInstance, Environment
from .reward_model import ConfigError, GroupSpec, _envelope, invert

INF = math.inf


class ExactSum:
    """Running float sum with exact add/remove (Shewchuk partials).

    ``value`` is the correctly rounded sum of everything currently held, so
    it never depends on the order of insertions and removals.
    """

    __slots__ = ("_partials",)

    def __init__(self):
        self._partials = []

    def add(self, x: float) -> None:
        partials = self._partials
        i = 0
        for y in partials:
            if abs(x) < abs(y):
                x, y = y, x
            hi = x + y
            lo = y - (hi - x)
            if lo:
                partials[i] = lo
                i += 1
            x = hi
        partials[i:] = [x]

    def remove(self, x: float) -> None:
        self.add(-x)

    @property
    def value(self) -> float:
        return math.fsum(self._partials)


def padding(g: GroupSpec, alpha_m: float, t: int, n_m: int) -> float:
    """Group exploration bonus ``D2 * D1bar**gamma2 * (alpha ln t / n)**xi``."""
    if n_m <= 0:
        return INF
    return g.padding_scale * (alpha_m * math.log(t) / n_m) ** g.xi


def sw_padding(g: GroupSpec, alpha_m: float, t: int, tau_w: int, n_w: int) -> float:
    """Windowed bonus; uses ``ln(min(t, tau_w))`` and the windowed group count."""
    if n_w <= 0:
        return INF
    return g.padding_scale * (alpha_m * math.log(min(t, tau_w)) / n_w) ** g.xi


def _argmax(values) -> int:
    best, arg = values[0], 0
    for i in range(1, len(values)):
        if values[i] > best:
            best, arg = values[i], i
    return arg


def default_alphas(instance: BanditInstance) -> list[float]:
    return [float(g.n_arms + 1) for g in instance.groups]


def _check_alphas(instance, alphas):
    alphas = default_alphas(instance) if alphas is None else [float(a) for a in alphas]
    if len(alphas) != instance.n_groups:
        raise ConfigError(f"need one alpha per group ({instance.n_groups}), got {len(alphas)}")
    for m, (a, g) in enumerate(zip(alphas, instance.groups)):
        if not a > g.n_arms:
            raise ConfigError(f"alpha[{m}]={a} must exceed the group size {g.n_arms}")
    return alphas


@dataclass
class PolicySnapshot:
    """Copy of a group-UCB policy's statistics at the end of step ``t``."""

    t: int
    arm_counts: list
    arm_means: list
    group_counts: list
    theta_hat: list
    k_hat: list
    alphas: list


class UCBG:
    """Group UCB with greedy in-group arm choice.

    Rounds ``t <= M`` visit group ``t-1`` with a uniformly random arm (or arm
    0 when ``init="first"``).  Afterwards the group maximising envelope at
    the estimate plus padding is chosen, then its best arm at the estimate.
    After each reward the played group's estimate is re-derived from the
    mean of its most played arm.
    """

    name = "ucb-g"

    def __init__(self, instance: BanditInstance, alphas=None, rng=None, init: str = "uniform"):
        if init not in ("uniform", "first"):
            raise ConfigError(f"init must be 'uniform' or 'first', got {init!r}")
        self.instance = instance
        self.groups = instance.groups
        self.alphas = _check_alphas(instance, alphas)
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.init = init
        n_groups = len(self.groups)
        self._scale = [g.padding_scale for g in self.groups]
        self._xi = [g.xi for g in self.groups]
        self.counts = [[0] * g.n_arms for g in self.groups]
        self.sums = [[ExactSum() for _ in range(g.n_arms)] for g in self.groups]
        self.means = [[0.0] * g.n_arms for g in self.groups]
        self.group_counts = [0] * n_groups
        self.theta_hat = [None] * n_groups
        self.k_hat = [None] * n_groups
        self._env_value = [None] * n_groups
        self._env_arm = [0] * n_groups
        self.t = 0

    def _init_select(self, t):
        m = t - 1
        n_arms = self.groups[m].n_arms
        if self.init == "first":
            return m, 0
        return m, int(self.rng.integers(n_arms))

    def indices(self, t: int) -> list[float]:
        log_t = math.log(t)
        out = []
        for m in range(len(self.groups)):
            n = self.group_counts[m]
            if n == 0:
                out.append(INF)
            else:
                out.append(self._env_value[m] + self._scale[m] * (self.alphas[m] * log_t / n) ** self._xi[m])
        return out

    def select(self, t: int) -> tuple[int, int]:
        if t <= len(self.groups):
            return self._init_select(t)
        m = _argmax(self.indices(t))
        if self._env_value[m] is None:
            return self._init_select(m + 1)
        return m, self._env_arm[m]

    def _refresh(self, m):
        counts = self.counts[m]
        k = _argmax(counts)
        self.k_hat[m] = k
        g = self.groups[m]
        theta = invert(g.arms[k], self.means[m][k], g.domain)
        self.theta_hat[m] = theta
        self._env_value[m], self._env_arm[m] = _envelope(g.arms, theta)

    def update(self, t: int, m: int, k: int, reward: float) -> None:
        self.t = t
        s = self.sums[m][k]
        s.add(reward)
        self.counts[m][k] += 1
        self.group_counts[m] += 1
        self.means[m][k] = s.value / self.counts[m][k]
        self._refresh(m)

    def snapshot(self) -> PolicySnapshot:
        return PolicySnapshot(
            t=self.t,
            arm_counts=[list(c) for c in self.counts],
            arm_means=[list(x) for x in self.means],
            group_counts=list(self.group_counts),
            theta_hat=list(self.theta_hat),
            k_hat=list(self.k_hat),
            alphas=list(self.alphas),
        )


class SWUCBG(UCBG):
    """UCB-g on the last ``window`` plays only.

    A group with no play inside the window gets an infinite index; its
    in-group arm choice then falls back to the last estimate it had.
    """

    name = "sw-ucb-g"

    def __init__(self, instance: BanditInstance, window: int, alphas=None, rng=None,
                 init: str = "uniform"):
        if int(window) < 1:
            raise ConfigError(f"window must be >= 1, got {window}")
        super().__init__(instance, alphas, rng, init)
        self.window = int(window)
        self.buffer = deque()

    def indices(self, t: int) -> list[float]:
        log_t = math.log(min(t, self.window))
        out = []
        for m in range(len(self.groups)):
            n = self.group_counts[m]
            if n == 0:
                out.append(INF)
            else:
                out.append(self._env_value[m] + self._scale[m] * (self.alphas[m] * log_t / n) ** self._xi[m])
        return out

    def _remove(self, m, k, reward):
        s = self.sums[m][k]
        s.remove(reward)
        self.counts[m][k] -= 1
        self.group_counts[m] -= 1
        n = self.counts[m][k]
        self.means[m][k] = s.value / n if n else 0.0

    def update(self, t: int, m: int, k: int, reward: float) -> None:
        self.t = t
        self.buffer.append((m, k, reward))
        s = self.sums[m][k]
        s.add(reward)
        self.counts[m][k] += 1
        self.group_counts[m] += 1
        self.means[m][k] = s.value / self.counts[m][k]
        touched = {m}
        if len(self.buffer) > self.window:
            old = self.buffer.popleft()
            self._remove(*old)
            touched.add(old[0])
        for g in touched:
            if self.group_counts[g] > 0:
                self._refresh(g)

    def recompute(self):
        """Windowed (counts, means) rebuilt from the buffer alone."""
        counts = [[0] * g.n_arms for g in self.groups]
        values = [[[] for _ in range(g.n_arms)] for g in self.groups]
        for m, k, x in self.buffer:
            counts[m][k] += 1
            values[m][k].append(x)
        means = [[math.fsum(v) / len(v) if v else 0.0 for v in row] for row in values]
        return counts, means


class UCB1:
    """Per-arm UCB over the flattened arm set: mean + sqrt(alpha ln t / n)."""

    name = "ucb1"

    def __init__(self, instance: BanditInstance, alpha: float = 2.0):
        self.instance = instance
        self.alpha = float(alpha)
        self.pairs = instance.arm_pairs()
        n = len(self.pairs)
        self.flat_index = {p: i for i, p in enumerate(self.pairs)}
        self.counts = [0] * n
        self.sums = [ExactSum() for _ in range(n)]
        self.means = [0.0] * n

    def _log(self, t):
        return math.log(t)

    def indices(self, t: int) -> list[float]:
        log_t = self._log(t)
        alpha = self.alpha
        return [
            INF if n == 0 else mu + (alpha * log_t / n) ** 0.5
            for mu, n in zip(self.means, self.counts)
        ]

    def select(self, t: int) -> tuple[int, int]:
        return self.pairs[_argmax(self.indices(t))]

    def _add(self, i, x):
        self.sums[i].add(x)
        self.counts[i] += 1
        self.means[i] = self.sums[i].value / self.counts[i]

    def update(self, t: int, m: int, k: int, reward: float) -> None:
        self._add(self.flat_index[(m, k)], reward)


class SWUCB(UCB1):
    """Sliding-window per-arm UCB; arms absent from the window get index inf."""

    name = "sw-ucb"

    def __init__(self, instance: BanditInstance, window: int, alpha: float = 2.0):
        if int(window) < 1:
            raise ConfigError(f"window must be >= 1, got {window}")
        super().__init__(instance, alpha)
        self.window = int(window)
        self.buffer = deque()

    def _log(self, t):
        return math.log(min(t, self.window))

    def update(self, t: int, m: int, k: int, reward: float) -> None:
        i = self.flat_index[(m, k)]
        self.buffer.append((i, reward))
        self._add(i, reward)
        if len(self.buffer) > self.window:
            j, x = self.buffer.popleft()
            self.sums[j].remove(x)
            self.counts[j] -= 1
            self.means[j] = self.sums[j].value / self.counts[j] if self.counts[j] else 0.0


class Oracle:
    """Always plays the arm with the highest true mean at time ``t``."""

    name = "oracle"

    def __init__(self, env: Environment):
        self.env = env

    def select(self, t: int) -> tuple[int, int]:
        m, k, _ = self.env.oracle_best(t)
        return m, k

    def update(self, t, m, k, reward):
        pass


class RandomPolicy:
    name = "random"

    def __init__(self, instance: BanditInstance, rng=None):
        self.pairs = instance.arm_pairs()
        self.rng = rng if rng is not None else np.random.default_rng(0)

    def select(self, t: int) -> tuple[int, int]:
        return self.pairs[int(self.rng.integers(len(self.pairs)))]

    def update(self, t, m, k, reward):
        pass


POLICY_NAMES = ("ucb-g", "sw-ucb-g", "ucb1", "sw-ucb", "oracle", "random")
WINDOWED = ("sw-ucb-g", "sw-ucb")


def make_policy(name: str, env: Environment, rng: np.random.Generator, *, window=None,
                alphas=None, alpha: float = 2.0, init: str = "uniform"):
    """Build a fresh policy by config name."""
    inst = env.instance
    if name == "ucb-g":
        return UCBG(inst, alphas, rng, init)
    if name == "sw-ucb-g":
        return SWUCBG(inst, window, alphas, rng, init)
    if name == "ucb1":
        return UCB1(inst, alpha)
    if name == "sw-ucb":
        return SWUCB(inst, window, alpha)
    if name == "oracle":
        return Oracle(env)
    if name == "random":
        return RandomPolicy(inst, rng)
    raise ConfigError(f"unknown policy {name!r}; expected one of {POLICY_NAMES}")
