"""Parametric reward functions, group aggregates and optimal-region geometry.

Every arm's expected reward is a known, strictly monotone function of its
group's parameter ``theta``.  Five closed-form families are supported, each
with a closed-form inverse::

    affine         a * theta + c
    power          a * theta**b + c
    shifted-power  a * (1 - theta)**b + c
    sqrt-affine    a * sqrt(theta) + c
    pricing        p * (1 - theta * p)**2

Groups and arms are indexed from 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

KINDS = ("affine", "power", "shifted-power", "sqrt-affine", "pricing")

_PARAM_NAMES = {
    "affine": ("a", "c"),
    "power": ("a", "b", "c"),
    "shifted-power": ("a", "b", "c"),
    "sqrt-affine": ("a", "c"),
    "pricing": ("p",),
}

# relative slack for the Hoelder grid check; absorbs float rounding only
_HOLDER_RTOL = 1e-12


class DomainError(ValueError):
    """A parameter value lies outside the admissible domain."""


class ConfigError(ValueError):
    """An instance, group or function definition is invalid."""


@dataclass(frozen=True)
class Holder:
    """Declared constants of the two-sided Hoelder condition.

    ``d1 * |dt|**gamma1 <= |mu(t) - mu(t')| <= d2 * |dt|**gamma2``.
    """

    d1: float
    gamma1: float
    d2: float
    gamma2: float

    def __post_init__(self):
        if not self.d1 > 0 or not self.d2 > 0:
            raise ConfigError(f"Hoelder constants d1, d2 must be positive, got {self.d1}, {self.d2}")
        # gamma1 == 1 is admitted as a boundary case (identity functions)
        if not self.gamma1 >= 1:
            raise ConfigError(f"gamma1 must be >= 1, got {self.gamma1}")
        if not 0 < self.gamma2 <= 1:
            raise ConfigError(f"gamma2 must lie in (0, 1], got {self.gamma2}")

    @property
    def d1_bar(self) -> float:
        """Hoelder constant of the inverse function."""
        return (1.0 / self.d1) ** (1.0 / self.gamma1)

    def to_dict(self) -> dict:
        return {"d1": self.d1, "gamma1": self.gamma1, "d2": self.d2, "gamma2": self.gamma2}

    @classmethod
    def from_dict(cls, d) -> "Holder":
        return cls(float(d["d1"]), float(d["gamma1"]), float(d["d2"]), float(d["gamma2"]))


# constants used throughout the basic experiment
BASIC_HOLDER = Holder(d1=0.1, gamma1=2.0, d2=2.0, gamma2=0.5)
IDENTITY_HOLDER = Holder(d1=1.0, gamma1=1.0, d2=1.0, gamma2=1.0)


@dataclass(frozen=True)
class RewardFunction:
    """One arm's expected-reward curve ``theta -> mu(theta)``.

    ``params`` holds the coefficients named by the kind (``a``, ``b``, ``c``
    or the price ``p``); missing ``c`` defaults to 0 and missing ``b`` to 1.
    """

    kind: str
    params: tuple
    holder: Holder = BASIC_HOLDER

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown reward kind {self.kind!r}; expected one of {KINDS}")
        names = dict(self.params)
        unknown = set(names) - set(_PARAM_NAMES[self.kind])
        if unknown:
            raise ConfigError(f"{self.kind}: unexpected parameters {sorted(unknown)}")
        if self.kind == "pricing":
            if "p" not in names or not names["p"] > 0:
                raise ConfigError("pricing requires a positive price p")
        else:
            if names.get("a", 0.0) == 0.0:
                raise ConfigError(f"{self.kind}: coefficient a must be non-zero")
            if self.kind in ("power", "shifted-power") and not names.get("b", 1.0) > 0:
                raise ConfigError(f"{self.kind}: exponent b must be positive")

    @classmethod
    def make(cls, kind: str, holder: Holder = BASIC_HOLDER, **params) -> "RewardFunction":
        return cls(kind, tuple(sorted((k, float(v)) for k, v in params.items())), holder)

    def param(self, name: str) -> float:
        default = {"b": 1.0, "c": 0.0}.get(name)
        return dict(self.params).get(name, default)

    def __call__(self, theta):
        """Evaluate without a domain check; accepts floats or arrays."""
        kind = self.kind
        if kind == "pricing":
            p = self.param("p")
            return p * (1.0 - theta * p) ** 2
        a, c = self.param("a"), self.param("c")
        if kind == "affine":
            return a * theta + c
        if kind == "power":
            return a * theta ** self.param("b") + c
        if kind == "shifted-power":
            return a * (1.0 - theta) ** self.param("b") + c
        return a * theta ** 0.5 + c

    def _raw_inverse(self, y):
        kind = self.kind
        if kind == "pricing":
            p = self.param("p")
            return (1.0 - (y / p) ** 0.5) / p
        a, c = self.param("a"), self.param("c")
        u = (y - c) / a
        if kind == "affine":
            return u
        if kind == "power":
            return u ** (1.0 / self.param("b"))
        if kind == "shifted-power":
            return 1.0 - u ** (1.0 / self.param("b"))
        return u * u

    def value_range(self, domain=(0.0, 1.0)) -> tuple[float, float]:
        lo, hi = self(float(domain[0])), self(float(domain[1]))
        return (lo, hi) if lo <= hi else (hi, lo)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params), "holder": self.holder.to_dict()}

    @classmethod
    def from_dict(cls, d) -> "RewardFunction":
        holder = Holder.from_dict(d["holder"]) if "holder" in d else BASIC_HOLDER
        return cls.make(d["kind"], holder, **d.get("params", {}))


def affine(a=1.0, c=0.0, holder=BASIC_HOLDER):
    return RewardFunction.make("affine", holder, a=a, c=c)


def power(a=1.0, b=2.0, c=0.0, holder=BASIC_HOLDER):
    return RewardFunction.make("power", holder, a=a, b=b, c=c)


def shifted_power(a=1.0, b=2.0, c=0.0, holder=BASIC_HOLDER):
    return RewardFunction.make("shifted-power", holder, a=a, b=b, c=c)


def sqrt_affine(a=1.0, c=0.0, holder=BASIC_HOLDER):
    return RewardFunction.make("sqrt-affine", holder, a=a, c=c)


def pricing(p, holder=BASIC_HOLDER):
    return RewardFunction.make("pricing", holder, p=p)


def fig1_arms(holder: Holder = BASIC_HOLDER) -> tuple[RewardFunction, ...]:
    """The four illustrative arms: (t-1)^2, 0.8-0.4*sqrt(t), 0.8*t, t^2."""
    return (
        shifted_power(1.0, 2.0, 0.0, holder),
        sqrt_affine(-0.4, 0.8, holder),
        affine(0.8, 0.0, holder),
        power(1.0, 2.0, 0.0, holder),
    )


def _check_domain(theta, domain):
    if not domain[0] <= theta <= domain[1]:
        raise DomainError(f"theta={theta} outside domain [{domain[0]}, {domain[1]}]")


def evaluate(f: RewardFunction, theta: float, domain=(0.0, 1.0)) -> float:
    _check_domain(theta, domain)
    return float(f(float(theta)))


def invert(f: RewardFunction, y: float, domain=(0.0, 1.0)) -> float:
    """Clamp ``y`` into the range of ``f`` over ``domain`` and invert.

    Total: empirical means outside the attainable range map to the nearest
    domain endpoint.
    """
    lo, hi = f.value_range(domain)
    y = min(max(y, lo), hi)
    theta = f._raw_inverse(y)
    return min(max(theta, domain[0]), domain[1])


@dataclass(frozen=True)
class GroupSpec:
    """Arms sharing one parameter, plus the group-level Hoelder aggregates."""

    arms: tuple
    domain: tuple = (0.0, 1.0)
    monotone_grid: int = field(default=1001, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(self.arms))
        object.__setattr__(self, "domain", (float(self.domain[0]), float(self.domain[1])))
        if not self.arms:
            raise ConfigError("a group needs at least one arm")
        lo, hi = self.domain
        if not 0.0 <= lo < hi <= 1.0:
            raise ConfigError(f"theta domain must be a sub-interval of [0, 1], got {self.domain}")
        grid = np.linspace(lo, hi, self.monotone_grid)
        for k, f in enumerate(self.arms):
            if f.kind == "pricing" and hi * f.param("p") > 1.0:
                raise ConfigError(
                    f"arm {k}: price {f.param('p')} breaks theta*p <= 1 on domain {self.domain}"
                )
            if f.kind in ("sqrt-affine", "power") and lo < 0.0:
                raise ConfigError(f"arm {k}: {f.kind} needs theta >= 0")
            d = np.diff(f(grid))
            if not (np.all(d > 0) or np.all(d < 0)):
                raise ConfigError(f"arm {k} ({f.kind}) is not strictly monotone on {self.domain}")

    @property
    def n_arms(self) -> int:
        return len(self.arms)

    @property
    def d1(self) -> float:
        return min(f.holder.d1 for f in self.arms)

    @property
    def gamma1(self) -> float:
        return max(f.holder.gamma1 for f in self.arms)

    @property
    def d1_bar(self) -> float:
        return max(f.holder.d1_bar for f in self.arms)

    @property
    def gamma1_bar(self) -> float:
        return 1.0 / self.gamma1

    @property
    def d2(self) -> float:
        return max(f.holder.d2 for f in self.arms)

    @property
    def gamma2(self) -> float:
        return min(f.holder.gamma2 for f in self.arms)

    @property
    def xi(self) -> float:
        """Exponent of the group's padding function."""
        return self.gamma1_bar * self.gamma2 / 2.0

    @property
    def padding_scale(self) -> float:
        return self.d2 * self.d1_bar ** self.gamma2

    def evaluate(self, k: int, theta: float) -> float:
        return evaluate(self.arms[k], theta, self.domain)

    def invert(self, k: int, y: float) -> float:
        return invert(self.arms[k], y, self.domain)

    def means(self, theta):
        """Arm means at ``theta``; returns shape ``(K,)`` or ``(K, *theta.shape)``."""
        return np.array([f(theta) for f in self.arms])

    def to_dict(self) -> dict:
        return {"domain": list(self.domain), "arms": [f.to_dict() for f in self.arms]}

    @classmethod
    def from_dict(cls, d) -> "GroupSpec":
        return cls(tuple(RewardFunction.from_dict(a) for a in d["arms"]), tuple(d.get("domain", (0.0, 1.0))))


def envelope(g: GroupSpec, theta: float) -> tuple[float, int]:
    """Upper envelope value at ``theta`` and the smallest arm index attaining it."""
    _check_domain(theta, g.domain)
    return _envelope(g.arms, float(theta))


def _envelope(arms, theta):
    # unchecked scalar path used inside the policies' inner loop
    best, arg = arms[0](theta), 0
    for k in range(1, len(arms)):
        v = arms[k](theta)
        if v > best:
            best, arg = v, k
    return best, arg


@dataclass(frozen=True)
class RegionGeometry:
    """Optimal regions of every arm of one group.

    ``regions[k]`` is a tuple of closed intervals ``(lo, hi)`` on which arm
    ``k`` is the (smallest-index) maximiser; ``boundaries`` lists the switch
    points in increasing order as ``(theta, left_arm, right_arm)``.
    """

    regions: tuple
    boundaries: tuple
    grid_step: float
    domain: tuple

    def optimal_arms(self, theta: float) -> list[int]:
        return [k for k, ivs in enumerate(self.regions) if any(lo <= theta <= hi for lo, hi in ivs)]


def compute_regions(g: GroupSpec, grid_step: float = 1e-4, refine: bool = True) -> RegionGeometry:
    """Scan the domain on a uniform grid and record the argmax arm.

    With ``refine`` each switch between consecutive grid points is polished
    by root-finding the difference of the two arms; otherwise the switch is
    placed at the first grid point of the new arm.
    """
    if not grid_step > 0:
        raise ConfigError("grid_step must be positive")
    lo, hi = g.domain
    n = int(math.ceil((hi - lo) / grid_step - 1e-9)) + 1
    grid = np.linspace(lo, hi, n)
    winners = np.argmax(g.means(grid), axis=0)  # argmax keeps the first maximum

    switches = np.flatnonzero(winners[1:] != winners[:-1])
    boundaries = []
    for i in switches:
        left, right = int(winners[i]), int(winners[i + 1])
        a, b = float(grid[i]), float(grid[i + 1])
        x = b
        if refine:
            fl, fr = g.arms[left], g.arms[right]
            diff = lambda t: fl(t) - fr(t)  # noqa: E731
            if diff(a) * diff(b) <= 0:
                x = brentq(diff, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        boundaries.append((x, left, right))

    regions = [[] for _ in g.arms]
    start, arm = lo, int(winners[0])
    for x, left, right in boundaries:
        regions[left].append((start, x))
        start, arm = x, right
    regions[arm].append((start, hi))
    return RegionGeometry(
        regions=tuple(tuple(r) for r in regions),
        boundaries=tuple(boundaries),
        grid_step=grid_step,
        domain=g.domain,
    )


def biased_distance(geo: RegionGeometry, theta_true: float) -> float:
    """Distance from ``theta_true`` to the closure of the suboptimal region.

    Returns ``inf`` when no arm other than the optimal one owns any region.
    """
    _check_domain(theta_true, geo.domain)
    optimal = set(geo.optimal_arms(theta_true))
    best = math.inf
    for k, ivs in enumerate(geo.regions):
        if k in optimal:
            continue
        for lo, hi in ivs:
            if lo <= theta_true <= hi:
                return 0.0
            best = min(best, abs(theta_true - lo), abs(theta_true - hi))
    return best


@dataclass
class HolderReport:
    passed: bool
    lower_ok: bool
    upper_ok: bool
    # (theta, theta') of the worst violation (or tightest pair if none)
    lower_witness: tuple
    upper_witness: tuple
    lower_margin: float
    upper_margin: float


def verify_holder(f: RewardFunction, domain=(0.0, 1.0), grid_step: float = 1e-2,
                  holder: Holder | None = None) -> HolderReport:
    """Check both Hoelder inequalities over all pairs of a uniform grid.

    Margins are ``min(|dmu| - d1|dt|^g1)`` and ``min(d2|dt|^g2 - |dmu|)``;
    a negative margin beyond float slack is a failure.
    """
    h = holder or f.holder
    lo, hi = float(domain[0]), float(domain[1])
    n = int(math.ceil((hi - lo) / grid_step - 1e-9)) + 1
    grid = np.linspace(lo, hi, n)
    mu = f(grid)
    iu = np.triu_indices(n, k=1)
    dt = np.abs(grid[:, None] - grid[None, :])[iu]
    dmu = np.abs(mu[:, None] - mu[None, :])[iu]

    lower_bound = h.d1 * dt ** h.gamma1
    upper_bound = h.d2 * dt ** h.gamma2
    lower_gap = dmu - lower_bound
    upper_gap = upper_bound - dmu
    lower_tol = _HOLDER_RTOL * np.maximum(dmu, lower_bound)
    upper_tol = _HOLDER_RTOL * np.maximum(dmu, upper_bound)

    i_lo = int(np.argmin(lower_gap + lower_tol))
    i_hi = int(np.argmin(upper_gap + upper_tol))
    lower_ok = bool(np.all(lower_gap + lower_tol >= 0))
    upper_ok = bool(np.all(upper_gap + upper_tol >= 0))
    pair = lambda i: (float(grid[iu[0][i]]), float(grid[iu[1][i]]))  # noqa: E731
    return HolderReport(
        passed=lower_ok and upper_ok,
        lower_ok=lower_ok,
        upper_ok=upper_ok,
        lower_witness=pair(i_lo),
        upper_witness=pair(i_hi),
        lower_margin=float(lower_gap[i_lo]),
        upper_margin=float(upper_gap[i_hi]),
    )
