"""Numerical evaluation of the regret bounds and related instance statistics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .environment import BanditInstance, Environment, RegretTrace
from .policies import _check_alphas
from .reward_model import ConfigError, biased_distance, compute_regions, envelope


class SchemaError(ValueError):
    """Traces that cannot be summarised together."""


def group_values(instance: BanditInstance) -> np.ndarray:
    """Envelope value of every group at its true parameter."""
    return np.array([envelope(g, th)[0] for g, th in zip(instance.groups, instance.theta_true)])


def optimal_group(instance: BanditInstance) -> int:
    return int(np.argmax(group_values(instance)))


def gaps(instance: BanditInstance) -> np.ndarray:
    """Suboptimality gap of each group; zero for the optimal group."""
    v = group_values(instance)
    return v.max() - v


def psi(g, y: float) -> float:
    """Inverse of the padding function: ``(y / (D2 D1bar^gamma2))**(1/xi)``."""
    return (y / g.padding_scale) ** (1.0 / g.xi)


@dataclass
class Thm1Terms:
    group_term: np.ndarray
    in_group_term: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.group_term + self.in_group_term


@dataclass
class Thm1Constants:
    m_star: int
    gaps: np.ndarray
    delta: float
    psi: np.ndarray
    alpha: float
    alphas: list


def thm1_constants(instance: BanditInstance, alphas=None, grid_step: float = 1e-4) -> Thm1Constants:
    alphas = _check_alphas(instance, alphas)
    m_star = optimal_group(instance)
    d = gaps(instance)
    for m, gap in enumerate(d):
        if m != m_star and gap <= 0:
            raise ConfigError(f"group {m} ties the optimal group; the upper bound is undefined")
    g_star = instance.groups[m_star]
    if g_star.n_arms == 1:
        delta = math.inf
    else:
        geo = compute_regions(g_star, grid_step)
        delta = biased_distance(geo, instance.theta_true[m_star])
    psis = np.array([
        math.inf if m == m_star else psi(g, d[m] / 2.0) for m, g in enumerate(instance.groups)
    ])
    alpha = max(2.0 * a / g.n_arms for a, g in zip(alphas, instance.groups))
    return Thm1Constants(m_star, d, delta, psis, alpha, alphas)


def thm1_bound(instance: BanditInstance, T, alphas=None, grid_step: float = 1e-4,
               constants: Thm1Constants | None = None) -> Thm1Terms:
    """Parameter-dependent upper bound on the expected regret of UCB-g at horizon(s) ``T``.

    The in-group term vanishes when the optimal group has a single arm (or
    no suboptimal region at all).
    """
    c = constants or thm1_constants(instance, alphas, grid_step)
    T = np.asarray(T, dtype=float)
    log_t = np.log(T)
    group_term = np.zeros_like(T)
    for m in range(instance.n_groups):
        if m == c.m_star:
            continue
        group_term = group_term + c.alphas[m] * log_t / c.psi[m] + 2.0 / (c.alpha - 2.0)

    g = instance.groups[c.m_star]
    if g.n_arms == 1 or math.isinf(c.delta):
        in_group = np.zeros_like(T)
    else:
        rate = (2.0 / g.n_arms) * (c.delta / g.d1_bar) ** (2.0 * g.gamma1)
        if rate == 0.0:
            in_group = 2.0 * T
        else:
            in_group = 2.0 * -np.expm1(-T * rate) / math.expm1(rate)
    return Thm1Terms(group_term, in_group)


def corollary_global_constant(instance: BanditInstance, grid_step: float = 1e-4) -> float:
    """Horizon-free limit of the in-group term: ``2 / (exp((2/K)(delta/D1bar)^(2 gamma1)) - 1)``."""
    c = thm1_constants(instance, grid_step=grid_step)
    g = instance.groups[c.m_star]
    if g.n_arms == 1 or math.isinf(c.delta):
        return 0.0
    rate = (2.0 / g.n_arms) * (c.delta / g.d1_bar) ** (2.0 * g.gamma1)
    return math.inf if rate == 0 else 2.0 / math.expm1(rate)


def thm2_shape(M: int, K_mstar: int, xi: float, xi_mstar: float, T, C1: float = 1.0, C2: float = 1.0):
    """Worst-case regret shape ``C1 (M ln T)^xi T^(1-xi) + C2 K^xi* T^(1-xi*)``."""
    if not (C1 > 0 and C2 > 0):
        raise ValueError("C1 and C2 must be positive")
    T = np.asarray(T, dtype=float)
    return C1 * (M * np.log(T)) ** xi * T ** (1.0 - xi) + C2 * K_mstar ** xi_mstar * T ** (1.0 - xi_mstar)


@dataclass
class LowerBound:
    """``E[plays of suboptimal arms] >= constant + coefficient * ln T``."""

    coefficient: float
    constant: float

    def __call__(self, T):
        return self.constant + self.coefficient * np.log(np.asarray(T, dtype=float))


def gaussian_kl(a: float, b: float, sigma: float = 1.0) -> float:
    return (a - b) ** 2 / (2.0 * sigma ** 2)


def thm4_lower_from_means(arm_means, sigma: float = 1.0) -> LowerBound:
    """Lower-bound constants from per-group lists of arm means (gaussian rewards)."""
    arm_means = [list(map(float, row)) for row in arm_means]
    order = sorted(range(len(arm_means)), key=lambda m: -max(arm_means[m]))
    best_row = arm_means[order[0]]
    mu_star = max(best_row)
    k_star = best_row.index(mu_star)

    constant = 0.0
    for k, mu in enumerate(best_row):
        if k == k_star:
            continue
        kl = gaussian_kl(mu_star, mu, sigma)
        constant += math.inf if kl == 0 else 1.0 / (4.0 * kl)

    coefficient = 0.0
    for m in order[1:]:
        # for the gaussian family KL_inf to a target mean is the KL to it
        kl = gaussian_kl(mu_star, max(arm_means[m]), sigma)
        coefficient += math.inf if kl == 0 else 1.0 / kl
    return LowerBound(coefficient, constant)


def thm4_lower(instance: BanditInstance) -> LowerBound:
    if instance.noise.kind != "gaussian":
        raise ConfigError("the lower-bound constants are only evaluated for gaussian rewards")
    means = [g.means(th).tolist() for g, th in zip(instance.groups, instance.theta_true)]
    return thm4_lower_from_means(means, instance.noise.sigma)


def window_rule(tau: float, groups) -> int:
    """Sliding-window length ``round(max_m tau^(2 gamma2 / (2 gamma2 + 1)))``, at least 1."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    w = max(tau ** (2.0 * g.gamma2 / (2.0 * g.gamma2 + 1.0)) for g in groups)
    return max(1, int(math.floor(w + 0.5)))


def confusing_period(env: Environment, delta: float, T: int) -> int:
    """Count of (t, m, m') with m != m' whose group envelopes differ by less than ``delta``."""
    env_values = env.group_envelopes()
    n_groups = env_values.shape[1]
    off_diag = ~np.eye(n_groups, dtype=bool)

    def count(rows):
        diff = np.abs(rows[:, :, None] - rows[:, None, :])
        return int(np.sum((diff < delta) & off_diag))

    if env.schedule.is_constant:
        return count(env_values[:1]) * T
    if T > len(env_values):
        raise ValueError(f"T={T} beyond environment horizon {len(env_values)}")
    return count(env_values[:T])


@dataclass
class RegretSummary:
    label: str
    t: np.ndarray
    mean_cum: np.ndarray
    se_cum: np.ndarray
    mean_unit: np.ndarray
    se_unit: np.ndarray
    n_reps: int = field(default=1)


def regret_summary(traces: list[RegretTrace], label: str | None = None) -> RegretSummary:
    """Pointwise mean and standard error across replications."""
    if not traces:
        raise SchemaError("no traces to summarise")
    horizons = {tr.horizon for tr in traces}
    if len(horizons) != 1:
        raise SchemaError(f"traces disagree on the horizon: {sorted(horizons)}")
    cum = np.stack([tr.cum_regret for tr in traces])
    t = np.arange(1, cum.shape[1] + 1)
    unit = cum / t
    n = len(traces)

    def se(x):
        if n < 2:
            return np.zeros(x.shape[1])
        return x.std(axis=0, ddof=1) / math.sqrt(n)

    return RegretSummary(
        label=label if label is not None else traces[0].policy,
        t=t,
        mean_cum=cum.mean(axis=0),
        se_cum=se(cum),
        mean_unit=unit.mean(axis=0),
        se_unit=se(unit),
        n_reps=n,
    )


@dataclass
class BoundReport:
    horizons: np.ndarray
    thm1: np.ndarray
    group_term: np.ndarray
    in_group_term: np.ndarray
    thm2: np.ndarray
    thm4: np.ndarray | None
    constants: dict


def bound_report(instance: BanditInstance, horizons, alphas=None, C1: float = 1.0, C2: float = 1.0,
                 grid_step: float = 1e-4) -> BoundReport:
    horizons = np.asarray(horizons, dtype=float)
    c = thm1_constants(instance, alphas, grid_step)
    terms = thm1_bound(instance, horizons, constants=c)
    xis = [g.xi for g in instance.groups]
    g_star = instance.groups[c.m_star]
    thm2 = thm2_shape(instance.n_groups, g_star.n_arms, max(xis), g_star.xi, horizons, C1, C2)
    thm4 = None
    lower = None
    if instance.noise.kind == "gaussian":
        lower = thm4_lower(instance)
        thm4 = lower(horizons)
    constants = {
        "m_star": c.m_star,
        "gaps": c.gaps.tolist(),
        "delta": c.delta,
        "psi_half_gap": c.psi.tolist(),
        "alpha": c.alpha,
        "alphas": c.alphas,
        "xi": xis,
    }
    if lower is not None:
        constants["kl_coefficient"] = lower.coefficient
        constants["kl_constant"] = lower.constant
    return BoundReport(horizons, terms.total, terms.group_term, terms.in_group_term, thm2, thm4, constants)
