import numpy as np
import pytest

from regional_bandits.environment import (
    BanditInstance,
    DriftSchedule,
    Environment,
    NoiseModel,
    lipschitz_ok,
    replication_streams,
    simulate,
)
from regional_bandits.policies import Oracle, RandomPolicy
from regional_bandits.reward_model import ConfigError, GroupSpec, affine, fig1_arms, pricing


def test_zero_noise_returns_mean(basic):
    inst = BanditInstance(basic.groups, basic.theta_true, NoiseModel("gaussian", 0.0))
    env = Environment(inst)
    rng = np.random.default_rng(1)
    assert all(env.sample_reward(3, 3, t, rng) == 1.0 for t in range(1, 50))


def test_bernoulli_law_of_large_numbers():
    inst = BanditInstance((GroupSpec(fig1_arms()),), (0.7,), NoiseModel("bernoulli"))
    env = Environment(inst)
    rng = np.random.default_rng(2)
    draws = [env.sample_reward(0, 2, 1, rng) for _ in range(1_000_000)]
    assert set(draws) <= {0.0, 1.0}
    assert np.mean(draws) == pytest.approx(0.56, abs=0.002)


def test_gaussian_pricing_mean():
    inst = BanditInstance((GroupSpec((pricing(0.5),)),), (0.35,), NoiseModel("gaussian", 1.0))
    env = Environment(inst)
    rng = np.random.default_rng(3)
    draws = [env.sample_reward(0, 0, 1, rng) for _ in range(1_000_000)]
    assert np.mean(draws) == pytest.approx(0.3403, abs=0.004)


def test_sample_consumes_one_draw(basic):
    env = Environment(basic)
    a, b = np.random.default_rng(4), np.random.default_rng(4)
    env.sample_reward(0, 0, 1, a)
    b.random()
    assert a.random() == b.random()


def test_sequential_draws_match_block(basic):
    # simulate() pre-draws the block; sample_reward draws one at a time
    env = Environment(basic)
    seq = np.random.default_rng(5)
    block = basic.noise.draw(np.random.default_rng(5), 100)
    for t in range(1, 101):
        x = env.sample_reward(1, 1, t, seq)
        assert x == env.reward_from_draw(env.mean(t, 1, 1), block[t - 1])


def test_invalid_index(basic):
    env = Environment(basic)
    with pytest.raises(IndexError):
        env.sample_reward(4, 0, 1, np.random.default_rng(0))
    with pytest.raises(IndexError):
        env.mean(1, 1, 9)


def test_oracle_best_examples(basic, pricing_inst):
    assert Environment(basic).oracle_best(1) == (3, 3, 1.0)
    m, k, mu = Environment(pricing_inst).oracle_best(1)
    assert (m, k) == (0, 1)
    assert mu == pytest.approx(0.3403125, abs=1e-15)
    single = BanditInstance((GroupSpec((affine(0.5, 0.1),)),), (0.4,))
    assert Environment(single).oracle_best(7) == (0, 0, pytest.approx(0.3))


def test_oracle_matches_exhaustive_enumeration(pricing_inst):
    env = Environment(pricing_inst)
    pairs = pricing_inst.arm_pairs()
    values = [g.arms[k](pricing_inst.theta_true[m]) for m, g in enumerate(pricing_inst.groups)
              for k in range(g.n_arms)]
    assert len(pairs) == 11
    m, k, mu = env.oracle_best(1)
    assert pairs[int(np.argmax(values))] == (m, k)


def test_instantaneous_regret_examples(basic):
    env = Environment(basic)
    assert env.instantaneous_regret(1, (3, 3)) == 0.0
    assert env.instantaneous_regret(1, (2, 2)) == pytest.approx(0.44)
    assert env.instantaneous_regret(1, (0, 0)) == pytest.approx(0.19)


def test_theta_out_of_domain_rejected():
    with pytest.raises(ConfigError):
        BanditInstance((GroupSpec(fig1_arms()),), (1.3,))
    with pytest.raises(ConfigError):
        BanditInstance((GroupSpec(fig1_arms()),), (0.3, 0.4))


def test_bernoulli_range_checked():
    inst = BanditInstance((GroupSpec((affine(2.0, 0.0),)),), (0.7,), NoiseModel("bernoulli"))
    with pytest.raises(ConfigError, match="bernoulli"):
        Environment(inst)


@pytest.mark.parametrize("kind", ["triangular", "sinusoidal"])
def test_drift_lipschitz_full_scan(basic, kind):
    sched = DriftSchedule(kind, tau=1000.0)
    env = Environment(basic, sched, 100_000)
    assert lipschitz_ok(env.thetas, 1000.0)
    assert env.thetas.min() >= 0.0 and env.thetas.max() <= 1.0


def test_triangular_slope_exact(basic):
    sched = DriftSchedule("triangular", tau=250.0)
    th = sched.trajectory(basic.theta_true, [(0, 1)] * 4, np.arange(1, 2001))
    steps = np.abs(np.diff(th, axis=0))
    # away from the turning points the slope is exactly 1/tau
    assert np.median(steps) == pytest.approx(1 / 250, rel=1e-9)


def test_drift_groups_subset(pricing_inst):
    sched = DriftSchedule("triangular", tau=1000.0, groups=(0, 1))
    env = Environment(pricing_inst, sched, 500)
    assert np.all(env.thetas[:, 2] == 0.7) and np.all(env.thetas[:, 3] == 0.9)
    assert np.ptp(env.thetas[:, 0]) > 0


def test_drifting_env_needs_horizon(basic):
    with pytest.raises(ConfigError):
        Environment(basic, DriftSchedule("triangular", tau=10.0))


def test_oracle_regret_zero_under_drift(basic):
    env = Environment(basic, DriftSchedule("triangular", tau=100.0), 2000)
    env_rng, _ = replication_streams(0, 0)
    tr = simulate(env, Oracle(env), 2000, env_rng)
    assert np.all(tr.inst_regret == 0.0)


def test_trace_invariants_random_policy(basic):
    env = Environment(basic, DriftSchedule("sinusoidal", tau=50.0), 3000)
    env_rng, pol_rng = replication_streams(11, 2)
    tr = simulate(env, RandomPolicy(basic, pol_rng), 3000, env_rng)
    assert np.all(tr.inst_regret >= 0)
    assert np.all(np.diff(tr.cum_regret) >= 0)
    assert tr.cum_regret[-1] == pytest.approx(tr.inst_regret.sum())


def test_identical_seeds_identical_traces(basic):
    env = Environment(basic)
    out = []
    for _ in range(2):
        env_rng, pol_rng = replication_streams(5, 3)
        out.append(simulate(env, RandomPolicy(basic, pol_rng), 500, env_rng))
    for field in ("groups", "arms", "rewards", "inst_regret"):
        assert np.array_equal(getattr(out[0], field), getattr(out[1], field))


def test_seed_is_base_plus_replication(basic):
    a, _ = replication_streams(0, 1)
    b, _ = replication_streams(1, 0)
    assert a.random() == b.random()
    c, d = replication_streams(0, 0)
    assert c.random() != d.random()
