"""Regional multi-armed bandits: group-coupled parametric rewards, UCB-g policies and experiments."""
from .analysis import (
    bound_report,
    confusing_period,
    corollary_global_constant,
    gaps,
    regret_summary,
    thm1_bound,
    thm2_shape,
    thm4_lower,
    thm4_lower_from_means,
    window_rule,
)
from .environment import BanditInstance, DriftSchedule, Environment, NoiseModel, RegretTrace, simulate
from .harness import (
    ExperimentConfig,
    basic_instance,
    classic_instance,
    global_instance,
    load_config,
    preset,
    presets,
    pricing_instance,
    run,
    summary_at,
    write_outputs,
)
from .policies import SWUCB, SWUCBG, UCB1, UCBG, Oracle, RandomPolicy, make_policy, padding, sw_padding
from .reward_model import (
    ConfigError,
    DomainError,
    GroupSpec,
    Holder,
    RewardFunction,
    biased_distance,
    compute_regions,
    envelope,
    evaluate,
    fig1_arms,
    invert,
    verify_holder,
)

__version__ = "0.1.0"
