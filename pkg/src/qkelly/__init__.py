"""Kelly-style gambling on a bosonic mode: simulation and analysis.

A gambler repeatedly splits one optical mode across J lossy arms and
amplifies the winning arm; the per-round maps compose into a random
attenuate-amplify channel whose two coordinates (accumulated gain,
accumulated noise) carry everything payoff-relevant.  This package
simulates those games, evaluates energy/ergotropy payoffs and their
figures of merit, and ships ready-made experiment presets.
"""
from .analysis import (
    ClassicalDoubling,
    GameMoments,
    KellyResult,
    LLNReport,
    MomentReport,
    RegimeReport,
    classical_doubling_rate,
    entropy_bits,
    gamma_mean,
    gamma_mean_limit,
    gamma_second_moment,
    gamma_second_moment_limit,
    growth_rate,
    kelly_optimize,
    mean_field_r,
    mean_field_r_curve,
    mean_field_r_limit,
    moment_report,
    quantum_doubling_rate,
    wealth_lln_check,
)
from .betting import (
    Fairness,
    GameConfig,
    InputProfile,
    PayoffRecord,
    TrajectoryRecord,
    average_energy_expectation,
    figures_of_merit,
    horse_channel,
    new_trajectory,
    payoff,
    step,
    validate,
)
from .channels import (
    GainChannel,
    GaussianChannel,
    additive_noise,
    apply,
    compose,
    compose_gain,
    from_gain_and_photons,
    pure_amp,
    pure_loss,
)
from .engine import (
    ConvergenceReport,
    ExactDistribution,
    SampleBatch,
    empirical_convergence_diagnostic,
    enumerate_exact,
    sample_trajectories,
)
from .errors import (
    ChannelViolation,
    ConfigError,
    DomainError,
    EnumerationSizeError,
    InvariantViolation,
    QKellyError,
    UncertaintyViolation,
)
from .gaussian import (
    ErgotropySummary,
    GaussianState,
    StateParams,
    energy,
    ergotropy,
    ergotropy_summary,
    iso_ergotropy_sample,
    params_energy,
    params_ergotropy,
    params_to_state,
    state_to_params,
    vacuum,
)

__version__ = "0.1.0"
