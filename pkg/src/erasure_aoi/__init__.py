"""Age of Information of K-packet updates over an erasure channel with feedback."""

from erasure_aoi._kernels import BACKEND
from erasure_aoi.analytic import (
    PacketAttemptMoments,
    aggregate_failure_moments,
    average_aoi,
    brute_force_moments,
    cumulative_time_recursion,
    evaluate,
    failed_update_moments,
    packet_attempt_moments,
    peak_aoi,
    prefix_moment_recursion,
    success_prob,
    success_time_moments,
    update_moments,
)
from erasure_aoi.closed_forms import (
    AoiBounds,
    ZeroErrorAudit,
    aoi_bounds,
    infinite_error_aoi,
    paoi_c2_range,
    paoi_cap_lower_bounds,
    paoi_lower_bound_policy,
    small_eps_optimal_aoi,
    small_eps_optimal_paoi,
    small_eps_optimal_policy,
    zero_error_aoi,
    zero_error_aoi_printed,
    zero_error_audit,
)
from erasure_aoi.optimizer import (
    AUTO,
    Objective,
    OptResult,
    SearchSpace,
    SearchSpaceTooLarge,
    SweepRow,
    optimize,
    prune_bound_paoi,
    sweep,
)
from erasure_aoi.policy import (
    UNBOUNDED,
    AoiResult,
    ChannelError,
    ErasureChannel,
    Policy,
    PolicyError,
    UpdateMoments,
    check_moments,
    format_policy,
    make_channel,
    parse_policy,
    validate_policy,
)
from erasure_aoi.simulator import (
    EmpiricalMoments,
    SimConfig,
    SimStats,
    SimulationError,
    empirical_moments,
    simulate,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
