"""Many-server queues with abandonment: exact event simulation, diffusion
scalings, regulator mappings, limit processes, and the finite-n statistics
that tie them together."""

from .distributions import ArrivalSpec, DistributionSpec
from .limits import (
    LimitSolution,
    NoiseSample,
    covariance_S,
    sample_brownian,
    sample_case_i_paths,
    sample_case_ii_paths,
    sample_gaussian_S,
    sample_noise,
    sample_service_noise_finite_n,
    solve_limit_case_i,
    solve_limit_case_ii,
)
from .maps import (
    MappingSolution,
    solve_phi_M,
    solve_phi_Mg,
    solve_phi_n_g,
    solve_skorokhod_g,
)
from .paths import CadlagPath, counting_path, linear_path, step_path, uniform_grid
from .patience import PatienceSpec, constant_hazard, limit_f, power_limit, ramp_hazard
from .renewal import (
    EquilibriumDistribution,
    RenewalTable,
    compute_renewal_function,
    equilibrium_distribution,
)
from .scaling import ScaledBundle, abandonment_compensator, scale
from .simulator import (
    OUTCOME_ABANDONED,
    OUTCOME_IN_SERVICE,
    OUTCOME_SERVED,
    OUTCOME_WAITING,
    SimRecord,
    SystemConfig,
    offered_waits,
    simulate,
    virtual_wait,
    virtual_wait_path,
)
from .streams import RandomStream, make_rng
from .validation import (
    ComparisonVerdict,
    ConvergenceReport,
    GapStatistic,
    compare_abandonment,
    convergence_sweep,
    coupling_gap,
    gap_statistics,
    ks_two_sample,
    little_gap,
    neg_part_sup,
)

__version__ = "0.1.0"

__all__ = [
    "ArrivalSpec",
    "CadlagPath",
    "ComparisonVerdict",
    "ConvergenceReport",
    "DistributionSpec",
    "EquilibriumDistribution",
    "GapStatistic",
    "LimitSolution",
    "MappingSolution",
    "NoiseSample",
    "OUTCOME_ABANDONED",
    "OUTCOME_IN_SERVICE",
    "OUTCOME_SERVED",
    "OUTCOME_WAITING",
    "PatienceSpec",
    "RandomStream",
    "RenewalTable",
    "ScaledBundle",
    "SimRecord",
    "SystemConfig",
    "abandonment_compensator",
    "compare_abandonment",
    "compute_renewal_function",
    "constant_hazard",
    "convergence_sweep",
    "counting_path",
    "coupling_gap",
    "covariance_S",
    "equilibrium_distribution",
    "gap_statistics",
    "ks_two_sample",
    "limit_f",
    "linear_path",
    "little_gap",
    "make_rng",
    "neg_part_sup",
    "offered_waits",
    "power_limit",
    "ramp_hazard",
    "sample_brownian",
    "sample_case_i_paths",
    "sample_case_ii_paths",
    "sample_gaussian_S",
    "sample_noise",
    "sample_service_noise_finite_n",
    "scale",
    "simulate",
    "solve_limit_case_i",
    "solve_limit_case_ii",
    "solve_phi_M",
    "solve_phi_Mg",
    "solve_phi_n_g",
    "solve_skorokhod_g",
    "step_path",
    "uniform_grid",
    "virtual_wait",
    "virtual_wait_path",
]
