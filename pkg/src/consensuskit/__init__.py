"""consensuskit: gain synthesis and closed-loop simulation for distributed
adaptive consensus of linear and Lipschitz-nonlinear multi-agent networks."""

from .dynamics import (
    LinearModel,
    NonlinearModel,
    check_lipschitz,
    linear_drift,
    manipulator_model,
    manipulator_reference_gains,
    nonlinear_drift,
)
from .errors import ConfigError, DivergenceError, NumericalError, SynthesisError
from .graph import (
    SpectralInfo,
    Topology,
    build_topology,
    complete_topology,
    is_connected,
    laplacian,
    path_topology,
    ring_topology,
    spectral_info,
    star_topology,
)
from .protocol import (
    CouplingState,
    LeaderCoupling,
    adaptive_control,
    adaptive_weight_rates,
    leader_control,
    leader_weight_rates,
    static_control,
)
from .sim import (
    ConsensusVerdict,
    SimConfig,
    Trajectory,
    benchmark_topology,
    consensus_error,
    lyapunov_trace,
    lyapunov_v1,
    simulate_adaptive,
    simulate_leader,
    simulate_static,
    verdict,
)
from .synthesis import (
    ConsensusGain,
    LipschitzGain,
    SolverOptions,
    gain_document,
    gamma_residual,
    lipschitz_block_matrix,
    load_gain_document,
    parse_gain_document,
    save_gain_document,
    solve_linear_gain,
    solve_lipschitz_gain,
    static_coupling_bound,
    verify_consensus_gain,
    verify_lipschitz_gain,
)

__version__ = "0.1.0"
