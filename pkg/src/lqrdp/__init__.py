"""Q-function value and policy iteration for discrete-time LQR, with
numerical certificates for their convergence bounds."""

from .bounds import (
    CertificationReport,
    LyapunovWeight,
    ReportSection,
    certify,
    gelfand_N,
    lyapunov_weight,
    rate_classifier,
)
from .dp import (
    IterationTrace,
    OptimalSolution,
    bellman_T,
    operator_D,
    operator_H,
    operator_L,
    policy_eval_Q,
    policy_eval_value,
    riccati_step,
    run_pi,
    run_qpi,
    run_qvi,
    run_two_phase,
    run_vi,
    solve_optimal,
)
from .errors import (
    CertificationError,
    ConvergenceError,
    DimensionError,
    DomainError,
    InvalidPlantError,
    LQRError,
    NotPositiveDefiniteError,
    StabilityError,
)
from .linalg import (
    fixed_point_linear_solve,
    matrix_leq,
    psd_split,
    spectral_radius,
    sym_eigen,
    weighted_norm,
)
from .model import (
    Plant,
    augment,
    closed_loop_cost,
    example_plant,
    greedy_gain,
    is_stabilizing,
    lambda_matrix,
    scalar_plant,
    schur_value,
)

__version__ = "0.1.0"
