"""State transfer between two qubits through a lossy cavity in the USC regime.

Simulates the counterintuitive Gaussian (STIRAP-like) protocol under the
full Rabi Hamiltonian with cavity loss, and improves on it with
piecewise-constant optimal control of the two coupling schedules.
"""

from .model import (
    BasisIndex,
    ModelParams,
    basis_index,
    basis_state,
    build_rabi,
    build_rwa,
    effective_hamiltonian,
    excitation_operator,
    flat_index,
    parity_operator,
    superposition_initial,
    superposition_target,
)
from .pulses import (
    GaussianPair,
    PiecewiseConstantSchedule,
    clamp_schedule,
    effective_duration,
    gaussian_value,
    integration_window,
    pw_value,
)
from .dynamics import (
    IntegrationError,
    PropagationOptions,
    Trajectory,
    matrix_exponential,
    propagate,
    propagate_piecewise,
)
from .metrics import (
    RunRecord,
    cavity_indices,
    leakage,
    mean_photon,
    peak_mean_photon,
    populations,
    subspace_indices,
    transfer_efficiency,
)
from .qoc import (
    NumericError,
    OptimizationConfig,
    OptimizationResult,
    finite_difference_gradient,
    gradient,
    gradient_check,
    objective,
    objective_and_gradient,
    optimize,
)
from .sweep import (
    SweepFixed,
    SweepGrid,
    calibrate_tau,
    default_grid,
    run_point,
    run_sweep,
)

__version__ = "0.1.0"
