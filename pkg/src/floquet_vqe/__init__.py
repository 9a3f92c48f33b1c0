"""Variational solvers for Floquet quasi-energies of periodically driven systems."""

from .evolution import MonodromyOperator, controlled_power, trotter_monodromy, unitary_power
from .fz1 import FloquetSolution, FZ1Config, iqpe, loss_fz1, solve_band_fz1, u3_ansatz
from .fz2 import FZ2Config, build_fz2_circuit, build_vha, loss_fz2, solve_band_fz2
from .model import (
    ExtendedHamiltonian,
    FourierHamiltonian,
    build_extended_hamiltonian,
    driven_spin_half,
    evaluate_at_time,
)
from .oracle import (
    QuasiEnergySpectrum,
    central_pair,
    circular_distance,
    exact_quasienergies,
    fold_to_bz,
    mode_fidelity,
    truncated_exact_spectrum,
)
from .qsim import DenseOperator, RegisterShape, StateVector, apply_operator, expectation, new_zero_state
from .variational import OptimizerConfig, ParameterizedCircuit, gradient, maximize

__version__ = "0.1.0"
