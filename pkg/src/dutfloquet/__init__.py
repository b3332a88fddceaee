"""Floquet spectra and double-unitary-transformation analytics for driven two- and three-level systems."""

from .errors import ConsistencyError, DegenerateChannelError, NumericFailure
from .model import (DriveSpec2L, DriveSpec3L, FourierHamiltonian, build_hamiltonian_2l,
                    build_hamiltonian_3l, evaluate_at_time, square_wave_harmonics)
from .floquet import (FloquetOptions, QuasiSpectrum, build_floquet_matrix, diagonalize,
                      quasienergy_sweep, transition_probability)
from .dut import DutResult, dut_three_level, dut_two_level, u2_phase_functions
from .gvv import (CouplingTable, EffectiveModel, GvvShifts, coupling_table, diffraction_function,
                  effective_matrix, gvv_shifts, rho11_analytic, rho11_two_level)
from .oracle import PropagationResult, fourier_coefficients, propagate_fourier, propagate_square_wave

__version__ = "0.1.0"

__all__ = [
    "ConsistencyError", "DegenerateChannelError", "NumericFailure",
    "DriveSpec2L", "DriveSpec3L", "FourierHamiltonian", "build_hamiltonian_2l",
    "build_hamiltonian_3l", "evaluate_at_time", "square_wave_harmonics",
    "FloquetOptions", "QuasiSpectrum", "build_floquet_matrix", "diagonalize",
    "quasienergy_sweep", "transition_probability",
    "DutResult", "dut_three_level", "dut_two_level", "u2_phase_functions",
    "CouplingTable", "EffectiveModel", "GvvShifts", "coupling_table", "diffraction_function",
    "effective_matrix", "gvv_shifts", "rho11_analytic", "rho11_two_level",
    "PropagationResult", "fourier_coefficients", "propagate_fourier", "propagate_square_wave",
]
