"""Numerical model of the two-ion Cirac-Zoller controlled-NOT gate."""

from .experiment import (
    ParityCurve,
    PopulationEstimate,
    TimeScan,
    TruthTable,
    bell_experiment,
    measure_shot,
    parity_scan,
    run_shots,
    sackett_fidelity,
    time_scan,
    truth_table,
)
from .fitting import EchoPhaseFit, HarmonicFit, RabiFrequencyFit, fit_phase_slope
from .gates import Sequence, cnot_single_ion, composite_phase_gate, cz_cnot, spin_echo, unitary_of
from .hilbert import (
    RegisterConfig,
    RegisterState,
    TrapConfig,
    basis_index,
    init_state,
    mode_frequencies,
    populations,
    truncation_leakage,
)
from .noise import NoiseConfig, ShotParams, detection_flip, sample_shot, thermal_n
from .pulseprog import ProgramError, format_program, parse_program, schedule
from .pulses import (
    AcStark,
    AddressingModel,
    Pulse,
    PulseContext,
    PulseKind,
    RabiConfig,
    apply_pulse,
    blue_sideband,
    carrier,
    deflection_phase,
    rabi_profile,
)

__version__ = "0.1.0"
