# GENERIC systems: the thermalized oscillator, its integrator and diagnostics
from .system import GenericSystem
from .oscillator import (
    OscillatorParams,
    OscillatorEntropyPotential,
    ThermalizedOscillator,
    build_oscillator,
)
from .dynamics import integrate_generic, conservation_report, ConservationReport
