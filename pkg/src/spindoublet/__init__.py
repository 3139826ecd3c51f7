"""Spin ensembles coupled to a whispering-gallery mode doublet.

A compact toolkit for one experimental situation: a dielectric microwave
resonator whose travelling-wave mode doublets carry opposite circular
polarization, loaded with paramagnetic ions whose spin transitions obey
angular-momentum selection rules. Right- and left-circular photons then
address disjoint spin sub-ensembles, the thermal state of the ion ladder
sets the strength of each coupling, and the avoided crossings that result
can be simulated, post-processed, and fitted against measured peaks.

The library layering, bottom up:

``numerics``
    Deterministic dense eigensolver and linear solver.
``spinmodel``
    Six-level ion ladder: energies, transitions, spectroscopy curves.
``thermo``
    Boltzmann occupancies, sub-ensemble sizes, susceptibilities.
``cavityqed``
    Coupled-mode matrices and the Fock-space reference model.
``spectra``
    Field sweeps, transmission spectra, gap and peak extraction.
``fitting``
    Damped least-squares parameter estimation and power-law fits.
``cli``
    Command line front end that renders delimited data plus figures.
"""

from .cavityqed import (
    CoupledModeMatrix,
    EnsembleCoupling,
    FockHamiltonian,
    ModeDoublet,
    build_fock_hamiltonian,
    coupled_mode_matrix,
    eigenmodes,
    single_excitation_spectrum,
)
from .errors import NumericalError, ValidationError
from .fitting import FitResult, Observation, fit_coupled_modes, fit_power_law
from .numerics import EigenDecomposition, eigh, solve_linear
from .spectra import (
    SweepResult,
    TransmissionSpectrum,
    count_peaks,
    extract_gap,
    field_sweep,
    field_sweep_fixed,
    max_displacement,
    transmission,
)
from .spinmodel import SpinSystemParams, level_energy, spectroscopy_map, transition
from .thermo import (
    Susceptibility,
    ThermalState,
    coupling_from_temperature,
    partition_function,
    per_spin_coupling,
    populations,
    susceptibility_from_coupling,
    susceptibility_thermal,
)

__version__ = "0.1.0"

__all__ = [
    "CoupledModeMatrix",
    "EigenDecomposition",
    "EnsembleCoupling",
    "FitResult",
    "FockHamiltonian",
    "ModeDoublet",
    "NumericalError",
    "Observation",
    "SpinSystemParams",
    "Susceptibility",
    "SweepResult",
    "ThermalState",
    "TransmissionSpectrum",
    "ValidationError",
    "build_fock_hamiltonian",
    "count_peaks",
    "coupled_mode_matrix",
    "coupling_from_temperature",
    "eigenmodes",
    "eigh",
    "extract_gap",
    "field_sweep",
    "field_sweep_fixed",
    "fit_coupled_modes",
    "fit_power_law",
    "level_energy",
    "max_displacement",
    "partition_function",
    "per_spin_coupling",
    "populations",
    "single_excitation_spectrum",
    "solve_linear",
    "spectroscopy_map",
    "susceptibility_from_coupling",
    "susceptibility_thermal",
    "transition",
]
