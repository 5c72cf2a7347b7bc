"""Variational propagation of a driven two-resonator qubit-photon-phonon
system, with analytic and exact number-state-basis oracles."""

__version__ = "0.1.0"

from .analysis import (DiabaticLevel, LZTimescales, TransitionEvent,
                       adiabatic_pathway, analytic_phonon, analytic_plz,
                       crossing_times, detect_jumps, diabatic_energy,
                       lz_timescales, sweep_rate, sweep_rate_nominal)
from .ansatz import (MultiD2State, OverlapKernel, debye_waller,
                     init_paper_state, norm_squared, overlap_matrix)
from .eom import DerivativeSet, LinearSystem, assemble, derivatives, total_energy
from .errors import (AssemblyError, ConfigError, NormAbortError, SolverError,
                     TruncationLeakError)
from .integrator import RunConfig, Trajectory, run, run_config_for, step
from .linsolve import SolverConfig, solve
from .model import (PRESETS, ModelParams, ScenarioPreset, drive_field,
                    load_preset, validate_params, validate_preset)
from .observables import (NumberStatePopulations, ObservableRecord, measure,
                          number_state_populations)
from .oracle import FockVector, coherent_fock_init, exact_propagate, fock_measure

__all__ = [
    "__version__",
    "ModelParams", "ScenarioPreset", "PRESETS", "drive_field",
    "validate_params", "validate_preset", "load_preset",
    "MultiD2State", "OverlapKernel", "debye_waller", "overlap_matrix",
    "norm_squared", "init_paper_state",
    "LinearSystem", "DerivativeSet", "assemble", "derivatives", "total_energy",
    "SolverConfig", "solve",
    "RunConfig", "Trajectory", "step", "run", "run_config_for",
    "ObservableRecord", "NumberStatePopulations", "measure",
    "number_state_populations",
    "DiabaticLevel", "TransitionEvent", "LZTimescales", "diabatic_energy",
    "crossing_times", "sweep_rate", "sweep_rate_nominal", "lz_timescales",
    "analytic_plz", "analytic_phonon", "detect_jumps", "adiabatic_pathway",
    "FockVector", "coherent_fock_init", "exact_propagate", "fock_measure",
    "ConfigError", "SolverError", "AssemblyError", "NormAbortError",
    "TruncationLeakError",
]
