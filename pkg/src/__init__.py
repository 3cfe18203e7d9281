"""
WGM tuning package.

This package provides tools for strain and temperature tuning of
whispering-gallery modes in silica microspheroids:
- Computing mode frequencies and spectral intervals
- Modelling PZT strain and thermal tuning
- Synthesizing laser-scan transmission traces
- Fitting Lorentzian dips, calibrating sweeps and assigning mode numbers
"""

from src.calibration import CalibrationEngine, CalibrationResult, calibrate_device
from src.curve_fitting import DipFit, LorentzianFitter, fit_lorentzian
from src.mode_assignment import AssignmentStrategy, ModeAssignment, WideToNarrowAssignment, assign_modes
from src.modes import ModeFilter, ModeId, ModeLine, Polarization, SpheroidGeometry, spectrum_window
from src.run_config import RunConfig, load_run_config
from src.spectroscopy import LaserScan, TransmissionTrace, synthesize_trace, voltage_sweep_experiment
from src.tuning import ActuatorAssembly, StrainState, ThermalState, strain_from_voltage

__all__ = [
    'ActuatorAssembly',
    'AssignmentStrategy',
    'CalibrationEngine',
    'CalibrationResult',
    'DipFit',
    'LaserScan',
    'LorentzianFitter',
    'ModeAssignment',
    'ModeFilter',
    'ModeId',
    'ModeLine',
    'Polarization',
    'RunConfig',
    'SpheroidGeometry',
    'StrainState',
    'ThermalState',
    'TransmissionTrace',
    'WideToNarrowAssignment',
    'assign_modes',
    'calibrate_device',
    'fit_lorentzian',
    'load_run_config',
    'spectrum_window',
    'strain_from_voltage',
    'synthesize_trace',
    'voltage_sweep_experiment',
]
