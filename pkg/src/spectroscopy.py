"""
Virtual laser-scan spectroscopy.

Builds transmission traces of the prism-coupled sphere: every mode is an
independent Lorentzian loss channel, the laser sweeps a uniform frequency
grid while the line centres drift slowly, and white Gaussian noise comes
from a seeded PCG64 generator.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from config import Config
from src.errors import DomainError
from src.materials import OpticalMaterial
from src.modes import ModeFilter, ModeLine, SpheroidGeometry, spectrum_window
from src.tuning import (
    ActuatorAssembly,
    ThermalState,
    combined_shift,
    reference_line,
    strain_from_voltage,
    tuned_frequency_shift,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LaserScan:
    """Uniform laser sweep: start (THz), span (GHz), sample count and laser linewidth (MHz)."""
    start_frequency: float
    span: float
    points: int
    laser_linewidth: float = 0.0

    def __post_init__(self):
        if self.start_frequency <= 0:
            raise DomainError("start_frequency must be positive")
        if self.span <= 0:
            raise DomainError("Scan span must be positive")
        if int(self.points) != self.points or self.points < 2:
            raise DomainError(f"A scan needs at least 2 points, got {self.points}")
        if self.laser_linewidth < 0:
            raise DomainError("laser_linewidth must be non-negative")

    @property
    def stop_frequency(self) -> float:
        return self.start_frequency + self.span * 1e-3

    @property
    def frequencies(self) -> np.ndarray:
        """Sample frequencies in THz."""
        k = np.arange(self.points)
        return self.start_frequency + self.span * 1e-3 * k / (self.points - 1)

    def sample_times(self, duration: float, offset: float = 0.0) -> np.ndarray:
        """Laser time of every sample when the sweep takes `duration` seconds."""
        return offset + duration * np.arange(self.points) / (self.points - 1)


@dataclass
class TraceMetadata:
    """Acquisition conditions stored with a trace."""
    voltage: float = 0.0
    delta_T: float = 0.0
    seed: Optional[int] = None
    noise_rms: float = 0.0
    drift_ghz_per_s: float = 0.0
    scan_duration_s: float = 0.0
    time_offset_s: float = 0.0
    laser_linewidth_mhz: float = 0.0
    extra: Dict[str, str] = field(default_factory=dict)


@dataclass
class TransmissionTrace:
    """Transmission sampled on a uniform, increasing frequency grid (THz)."""
    frequencies: np.ndarray
    transmission: np.ndarray
    metadata: TraceMetadata = field(default_factory=TraceMetadata)

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.transmission = np.asarray(self.transmission, dtype=float)
        if self.frequencies.ndim != 1 or self.frequencies.shape != self.transmission.shape:
            raise DomainError("Frequency and transmission arrays must be 1-D and equally long")
        if len(self.frequencies) < 2:
            raise DomainError("A trace needs at least 2 samples")
        steps = np.diff(self.frequencies)
        if np.any(steps <= 0):
            raise DomainError("Trace frequencies must be strictly increasing")
        if not np.allclose(steps, steps[0], rtol=1e-4, atol=0.0):
            raise DomainError("Trace frequencies must lie on a uniform grid")

    @property
    def step(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])

    @property
    def voltage(self) -> float:
        return self.metadata.voltage

    def __len__(self) -> int:
        return len(self.frequencies)


def _dip_parameters(line: ModeLine, laser_linewidth: float):
    """Effective (width, depth) after folding in the laser linewidth (MHz)."""
    gamma = line.linewidth
    laser = laser_linewidth * 1e-6
    if laser > Config.LASER_LINEWIDTH_THRESHOLD * gamma:
        return gamma + laser, line.dip_depth * gamma / (gamma + laser)
    return gamma, line.dip_depth


def _dip_profile(detuning, width: float, depth: float):
    half_sq = (0.5 * width) ** 2
    return 1.0 - depth * half_sq / (detuning ** 2 + half_sq)


def lorentzian_transmission(f, line: ModeLine, laser_linewidth: float = 0.0):
    """
    Transmission of a single Lorentzian dip.

    T(f) = 1 - depth·(γ/2)² / ((f - f0)² + (γ/2)²) with γ = f0/Q.

    Args:
        f: Frequency or array of frequencies in THz
        line: The resonance
        laser_linewidth: Laser linewidth in MHz; convolved in when above γ/10

    Returns:
        Transmission, same shape as f
    """
    width, depth = _dip_parameters(line, laser_linewidth)
    result = _dip_profile(np.asarray(f, dtype=float) - line.frequency, width, depth)
    return float(result) if np.ndim(result) == 0 else result


def synthesize_trace(
    spectrum: Sequence[ModeLine],
    scan: LaserScan,
    noise_rms: float = 0.0,
    drift: float = 0.0,
    scan_duration: float = 0.0,
    seed: int = 0,
    voltage: float = 0.0,
    delta_T: float = 0.0,
    time_offset: float = 0.0,
) -> TransmissionTrace:
    """
    Simulate one laser scan across a set of resonances.

    Args:
        spectrum: Lines to imprint; overlapping dips multiply
        scan: Laser sweep
        noise_rms: Standard deviation of additive white noise
        drift: Line-centre drift in GHz/s
        scan_duration: Sweep time in seconds
        seed: PCG64 seed of the noise generator
        voltage: Recorded PZT voltage
        delta_T: Recorded temperature offset
        time_offset: Time at the first sample, for drift accumulated before the scan

    Returns:
        TransmissionTrace carrying the acquisition metadata

    Raises:
        DomainError: If noise_rms or scan_duration is negative
    """
    if noise_rms < 0:
        raise DomainError("noise_rms must be non-negative")
    if scan_duration < 0:
        raise DomainError("scan_duration must be non-negative")

    frequencies = scan.frequencies
    times = scan.sample_times(scan_duration, time_offset)
    transmission = np.ones_like(frequencies)
    for line in spectrum:
        width, depth = _dip_parameters(line, scan.laser_linewidth)
        centres = line.frequency + drift * 1e-3 * times
        transmission *= _dip_profile(frequencies - centres, width, depth)

    if noise_rms > 0:
        rng = np.random.Generator(np.random.PCG64(seed))
        transmission = transmission + rng.normal(0.0, noise_rms, size=transmission.shape)

    metadata = TraceMetadata(
        voltage=float(voltage),
        delta_T=float(delta_T),
        seed=int(seed),
        noise_rms=float(noise_rms),
        drift_ghz_per_s=float(drift),
        scan_duration_s=float(scan_duration),
        time_offset_s=float(time_offset),
        laser_linewidth_mhz=float(scan.laser_linewidth),
    )
    return TransmissionTrace(frequencies, transmission, metadata)


def _sweep_spectrum(
    geometry: SpheroidGeometry,
    material: OpticalMaterial,
    assembly: ActuatorAssembly,
    scan: LaserScan,
    voltages: Sequence[float],
    mode_filter: ModeFilter,
    drift_span: float,
) -> List[ModeLine]:
    """Unstrained lines that can enter the scan window somewhere in the sweep."""
    reference = reference_line(geometry, material, "TM")
    shifts = [tuned_frequency_shift(reference, strain_from_voltage(assembly, v, material, geometry))
              for v in voltages]
    up = max(0.0, max(shifts)) * 1.05 + drift_span
    down = max(0.0, -min(shifts)) * 1.05 + drift_span
    f_lo = scan.start_frequency - up * 1e-3
    f_hi = scan.stop_frequency + down * 1e-3
    return spectrum_window(geometry, material, f_lo, f_hi, mode_filter)


def voltage_sweep_experiment(
    geometry: SpheroidGeometry,
    material: OpticalMaterial,
    assembly: ActuatorAssembly,
    scan: LaserScan,
    voltages: Sequence[float],
    spectrum: Optional[Sequence[ModeLine]] = None,
    mode_filter: Optional[ModeFilter] = None,
    noise_rms: float = 0.0,
    drift: float = 0.0,
    scan_duration: float = 0.0,
    sweep_interval: float = 0.0,
    seed: int = 0,
    delta_T: float = 0.0,
) -> List[TransmissionTrace]:
    """
    One trace per PZT voltage, all on the same scan grid.

    Every line is shifted by the strain at that voltage (plus the thermal
    shift of delta_T). Trace i is taken at time i·sweep_interval and uses
    noise seed seed + i.

    Args:
        spectrum: Unstrained lines; built from mode_filter when omitted
        mode_filter: Enumeration bounds used when spectrum is omitted

    Raises:
        DomainError: If a voltage lies outside the actuator range
    """
    if len(voltages) == 0:
        raise DomainError("Voltage sweep is empty")
    if spectrum is None:
        drift_span = abs(drift) * (scan_duration + sweep_interval * (len(voltages) - 1))
        spectrum = _sweep_spectrum(geometry, material, assembly, scan, voltages,
                                   mode_filter or ModeFilter(), drift_span)
    thermal = ThermalState(delta_T)
    traces = []
    for i, voltage in enumerate(voltages):
        strain = strain_from_voltage(assembly, voltage, material, geometry)
        shifted = [replace(line, frequency=line.frequency
                           + combined_shift(line, strain, thermal, material) * 1e-3)
                   for line in spectrum]
        traces.append(synthesize_trace(
            shifted, scan, noise_rms, drift, scan_duration, seed + i,
            voltage=voltage, delta_T=delta_T, time_offset=i * sweep_interval,
        ))
    logger.info("Synthesized %d traces over %d lines (%.1f to %.1f V)",
                len(traces), len(spectrum), min(voltages), max(voltages))
    return traces
