"""
Main calibration engine that turns a PZT voltage sweep into a strain calibration.

This module chains dip detection, Lorentzian fitting, dip tracking across
voltages and slope fitting, then inverts the tuning model for the axial
strain per volt.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import linregress

from config import Config
from src.curve_fitting import DipFit, LorentzianFitter
from src.dip_detection import detect_dips
from src.errors import DomainError
from src.materials import OpticalMaterial
from src.modes import Polarization, SpheroidGeometry
from src.spectroscopy import TransmissionTrace
from src.tuning import relative_shift_per_strain

logger = logging.getLogger(__name__)


class SlopeClass(str, Enum):
    """Polarization guessed from a tuning slope."""
    TE = "TE"
    TM = "TM"
    UNKNOWN = "unknown"


@dataclass
class SlopeFit:
    """Linear fit of dip centre against voltage."""
    slope: float  # GHz/V
    intercept: float  # GHz, absolute centre at 0 V
    r_squared: float
    polarization_guess: SlopeClass = SlopeClass.UNKNOWN
    slope_stderr: float = 0.0

    def __str__(self) -> str:
        return (f"SlopeFit(slope={self.slope:.4f} GHz/V, r²={self.r_squared:.6f}, "
                f"{self.polarization_guess.value})")


def classify_slope(slope: float, te_reference: Optional[float]) -> SlopeClass:
    """
    TM when within tolerance of the cylinder ratio times the TE reference,
    TE when within tolerance of the reference itself.
    """
    if te_reference is None or te_reference <= 0:
        return SlopeClass.UNKNOWN
    tolerance = Config.SLOPE_CLASS_TOLERANCE
    tm_reference = Config.CYLINDER_TM_TE_RATIO * te_reference
    if abs(slope - tm_reference) <= tolerance * tm_reference:
        return SlopeClass.TM
    if abs(slope - te_reference) <= tolerance * te_reference:
        return SlopeClass.TE
    return SlopeClass.UNKNOWN


def fit_tuning_slope(
    centers: Sequence[Tuple[float, float]],
    te_reference: Optional[float] = None,
) -> SlopeFit:
    """
    Ordinary least squares of dip centre against voltage.

    Args:
        centers: (voltage V, centre THz) pairs
        te_reference: TE slope in GHz/V used to guess the polarization

    Returns:
        SlopeFit with slope in GHz/V

    Raises:
        DomainError: Fewer than Config.MIN_SWEEP_POINTS points, or all
            voltages equal
    """
    if len(centers) < Config.MIN_SWEEP_POINTS:
        raise DomainError(
            f"Slope fit needs at least {Config.MIN_SWEEP_POINTS} points, got {len(centers)}"
        )
    voltages = np.array([v for v, _ in centers], dtype=float)
    frequencies = np.array([c for _, c in centers], dtype=float)
    if np.all(voltages == voltages[0]):
        raise DomainError("All voltages are equal; the tuning slope is undefined")

    shifts = (frequencies - frequencies[0]) * 1e3
    result = linregress(voltages, shifts)
    r_squared = float(np.clip(result.rvalue ** 2, 0.0, 1.0))
    return SlopeFit(
        slope=float(result.slope),
        intercept=float(frequencies[0] * 1e3 + result.intercept),
        r_squared=r_squared,
        polarization_guess=classify_slope(float(result.slope), te_reference),
        slope_stderr=float(result.stderr),
    )


@dataclass
class DipTrack:
    """One dip followed across the sweep."""
    track_id: int
    voltages: List[float] = field(default_factory=list)
    fits: List[DipFit] = field(default_factory=list)
    lost_at: Optional[float] = None
    slope_fit: Optional[SlopeFit] = None

    @property
    def centers(self) -> List[Tuple[float, float]]:
        return [(v, f.center) for v, f in zip(self.voltages, self.fits)]

    def predict(self, voltage: float) -> float:
        """Expected centre (THz) at a voltage from the current slope estimate."""
        last_v, last_c = self.voltages[-1], self.fits[-1].center
        if len(self.voltages) < 2 or self.voltages[-1] == self.voltages[0]:
            return last_c
        slope = (last_c - self.fits[0].center) / (last_v - self.voltages[0])
        return last_c + slope * (voltage - last_v)


@dataclass
class CalibrationResult:
    """Complete results from a sweep calibration."""
    strain_per_volt: Optional[float]
    slope_TE: Optional[float]  # GHz/V
    slope_TM: Optional[float]  # GHz/V
    ratio: Optional[float]
    tracks: List[DipTrack]
    warnings: List[str] = field(default_factory=list)

    @property
    def is_complete(self) -> bool:
        return self.strain_per_volt is not None and not self.warnings

    def __str__(self) -> str:
        def fmt(value, spec):
            return "n/a" if value is None else format(value, spec)
        return (
            f"Calibration Results:\n"
            f"  Strain per volt: {fmt(self.strain_per_volt, '.4g')}\n"
            f"  TE slope: {fmt(self.slope_TE, '.3f')} GHz/V\n"
            f"  TM slope: {fmt(self.slope_TM, '.3f')} GHz/V\n"
            f"  TM/TE ratio: {fmt(self.ratio, '.3f')}\n"
            f"  Tracks: {len(self.tracks)}, warnings: {len(self.warnings)}"
        )


class CalibrationEngine:
    """
    Sweep calibration engine.

    Performs calibration process:
    1. Detects and fits dips in every trace
    2. Tracks each dip across voltages by nearest predicted position
    3. Fits a tuning slope per track and classifies its polarization
    4. Inverts the tuning model for strain per volt
    """

    def __init__(self, fitter: LorentzianFitter = None,
                 prominence: float = Config.DEFAULT_PROMINENCE):
        """
        Initialize the calibration engine.

        Args:
            fitter: Dip fitter (defaults to LorentzianFitter)
            prominence: Dip detection threshold
        """
        self.fitter = fitter or LorentzianFitter()
        self.prominence = prominence

    def _fit_traces(self, traces: Sequence[TransmissionTrace],
                    warnings: List[str]) -> List[List[DipFit]]:
        per_trace = []
        for trace in traces:
            windows = detect_dips(trace, self.prominence)
            fitted, failures = self.fitter.fit_all(trace, windows)
            for window, error in failures:
                warnings.append(f"fit failed at {trace.voltage:g} V near "
                                f"{trace.frequencies[window.minimum_index]:.6f} THz: {error}")
            per_trace.append(sorted((fit for _, fit in fitted), key=lambda f: f.center))
        return per_trace

    def _track(self, traces: Sequence[TransmissionTrace], per_trace: List[List[DipFit]],
               warnings: List[str]) -> List[DipTrack]:
        max_jump = Config.TRACK_MAX_JUMP_GHZ * 1e-3
        tracks: List[DipTrack] = []
        active: List[DipTrack] = []
        for trace, fits in zip(traces, per_trace):
            voltage = trace.voltage
            pairs = sorted(
                (abs(fit.center - track.predict(voltage)), t, f)
                for t, track in enumerate(active)
                for f, fit in enumerate(fits)
                if abs(fit.center - track.predict(voltage)) <= max_jump
            )
            claimed_tracks, claimed_fits = set(), set()
            for _, t, f in pairs:
                if t in claimed_tracks or f in claimed_fits:
                    continue
                claimed_tracks.add(t)
                claimed_fits.add(f)
                active[t].voltages.append(voltage)
                active[t].fits.append(fits[f])

            still_active = []
            for t, track in enumerate(active):
                if t in claimed_tracks:
                    still_active.append(track)
                else:
                    track.lost_at = voltage
                    warnings.append(f"track {track.track_id} lost at {voltage:g} V "
                                    f"(last seen {track.fits[-1].center:.6f} THz)")
            for f, fit in enumerate(fits):
                if f not in claimed_fits:
                    track = DipTrack(track_id=len(tracks), voltages=[voltage], fits=[fit])
                    tracks.append(track)
                    still_active.append(track)
            active = still_active
        return tracks

    def calibrate(
        self,
        traces: Sequence[TransmissionTrace],
        geometry_prior: SpheroidGeometry,
        material: OpticalMaterial,
    ) -> CalibrationResult:
        """
        Execute the calibration process.

        Args:
            traces: Sweep traces carrying their voltage in the metadata
            geometry_prior: Geometry supplying the TM ratio correction
            material: Resonator glass

        Returns:
            CalibrationResult, partial with warnings when tracks are lost

        Raises:
            DomainError: Fewer than Config.MIN_SWEEP_POINTS traces or a
                single repeated voltage
        """
        if len(traces) < Config.MIN_SWEEP_POINTS:
            raise DomainError(
                f"Calibration needs at least {Config.MIN_SWEEP_POINTS} traces, got {len(traces)}"
            )
        if len({trace.voltage for trace in traces}) < 2:
            raise DomainError("Sweep has a single voltage; the tuning slope is undefined")

        warnings: List[str] = []
        logger.info("Fitting dips in %d traces", len(traces))
        per_trace = self._fit_traces(traces, warnings)

        logger.info("Tracking dips across voltages")
        tracks = self._track(traces, per_trace, warnings)

        logger.info("Fitting tuning slopes for %d tracks", len(tracks))
        usable = []
        for track in tracks:
            if len(track.voltages) < Config.MIN_SWEEP_POINTS or len(set(track.voltages)) < 2:
                warnings.append(f"track {track.track_id} has {len(track.voltages)} points; skipped")
                continue
            track.slope_fit = fit_tuning_slope(track.centers)
            usable.append(track)

        positive = [t.slope_fit.slope for t in usable if t.slope_fit.slope > 0]
        te_reference = min(positive) if positive else None
        for track in usable:
            track.slope_fit.polarization_guess = classify_slope(track.slope_fit.slope, te_reference)

        te_tracks = [t for t in usable if t.slope_fit.polarization_guess == SlopeClass.TE]
        tm_tracks = [t for t in usable if t.slope_fit.polarization_guess == SlopeClass.TM]
        slope_te = float(np.mean([t.slope_fit.slope for t in te_tracks])) if te_tracks else None
        slope_tm = float(np.mean([t.slope_fit.slope for t in tm_tracks])) if tm_tracks else None
        ratio = slope_tm / slope_te if slope_te and slope_tm is not None else None

        strain = None
        te_per_strain = relative_shift_per_strain(material, Polarization.TE)
        if te_tracks:
            line_ghz = float(np.mean([t.slope_fit.intercept for t in te_tracks]))
            strain = slope_te / (line_ghz * te_per_strain)
        else:
            warnings.append("no classifiable track; strain per volt unavailable")

        if ratio is not None:
            expected = relative_shift_per_strain(
                material, Polarization.TM,
                tm_ratio_correction=geometry_prior.tm_ratio_correction) / te_per_strain
            if abs(ratio / expected - 1.0) > Config.SLOPE_CLASS_TOLERANCE:
                warnings.append(f"TM/TE ratio {ratio:.3f} is far from the model ratio {expected:.3f}")

        for message in warnings:
            logger.warning(message)
        result = CalibrationResult(
            strain_per_volt=strain,
            slope_TE=slope_te,
            slope_TM=slope_tm,
            ratio=ratio,
            tracks=tracks,
            warnings=warnings,
        )
        logger.info("Calibration done: %s", "complete" if result.is_complete else "partial")
        return result

    def validate_result(self, result: CalibrationResult, min_r_squared: float = 0.999) -> bool:
        """
        Validate that the calibration result is reasonable.

        Args:
            result: CalibrationResult to validate
            min_r_squared: Smallest acceptable r² of a used track

        Returns:
            True if result is valid, False otherwise
        """
        if result.strain_per_volt is None or result.strain_per_volt <= 0:
            logger.warning("No positive strain per volt was recovered")
            return False

        for track in result.tracks:
            fit = track.slope_fit
            if fit is not None and fit.polarization_guess != SlopeClass.UNKNOWN \
                    and fit.r_squared < min_r_squared:
                logger.warning("Track %d is not linear (r² = %.5f)", track.track_id, fit.r_squared)
                return False

        if result.ratio is not None and not 1.0 < result.ratio < 2.5:
            logger.warning("TM/TE ratio %.3f is implausible", result.ratio)
            return False

        return True


def calibrate_device(
    sweep_data: Sequence[TransmissionTrace],
    geometry_prior: SpheroidGeometry,
    material: OpticalMaterial,
    prominence: float = Config.DEFAULT_PROMINENCE,
) -> CalibrationResult:
    """Calibrate strain per volt from a voltage sweep with the default engine."""
    return CalibrationEngine(prominence=prominence).calibrate(sweep_data, geometry_prior, material)
