"""
Command implementations behind the command-line front end.

Each command reads its inputs completely, runs one pipeline, writes its
outputs atomically into the configured output directory and returns a
CommandResult carrying the exit code and a printable summary. Reports are
JSON stamped with the format version, the command name, the resolved
configuration and its hash, and the seed.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

from config import Config
from src.calibration import CalibrationEngine
from src.curve_fitting import DipFit, LorentzianFitter
from src.dip_detection import DipWindow, detect_dips
from src.materials import group_index
from src.mode_assignment import assign_modes
from src.modes import (
    ModeId,
    Polarization,
    ellipticity_splitting,
    free_spectral_range,
    mode_frequency,
    polarization_splitting,
    spectrum_window,
)
from src.plot_data import PlotDataWriter
from src.run_config import RunConfig
from src.spectroscopy import LaserScan, TransmissionTrace, voltage_sweep_experiment
from src.trace_io import (
    is_trace_file,
    read_frequency_column,
    read_trace_csv,
    write_json,
    write_spectrum_csv,
    write_trace_csv,
    write_tuning_csv,
)
from src.tuning import (
    elastic_budget,
    reference_line,
    strain_per_volt,
    strain_required_for_full_fsr,
    tuning_curve,
    tuning_slope,
)

logger = logging.getLogger(__name__)

AUTO_START_OFFSET_GHZ = 5.0


@dataclass
class CommandResult:
    """Outcome of one command."""
    command: str
    exit_code: int = Config.EXIT_OK
    outputs: List[Path] = field(default_factory=list)
    summary: List[Tuple[str, str]] = field(default_factory=list)

    def add(self, label: str, value: str) -> None:
        self.summary.append((label, value))


def _report(config: RunConfig, command: str, **content: Any) -> Dict[str, Any]:
    report = {
        "format": Config.REPORT_FORMAT,
        "command": command,
        "config_sha256": config.config_sha256,
        "seed": config.seed,
        "config": config.resolved,
    }
    report.update(content)
    return report


def _fit_windows(
    fitter: LorentzianFitter,
    trace: TransmissionTrace,
    windows: Sequence[DipWindow],
) -> Tuple[List[Tuple[DipWindow, DipFit]], List[Dict[str, Any]]]:
    fitted, errors = fitter.fit_all(trace, windows)
    failures = [{
        "frequency_thz": float(trace.frequencies[window.minimum_index]),
        "window": [window.start, window.stop],
        "message": str(e),
        "last_iterate": e.last_iterate,
        "residual_rms": e.residual_rms,
    } for window, e in errors]
    return fitted, failures


def _dip_record(dip: DipFit) -> Dict[str, Any]:
    return {
        "center_thz": dip.center,
        "loaded_q": dip.loaded_Q,
        "depth": dip.depth,
        "baseline": dip.baseline,
        "linewidth_mhz": dip.linewidth * 1e6,
        "residual_rms": dip.residual_rms,
        "stderr": {
            "center_thz": dip.covariance_diag[0] ** 0.5,
            "loaded_q": dip.covariance_diag[1] ** 0.5,
            "depth": dip.covariance_diag[2] ** 0.5,
        },
    }


def cmd_spectrum(config: RunConfig) -> CommandResult:
    """Mode lines of the configured window plus the characteristic splittings."""
    result = CommandResult("spectrum")
    geometry, material = config.geometry, config.material
    f_lo, f_hi = config.window
    lines = spectrum_window(geometry, material, f_lo, f_hi, config.mode_filter)

    wavelength = Config.REFERENCE_WAVELENGTH_UM
    line = reference_line(geometry, material, Polarization.TE)
    l = line.mode.angular_l
    fsr = free_spectral_range(geometry, material, wavelength)
    delta_p = polarization_splitting(geometry, material, wavelength)
    delta_m = ellipticity_splitting(geometry, material, l, l, wavelength)
    full_fsr = strain_required_for_full_fsr(geometry, material, line.mode)

    out = config.output_dir
    result.outputs.append(write_spectrum_csv(out / "spectrum.csv", lines))
    result.outputs.append(write_json(out / "spectrum_report.json", _report(
        config, "spectrum",
        window_thz=list(config.window),
        line_count=len(lines),
        reference_l=l,
        fsr_ghz=fsr,
        polarization_splitting_ghz=delta_p,
        ellipticity_splitting_ghz=delta_m,
        group_index=group_index(material, wavelength),
        full_fsr_strain=full_fsr,
    )))

    result.add("Lines in window", str(len(lines)))
    result.add("Reference angular number l", str(l))
    result.add("FSR", f"{fsr:.1f} GHz")
    result.add("TE-TM splitting", f"{delta_p:.1f} GHz")
    result.add("Ellipticity splitting (|m| = l)", f"{delta_m:.1f} GHz")
    result.add("Axial strain for one FSR", f"{full_fsr.axial_strain:.3%}")
    return result


def cmd_tune_curve(config: RunConfig) -> CommandResult:
    """Reference-line shifts over the voltage grid, tuning slopes and elastic budget."""
    result = CommandResult("tune-curve")
    geometry, material, assembly = config.geometry, config.material, config.assembly
    points = tuning_curve(geometry, material, assembly, config.voltages)
    slope_te = tuning_slope(geometry, material, assembly, Polarization.TE)
    slope_tm = tuning_slope(geometry, material, assembly, Polarization.TM)
    budget = elastic_budget(geometry, material, assembly)

    out = config.output_dir
    writer = PlotDataWriter()
    result.outputs.append(write_tuning_csv(out / "tune_curve.csv", points))
    result.outputs.append(writer.write(writer.tuning_curve_data(points), out, "tune_curve_plot"))
    result.outputs.append(write_json(out / "tune_curve_report.json", _report(
        config, "tune-curve",
        strain_per_volt=strain_per_volt(assembly),
        slope_te_ghz_per_v=slope_te,
        slope_tm_ghz_per_v=slope_tm,
        slope_ratio=slope_tm / slope_te,
        max_shift_te_ghz=max(p.shift_TE for p in points),
        max_shift_tm_ghz=max(p.shift_TM for p in points),
        elastic_budget=budget,
    )))

    result.add("Strain per volt", f"{strain_per_volt(assembly):.3g}")
    result.add("TE slope", f"{slope_te:.3f} GHz/V")
    result.add("TM slope", f"{slope_tm:.3f} GHz/V")
    result.add("TM/TE ratio", f"{slope_tm / slope_te:.3f}")
    result.add("Largest TE shift on grid", f"{max(p.shift_TE for p in points):.1f} GHz")
    result.add("Elastic budget", f"{budget.max_voltage:.1f} V, "
                                 f"{budget.max_shift_TE:.1f} GHz TE "
                                 f"({budget.fsr_fraction:.2f} FSR)")
    return result


def resolve_scan(config: RunConfig) -> LaserScan:
    """
    Laser scan of the run; an automatic start sits AUTO_START_OFFSET_GHZ
    below the equatorial TE line nearest the reference frequency.
    """
    settings = config.scan
    start = settings.start_frequency
    if start is None:
        line = reference_line(config.geometry, config.material, Polarization.TE)
        l = line.mode.angular_l
        start = mode_frequency(config.geometry, config.material,
                               ModeId(1, l, l, Polarization.TE)) - AUTO_START_OFFSET_GHZ * 1e-3
    return LaserScan(start, settings.span, settings.points, settings.laser_linewidth)


def cmd_scan(config: RunConfig) -> CommandResult:
    """Synthesize one trace per voltage and a manifest listing them."""
    result = CommandResult("scan")
    scan = resolve_scan(config)
    settings = config.scan
    traces = voltage_sweep_experiment(
        config.geometry, config.material, config.assembly, scan, config.voltages,
        mode_filter=config.mode_filter,
        noise_rms=settings.noise_rms,
        drift=settings.drift,
        scan_duration=settings.scan_duration,
        sweep_interval=settings.sweep_interval,
        seed=config.seed,
    )

    out = config.output_dir
    entries = []
    for i, trace in enumerate(traces):
        path = write_trace_csv(out / f"trace_{i:03d}.csv", trace)
        result.outputs.append(path)
        entries.append({"file": path.name, "voltage_v": trace.voltage, "seed": trace.metadata.seed})
    result.outputs.append(write_json(out / "scan_manifest.json", _report(
        config, "scan",
        scan={"start_frequency_thz": scan.start_frequency, "span_ghz": scan.span,
              "points": scan.points, "laser_linewidth_mhz": scan.laser_linewidth},
        traces=entries,
    )))

    result.add("Traces written", str(len(traces)))
    result.add("Scan", f"{scan.start_frequency:.6f} THz + {scan.span:g} GHz, {scan.points} points")
    result.add("Voltages", f"{min(config.voltages):g} to {max(config.voltages):g} V")
    return result


def cmd_fit(config: RunConfig, files: Sequence[str]) -> CommandResult:
    """Detect and fit the dips of every trace file."""
    result = CommandResult("fit")
    traces = [(Path(name), read_trace_csv(name)) for name in files]
    fitter = LorentzianFitter()
    writer = PlotDataWriter(fitter)

    records, plots, failure_count, fit_count = [], [], 0, 0
    for path, trace in traces:
        windows = detect_dips(trace, config.prominence)
        fitted, failures = _fit_windows(fitter, trace, windows)
        fit_count += len(fitted)
        failure_count += len(failures)
        records.append({
            "file": str(path),
            "voltage_v": trace.voltage,
            "dips": [_dip_record(dip) for _, dip in fitted],
            "failures": failures,
        })
        plots.append(writer.dip_fit_data(trace, fitted, source=str(path)))

    out = config.output_dir
    result.outputs.append(writer.write(
        {"format": Config.PLOT_DATA_FORMAT, "kind": "dip_fit_set", "traces": plots},
        out, "fit_plot"))
    result.outputs.append(write_json(out / "fit_report.json", _report(
        config, "fit",
        complete=failure_count == 0,
        traces=records,
    )))

    result.add("Traces", str(len(traces)))
    result.add("Dips fitted", str(fit_count))
    result.add("Failed fits", str(failure_count))
    if failure_count:
        result.exit_code = Config.EXIT_FIT_FAILED
    return result


def _dip_centers(config: RunConfig, path: Path) -> List[float]:
    if not is_trace_file(path):
        return read_frequency_column(path)
    trace = read_trace_csv(path)
    fitted, failures = _fit_windows(LorentzianFitter(), trace, detect_dips(trace, config.prominence))
    if failures:
        logger.warning("%d dips of %s could not be fitted and are left out", len(failures), path)
    return [dip.center for _, dip in fitted]


def cmd_assign(config: RunConfig, file: str) -> CommandResult:
    """Label dips (from a trace or a frequency_THz column) with mode numbers."""
    result = CommandResult("assign")
    path = Path(file)
    centers = _dip_centers(config, path)
    assignment = assign_modes(centers, config.geometry, config.material)

    dips = []
    for i, center in enumerate(centers):
        mode = assignment.labels.get(i)
        dips.append({
            "frequency_thz": center,
            "mode": mode,
            "model_frequency_thz": assignment.model_frequencies.get(i),
            "residual_ghz": assignment.residuals.get(i),
        })
    out = config.output_dir
    result.outputs.append(write_json(out / "assign_report.json", _report(
        config, "assign",
        source=str(path),
        assigned=assignment.assigned,
        fitted_radius_um=assignment.fitted_radius,
        fitted_ellipticity=assignment.fitted_ellipticity,
        objective_ghz2=assignment.objective_value,
        rms_residual_ghz=assignment.rms_residual,
        dips=dips,
        candidates=assignment.candidates,
    )))

    result.add("Dips", str(len(centers)))
    result.add("Assigned", "yes" if assignment.assigned else "no")
    result.add("Fitted radius", f"{assignment.fitted_radius:.3f} µm")
    result.add("Fitted ellipticity", f"{assignment.fitted_ellipticity:.3f}")
    result.add("Interval rms", f"{assignment.rms_residual:.2f} GHz")
    for i in sorted(assignment.labels):
        result.add(f"  {centers[i]:.6f} THz", str(assignment.labels[i]))
    if not assignment.assigned:
        result.exit_code = Config.EXIT_FIT_FAILED
    return result


def cmd_calibrate(config: RunConfig, files: Sequence[str]) -> CommandResult:
    """Recover strain per volt and the TE/TM slopes from a voltage sweep."""
    result = CommandResult("calibrate")
    traces = [read_trace_csv(name) for name in files]
    traces.sort(key=lambda trace: trace.voltage)
    engine = CalibrationEngine(prominence=config.prominence)
    calibration = engine.calibrate(traces, config.geometry, config.material)
    valid = engine.validate_result(calibration)

    out = config.output_dir
    result.outputs.append(write_json(out / "calibrate_report.json", _report(
        config, "calibrate",
        strain_per_volt=calibration.strain_per_volt,
        configured_strain_per_volt=strain_per_volt(config.assembly),
        slope_te_ghz_per_v=calibration.slope_TE,
        slope_tm_ghz_per_v=calibration.slope_TM,
        slope_ratio=calibration.ratio,
        complete=calibration.is_complete,
        valid=valid,
        warnings=calibration.warnings,
        tracks=[{
            "track_id": track.track_id,
            "voltages_v": track.voltages,
            "centers_thz": [fit.center for fit in track.fits],
            "lost_at_v": track.lost_at,
            "slope_fit": track.slope_fit,
        } for track in calibration.tracks],
    )))

    for line in str(calibration).splitlines()[1:]:
        label, _, value = line.strip().partition(": ")
        result.add(label, value)
    result.add("Valid", "yes" if valid else "no")
    if calibration.strain_per_volt is None:
        result.exit_code = Config.EXIT_FIT_FAILED
    return result
