"""
Module for writing plot-ready data: the tuning curve with its fitted
lines, and trace samples around each fitted dip with the fitted curve.

Nothing is rendered here; the JSON files carry every series a plotting
tool needs.
"""

from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import linregress

from config import Config
from src.curve_fitting import DipFit, LorentzianFitter
from src.dip_detection import DipWindow
from src.spectroscopy import TransmissionTrace
from src.trace_io import write_json
from src.tuning import TuningPoint


class PlotDataWriter:
    """Creates plot data files for tuning curves and dip fits."""

    def __init__(self, fitter: Optional[LorentzianFitter] = None):
        self.fitter = fitter or LorentzianFitter()

    @staticmethod
    def _line(voltages: np.ndarray, shifts: np.ndarray) -> Dict[str, object]:
        if len(voltages) < 2 or np.ptp(voltages) == 0:
            return {"slope_ghz_per_v": None, "intercept_ghz": None, "shift_ghz": []}
        fit = linregress(voltages, shifts)
        return {
            "slope_ghz_per_v": float(fit.slope),
            "intercept_ghz": float(fit.intercept),
            "shift_ghz": (fit.intercept + fit.slope * voltages).tolist(),
        }

    def tuning_curve_data(self, points: Sequence[TuningPoint]) -> Dict[str, object]:
        """Shift versus voltage for both polarizations plus straight-line fits."""
        voltages = np.array([p.voltage for p in points], dtype=float)
        series = {}
        for name, values in (("TE", [p.shift_TE for p in points]),
                             ("TM", [p.shift_TM for p in points])):
            shifts = np.array(values, dtype=float)
            series[name] = {"shift_ghz": shifts.tolist(), "fit": self._line(voltages, shifts)}
        return {
            "format": Config.PLOT_DATA_FORMAT,
            "kind": "tuning_curve",
            "x_label": "PZT voltage (V)",
            "y_label": "Frequency shift (GHz)",
            "voltage_v": voltages.tolist(),
            "series": series,
        }

    def dip_fit_data(
        self,
        trace: TransmissionTrace,
        fitted: Sequence[Tuple[DipWindow, DipFit]],
        source: str = "",
    ) -> Dict[str, object]:
        """Samples of each fitted window and the fitted Lorentzian over the same span."""
        dips: List[Dict[str, object]] = []
        for window, dip in fitted:
            f = trace.frequencies[window.slice()]
            curve_f, curve_t = self.fitter.generate_curve(
                dip, span_linewidths=(f[-1] - f[0]) / dip.linewidth)
            dips.append({
                "center_thz": dip.center,
                "loaded_q": dip.loaded_Q,
                "depth": dip.depth,
                "samples": {
                    "frequency_thz": f.tolist(),
                    "transmission": trace.transmission[window.slice()].tolist(),
                },
                "fit": {
                    "frequency_thz": curve_f.tolist(),
                    "transmission": curve_t.tolist(),
                },
            })
        return {
            "format": Config.PLOT_DATA_FORMAT,
            "kind": "dip_fits",
            "source": source,
            "voltage_v": trace.voltage,
            "x_label": "Laser frequency (THz)",
            "y_label": "Transmission",
            "dips": dips,
        }

    @staticmethod
    def write(data: Dict[str, object], output_dir: Path, file_base_name: str) -> Path:
        """
        Save plot data as JSON.

        Args:
            data: Output of tuning_curve_data or dip_fit_data, or a dict
                collecting several dip_fit_data entries
            output_dir: Target directory, created when missing
            file_base_name: File name without extension

        Returns:
            Path of the written file
        """
        return write_json(Path(output_dir) / f"{file_base_name}.json", data)
