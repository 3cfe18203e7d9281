"""
Lorentzian dip fitting module.

This module fits a Lorentzian dip (centre, linewidth, depth) on a free
baseline to the samples of one detection window.
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares

from config import Config
from src.dip_detection import DipWindow
from src.errors import FitError
from src.spectroscopy import TransmissionTrace

logger = logging.getLogger(__name__)


@dataclass
class DipFit:
    """Fitted parameters of one dip."""
    center: float  # THz
    loaded_Q: float
    depth: float
    residual_rms: float
    covariance_diag: Tuple[float, float, float]  # (center THz², Q², depth²)
    baseline: float = 1.0  # off-resonance transmission; depth is relative to it

    @property
    def linewidth(self) -> float:
        """Full width at half depth in THz."""
        return self.center / self.loaded_Q

    def __str__(self) -> str:
        return (f"DipFit(center={self.center:.9f} THz, Q={self.loaded_Q:.4g}, "
                f"depth={self.depth:.4f}, rms={self.residual_rms:.2g})")


class LorentzianFitter:
    """Fits Lorentzian dips to transmission data."""

    @staticmethod
    def lorentzian_function(f: np.ndarray, center: float, linewidth: float,
                            depth: float, baseline: float = 1.0) -> np.ndarray:
        """
        Lorentzian dip on a flat baseline.

        Args:
            f: Frequencies
            center: Dip centre
            linewidth: Full width at half depth
            depth: Dip depth as a fraction of the baseline
            baseline: Off-resonance transmission

        Returns:
            Transmission values
        """
        half_sq = (0.5 * linewidth) ** 2
        return baseline * (1.0 - depth * half_sq / ((f - center) ** 2 + half_sq))

    @staticmethod
    def _initial_guess(f: np.ndarray, y: np.ndarray,
                       baseline: float = 1.0) -> Tuple[float, float, float]:
        """Centre at the minimum, depth from the baseline, width at half depth."""
        step = f[1] - f[0]
        i_min = int(np.argmin(y))
        depth = 1.0 - y[i_min] / baseline
        half_level = baseline * (1.0 - 0.5 * depth)
        left = i_min
        while left > 0 and y[left - 1] <= half_level:
            left -= 1
        right = i_min
        while right < len(y) - 1 and y[right + 1] <= half_level:
            right += 1
        width = max((right - left + 1) * step, step)
        return float(f[i_min]), float(width), float(depth)

    def fit(self, trace: TransmissionTrace, window: DipWindow) -> DipFit:
        """
        Fit a Lorentzian dip to the samples of a window.

        Levenberg-Marquardt runs in coordinates centred on the initial guess
        and scaled by the initial linewidth. The baseline is a free parameter
        seeded from window.baseline, so traces need not be normalised.

        Args:
            trace: Transmission trace
            window: Detection window

        Returns:
            Fitted dip parameters

        Raises:
            FitError: If the window holds too few samples or no dip, the fit
                does not converge, or the result is unphysical
        """
        f = trace.frequencies[window.slice()]
        y = trace.transmission[window.slice()]
        if len(f) < Config.MIN_FIT_SAMPLES:
            raise FitError(
                f"Window has {len(f)} samples, need at least {Config.MIN_FIT_SAMPLES}"
            )
        baseline0 = window.baseline if window.baseline > 0 else float(np.max(y))
        center0, width0, depth0 = self._initial_guess(f, y, baseline0)
        if depth0 < Config.MIN_DIP_DEPTH:
            raise FitError("Window contains no dip", last_iterate=(center0, width0, depth0))

        u = (f - center0) / width0

        def residuals(p: np.ndarray) -> np.ndarray:
            return self.lorentzian_function(u, p[0], p[1], p[2], p[3]) - y

        result = least_squares(
            residuals, x0=[0.0, 1.0, depth0, baseline0], method="lm",
            xtol=Config.FIT_XTOL, ftol=1e-12, gtol=1e-12,
            max_nfev=Config.FIT_MAX_ITERATIONS * 4,
        )
        u_c, w_u, depth, baseline = result.x
        center = center0 + u_c * width0
        linewidth = abs(w_u) * width0
        rms = float(np.sqrt(np.mean(result.fun ** 2)))
        iterate = (center, linewidth, depth)
        if not result.success:
            raise FitError(f"Fit did not converge: {result.message}",
                           last_iterate=iterate, residual_rms=rms)
        if not (0 < depth <= 1 and linewidth > 0 and baseline > 0 and f[0] <= center <= f[-1]):
            raise FitError("Fit result is unphysical", last_iterate=iterate, residual_rms=rms)
        if depth * baseline < Config.MIN_DIP_SNR * rms:
            raise FitError("Dip is not significant above the residual noise",
                           last_iterate=iterate, residual_rms=rms)

        dof = max(len(f) - 4, 1)
        jac = result.jac
        covariance = np.linalg.pinv(jac.T @ jac) * (2 * result.cost / dof)
        # (u_c, w_u, depth, baseline) -> (center, Q, depth)
        transform = np.array([
            [width0, 0.0, 0.0, 0.0],
            [width0 / linewidth, -center * width0 * np.sign(w_u) / linewidth ** 2, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
        ])
        diag = np.diag(transform @ covariance @ transform.T)

        return DipFit(
            center=float(center),
            loaded_Q=float(center / linewidth),
            depth=float(depth),
            residual_rms=rms,
            covariance_diag=tuple(float(v) for v in diag),
            baseline=float(baseline),
        )

    def fit_all(
        self,
        trace: TransmissionTrace,
        windows: Sequence[DipWindow],
    ) -> Tuple[List[Tuple[DipWindow, DipFit]], List[Tuple[DipWindow, FitError]]]:
        """
        Fit every window, collecting failures instead of stopping.

        Returns:
            Tuple of ((window, fit) pairs, (window, error) pairs)
        """
        fitted, failures = [], []
        for window in windows:
            try:
                fitted.append((window, self.fit(trace, window)))
            except FitError as e:
                logger.warning("Fit failed near %.6f THz: %s",
                               trace.frequencies[window.minimum_index], e)
                failures.append((window, e))
        return fitted, failures

    def predict(self, frequency, dip: DipFit):
        """
        Transmission predicted by a fitted dip.

        Args:
            frequency: Frequency or array of frequencies in THz
            dip: Fitted parameters

        Returns:
            Predicted transmission
        """
        values = self.lorentzian_function(
            np.asarray(frequency, dtype=float), dip.center, dip.linewidth, dip.depth,
            dip.baseline)
        return float(values) if np.ndim(values) == 0 else values

    def generate_curve(self, dip: DipFit, span_linewidths: float = 10.0,
                       num_points: int = 201) -> Tuple[np.ndarray, np.ndarray]:
        """
        Generate points along the fitted dip for plotting.

        Args:
            dip: Fitted parameters
            span_linewidths: Full span of the curve in linewidths
            num_points: Number of points to generate

        Returns:
            Tuple of (frequencies, predicted_values)
        """
        half = 0.5 * span_linewidths * dip.linewidth
        frequencies = np.linspace(dip.center - half, dip.center + half, num_points)
        return frequencies, self.predict(frequencies, dip)


def fit_lorentzian(trace: TransmissionTrace, window: DipWindow) -> DipFit:
    """Fit one dip window with the default fitter."""
    return LorentzianFitter().fit(trace, window)
