"""
Dip detection in transmission traces.

Candidate dips are local minima of the median-normalised trace whose
prominence clears a threshold; each gets a fit window a few linewidths wide.
"""

import logging
import math
from dataclasses import dataclass
from typing import List

import numpy as np
from scipy.signal import find_peaks

from config import Config
from src.errors import DomainError
from src.spectroscopy import TransmissionTrace

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DipWindow:
    """Half-open sample range [start, stop) around one dip."""
    start: int
    stop: int
    minimum_index: int
    prominence: float
    width_samples: float  # full width at half prominence
    baseline: float = 1.0  # transmission level the dip is measured from

    def __len__(self) -> int:
        return self.stop - self.start

    def slice(self) -> slice:
        return slice(self.start, self.stop)


def detect_dips(
    trace: TransmissionTrace,
    prominence: float = Config.DEFAULT_PROMINENCE,
) -> List[DipWindow]:
    """
    Find dip candidates in a trace.

    The trace is divided by its median so the threshold is relative to the
    off-resonance level. Windows span ±Config.FIT_WINDOW_LINEWIDTHS widths
    (at least ±Config.MIN_WINDOW_HALF_SAMPLES samples); overlapping windows
    are split halfway between their minima.

    Args:
        trace: Transmission trace
        prominence: Minimum relative dip depth, in (0, 1)

    Returns:
        Disjoint windows sorted by frequency (possibly empty)

    Raises:
        DomainError: If prominence is outside (0, 1) or the baseline is not positive
    """
    if not 0 < prominence < 1:
        raise DomainError(f"Prominence must lie in (0, 1), got {prominence}")
    baseline = float(np.median(trace.transmission))
    if baseline <= 0:
        raise DomainError("Trace median is not positive; cannot normalise")

    depth = 1.0 - trace.transmission / baseline
    peaks, properties = find_peaks(depth, prominence=prominence, width=0, rel_height=0.5)
    n = len(trace)
    bounds = []
    for peak, width in zip(peaks, properties["widths"]):
        half = max(Config.MIN_WINDOW_HALF_SAMPLES,
                   int(math.ceil(Config.FIT_WINDOW_LINEWIDTHS * width)))
        bounds.append([max(0, peak - half), min(n, peak + half + 1)])

    for i in range(len(bounds) - 1):
        if bounds[i][1] > bounds[i + 1][0]:
            split = (peaks[i] + peaks[i + 1] + 1) // 2
            bounds[i][1] = split
            bounds[i + 1][0] = split

    windows = [
        DipWindow(
            start=int(start),
            stop=int(stop),
            minimum_index=int(peak),
            prominence=float(prom),
            width_samples=float(width),
            baseline=baseline,
        )
        for (start, stop), peak, prom, width in zip(
            bounds, peaks, properties["prominences"], properties["widths"])
    ]
    logger.debug("Detected %d dips (prominence >= %.3g)", len(windows), prominence)
    return windows
