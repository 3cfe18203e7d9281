"""
Unit tests for dip detection.
"""

import unittest

from src.dip_detection import detect_dips
from src.errors import DomainError
from src.modes import ModeId, ModeLine, Polarization
from src.spectroscopy import LaserScan, TransmissionTrace, synthesize_trace


class TestDetectDips(unittest.TestCase):
    """Test cases for detect_dips."""

    def setUp(self):
        """Set up test fixtures."""
        # γ = 1 MHz dips 5 GHz apart on a 0.1 MHz grid
        self.scan = LaserScan(374.9975, 10.0, 100001)
        q = 375.0e6  # 375 THz / 1 MHz
        self.lines = [
            ModeLine(ModeId(1, 443, 443, Polarization.TE), 375.000, q, 0.3),
            ModeLine(ModeId(1, 443, 443, Polarization.TM), 375.005, q, 0.3),
        ]
        self.trace = synthesize_trace(self.lines, self.scan)

    def test_flat_trace(self):
        """Test that a flat trace has no dips."""
        self.assertEqual(detect_dips(synthesize_trace([], self.scan)), [])

    def test_two_planted_dips(self):
        """Test that both planted dips are found at their centres."""
        windows = detect_dips(self.trace)
        step = self.scan.span * 1e-3 / (self.scan.points - 1)

        self.assertEqual(len(windows), 2)
        for window, line in zip(windows, self.lines):
            self.assertAlmostEqual(self.trace.frequencies[window.minimum_index], line.frequency,
                                   delta=step * 1.01)
            self.assertTrue(window.start <= window.minimum_index < window.stop)

    def test_windows_are_disjoint(self):
        """Test that windows are sorted and do not overlap."""
        close = LaserScan(374.99995, 0.2, 2001)
        lines = [ModeLine(ModeId(1, 443, 443, Polarization.TE), 375.00000, 3.75e7, 0.3),
                 ModeLine(ModeId(1, 443, 443, Polarization.TM), 375.00006, 3.75e7, 0.3)]

        windows = detect_dips(synthesize_trace(lines, close))

        self.assertEqual(len(windows), 2)
        self.assertLessEqual(windows[0].stop, windows[1].start)

    def test_shallow_dip_excluded(self):
        """Test that a dip shallower than the prominence is ignored."""
        shallow = ModeLine(ModeId(1, 444, 444, Polarization.TE), 375.0025, 375.0e6, 0.05)
        trace = synthesize_trace(self.lines + [shallow], self.scan)

        windows = detect_dips(trace, prominence=0.1)

        self.assertEqual(len(windows), 2)

    def test_scale_invariance(self):
        """Test that rescaling the transmission leaves the windows unchanged."""
        scaled = TransmissionTrace(self.trace.frequencies, 3.7 * self.trace.transmission,
                                   self.trace.metadata)

        original = [(w.start, w.stop, w.minimum_index) for w in detect_dips(self.trace)]
        rescaled = [(w.start, w.stop, w.minimum_index) for w in detect_dips(scaled)]

        self.assertEqual(original, rescaled)

    def test_invalid_prominence(self):
        """Test that prominence outside (0, 1) is rejected."""
        with self.assertRaises(DomainError):
            detect_dips(self.trace, prominence=1.5)

    def test_noisy_trace(self):
        """Test that noise at 1e-3 does not create spurious dips."""
        noisy = synthesize_trace(self.lines, self.scan, noise_rms=1e-3, seed=3)

        self.assertEqual(len(detect_dips(noisy)), 2)


if __name__ == '__main__':
    unittest.main()
