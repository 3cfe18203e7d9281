"""
Unit tests for laser scans, Lorentzian synthesis and voltage sweeps.
"""

import unittest

import numpy as np

from src.errors import DomainError
from src.materials import FUSED_SILICA, material_from_profile
from src.modes import ModeFilter, ModeId, ModeLine, Polarization, SpheroidGeometry
from src.spectroscopy import (
    LaserScan,
    TransmissionTrace,
    lorentzian_transmission,
    synthesize_trace,
    voltage_sweep_experiment,
)
from src.tuning import ActuatorAssembly, elastic_budget, tuning_slope

TE, TM = Polarization.TE, Polarization.TM


class TestLaserScan(unittest.TestCase):
    """Test cases for LaserScan and TransmissionTrace."""

    def test_grid(self):
        """Test the uniform sample grid."""
        scan = LaserScan(375.0, 10.0, 11)

        np.testing.assert_allclose(scan.frequencies, 375.0 + 1e-3 * np.arange(11), rtol=0, atol=1e-12)
        self.assertAlmostEqual(scan.stop_frequency, 375.01, places=12)

    def test_invalid_scan(self):
        """Test scan validation."""
        with self.assertRaises(DomainError):
            LaserScan(375.0, 10.0, 1)
        with self.assertRaises(DomainError):
            LaserScan(375.0, -1.0, 100)

    def test_trace_requires_uniform_grid(self):
        """Test that non-uniform or decreasing grids are rejected."""
        with self.assertRaises(DomainError):
            TransmissionTrace(np.array([1.0, 2.0, 4.0]), np.ones(3))
        with self.assertRaises(DomainError):
            TransmissionTrace(np.array([3.0, 2.0, 1.0]), np.ones(3))


class TestLorentzianTransmission(unittest.TestCase):
    """Test cases for the single-dip lineshape."""

    def setUp(self):
        """Set up test fixtures."""
        self.line = ModeLine(ModeId(1, 443, 443, TE), 375.0, 1e8, 0.3)

    def test_on_resonance(self):
        """Test that the dip bottom is 1 - depth."""
        self.assertAlmostEqual(lorentzian_transmission(375.0, self.line), 0.7, places=14)

    def test_half_width(self):
        """Test that the half-depth points sit at ±γ/2."""
        half = 0.5 * self.line.linewidth

        for f in (375.0 - half, 375.0 + half):
            self.assertAlmostEqual(lorentzian_transmission(f, self.line), 0.85, places=6)

    def test_laser_linewidth_broadens(self):
        """Test that a broad laser widens and shallows the dip."""
        narrow = lorentzian_transmission(375.0, self.line, laser_linewidth=0.0)
        broad = lorentzian_transmission(375.0, self.line, laser_linewidth=3.75)

        self.assertAlmostEqual(broad, 1.0 - 0.3 / 2, places=9)
        self.assertLess(narrow, broad)


class TestSynthesizeTrace(unittest.TestCase):
    """Test cases for trace synthesis."""

    def setUp(self):
        """Set up test fixtures."""
        self.scan = LaserScan(374.9995, 1.0, 2001)
        self.line = ModeLine(ModeId(1, 443, 443, TE), 375.0, 1e8, 0.3)

    def test_empty_spectrum(self):
        """Test that no lines give a flat trace."""
        trace = synthesize_trace([], self.scan)

        np.testing.assert_array_equal(trace.transmission, np.ones(2001))

    def test_noiseless_single_line(self):
        """Test that a single noiseless line is the analytic Lorentzian."""
        trace = synthesize_trace([self.line], self.scan)
        expected = lorentzian_transmission(self.scan.frequencies, self.line)

        self.assertLess(np.max(np.abs(trace.transmission - expected)), 1e-12)

    def test_seeded_noise_is_reproducible(self):
        """Test that the same seed gives the same noise and another seed does not."""
        first = synthesize_trace([self.line], self.scan, noise_rms=1e-3, seed=5)
        second = synthesize_trace([self.line], self.scan, noise_rms=1e-3, seed=5)
        other = synthesize_trace([self.line], self.scan, noise_rms=1e-3, seed=6)

        np.testing.assert_array_equal(first.transmission, second.transmission)
        self.assertFalse(np.array_equal(first.transmission, other.transmission))
        self.assertEqual(first.metadata.seed, 5)

    def test_noise_level(self):
        """Test the standard deviation of the added noise."""
        trace = synthesize_trace([], LaserScan(375.0, 10.0, 20001), noise_rms=1e-3, seed=1)

        self.assertAlmostEqual(np.std(trace.transmission), 1e-3, delta=5e-5)

    def test_drift_moves_dip(self):
        """Test that drift during the scan shifts the observed dip."""
        still = synthesize_trace([self.line], self.scan)
        drifting = synthesize_trace([self.line], self.scan, drift=0.1, scan_duration=1.0,
                                    time_offset=1.0)

        shift = (self.scan.frequencies[np.argmin(drifting.transmission)]
                 - self.scan.frequencies[np.argmin(still.transmission)])
        self.assertGreater(shift, 0.0)
        self.assertEqual(drifting.metadata.time_offset_s, 1.0)

    def test_te_tm_pair_separation(self):
        """Test that two planted dips are read back at their input separation."""
        tm = ModeLine(ModeId(1, 443, 443, TM), 375.012, 1e8, 0.3)
        scan = LaserScan(374.995, 30.0, 30001)
        trace = synthesize_trace([self.line, tm], scan)

        half = len(trace) // 2
        first = scan.frequencies[np.argmin(trace.transmission[:half])]
        second = scan.frequencies[half + np.argmin(trace.transmission[half:])]
        self.assertAlmostEqual((second - first) * 1e3, 12.0, delta=scan.span / (scan.points - 1))

    def test_negative_noise_rejected(self):
        """Test that negative noise is a domain error."""
        with self.assertRaises(DomainError):
            synthesize_trace([self.line], self.scan, noise_rms=-1.0)


class TestVoltageSweep(unittest.TestCase):
    """Test cases for voltage sweep experiments."""

    def setUp(self):
        """Set up test fixtures."""
        self.geometry = SpheroidGeometry(40.0, ellipticity_eps=0.46, tm_ratio_correction=0.914)
        self.material = material_from_profile(
            "fused_silica", {"elastic_limit_strain": 2.52e-3, "plastic_onset_strain": 2.52e-3})
        self.assembly = ActuatorAssembly(0.05, (0.0, 60.0), 0.5, 416.67,
                                         stem_geometry=self.geometry)
        self.line = ModeLine(ModeId(1, 443, 443, TE), 375.0, 2e7, 0.3)
        self.scan = LaserScan(374.995, 60.0, 12001)

    def test_te_line_advances_5_ghz_per_volt(self):
        """Test that the TE dip moves by the TE slope at every step."""
        voltages = [float(v) for v in range(11)]
        traces = voltage_sweep_experiment(self.geometry, self.material, self.assembly,
                                          self.scan, voltages, spectrum=[self.line])
        slope = tuning_slope(self.geometry, self.material, self.assembly, TE)
        step = self.scan.span / (self.scan.points - 1)

        self.assertAlmostEqual(slope, 5.0, delta=0.75)
        for voltage, trace in zip(voltages, traces):
            center = trace.frequencies[np.argmin(trace.transmission)]
            self.assertAlmostEqual((center - 375.0) * 1e3, slope * voltage, delta=step)
            self.assertEqual(trace.voltage, voltage)

    def test_single_zero_voltage_matches_synthesis(self):
        """Test that a 0 V sweep equals the unstrained synthesis."""
        sweep = voltage_sweep_experiment(self.geometry, self.material, self.assembly,
                                         self.scan, [0.0], spectrum=[self.line],
                                         noise_rms=1e-3, seed=4)
        direct = synthesize_trace([self.line], self.scan, noise_rms=1e-3, seed=4)

        np.testing.assert_array_equal(sweep[0].transmission, direct.transmission)

    def test_sweep_seeds_increase(self):
        """Test that trace i uses seed + i and starts at i times the interval."""
        traces = voltage_sweep_experiment(self.geometry, self.material, self.assembly,
                                          self.scan, [0.0, 1.0, 2.0], spectrum=[self.line],
                                          noise_rms=1e-3, seed=10, sweep_interval=2.0)

        self.assertEqual([t.metadata.seed for t in traces], [10, 11, 12])
        self.assertEqual([t.metadata.time_offset_s for t in traces], [0.0, 2.0, 4.0])

    def test_spectrum_built_from_filter(self):
        """Test that the sweep enumerates lines when no spectrum is given."""
        traces = voltage_sweep_experiment(self.geometry, self.material, self.assembly,
                                          LaserScan(374.5, 1000.0, 200001), [0.0, 1.0],
                                          mode_filter=ModeFilter(max_l_minus_m=1, loaded_q=2e7))

        self.assertLess(np.min(traces[0].transmission), 0.8)

    def test_device1_full_range(self):
        """Test that the full device-1 sweep carries a line about 150 GHz."""
        geometry = SpheroidGeometry(100.0, ellipticity_eps=0.005)
        assembly = ActuatorAssembly(0.02, (0.0, 150.0), 0.4, 660.0, stem_geometry=geometry)
        line = ModeLine(ModeId(1, 1115, 1115, TE), 375.0, 2e7, 0.3)
        scan = LaserScan(374.99, 200.0, 40001)

        traces = voltage_sweep_experiment(geometry, FUSED_SILICA, assembly, scan,
                                          [0.0, 150.0], spectrum=[line])
        start = traces[0].frequencies[np.argmin(traces[0].transmission)]
        end = traces[1].frequencies[np.argmin(traces[1].transmission)]

        self.assertAlmostEqual((end - start) * 1e3, 150.0, delta=15.0)
        self.assertAlmostEqual(elastic_budget(geometry, FUSED_SILICA, assembly).max_shift_TE,
                               (end - start) * 1e3, delta=0.05)

    def test_empty_sweep_rejected(self):
        """Test that an empty voltage list is a domain error."""
        with self.assertRaises(DomainError):
            voltage_sweep_experiment(self.geometry, self.material, self.assembly,
                                     self.scan, [], spectrum=[self.line])


if __name__ == '__main__':
    unittest.main()
