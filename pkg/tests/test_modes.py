"""
Unit tests for WGM frequencies, spectral intervals and spectrum enumeration.
"""

import math
import unittest

from config import Config
from src.errors import DomainError
from src.materials import FUSED_SILICA, refractive_index
from src.modes import (
    ModeFilter,
    ModeId,
    ModeLine,
    Polarization,
    SpheroidGeometry,
    angular_number_near,
    ellipticity_splitting,
    exact_mie_root,
    free_spectral_range,
    mode_frequency,
    polarization_splitting,
    spectrum_window,
)

TE, TM = Polarization.TE, Polarization.TM
WAVELENGTH = 0.8


class TestModeTypes(unittest.TestCase):
    """Test cases for the value types."""

    def test_mode_id_rejects_large_m(self):
        """Test that |m| > l is rejected."""
        with self.assertRaises(DomainError):
            ModeId(1, 100, 101, TE)

    def test_mode_id_ordering(self):
        """Test that mode ids order by (q, l, m, polarization)."""
        modes = [ModeId(1, 101, 100, TM), ModeId(1, 100, 100, TM), ModeId(1, 100, 100, TE)]

        self.assertEqual(sorted(modes)[0], ModeId(1, 100, 100, TE))

    def test_mode_line_linewidth(self):
        """Test that a Q of 10⁹ at 375 THz gives a 375 kHz linewidth."""
        line = ModeLine(ModeId(1, 443, 443, TE), 375.0, 1e9, 0.3)

        self.assertAlmostEqual(line.linewidth * 1e9, 375.0, places=6)  # kHz

    def test_geometry_invariants(self):
        """Test geometry validation."""
        with self.assertRaises(DomainError):
            SpheroidGeometry(0.0)
        with self.assertRaises(DomainError):
            SpheroidGeometry(40.0, ellipticity_eps=1.2)
        with self.assertRaises(DomainError):
            SpheroidGeometry(40.0, stem_radius=50.0)


class TestModeFrequency(unittest.TestCase):
    """Test cases for the asymptotic mode solver."""

    def setUp(self):
        """Set up test fixtures."""
        self.sphere = SpheroidGeometry(40.0)

    def test_angular_number_near_375_thz(self):
        """Test the equatorial TE mode nearest 375 THz of a 40 µm sphere."""
        l = angular_number_near(self.sphere, FUSED_SILICA, 375.0)
        frequency = mode_frequency(self.sphere, FUSED_SILICA, ModeId(1, l, l, TE))
        fsr = free_spectral_range(self.sphere, FUSED_SILICA, WAVELENGTH)

        self.assertAlmostEqual(l, 443, delta=2)
        self.assertLess(abs(frequency - 375.0) * 1e3, fsr)

    def test_tm_above_te(self):
        """Test that TM lies above TE by the polarization splitting."""
        l = angular_number_near(self.sphere, FUSED_SILICA, 375.0)
        te = mode_frequency(self.sphere, FUSED_SILICA, ModeId(1, l, l, TE))
        tm = mode_frequency(self.sphere, FUSED_SILICA, ModeId(1, l, l, TM))
        splitting = polarization_splitting(self.sphere, FUSED_SILICA, Config.SPEED_OF_LIGHT / te)

        self.assertGreater(tm, te)
        self.assertAlmostEqual((tm - te) * 1e3, splitting, delta=1e-6 * splitting)

    def test_radius_scaling(self):
        """Test that doubling the radius halves the frequency of a fixed mode."""
        mode = ModeId(1, 443, 443, TE)
        small = mode_frequency(self.sphere, FUSED_SILICA, mode)
        large = mode_frequency(SpheroidGeometry(80.0), FUSED_SILICA, mode)

        self.assertLess(abs(large / small - 0.5) / 0.5, 0.01)

    def test_equatorial_mode_ignores_ellipticity(self):
        """Test that |m| = l modes keep the sphere frequency for any ellipticity."""
        mode = ModeId(1, 443, 443, TE)
        prolate = SpheroidGeometry(40.0, ellipticity_eps=0.46)

        self.assertEqual(mode_frequency(prolate, FUSED_SILICA, mode),
                         mode_frequency(self.sphere, FUSED_SILICA, mode))

    def test_increases_with_l(self):
        """Test that frequency rises with l at fixed q, l - m and polarization."""
        prolate = SpheroidGeometry(40.0, ellipticity_eps=0.46)
        for geometry in (self.sphere, prolate):
            for polarization in (TE, TM):
                for offset in (0, 2):
                    frequencies = [
                        mode_frequency(geometry, FUSED_SILICA, ModeId(1, l, l - offset, polarization))
                        for l in range(200, 801, 50)
                    ]
                    with self.subTest(geometry=geometry, polarization=polarization, offset=offset):
                        self.assertTrue(all(b > a for a, b in zip(frequencies, frequencies[1:])))

    def test_increases_with_q(self):
        """Test that frequency rises with the radial order at fixed l."""
        for l in (200, 443):
            for polarization in (TE, TM):
                frequencies = [
                    mode_frequency(self.sphere, FUSED_SILICA, ModeId(q, l, l, polarization))
                    for q in (1, 2, 3, 4)
                ]
                with self.subTest(l=l, polarization=polarization):
                    self.assertTrue(all(b > a for a, b in zip(frequencies, frequencies[1:])))

    def test_even_in_m(self):
        """Test that modes of opposite m are degenerate."""
        prolate = SpheroidGeometry(40.0, ellipticity_eps=0.46)
        for m in (0, 1, 200, 442, 443):
            for polarization in (TE, TM):
                with self.subTest(m=m, polarization=polarization):
                    self.assertEqual(
                        mode_frequency(prolate, FUSED_SILICA, ModeId(1, 443, m, polarization)),
                        mode_frequency(prolate, FUSED_SILICA, ModeId(1, 443, -m, polarization)),
                    )

    def test_low_l_rejected(self):
        """Test that l below the asymptotic floor is a domain error."""
        with self.assertRaises(DomainError):
            mode_frequency(self.sphere, FUSED_SILICA, ModeId(1, 10, 10, TE))


class TestExactMieRoot(unittest.TestCase):
    """Test cases for the exact characteristic-equation solver."""

    def setUp(self):
        """Set up test fixtures."""
        self.sphere = SpheroidGeometry(40.0)

    def test_agrees_with_asymptotic_solver(self):
        """Test agreement with the asymptotic expansion to 1e-4 over q, l and polarization."""
        for q in (1, 2):
            for l in (100, 200, 400, 600):
                # radius scaled so every mode sits near 0.8 µm
                sphere = SpheroidGeometry(40.0 * l / 443)
                for polarization in (TE, TM):
                    with self.subTest(q=q, l=l, polarization=polarization):
                        exact = exact_mie_root(sphere, FUSED_SILICA, q, l, polarization)
                        approx = mode_frequency(sphere, FUSED_SILICA,
                                                ModeId(q, l, l, polarization))
                        self.assertLess(abs(exact - approx) / exact, 1e-4)

    def test_agreement_at_device_size(self):
        """Test the 40 µm sphere near 375 THz."""
        for polarization in (TE, TM):
            with self.subTest(polarization=polarization):
                exact = exact_mie_root(self.sphere, FUSED_SILICA, 1, 443, polarization)
                approx = mode_frequency(self.sphere, FUSED_SILICA,
                                        ModeId(1, 443, 443, polarization))
                self.assertLess(abs(exact - approx) / exact, 1e-5)

    def test_tm_root_above_te_root(self):
        """Test that the exact TM root lies above the TE root."""
        te = exact_mie_root(self.sphere, FUSED_SILICA, 1, 200, TE)
        tm = exact_mie_root(self.sphere, FUSED_SILICA, 1, 200, TM)

        self.assertGreater(tm, te)

    def test_radial_orders_increase(self):
        """Test that higher radial orders lie at higher frequency."""
        q1 = exact_mie_root(self.sphere, FUSED_SILICA, 1, 200, TE)
        q2 = exact_mie_root(self.sphere, FUSED_SILICA, 2, 200, TE)

        self.assertGreater(q2, q1)

    def test_rejects_spheroid(self):
        """Test that a non-spherical geometry is rejected."""
        with self.assertRaises(DomainError):
            exact_mie_root(SpheroidGeometry(40.0, ellipticity_eps=0.1), FUSED_SILICA, 1, 200, TE)
        with self.assertRaises(DomainError):
            exact_mie_root(self.sphere, FUSED_SILICA, 1, Config.MAX_EXACT_L + 1, TE)


class TestSpectralIntervals(unittest.TestCase):
    """Test cases for FSR, polarization and ellipticity splittings."""

    def setUp(self):
        """Set up test fixtures."""
        self.device2 = SpheroidGeometry(40.0, ellipticity_eps=0.46)

    def test_fsr_80um_sphere(self):
        """Test the FSR of an 80 µm diameter sphere at 0.8 µm."""
        self.assertAlmostEqual(free_spectral_range(self.device2, FUSED_SILICA, WAVELENGTH),
                               810.0, delta=0.03 * 810.0)

    def test_fsr_200um_sphere(self):
        """Test the FSR of a 200 µm diameter sphere at 0.8 µm."""
        fsr = free_spectral_range(SpheroidGeometry(100.0), FUSED_SILICA, WAVELENGTH)

        self.assertGreaterEqual(fsr, 300.0)
        self.assertLessEqual(fsr, 335.0)

    def test_fsr_radius_scaling(self):
        """Test that halving the radius doubles the FSR."""
        full = free_spectral_range(SpheroidGeometry(80.0), FUSED_SILICA, WAVELENGTH)
        half = free_spectral_range(SpheroidGeometry(40.0), FUSED_SILICA, WAVELENGTH)

        self.assertLess(abs(half / full - 2.0) / 2.0, 0.01)

    def test_fsr_matches_circumference(self):
        """Test that the FSR stays within 2% of c/(2πaN) for radii from 30 µm."""
        n = refractive_index(FUSED_SILICA, WAVELENGTH)
        for radius in (30.0, 40.0, 60.0, 100.0, 250.0):
            expected = Config.SPEED_OF_LIGHT / (2 * math.pi * radius * n) * 1e3
            fsr = free_spectral_range(SpheroidGeometry(radius), FUSED_SILICA, WAVELENGTH)
            with self.subTest(radius=radius):
                self.assertLess(abs(fsr - expected) / expected, 0.02)

    def test_intervals_scale_inversely_with_radius(self):
        """Test that FSR, Δ_P and Δ_m shrink by k when the radius grows by k."""
        for k in (2.0, 2.5):
            large = SpheroidGeometry(40.0 * k, ellipticity_eps=0.46)
            l_small = angular_number_near(self.device2, FUSED_SILICA, 375.0)
            l_large = angular_number_near(large, FUSED_SILICA, 375.0)
            pairs = {
                "fsr": (free_spectral_range(self.device2, FUSED_SILICA, WAVELENGTH),
                        free_spectral_range(large, FUSED_SILICA, WAVELENGTH)),
                "polarization": (polarization_splitting(self.device2, FUSED_SILICA, WAVELENGTH),
                                 polarization_splitting(large, FUSED_SILICA, WAVELENGTH)),
                "ellipticity": (
                    ellipticity_splitting(self.device2, FUSED_SILICA, l_small, l_small, WAVELENGTH),
                    ellipticity_splitting(large, FUSED_SILICA, l_large, l_large, WAVELENGTH)),
            }
            for name, (small, scaled) in pairs.items():
                with self.subTest(k=k, interval=name):
                    self.assertLess(abs(scaled * k / small - 1.0), 0.01)

    def test_polarization_splitting_80um_sphere(self):
        """Test Δ_P of an 80 µm diameter sphere."""
        self.assertAlmostEqual(polarization_splitting(self.device2, FUSED_SILICA, WAVELENGTH),
                               580.0, delta=0.05 * 580.0)

    def test_ellipticity_splitting(self):
        """Test Δ_m at |m| = l for ε = 0.46."""
        l = angular_number_near(self.device2, FUSED_SILICA, 375.0)

        self.assertAlmostEqual(ellipticity_splitting(self.device2, FUSED_SILICA, l, l, WAVELENGTH),
                               375.0, delta=0.05 * 375.0)

    def test_ellipticity_splitting_sphere_is_zero(self):
        """Test that a sphere has no m splitting."""
        self.assertEqual(ellipticity_splitting(SpheroidGeometry(40.0), FUSED_SILICA, 443, 400,
                                               WAVELENGTH), 0.0)

    def test_ellipticity_splitting_linear_in_m(self):
        """Test that Δ_m grows linearly with |m| at fixed l."""
        values = [ellipticity_splitting(self.device2, FUSED_SILICA, 443, m, WAVELENGTH)
                  for m in (100, 200, 300)]

        self.assertAlmostEqual(values[1] - values[0], values[2] - values[1], places=9)
        self.assertGreater(values[1], values[0])

    def test_ellipticity_splitting_rejects_m_zero(self):
        """Test that m = 0 has no lower neighbour."""
        with self.assertRaises(DomainError):
            ellipticity_splitting(self.device2, FUSED_SILICA, 443, 0, WAVELENGTH)


class TestSpectrumWindow(unittest.TestCase):
    """Test cases for spectrum enumeration."""

    def setUp(self):
        """Set up test fixtures."""
        self.device2 = SpheroidGeometry(40.0, ellipticity_eps=0.46)
        self.fsr = free_spectral_range(self.device2, FUSED_SILICA, WAVELENGTH)
        self.f_lo = 375.0
        self.f_hi = 375.0 + self.fsr * 1e-3

    def test_equatorial_modes_in_one_fsr(self):
        """Test that one FSR holds one TE and one TM equatorial line."""
        lines = spectrum_window(self.device2, FUSED_SILICA, self.f_lo, self.f_hi,
                                ModeFilter(q_max=1, max_l_minus_m=0))

        self.assertEqual(len(lines), 2)
        self.assertEqual({line.mode.polarization for line in lines}, {TE, TM})
        te = next(line for line in lines if line.mode.polarization == TE)
        tm = next(line for line in lines if line.mode.polarization == TM)
        delta_p = polarization_splitting(self.device2, FUSED_SILICA, WAVELENGTH)
        separation = ((tm.frequency - te.frequency) * 1e3) % self.fsr
        self.assertAlmostEqual(separation, delta_p % self.fsr, delta=5.0)

    def test_six_lines_with_two_m_orders(self):
        """Test that |l - m| <= 2 gives six lines per FSR for both polarizations."""
        lines = spectrum_window(self.device2, FUSED_SILICA, self.f_lo, self.f_hi,
                                ModeFilter(q_max=1, max_l_minus_m=2))

        self.assertEqual(len(lines), 6)
        for polarization in (TE, TM):
            depths = sorted(line.mode.angular_l - line.mode.azimuthal_m
                            for line in lines if line.mode.polarization == polarization)
            self.assertEqual(depths, [0, 1, 2])

    def test_sorted_and_half_open(self):
        """Test sorting and the half-open window."""
        lines = spectrum_window(self.device2, FUSED_SILICA, self.f_lo, self.f_hi,
                                ModeFilter(max_l_minus_m=2))
        frequencies = [line.frequency for line in lines]

        self.assertEqual(frequencies, sorted(frequencies))
        self.assertTrue(all(self.f_lo <= f < self.f_hi for f in frequencies))
        first = lines[0]
        shifted = spectrum_window(self.device2, FUSED_SILICA, first.frequency - 1e-3,
                                  first.frequency, ModeFilter(max_l_minus_m=2))
        self.assertNotIn(first.mode, [line.mode for line in shifted])

    def test_line_parameters_from_filter(self):
        """Test that Q and depth come from the filter."""
        lines = spectrum_window(self.device2, FUSED_SILICA, self.f_lo, self.f_hi,
                                ModeFilter(loaded_q=2e7, dip_depth=0.4))

        self.assertTrue(all(line.loaded_Q == 2e7 and line.dip_depth == 0.4 for line in lines))

    def test_empty_filter(self):
        """Test that an empty filter yields no lines."""
        self.assertEqual(spectrum_window(self.device2, FUSED_SILICA, self.f_lo, self.f_hi,
                                         ModeFilter(polarizations=())), [])
        self.assertEqual(spectrum_window(self.device2, FUSED_SILICA, self.f_lo, self.f_hi,
                                         ModeFilter(q_max=0)), [])

    def test_window_limits(self):
        """Test the window preconditions."""
        with self.assertRaises(DomainError):
            spectrum_window(self.device2, FUSED_SILICA, 375.0, 375.0, ModeFilter())
        with self.assertRaises(DomainError):
            spectrum_window(self.device2, FUSED_SILICA, 370.0, 380.0, ModeFilter())


if __name__ == '__main__':
    unittest.main()
