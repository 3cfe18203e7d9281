"""
Unit tests for run configuration loading and validation.
"""

import json
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

from config import Config
from src.errors import ConfigError
from src.modes import Polarization
from src.run_config import load_preset, load_run_config
from src.tuning import strain_per_volt


class TestRunConfig(unittest.TestCase):
    """Test cases for load_run_config."""

    def setUp(self):
        """Set up test fixtures."""
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def _write(self, data, name="run.json"):
        path = self.dir / name
        path.write_text(json.dumps(data) if not isinstance(data, str) else data, encoding="utf-8")
        return str(path)

    def test_default_preset(self):
        """Test that the default is the two-stem 80 µm device."""
        config = load_run_config()

        self.assertEqual(config.preset, "device2")
        self.assertEqual(config.geometry.equatorial_radius_a, 40.0)
        self.assertEqual(config.geometry.ellipticity_eps, 0.46)
        self.assertIs(config.assembly.stem_geometry, config.geometry)
        self.assertAlmostEqual(strain_per_volt(config.assembly), 6.0e-5, places=8)
        self.assertEqual(config.voltages, [float(v) for v in range(11)])
        self.assertIsNone(config.scan.start_frequency)
        self.assertEqual(config.mode_filter.polarizations, (Polarization.TE, Polarization.TM))

    def test_device1_preset(self):
        """Test the 200 µm single-stem device preset."""
        config = load_run_config(preset="device1")

        self.assertEqual(config.geometry.equatorial_radius_a, 100.0)
        self.assertEqual(config.assembly.voltage_range, (0.0, 150.0))
        self.assertEqual(config.window, (374.8, 375.6))

    def test_custom_preset_uses_defaults(self):
        """Test that the custom preset starts from the bare defaults."""
        config = load_run_config(preset="custom")

        self.assertEqual(config.geometry.ellipticity_eps, 0.0)
        self.assertEqual(config.preset, "custom")

    def test_unknown_preset(self):
        """Test that an unknown preset name is rejected."""
        with self.assertRaises(ConfigError) as ctx:
            load_preset("device9")
        self.assertEqual(ctx.exception.field, "preset")

    def test_file_overrides_preset(self):
        """Test that file values override preset values and `_` keys are ignored."""
        path = self._write({"_comment": "bench run", "preset": "device1",
                            "geometry": {"_note": "remeasured", "ellipticity": 0.01},
                            "seed": 9})

        config = load_run_config(path)

        self.assertEqual(config.geometry.ellipticity_eps, 0.01)
        self.assertEqual(config.geometry.equatorial_radius_a, 100.0)
        self.assertEqual(config.seed, 9)
        self.assertEqual(config.source, Path(path))

    def test_overrides_applied_last(self):
        """Test that command-line overrides beat the file."""
        path = self._write({"seed": 9, "output_dir": "runs/a"})

        config = load_run_config(path, overrides={"seed": 4, "output_dir": "runs/b"})

        self.assertEqual(config.seed, 4)
        self.assertEqual(config.output_dir, Path("runs/b"))

    def test_environment_variable(self):
        """Test that the config path falls back to the environment."""
        path = self._write({"seed": 21})

        with patch.dict("os.environ", {Config.CONFIG_ENV_VAR: path}):
            config = load_run_config()

        self.assertEqual(config.seed, 21)

    def test_unknown_key_names_field(self):
        """Test that an unknown nested key is reported by its dotted path."""
        path = self._write({"geometry": {"radius": 40.0}})

        with self.assertRaises(ConfigError) as ctx:
            load_run_config(path)
        self.assertEqual(ctx.exception.field, "geometry.radius")

    def test_bad_value_names_field(self):
        """Test that an out-of-range value is reported by its dotted path."""
        path = self._write({"scan": {"span_ghz": -5}})

        with self.assertRaises(ConfigError) as ctx:
            load_run_config(path)
        self.assertEqual(ctx.exception.field, "scan.span_ghz")

    def test_invariant_violation_names_section(self):
        """Test that a constructor invariant is reported against its section."""
        path = self._write({"geometry": {"ellipticity": 1.5}})

        with self.assertRaises(ConfigError) as ctx:
            load_run_config(path)
        self.assertEqual(ctx.exception.field, "geometry")

    def test_syntax_error_names_line(self):
        """Test that a JSON syntax error reports its line."""
        path = self._write('{\n  "seed": 1,\n  "window": {\n}')

        with self.assertRaises(ConfigError) as ctx:
            load_run_config(path)
        self.assertIn("line 4", str(ctx.exception))

    def test_voltage_list(self):
        """Test an explicit voltage list."""
        config = load_run_config(overrides={"voltages_v": [0, 5, 2.5]})

        self.assertEqual(config.voltages, [0.0, 5.0, 2.5])

    def test_voltage_range(self):
        """Test a start/stop/step voltage grid."""
        config = load_run_config(overrides={"voltages_v": {"start": 0, "stop": 25, "step": 5}})

        self.assertEqual(config.voltages, [0.0, 5.0, 10.0, 15.0, 20.0, 25.0])

    def test_empty_voltage_grid(self):
        """Test that an empty voltage grid is rejected."""
        for value in ([], {"start": 0, "stop": -1, "step": 1}):
            with self.subTest(value=value):
                with self.assertRaises(ConfigError) as ctx:
                    load_run_config(overrides={"voltages_v": value})
                self.assertEqual(ctx.exception.field, "voltages_v")

    def test_config_hash(self):
        """Test that the config hash is stable and tracks the seed."""
        first = load_run_config(overrides={"seed": 1})
        again = load_run_config(overrides={"seed": 1})
        other = load_run_config(overrides={"seed": 2})

        self.assertEqual(first.config_sha256, again.config_sha256)
        self.assertNotEqual(first.config_sha256, other.config_sha256)
        self.assertEqual(len(first.config_sha256), 64)


if __name__ == "__main__":
    unittest.main()
