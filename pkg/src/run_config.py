"""
Run configuration: JSON files layered over device presets.

Resolution order (later wins): built-in defaults, the preset named by
`--preset` or the file's `preset` key, the config file (from `--config` or
the WGM_TUNING_CONFIG environment variable), command-line overrides.
Units are part of every key name.
"""

import copy
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from config import Config
from src.errors import ConfigError, DomainError
from src.materials import MATERIAL_PROFILES, OpticalMaterial, material_from_profile
from src.modes import ModeFilter, Polarization, SpheroidGeometry
from src.tuning import ActuatorAssembly

logger = logging.getLogger(__name__)

PRESET_NAMES = ("device1", "device2")
CUSTOM_PRESET = "custom"
DEFAULT_PRESET = "device2"
PRESET_ROOT = Path(__file__).resolve().parent.parent / Config.PRESET_DIR

DEFAULTS: Dict[str, Any] = {
    "material": {"profile": "fused_silica", "overrides": {}},
    "geometry": {
        "equatorial_radius_um": 40.0,
        "ellipticity": 0.0,
        "stem_radius_um": 0.0,
        "stem_total_length_um": 0.0,
        "tm_ratio_correction": 1.0,
    },
    "assembly": {
        "pzt_displacement_um_per_v": 0.05,
        "voltage_range_v": [0.0, 60.0],
        "compliance_fraction_sphere": 0.5,
        "gauge_length_um": 416.67,
    },
    "scan": {
        "start_frequency_thz": "auto",
        "span_ghz": 60.0,
        "points": 12001,
        "laser_linewidth_mhz": 0.3,
        "noise_rms": 1e-3,
        "drift_ghz_per_s": 0.0,
        "scan_duration_s": 1.0,
        "sweep_interval_s": 1.0,
    },
    "window": {"f_lo_thz": 374.5, "f_hi_thz": 376.0},
    "mode_filter": {
        "q_max": 1,
        "max_l_minus_m": 2,
        "polarizations": ["TE", "TM"],
        "loaded_q": 2e7,
        "dip_depth": Config.DEFAULT_DIP_DEPTH,
    },
    "voltages_v": {"start": 0.0, "stop": 10.0, "step": 1.0},
    "prominence": Config.DEFAULT_PROMINENCE,
    "seed": 0,
    "output_dir": Config.DEFAULT_OUTPUT_DIR,
}


@dataclass
class ScanSettings:
    """Laser sweep and acquisition settings; start None means 'just below the reference TE line'."""
    start_frequency: Optional[float]  # THz
    span: float  # GHz
    points: int
    laser_linewidth: float  # MHz
    noise_rms: float
    drift: float  # GHz/s
    scan_duration: float  # s
    sweep_interval: float  # s


@dataclass
class RunConfig:
    """Validated run configuration."""
    preset: str
    material: OpticalMaterial
    geometry: SpheroidGeometry
    assembly: ActuatorAssembly
    scan: ScanSettings
    window: Tuple[float, float]  # THz
    mode_filter: ModeFilter
    voltages: List[float]
    prominence: float
    seed: int
    output_dir: Path
    resolved: Dict[str, Any] = field(default_factory=dict)
    source: Optional[Path] = None

    @property
    def config_sha256(self) -> str:
        """Hash of the canonical resolved configuration."""
        canonical = json.dumps(self.resolved, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _merge(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _strip_comments(data: Dict[str, Any]) -> Dict[str, Any]:
    return {k: (_strip_comments(v) if isinstance(v, dict) else v)
            for k, v in data.items() if not k.startswith("_")}


def _read_json_object(path: Path) -> Dict[str, Any]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config: {e.strerror}", field=str(path))
    except UnicodeDecodeError as e:
        raise ConfigError(f"not a UTF-8 text file (byte {e.start}: {e.reason})", field=str(path))
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"line {e.lineno} column {e.colno}: {e.msg}", field=str(path))
    if not isinstance(data, dict):
        raise ConfigError("top level must be a JSON object", field=str(path))
    return data


def load_preset(name: str) -> Dict[str, Any]:
    """Preset values as stored in presets/<name>.json, comments removed."""
    if name == CUSTOM_PRESET:
        return {}
    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown preset '{name}' (choose from "
                          f"{', '.join(PRESET_NAMES + (CUSTOM_PRESET,))})", field="preset")
    return _strip_comments(_read_json_object(PRESET_ROOT / f"{name}.json"))


def _number(section: Dict[str, Any], key: str, path: str, minimum: Optional[float] = None,
            strict: bool = False, integer: bool = False) -> float:
    dotted = f"{path}.{key}" if path else key
    if key not in section:
        raise ConfigError("missing value", field=dotted)
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", field=dotted)
    if integer and int(value) != value:
        raise ConfigError(f"expected an integer, got {value!r}", field=dotted)
    if not np.isfinite(value):
        raise ConfigError("must be finite", field=dotted)
    if minimum is not None and (value <= minimum if strict else value < minimum):
        relation = ">" if strict else ">="
        raise ConfigError(f"must be {relation} {minimum}, got {value}", field=dotted)
    return int(value) if integer else float(value)


def _section(data: Dict[str, Any], name: str, known: Tuple[str, ...]) -> Dict[str, Any]:
    section = data.get(name)
    if not isinstance(section, dict):
        raise ConfigError("expected an object", field=name)
    for key in section:
        if key not in known:
            raise ConfigError("unknown key", field=f"{name}.{key}")
    return section


def _build(name: str, factory, *args, **kwargs):
    """Run a constructor, reporting its invariant violations against a config section."""
    try:
        return factory(*args, **kwargs)
    except DomainError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e), field=name)


def _voltages(value: Any) -> List[float]:
    if isinstance(value, list):
        if not value:
            raise ConfigError("voltage grid is empty", field="voltages_v")
        return [_number({"v": v}, "v", "voltages_v") for v in value]
    if isinstance(value, dict):
        start = _number(value, "start", "voltages_v")
        stop = _number(value, "stop", "voltages_v")
        step = _number(value, "step", "voltages_v", minimum=0.0, strict=True)
        if stop < start:
            raise ConfigError("stop is below start; voltage grid is empty", field="voltages_v")
        count = int(round((stop - start) / step)) + 1
        return [start + i * step for i in range(count)]
    raise ConfigError("expected a list or {start, stop, step}", field="voltages_v")


def _parse(data: Dict[str, Any]) -> Dict[str, Any]:
    known = ("preset",) + tuple(DEFAULTS)
    for key in data:
        if key not in known:
            raise ConfigError("unknown key", field=key)

    material_section = _section(data, "material", ("profile", "overrides"))
    profile = material_section.get("profile")
    if profile not in MATERIAL_PROFILES:
        raise ConfigError(f"unknown profile {profile!r}", field="material.profile")
    overrides = material_section.get("overrides") or {}
    if not isinstance(overrides, dict):
        raise ConfigError("expected an object", field="material.overrides")
    material = _build("material.overrides", material_from_profile, profile, overrides)

    g = _section(data, "geometry", tuple(DEFAULTS["geometry"]))
    geometry = _build("geometry", SpheroidGeometry,
                      equatorial_radius_a=_number(g, "equatorial_radius_um", "geometry", 0.0, True),
                      ellipticity_eps=_number(g, "ellipticity", "geometry"),
                      stem_radius=_number(g, "stem_radius_um", "geometry", 0.0),
                      stem_total_length=_number(g, "stem_total_length_um", "geometry", 0.0),
                      tm_ratio_correction=_number(g, "tm_ratio_correction", "geometry", 0.0, True))

    a = _section(data, "assembly", tuple(DEFAULTS["assembly"]))
    voltage_range = a.get("voltage_range_v")
    if not isinstance(voltage_range, list) or len(voltage_range) != 2:
        raise ConfigError("expected [V_min, V_max]", field="assembly.voltage_range_v")
    assembly = _build("assembly", ActuatorAssembly,
                      pzt_displacement_per_volt=_number(a, "pzt_displacement_um_per_v", "assembly", 0.0, True),
                      voltage_range=tuple(_number({"v": v}, "v", "assembly.voltage_range_v")
                                          for v in voltage_range),
                      compliance_fraction_sphere=_number(a, "compliance_fraction_sphere", "assembly", 0.0, True),
                      gauge_length=_number(a, "gauge_length_um", "assembly", 0.0, True),
                      stem_geometry=geometry)

    s = _section(data, "scan", tuple(DEFAULTS["scan"]))
    start = s.get("start_frequency_thz")
    scan = ScanSettings(
        start_frequency=None if start == "auto" else _number(s, "start_frequency_thz", "scan", 0.0, True),
        span=_number(s, "span_ghz", "scan", 0.0, True),
        points=_number(s, "points", "scan", 2, integer=True),
        laser_linewidth=_number(s, "laser_linewidth_mhz", "scan", 0.0),
        noise_rms=_number(s, "noise_rms", "scan", 0.0),
        drift=_number(s, "drift_ghz_per_s", "scan"),
        scan_duration=_number(s, "scan_duration_s", "scan", 0.0),
        sweep_interval=_number(s, "sweep_interval_s", "scan", 0.0),
    )

    w = _section(data, "window", tuple(DEFAULTS["window"]))
    window = (_number(w, "f_lo_thz", "window", 0.0, True), _number(w, "f_hi_thz", "window", 0.0, True))
    if window[0] >= window[1]:
        raise ConfigError("f_lo_thz must be below f_hi_thz", field="window")

    mf = _section(data, "mode_filter", tuple(DEFAULTS["mode_filter"]))
    polarizations = mf.get("polarizations")
    if not isinstance(polarizations, list) or any(p not in ("TE", "TM") for p in polarizations):
        raise ConfigError("expected a list drawn from 'TE', 'TM'", field="mode_filter.polarizations")
    dip_depth = _number(mf, "dip_depth", "mode_filter", 0.0)
    if dip_depth > 1:
        raise ConfigError("must be <= 1", field="mode_filter.dip_depth")
    mode_filter = _build("mode_filter", ModeFilter,
                         q_max=_number(mf, "q_max", "mode_filter", 0, integer=True),
                         max_l_minus_m=_number(mf, "max_l_minus_m", "mode_filter", 0, integer=True),
                         polarizations=tuple(Polarization(p) for p in polarizations),
                         loaded_q=_number(mf, "loaded_q", "mode_filter", 0.0, True),
                         dip_depth=dip_depth)

    prominence = _number(data, "prominence", "", 0.0, True)
    if prominence >= 1:
        raise ConfigError("must be below 1", field="prominence")
    output_dir = data.get("output_dir")
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError("expected a directory path", field="output_dir")

    return dict(
        material=material,
        geometry=geometry,
        assembly=assembly,
        scan=scan,
        window=window,
        mode_filter=mode_filter,
        voltages=_voltages(data.get("voltages_v")),
        prominence=prominence,
        seed=_number(data, "seed", "", 0, integer=True),
        output_dir=Path(output_dir),
    )


def load_run_config(
    path: Optional[str] = None,
    preset: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> RunConfig:
    """
    Load and validate a run configuration.

    Args:
        path: JSON config file; falls back to the WGM_TUNING_CONFIG variable
        preset: Preset name overriding the file's `preset` key
        overrides: Nested values applied last (command-line flags)

    Returns:
        RunConfig

    Raises:
        ConfigError: On any schema violation, naming the field (or the line
            and column of a JSON syntax error)
    """
    path = path or os.environ.get(Config.CONFIG_ENV_VAR)
    data: Dict[str, Any] = {}
    source = None
    if path:
        source = Path(path)
        data = _strip_comments(_read_json_object(source))
        logger.info("Loaded run config %s", source)

    name = preset or data.get("preset") or DEFAULT_PRESET
    if not isinstance(name, str):
        raise ConfigError("expected a preset name", field="preset")
    resolved = _merge(_merge(_merge(DEFAULTS, load_preset(name)), data), overrides or {})
    resolved["preset"] = name
    parsed = _parse(resolved)
    return RunConfig(preset=name, resolved=resolved, source=source, **parsed)
