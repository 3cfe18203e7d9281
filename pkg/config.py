"""
Configuration constants for the WGM tuning toolkit.

This module centralizes all configuration values to avoid magic numbers
and make the models and solvers easy to tune. Run-specific values (geometry,
actuator, scan) come from JSON run configs, see src/run_config.py.
"""


class Config:
    """Configuration constants for simulation and analysis."""

    # Physical constants
    SPEED_OF_LIGHT: float = 299.792458  # µm·THz (= µm/ps)

    # Reference line used for tuning slopes, budgets and the thermal coefficient
    REFERENCE_FREQUENCY_THZ: float = 375.0
    REFERENCE_WAVELENGTH_UM: float = SPEED_OF_LIGHT / REFERENCE_FREQUENCY_THZ

    # Sellmeier validity range
    MIN_WAVELENGTH_UM: float = 0.4
    MAX_WAVELENGTH_UM: float = 2.0

    # Asymptotic mode solver
    MIN_ANGULAR_L: int = 20  # asymptotic validity floor
    DISPERSION_MAX_ITERATIONS: int = 8
    DISPERSION_TOLERANCE: float = 1e-10
    SEED_INDEX: float = 1.45  # index used to seed the dispersion loop

    # Exact characteristic-equation solver
    MAX_EXACT_L: int = 2000
    ROOT_TOLERANCE: float = 1e-10
    ROOT_SCAN_STEP: float = 0.05  # in units of (ν/2)^(1/3)
    EXACT_MAX_ITERATIONS: int = 12

    # Spectrum enumeration
    MAX_WINDOW_FSR: float = 5.0
    DEFAULT_LOADED_Q: float = 1e8
    DEFAULT_DIP_DEPTH: float = 0.3

    # Photoelastic model
    # f from σ + n²/2·(A + f(T - A)) = (σ + n²/2·T)/1.75, silica at 0.8 µm,
    # A = p11 - 2σp12 (axial), T = p12 - σ(p11 + p12) (transverse)
    CYLINDER_TE_TRANSVERSE_FRACTION: float = 0.104  # sets TM/TE = 1.75 for silica
    CYLINDER_TM_TE_RATIO: float = 1.75
    MAX_THERMAL_EXCURSION_K: float = 100.0

    # Spectroscopy
    LASER_LINEWIDTH_THRESHOLD: float = 0.1  # fold in laser width above γ/10

    # Dip detection and fitting
    DEFAULT_PROMINENCE: float = 0.1
    FIT_WINDOW_LINEWIDTHS: float = 5.0  # half-width of a fit window, in FWHM
    MIN_WINDOW_HALF_SAMPLES: int = 4
    MIN_FIT_SAMPLES: int = 7
    FIT_XTOL: float = 1e-8
    FIT_MAX_ITERATIONS: int = 100
    MIN_DIP_DEPTH: float = 1e-6
    MIN_DIP_SNR: float = 5.0  # fitted depth over residual rms

    # Slope fitting and tracking
    MIN_SWEEP_POINTS: int = 3
    SLOPE_CLASS_TOLERANCE: float = 0.25
    TRACK_MAX_JUMP_GHZ: float = 50.0

    # Mode assignment search
    ASSIGN_RADIUS_SPAN: float = 0.10  # ± fraction of the prior radius
    ASSIGN_ELLIPTICITY_RANGE: tuple[float, float] = (0.0, 0.6)
    ASSIGN_MAX_L_MINUS_M: int = 3
    ASSIGN_RADIUS_STEPS: int = 21
    ASSIGN_ELLIPTICITY_STEPS: int = 13
    ASSIGN_REFINE_CANDIDATES: int = 12
    ASSIGN_REMATCH_ROUNDS: int = 4  # refine, then re-match at the refined geometry
    ASSIGN_REMATCH_KEEP: int = 2
    ASSIGN_MIN_SPAN_FSR: float = 0.3
    ASSIGN_MAX_RMS_GHZ: float = 10.0
    ASSIGN_WIDE_RMS_GHZ: float = 40.0  # wide-scan rms for the simplicity shortlist
    ASSIGN_TIE_RTOL: float = 1e-4
    ASSIGN_TIE_ATOL: float = 1e-3  # GHz²

    # File formats
    TRACE_HEADER: str = "# wgm-trace v1"
    REPORT_FORMAT: str = "wgm-report v1"
    PLOT_DATA_FORMAT: str = "wgm-plot-data v1"
    SPECTRUM_COLUMNS: tuple[str, ...] = ("q", "l", "m", "pol", "frequency_THz", "Q", "depth")
    TUNING_COLUMNS: tuple[str, ...] = ("voltage_V", "shift_TE_GHz", "shift_TM_GHz")

    # Command line
    CONFIG_ENV_VAR: str = "WGM_TUNING_CONFIG"
    PRESET_DIR: str = "presets"
    DEFAULT_OUTPUT_DIR: str = "out"
    EXIT_OK: int = 0
    EXIT_USAGE: int = 2
    EXIT_FIT_FAILED: int = 3
