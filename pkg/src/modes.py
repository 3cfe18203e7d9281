"""
Whispering-gallery mode frequencies of a fused-silica spheroid.

Frequencies come from the asymptotic size-parameter expansion (Airy-zero
terms plus polarization terms), made self-consistent in the dispersive index
by a fixed-point loop on the evaluation wavelength. An exact solver for the
characteristic equation of a perfect sphere serves as the validation oracle.

Units: radii in µm, frequencies in THz, spectral intervals in GHz.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import special
from scipy.optimize import brentq

from config import Config
from src.errors import DomainError, NumericError
from src.materials import OpticalMaterial, refractive_index

logger = logging.getLogger(__name__)


class Polarization(str, Enum):
    """Mode polarization."""
    TE = "TE"
    TM = "TM"


@dataclass(frozen=True, order=True)
class ModeId:
    """Quantum numbers of a WGM."""
    radial_order_q: int
    angular_l: int
    azimuthal_m: int
    polarization: Polarization

    def __post_init__(self):
        object.__setattr__(self, "polarization", Polarization(self.polarization))
        if self.radial_order_q < 1:
            raise DomainError(f"Radial order must be >= 1, got {self.radial_order_q}")
        if self.angular_l < 1:
            raise DomainError(f"Angular number must be positive, got {self.angular_l}")
        if abs(self.azimuthal_m) > self.angular_l:
            raise DomainError(f"|m| = {abs(self.azimuthal_m)} exceeds l = {self.angular_l}")

    def __str__(self) -> str:
        return (f"{self.polarization.value}(q={self.radial_order_q}, "
                f"l={self.angular_l}, m={self.azimuthal_m})")


@dataclass(frozen=True)
class ModeLine:
    """A resonance: mode label, centre frequency (THz), loaded Q and dip depth."""
    mode: ModeId
    frequency: float
    loaded_Q: float
    dip_depth: float

    def __post_init__(self):
        if self.frequency <= 0:
            raise DomainError(f"Frequency must be positive, got {self.frequency}")
        if self.loaded_Q <= 0:
            raise DomainError(f"Loaded Q must be positive, got {self.loaded_Q}")
        if not 0.0 <= self.dip_depth <= 1.0:
            raise DomainError(f"Dip depth must lie in [0, 1], got {self.dip_depth}")

    @property
    def linewidth(self) -> float:
        """Full width at half depth in THz."""
        return self.frequency / self.loaded_Q


@dataclass(frozen=True)
class SpheroidGeometry:
    """
    Two-stem microspheroid.

    ellipticity_eps is (r_polar - r_equatorial)/a, positive for a prolate
    shape stretched along the stems. tm_ratio_correction scales the TM
    strain response relative to the cylinder model.
    """
    equatorial_radius_a: float  # µm
    ellipticity_eps: float = 0.0
    stem_radius: float = 0.0  # µm
    stem_total_length: float = 0.0  # µm
    tm_ratio_correction: float = 1.0

    def __post_init__(self):
        if self.equatorial_radius_a <= 0:
            raise DomainError(f"Equatorial radius must be positive, got {self.equatorial_radius_a}")
        if not abs(self.ellipticity_eps) < 1:
            raise DomainError(f"|ellipticity| must be below 1, got {self.ellipticity_eps}")
        if not 0 <= self.stem_radius < self.equatorial_radius_a:
            raise DomainError("Stem radius must be non-negative and smaller than the sphere radius")
        if self.stem_total_length < 0:
            raise DomainError("Stem length must be non-negative")
        if self.tm_ratio_correction <= 0:
            raise DomainError("tm_ratio_correction must be positive")


@dataclass(frozen=True)
class ModeFilter:
    """Bounds of a spectrum enumeration and the line parameters it assigns."""
    q_max: int = 1
    max_l_minus_m: int = 0
    polarizations: Tuple[Polarization, ...] = (Polarization.TE, Polarization.TM)
    loaded_q: float = Config.DEFAULT_LOADED_Q
    dip_depth: float = Config.DEFAULT_DIP_DEPTH

    def __post_init__(self):
        object.__setattr__(
            self, "polarizations", tuple(Polarization(p) for p in self.polarizations)
        )
        if self.q_max < 0 or self.max_l_minus_m < 0:
            raise DomainError("q_max and max_l_minus_m must be non-negative")

    @property
    def is_empty(self) -> bool:
        return self.q_max == 0 or not self.polarizations


@lru_cache(maxsize=None)
def _airy_zero(q: int) -> float:
    """q-th zero of Ai (negative)."""
    zeros, _, _, _ = special.ai_zeros(q)
    return float(zeros[-1])


def _polarization_tail(alpha: float, p: float, n: float, half: float) -> float:
    """
    (ν/2)^(-1) and (ν/2)^(-5/3) polarization terms.

    These are the parts of the expansion that the closed-form shift in
    asymptotic_size_parameter does not carry. The (ν/2)^(-1) term is zero for TE.
    """
    s2 = n ** 2 - 1
    s = math.sqrt(s2)
    g = n * p / s
    h = half ** (1 / 3)
    b2 = n ** 2 * alpha / (2 * s2)
    b3 = -n ** 2 * g / (2 * s2) + n ** 3 / (4 * s ** 3)
    c2 = 3 * n ** 2 / (2 * s2) - n ** 4 / (2 * s2 ** 2)
    e3 = -g * b2
    e4 = -g * b3
    d3 = e3 + alpha * g ** 3 / 3
    d4 = e4 - g ** 4 / 4
    b5 = n ** 2 * d3 / (2 * s2) + c2 * alpha * g / 2 + n ** 3 * alpha * (2 - s2) / (8 * s ** 5)
    e6 = -g * (b5 + 2 * b2 * b3)
    d6 = (e6 - alpha * g ** 2 * e4 + g ** 3 * e3
          + 3 / 8 * alpha * g ** 4 + 7 / 18 * alpha * g ** 6)
    return d4 / h ** 3 + d6 / h ** 5


def asymptotic_size_parameter(nu: float, q: int, polarization: Polarization, n: float) -> float:
    """
    N·x of the (q, ν) resonance from the asymptotic expansion.

    The Airy-zero series runs to (ν/2)^(-5/3). The polarization shift is
    the boundary-matching phase at the Airy root in closed form,
    -arctan(N·P·k/κ)/k with k = sqrt(1 - (ν/T)²) inside and
    κ = sqrt(N²(ν/T)² - 1) outside, which expands to -N·P/sqrt(N²-1) and
    the (ν/2)^(-2/3) term at low order; the remaining (ν/2)^(-1) and
    (ν/2)^(-5/3) terms are added as a series. P = 1 for TE and 1/N² for TM.

    Raises:
        DomainError: If the radial order is too high to be confined at this ν
    """
    a = _airy_zero(q)
    half = nu / 2.0
    t = (nu - a * half ** (1 / 3) + 3 / 20 * a ** 2 * half ** (-1 / 3)
         + (a ** 3 + 10) / 1400 * half ** (-1)
         - a * (479 * a ** 3 - 40) / 504000 * half ** (-5 / 3))
    p = 1.0 if polarization == Polarization.TE else 1.0 / n ** 2
    ratio = t / nu
    if not 1.0 < ratio < n:
        raise DomainError(f"q = {q} is not confined at l = {nu - 0.5:g}")
    k = math.sqrt(1.0 - 1.0 / ratio ** 2)
    shift = -math.atan(n * p * k / math.sqrt(n ** 2 / ratio ** 2 - 1.0)) / k
    return t + shift + _polarization_tail(-a, p, n, half)


def _seed_wavelength(radius: float, nu: float, q: int, polarization: Polarization) -> float:
    size = asymptotic_size_parameter(nu, q, polarization, Config.SEED_INDEX) / Config.SEED_INDEX
    return 2 * math.pi * radius / size


def sphere_frequency(
    radius: float,
    material: OpticalMaterial,
    q: int,
    l: int,
    polarization: Polarization,
    wavelength_hint: Optional[float] = None,
) -> float:
    nu = l + 0.5
    wavelength = wavelength_hint or _seed_wavelength(radius, nu, q, polarization)
    for iteration in range(Config.DISPERSION_MAX_ITERATIONS):
        n = refractive_index(material, wavelength)
        size = asymptotic_size_parameter(nu, q, polarization, n) / n
        updated = 2 * math.pi * radius / size
        if abs(updated - wavelength) <= Config.DISPERSION_TOLERANCE * updated:
            return Config.SPEED_OF_LIGHT / updated
        wavelength = updated
    raise NumericError(
        f"Dispersion loop for q={q}, l={l}, {polarization.value} did not converge "
        f"in {Config.DISPERSION_MAX_ITERATIONS} iterations",
        bracket=(wavelength, updated),
    )


def equatorial_factor(ellipticity: float, l: int, m: int) -> float:
    """
    Quadrupole shift relative to the equatorial (|m| = l) mode.

    First-order equivalent of f0[1 - (ε/6)(1 - 3m²/(l(l+1)))] with f0
    taken at the equatorial radius.
    """
    return 1.0 - 0.5 * ellipticity * (l * l - m * m) / (l * (l + 1))


def _check_asymptotic(mode: ModeId) -> None:
    if mode.angular_l < Config.MIN_ANGULAR_L:
        raise DomainError(
            f"l = {mode.angular_l} is below the asymptotic validity floor {Config.MIN_ANGULAR_L}"
        )


def mode_frequency(
    geometry: SpheroidGeometry,
    material: OpticalMaterial,
    mode: ModeId,
    wavelength_hint: Optional[float] = None,
) -> float:
    """
    Resonance frequency of a mode.

    Args:
        geometry: Spheroid description
        material: Resonator glass
        mode: Quantum numbers, l >= Config.MIN_ANGULAR_L
        wavelength_hint: Optional seed (µm) for the dispersion loop

    Returns:
        Frequency in THz

    Raises:
        DomainError: If l is below the validity floor or the mode falls
            outside the dispersion range
        NumericError: If the dispersion loop does not converge
    """
    _check_asymptotic(mode)
    sphere = sphere_frequency(
        geometry.equatorial_radius_a, material, mode.radial_order_q,
        mode.angular_l, mode.polarization, wavelength_hint,
    )
    return sphere * equatorial_factor(geometry.ellipticity_eps, mode.angular_l, mode.azimuthal_m)


def _characteristic_function(z, l: int, polarization: Polarization, n: float):
    """Boundary-matching residual at N·x = z; its zeros are the resonances."""
    z = np.asarray(z, dtype=float)
    x = z / n
    j = special.spherical_jn(l, z)
    psi = z * j
    dpsi = j + z * special.spherical_jn(l, z, derivative=True)
    with np.errstate(over="ignore", invalid="ignore"):
        log_chi = 1.0 / x + (special.spherical_yn(l, x, derivative=True)
                             / special.spherical_yn(l, x))
    if polarization == Polarization.TE:
        return n * dpsi - psi * log_chi
    return dpsi - n * psi * log_chi


def _characteristic_root(l: int, q: int, polarization: Polarization, n: float) -> float:
    """Size parameter x of the q-th root above the turning point."""
    nu = l + 0.5
    scale = (nu / 2.0) ** (1 / 3)
    z_lo = nu
    z_hi = min(n * nu, nu - _airy_zero(q + 1) * scale + 2.0)
    grid = np.append(np.arange(z_lo, z_hi, Config.ROOT_SCAN_STEP * scale), z_hi)
    values = _characteristic_function(grid, l, polarization, n)
    if not np.all(np.isfinite(values)):
        raise NumericError(
            f"Characteristic function overflowed for l={l}", bracket=(z_lo / n, z_hi / n)
        )
    changes = np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)[0]
    if len(changes) < q:
        raise NumericError(
            f"Found {len(changes)} roots for l={l} {polarization.value}, need q={q}",
            bracket=(z_lo / n, z_hi / n),
        )
    k = changes[q - 1]
    root = brentq(
        lambda z: float(_characteristic_function(z, l, polarization, n)),
        grid[k], grid[k + 1],
        xtol=Config.ROOT_TOLERANCE * grid[k],
    )
    return root / n


def exact_mie_root(
    geometry: SpheroidGeometry,
    material: OpticalMaterial,
    q: int,
    l: int,
    polarization: Polarization,
) -> float:
    """
    Resonance frequency of a perfect sphere from the exact characteristic equation.

    The inside field is matched to the confined outside field at the
    dielectric boundary using spherical Bessel functions; the q-th root is
    bracketed on a scan from the turning point and refined with Brent's
    method, inside the same dispersion fixed-point loop as mode_frequency.

    Returns:
        Frequency in THz

    Raises:
        DomainError: Non-spherical geometry or l outside [1, Config.MAX_EXACT_L]
        NumericError: Root bracketing or the dispersion loop failed
    """
    polarization = Polarization(polarization)
    if geometry.ellipticity_eps != 0:
        raise DomainError("The exact solver only handles a perfect sphere (ellipticity 0)")
    if not 1 <= l <= Config.MAX_EXACT_L:
        raise DomainError(f"l = {l} outside the exact solver range [1, {Config.MAX_EXACT_L}]")
    if q < 1:
        raise DomainError(f"Radial order must be >= 1, got {q}")

    radius = geometry.equatorial_radius_a
    wavelength = _seed_wavelength(radius, l + 0.5, q, polarization)
    for iteration in range(Config.EXACT_MAX_ITERATIONS):
        n = refractive_index(material, wavelength)
        size = _characteristic_root(l, q, polarization, n)
        updated = 2 * math.pi * radius / size
        logger.debug("exact root l=%d q=%d %s iteration %d: λ=%.12f µm",
                     l, q, polarization.value, iteration, updated)
        if abs(updated - wavelength) <= Config.ROOT_TOLERANCE * updated:
            return Config.SPEED_OF_LIGHT / updated
        wavelength = updated
    raise NumericError(
        f"Dispersion loop of the exact solver did not converge for l={l}",
        bracket=(wavelength, updated),
    )


def angular_number_near(
    geometry: SpheroidGeometry,
    material: OpticalMaterial,
    frequency: float,
    q: int = 1,
    polarization: Polarization = Polarization.TE,
) -> int:
    """
    Angular number of the equatorial mode nearest a frequency.

    Raises:
        DomainError: If the nearest mode is below the validity floor
    """
    polarization = Polarization(polarization)
    wavelength = Config.SPEED_OF_LIGHT / frequency
    n = refractive_index(material, wavelength)
    target = n * 2 * math.pi * geometry.equatorial_radius_a / wavelength
    nu = target
    for _ in range(20):
        nu = target - (asymptotic_size_parameter(nu, q, polarization, n) - nu)
    estimate = int(round(nu - 0.5))
    if estimate < Config.MIN_ANGULAR_L:
        raise DomainError(
            f"Mode near {frequency:.6g} THz has l ~ {estimate}, below the validity floor"
        )

    def distance(l: int) -> float:
        return abs(sphere_frequency(geometry.equatorial_radius_a, material, q, l,
                                     polarization, wavelength) - frequency)

    candidates = [l for l in (estimate - 1, estimate, estimate + 1) if l >= Config.MIN_ANGULAR_L]
    return min(candidates, key=lambda l: (distance(l), l))


def free_spectral_range(
    geometry: SpheroidGeometry,
    material: OpticalMaterial,
    wavelength: float,
    q: int = 1,
    polarization: Polarization = Polarization.TE,
) -> float:
    """
    Spacing f(q, l+1) - f(q, l) of equatorial modes near a wavelength.

    Returns:
        FSR in GHz
    """
    frequency = Config.SPEED_OF_LIGHT / wavelength
    l = angular_number_near(geometry, material, frequency, q, polarization)
    lower = mode_frequency(geometry, material, ModeId(q, l, l, polarization), wavelength)
    upper = mode_frequency(geometry, material, ModeId(q, l + 1, l + 1, polarization), wavelength)
    return (upper - lower) * 1e3


def polarization_splitting(
    geometry: SpheroidGeometry,
    material: OpticalMaterial,
    wavelength: float,
    q: int = 1,
) -> float:
    """
    Δ_P = f_TM - f_TE at equal (q, l, m) near a wavelength.

    Returns:
        Splitting in GHz, positive (TM above TE)
    """
    frequency = Config.SPEED_OF_LIGHT / wavelength
    l = angular_number_near(geometry, material, frequency, q, Polarization.TE)
    te = mode_frequency(geometry, material, ModeId(q, l, l, Polarization.TE), wavelength)
    tm = mode_frequency(geometry, material, ModeId(q, l, l, Polarization.TM), wavelength)
    return (tm - te) * 1e3


def ellipticity_splitting(
    geometry: SpheroidGeometry,
    material: OpticalMaterial,
    l: int,
    m: int,
    wavelength: float,
    q: int = 1,
    polarization: Polarization = Polarization.TE,
) -> float:
    """
    Δ_m = f(q, l, |m|) - f(q, l, |m|-1).

    Returns:
        Splitting in GHz; even in m, zero for a sphere
    """
    if l < Config.MIN_ANGULAR_L:
        raise DomainError(f"l = {l} is below the asymptotic validity floor")
    if not 1 <= abs(m) <= l:
        raise DomainError(f"Need 1 <= |m| <= l, got m={m}, l={l}")
    sphere = sphere_frequency(geometry.equatorial_radius_a, material, q, l,
                               Polarization(polarization), wavelength)
    eps = geometry.ellipticity_eps
    return sphere * 0.5 * eps * (2 * abs(m) - 1) / (l * (l + 1)) * 1e3


def spectrum_window(
    geometry: SpheroidGeometry,
    material: OpticalMaterial,
    f_lo: float,
    f_hi: float,
    mode_filter: ModeFilter,
) -> List[ModeLine]:
    """
    All modes allowed by the filter with f_lo <= f < f_hi.

    Modes have m = l - d for d = 0..max_l_minus_m (m and -m are degenerate
    and only m >= 0 satisfies |l - m| <= max_l_minus_m).

    Returns:
        ModeLines sorted by frequency

    Raises:
        DomainError: If f_lo >= f_hi or the window exceeds Config.MAX_WINDOW_FSR
    """
    if not f_lo < f_hi:
        raise DomainError(f"Window needs f_lo < f_hi, got [{f_lo}, {f_hi}]")
    hint = Config.SPEED_OF_LIGHT / f_lo
    fsr = free_spectral_range(geometry, material, hint)
    if (f_hi - f_lo) * 1e3 > Config.MAX_WINDOW_FSR * fsr:
        raise DomainError(
            f"Window of {(f_hi - f_lo) * 1e3:.1f} GHz exceeds "
            f"{Config.MAX_WINDOW_FSR:g} FSR ({fsr:.1f} GHz each)"
        )
    if mode_filter.is_empty:
        return []

    lines: List[ModeLine] = []
    for q in range(1, mode_filter.q_max + 1):
        for polarization in mode_filter.polarizations:
            start = angular_number_near(geometry, material, f_lo, q, polarization)
            sphere_cache: Dict[int, float] = {}

            def frequency(l: int, d: int) -> float:
                if l not in sphere_cache:
                    sphere_cache[l] = sphere_frequency(
                        geometry.equatorial_radius_a, material, q, l, polarization, hint)
                return sphere_cache[l] * equatorial_factor(geometry.ellipticity_eps, l, l - d)

            for d in range(mode_filter.max_l_minus_m + 1):
                floor = max(Config.MIN_ANGULAR_L, d)
                l = max(start, floor)
                while l - 1 >= floor and frequency(l - 1, d) >= f_lo:
                    l -= 1
                while frequency(l, d) < f_lo:
                    l += 1
                while frequency(l, d) < f_hi:
                    lines.append(ModeLine(
                        mode=ModeId(q, l, l - d, polarization),
                        frequency=frequency(l, d),
                        loaded_Q=mode_filter.loaded_q,
                        dip_depth=mode_filter.dip_depth,
                    ))
                    l += 1

    lines.sort(key=lambda line: (line.frequency, line.mode))
    logger.debug("spectrum window [%.6f, %.6f) THz: %d lines", f_lo, f_hi, len(lines))
    return lines
