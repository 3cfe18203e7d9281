"""
Optical material constants and Sellmeier dispersion.

The resonator glass is described by its dispersion plus the thermal,
elastic and photoelastic constants the tuning model needs.
"""

from dataclasses import dataclass, fields
from typing import Dict, Tuple

import numpy as np

from config import Config
from src.errors import DomainError

# Malitson (1965) fused-silica coefficients: (B_i, C_i in µm²)
FUSED_SILICA_SELLMEIER: Tuple[Tuple[float, float], ...] = (
    (0.6961663, 0.0684043 ** 2),
    (0.4079426, 0.1162414 ** 2),
    (0.8974794, 9.896161 ** 2),
)


@dataclass(frozen=True)
class OpticalMaterial:
    """Dispersion, thermal, elastic and photoelastic constants of a glass."""
    name: str
    sellmeier_coefficients: Tuple[Tuple[float, float], ...]  # (B, C in µm²)
    dn_dT: float  # 1/K
    thermal_expansion: float  # 1/K
    poisson_ratio: float
    photoelastic_p11: float
    photoelastic_p12: float
    elastic_limit_strain: float
    plastic_onset_strain: float

    def __post_init__(self):
        object.__setattr__(
            self,
            "sellmeier_coefficients",
            tuple((float(b), float(c)) for b, c in self.sellmeier_coefficients),
        )
        if not 1 <= len(self.sellmeier_coefficients) <= 3:
            raise DomainError("Sellmeier model takes one to three (B, C) pairs")
        if not 0.0 < self.poisson_ratio < 0.5:
            raise DomainError(f"Poisson ratio must lie in (0, 0.5), got {self.poisson_ratio}")
        if self.elastic_limit_strain <= 0:
            raise DomainError("elastic_limit_strain must be positive")
        if self.plastic_onset_strain < self.elastic_limit_strain:
            raise DomainError("plastic_onset_strain must not be below elastic_limit_strain")

        wavelengths = np.linspace(Config.MIN_WAVELENGTH_UM, Config.MAX_WAVELENGTH_UM, 33)
        with np.errstate(invalid="ignore", divide="ignore"):
            index = np.sqrt(_sellmeier_n_squared(self.sellmeier_coefficients, wavelengths))
        if not np.all(np.isfinite(index)) or np.any(index < 1.0) or np.any(index >= 2.0):
            raise DomainError(
                f"Material '{self.name}' has an index outside [1, 2) "
                f"between {Config.MIN_WAVELENGTH_UM} and {Config.MAX_WAVELENGTH_UM} µm"
            )


def _sellmeier_n_squared(coefficients, wavelength):
    wl2 = np.asarray(wavelength, dtype=float) ** 2
    total = 1.0
    for b, c in coefficients:
        total = total + b * wl2 / (wl2 - c)
    return total


def _check_wavelength(wavelength: float) -> None:
    if not Config.MIN_WAVELENGTH_UM <= wavelength <= Config.MAX_WAVELENGTH_UM:
        raise DomainError(
            f"Wavelength {wavelength:.6g} µm is outside the dispersion range "
            f"[{Config.MIN_WAVELENGTH_UM}, {Config.MAX_WAVELENGTH_UM}] µm"
        )


def refractive_index(material: OpticalMaterial, wavelength: float) -> float:
    """
    Refractive index from the Sellmeier equation.

    Args:
        material: Glass description
        wavelength: Vacuum wavelength in µm

    Returns:
        n(λ)

    Raises:
        DomainError: If the wavelength is outside the supported range
    """
    _check_wavelength(wavelength)
    return float(np.sqrt(_sellmeier_n_squared(material.sellmeier_coefficients, wavelength)))


def index_derivative(material: OpticalMaterial, wavelength: float) -> float:
    """Analytic dn/dλ in 1/µm."""
    _check_wavelength(wavelength)
    wl2 = wavelength ** 2
    d_n2 = sum(-2.0 * wavelength * b * c / (wl2 - c) ** 2 for b, c in material.sellmeier_coefficients)
    return d_n2 / (2.0 * refractive_index(material, wavelength))


def group_index(material: OpticalMaterial, wavelength: float) -> float:
    """Group index N - λ dN/dλ."""
    return refractive_index(material, wavelength) - wavelength * index_derivative(material, wavelength)


FUSED_SILICA = OpticalMaterial(
    name="fused_silica",
    sellmeier_coefficients=FUSED_SILICA_SELLMEIER,
    dn_dT=8.9e-6,
    thermal_expansion=5.5e-7,
    poisson_ratio=0.17,
    photoelastic_p11=0.121,
    photoelastic_p12=0.270,
    elastic_limit_strain=0.01,
    plastic_onset_strain=0.015,
)

MATERIAL_PROFILES: Dict[str, OpticalMaterial] = {
    FUSED_SILICA.name: FUSED_SILICA,
}

MATERIAL_FIELDS = tuple(f.name for f in fields(OpticalMaterial))


def material_from_profile(profile: str, overrides: Dict[str, object] = None) -> OpticalMaterial:
    """
    Build a material from a named profile plus field overrides.

    Raises:
        DomainError: Unknown profile or field, or overrides break an invariant
    """
    if profile not in MATERIAL_PROFILES:
        raise DomainError(f"Unknown material profile '{profile}'")
    values = {name: getattr(MATERIAL_PROFILES[profile], name) for name in MATERIAL_FIELDS}
    for key, value in (overrides or {}).items():
        if key not in values:
            raise DomainError(f"Unknown material field '{key}'")
        values[key] = value
    return OpticalMaterial(**values)
