"""
Strain and temperature tuning of WGM frequencies.

A piezo stack stretches the stems and sphere along the stem axis. The
first-order tuning relation Δν/ν = -Δa/a - ΔN/N combines the Poisson
contraction of the equator with the photoelastic index change, which
depends on polarization. Temperature enters through thermal expansion and
the thermo-optic coefficient.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from config import Config
from src.errors import DomainError
from src.materials import FUSED_SILICA, OpticalMaterial, refractive_index
from src.modes import (
    ModeId,
    ModeLine,
    Polarization,
    SpheroidGeometry,
    angular_number_near,
    free_spectral_range,
    sphere_frequency,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ActuatorAssembly:
    """
    Piezo actuator driving the stems of a microsphere.

    compliance_fraction_sphere is the share of the stack displacement that
    lands on the gauge section (sphere plus strained stem lengths).
    """
    pzt_displacement_per_volt: float  # µm/V
    voltage_range: Tuple[float, float]  # V
    compliance_fraction_sphere: float
    gauge_length: float  # µm
    stem_geometry: Optional[SpheroidGeometry] = None

    def __post_init__(self):
        object.__setattr__(self, "voltage_range", tuple(float(v) for v in self.voltage_range))
        if len(self.voltage_range) != 2:
            raise DomainError("voltage_range takes exactly two values")
        if self.pzt_displacement_per_volt <= 0:
            raise DomainError("pzt_displacement_per_volt must be positive")
        if not self.voltage_range[0] < self.voltage_range[1]:
            raise DomainError(f"Need V_min < V_max, got {self.voltage_range}")
        if not 0 < self.compliance_fraction_sphere <= 1:
            raise DomainError("compliance_fraction_sphere must lie in (0, 1]")
        if self.gauge_length <= 0:
            raise DomainError("gauge_length must be positive")


@dataclass(frozen=True)
class StrainState:
    """Axial strain and the radius and index strains it induces."""
    axial_strain: float
    equatorial_radius_strain: float
    index_strain_TE: float
    index_strain_TM: float
    gauge_elongation: float = 0.0  # µm

    @classmethod
    def zero(cls) -> "StrainState":
        return cls(0.0, 0.0, 0.0, 0.0)

    def index_strain(self, polarization: Polarization) -> float:
        if Polarization(polarization) == Polarization.TE:
            return self.index_strain_TE
        return self.index_strain_TM


@dataclass(frozen=True)
class ThermalState:
    delta_T: float  # K


@dataclass(frozen=True)
class ElasticBudget:
    """Largest stretch that stays elastic and the tuning it buys."""
    max_voltage: float
    max_strain: float
    max_shift_TE: float  # GHz
    max_shift_TM: float  # GHz
    fsr_ghz: float
    fsr_fraction: float
    fsr_fraction_tm: float


@dataclass(frozen=True)
class FullFsrStrain:
    """Strain needed to tune a mode across one FSR (Δν/ν = 1/l)."""
    relative_shift: float
    axial_strain: float
    equatorial_deformation: float


@dataclass(frozen=True)
class TuningPoint:
    voltage: float
    shift_TE: float  # GHz
    shift_TM: float  # GHz


def tm_ratio_correction(
    assembly: ActuatorAssembly,
    geometry: Optional[SpheroidGeometry] = None,
) -> float:
    """
    TM correction of a device: from the geometry, else the assembly's stem
    geometry, else 1.0 (cylinder model).

    Raises:
        DomainError: If the geometry and the stem geometry disagree
    """
    stem = assembly.stem_geometry
    if geometry is not None and stem is not None \
            and geometry.tm_ratio_correction != stem.tm_ratio_correction:
        raise DomainError(
            f"tm_ratio_correction {geometry.tm_ratio_correction} of the device differs from "
            f"{stem.tm_ratio_correction} of the actuator's stem geometry"
        )
    source = geometry if geometry is not None else stem
    return source.tm_ratio_correction if source is not None else 1.0


def strain_per_volt(assembly: ActuatorAssembly) -> float:
    """Axial strain of the gauge section per volt."""
    return (assembly.pzt_displacement_per_volt * assembly.compliance_fraction_sphere
            / assembly.gauge_length)


def gauge_elongation(assembly: ActuatorAssembly, voltage: float) -> float:
    """Elongation of the gauge section in µm."""
    return voltage * assembly.pzt_displacement_per_volt * assembly.compliance_fraction_sphere


def _strain_optic_combination(material: OpticalMaterial, polarization: Polarization) -> float:
    """Effective Δ(1/N²) per unit axial strain seen by a mode."""
    sigma = material.poisson_ratio
    p11, p12 = material.photoelastic_p11, material.photoelastic_p12
    axial = p11 - 2 * sigma * p12
    transverse = p12 - sigma * (p11 + p12)
    if polarization == Polarization.TM:
        return transverse
    return axial + Config.CYLINDER_TE_TRANSVERSE_FRACTION * (transverse - axial)


def relative_shift_per_strain(
    material: OpticalMaterial,
    polarization: Polarization,
    wavelength: float = Config.REFERENCE_WAVELENGTH_UM,
    tm_ratio_correction: float = 1.0,
) -> float:
    """Δν/ν per unit axial strain."""
    polarization = Polarization(polarization)
    n = refractive_index(material, wavelength)
    cylinder = material.poisson_ratio + 0.5 * n ** 2 * _strain_optic_combination(material, polarization)
    if polarization == Polarization.TM:
        return tm_ratio_correction * cylinder
    return cylinder


def photoelastic_index_shift(
    material: OpticalMaterial,
    epsilon_z: float,
    polarization: Polarization,
    wavelength: float = Config.REFERENCE_WAVELENGTH_UM,
    tm_ratio_correction: float = 1.0,
) -> float:
    """
    ΔN/N for an axial strain with transverse strains -σ·ε_z.

    Fields along the strain axis see p11 - 2σp12, transverse fields see
    p12 - σ(p11 + p12); TM is transverse, TE mixes in a small transverse
    fraction. With tm_ratio_correction != 1 the TM value is the one that
    scales the total TM frequency shift by that factor.

    Raises:
        DomainError: If |ε_z| exceeds the plastic onset strain
    """
    polarization = Polarization(polarization)
    if abs(epsilon_z) > material.plastic_onset_strain:
        raise DomainError(
            f"Strain {epsilon_z:.3g} beyond plastic onset {material.plastic_onset_strain:.3g}"
        )
    sigma_strain = material.poisson_ratio * epsilon_z
    total = relative_shift_per_strain(material, polarization, wavelength, tm_ratio_correction)
    return sigma_strain - total * epsilon_z


def _strain_state(
    material: OpticalMaterial,
    epsilon_z: float,
    tm_ratio_correction: float,
    elongation: float = 0.0,
) -> StrainState:
    return StrainState(
        axial_strain=epsilon_z,
        equatorial_radius_strain=-material.poisson_ratio * epsilon_z,
        index_strain_TE=photoelastic_index_shift(material, epsilon_z, Polarization.TE),
        index_strain_TM=photoelastic_index_shift(
            material, epsilon_z, Polarization.TM, tm_ratio_correction=tm_ratio_correction
        ),
        gauge_elongation=elongation,
    )


def strain_from_voltage(
    assembly: ActuatorAssembly,
    voltage: float,
    material: OpticalMaterial = FUSED_SILICA,
    geometry: Optional[SpheroidGeometry] = None,
) -> StrainState:
    """
    Strain state of the gauge section at a PZT voltage.

    Args:
        assembly: Actuator description
        voltage: PZT voltage in V
        material: Glass of the sphere and stems
        geometry: Device geometry; its tm_ratio_correction applies, see
            tm_ratio_correction

    Returns:
        StrainState with index strains evaluated at the reference line

    Raises:
        DomainError: If the voltage is outside the actuator range, the
            strain passes the plastic onset or the TM corrections disagree
    """
    v_min, v_max = assembly.voltage_range
    if not v_min <= voltage <= v_max:
        raise DomainError(f"Voltage {voltage} V outside actuator range [{v_min}, {v_max}] V")
    if voltage == 0:
        return StrainState.zero()
    epsilon_z = voltage * strain_per_volt(assembly)
    return _strain_state(material, epsilon_z, tm_ratio_correction(assembly, geometry),
                         gauge_elongation(assembly, voltage))


def tuned_frequency_shift(mode_line: ModeLine, strain: StrainState) -> float:
    """Δν = ν(-Δa/a - ΔN/N) in GHz."""
    relative = -strain.equatorial_radius_strain - strain.index_strain(mode_line.mode.polarization)
    return mode_line.frequency * relative * 1e3


def thermal_shift(mode_line: ModeLine, thermal: ThermalState, material: OpticalMaterial) -> float:
    """
    Δν = -ν(α + (1/N)dN/dT)ΔT in GHz.

    Raises:
        DomainError: If |ΔT| exceeds Config.MAX_THERMAL_EXCURSION_K
    """
    if not abs(thermal.delta_T) <= Config.MAX_THERMAL_EXCURSION_K:
        raise DomainError(
            f"Temperature excursion {thermal.delta_T} K beyond ±{Config.MAX_THERMAL_EXCURSION_K} K"
        )
    n = refractive_index(material, Config.SPEED_OF_LIGHT / mode_line.frequency)
    coefficient = -mode_line.frequency * (material.thermal_expansion + material.dn_dT / n) * 1e3
    return coefficient * thermal.delta_T


def combined_shift(
    mode_line: ModeLine,
    strain: StrainState,
    thermal: ThermalState,
    material: OpticalMaterial,
) -> float:
    """Strain and thermal shifts superposed, in GHz."""
    return tuned_frequency_shift(mode_line, strain) + thermal_shift(mode_line, thermal, material)


def reference_line(
    geometry: SpheroidGeometry,
    material: OpticalMaterial,
    polarization: Polarization,
) -> ModeLine:
    """Equatorial q=1 line at the reference frequency, labelled with its nearest l."""
    polarization = Polarization(polarization)
    l = angular_number_near(geometry, material, Config.REFERENCE_FREQUENCY_THZ, 1, polarization)
    return ModeLine(
        mode=ModeId(1, l, l, polarization),
        frequency=Config.REFERENCE_FREQUENCY_THZ,
        loaded_Q=Config.DEFAULT_LOADED_Q,
        dip_depth=Config.DEFAULT_DIP_DEPTH,
    )


def tuning_slope(
    geometry: SpheroidGeometry,
    material: OpticalMaterial,
    assembly: ActuatorAssembly,
    polarization: Polarization,
) -> float:
    """
    Frequency shift per volt of the reference line.

    Returns:
        Slope in GHz/V
    """
    line = reference_line(geometry, material, polarization)
    state = _strain_state(material, strain_per_volt(assembly),
                          tm_ratio_correction(assembly, geometry))
    return tuned_frequency_shift(line, state)


def tuning_curve(
    geometry: SpheroidGeometry,
    material: OpticalMaterial,
    assembly: ActuatorAssembly,
    voltages: Sequence[float],
) -> List[TuningPoint]:
    """
    TE and TM shifts of the reference lines over a voltage grid.

    Raises:
        DomainError: Empty grid, or a voltage outside the actuator range
    """
    if len(voltages) == 0:
        raise DomainError("Voltage grid is empty")
    te_line = reference_line(geometry, material, Polarization.TE)
    tm_line = reference_line(geometry, material, Polarization.TM)
    v_min, v_max = assembly.voltage_range
    correction = tm_ratio_correction(assembly, geometry)
    points = []
    for voltage in voltages:
        if not v_min <= voltage <= v_max:
            raise DomainError(f"Voltage {voltage} V outside actuator range [{v_min}, {v_max}] V")
        state = (StrainState.zero() if voltage == 0 else
                 _strain_state(material, voltage * strain_per_volt(assembly), correction))
        points.append(TuningPoint(
            voltage=float(voltage),
            shift_TE=tuned_frequency_shift(te_line, state),
            shift_TM=tuned_frequency_shift(tm_line, state),
        ))
    return points


def elastic_budget(
    geometry: SpheroidGeometry,
    material: OpticalMaterial,
    assembly: ActuatorAssembly,
) -> ElasticBudget:
    """
    Largest stretching voltage that keeps ε_z within the elastic limit.

    Only V >= 0 stretches the stems, so an actuator range with no positive
    part has a zero budget.
    """
    fsr = free_spectral_range(geometry, material, Config.REFERENCE_WAVELENGTH_UM)
    v_max = assembly.voltage_range[1]
    if v_max <= 0:
        return ElasticBudget(0.0, 0.0, 0.0, 0.0, fsr, 0.0, 0.0)

    per_volt = strain_per_volt(assembly)
    max_voltage = min(v_max, material.elastic_limit_strain / per_volt)
    shift_te = tuning_slope(geometry, material, assembly, Polarization.TE) * max_voltage
    shift_tm = tuning_slope(geometry, material, assembly, Polarization.TM) * max_voltage
    budget = ElasticBudget(
        max_voltage=max_voltage,
        max_strain=max_voltage * per_volt,
        max_shift_TE=shift_te,
        max_shift_TM=shift_tm,
        fsr_ghz=fsr,
        fsr_fraction=shift_te / fsr,
        fsr_fraction_tm=shift_tm / fsr,
    )
    logger.info("Elastic budget: %.2f V, strain %.3g, TE %.1f GHz (%.2f FSR)",
                budget.max_voltage, budget.max_strain, shift_te, budget.fsr_fraction)
    return budget


def strain_required_for_full_fsr(
    geometry: SpheroidGeometry,
    material: OpticalMaterial,
    mode: ModeId,
) -> FullFsrStrain:
    """
    Axial strain that shifts a TE mode by Δν/ν = 1/l.

    Evaluated at the equatorial mode of the same (q, l), so the result
    does not depend on m or on any actuator.

    Raises:
        DomainError: If l is below the asymptotic validity floor
    """
    if mode.angular_l < Config.MIN_ANGULAR_L:
        raise DomainError(f"l = {mode.angular_l} is below the asymptotic validity floor")
    frequency = sphere_frequency(geometry.equatorial_radius_a, material, mode.radial_order_q,
                                  mode.angular_l, Polarization.TE)
    wavelength = Config.SPEED_OF_LIGHT / frequency
    relative = 1.0 / mode.angular_l
    axial = relative / relative_shift_per_strain(material, Polarization.TE, wavelength)
    return FullFsrStrain(
        relative_shift=relative,
        axial_strain=axial,
        equatorial_deformation=material.poisson_ratio * axial,
    )
