"""
Search strategies for assigning quantum numbers to observed dips.

Dips are labelled with (q=1, l, m, polarization) by matching the pairwise
frequency intervals of the observed dips against those of the spheroid
model, searching jointly over labels, radius and ellipticity.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares

from config import Config
from src.errors import DomainError
from src.materials import OpticalMaterial
from src.modes import (
    ModeId,
    Polarization,
    SpheroidGeometry,
    angular_number_near,
    equatorial_factor,
    free_spectral_range,
    sphere_frequency,
)

logger = logging.getLogger(__name__)

Label = Tuple[int, int, Polarization]  # (l, l - m, polarization)


@dataclass
class AssignmentCandidate:
    """One labelling with its refined geometry."""
    labels: Tuple[ModeId, ...]  # in dip order
    radius: float
    ellipticity: float
    objective: float  # GHz²

    @property
    def l_span(self) -> int:
        ls = [mode.angular_l for mode in self.labels]
        return max(ls) - min(ls)

    @property
    def total_l_minus_m(self) -> int:
        return sum(mode.angular_l - mode.azimuthal_m for mode in self.labels)


@dataclass
class ModeAssignment:
    """Result of a mode assignment."""
    labels: Dict[int, ModeId]  # dip index -> mode
    fitted_radius: float  # µm
    fitted_ellipticity: float
    objective_value: float  # GHz², sum of squared interval residuals
    rms_residual: float  # GHz per interval
    assigned: bool = True
    model_frequencies: Dict[int, float] = field(default_factory=dict)  # THz
    residuals: Dict[int, float] = field(default_factory=dict)  # GHz, offset removed
    candidates: List[AssignmentCandidate] = field(default_factory=list)

    def __str__(self) -> str:
        status = "assigned" if self.assigned else "UNASSIGNED"
        lines = [f"Mode assignment ({status}): a = {self.fitted_radius:.3f} µm, "
                 f"ε = {self.fitted_ellipticity:.3f}, rms = {self.rms_residual:.2f} GHz"]
        for index in sorted(self.labels):
            lines.append(f"  dip {index}: {self.labels[index]}")
        return "\n".join(lines)


class AssignmentStrategy(ABC):
    """Abstract base class for assignment strategies."""

    @abstractmethod
    def assign(
        self,
        dip_centers: Sequence[float],
        geometry_prior: SpheroidGeometry,
        material: OpticalMaterial,
    ) -> ModeAssignment:
        """
        Label dips with quantum numbers.

        Args:
            dip_centers: Dip centres in THz
            geometry_prior: Geometry the search is centred on
            material: Resonator glass

        Returns:
            ModeAssignment with labels and fitted geometry
        """
        pass


class WideToNarrowAssignment(AssignmentStrategy):
    """
    Wide-to-narrow assignment strategy.

    This strategy works in phases:
    1. Wide scan: grid over radius and ellipticity; at each point every
       labelling that is optimal for some common frequency offset is found
       exactly, by order-preserving matching swept over the offset
    2. Narrow refinement: bounded least squares of (radius, ellipticity) for
       the most promising labellings, then a fresh matching at each refined
       geometry until no new labelling turns up
    3. Ranking: lowest objective, with near-ties broken by l-span, then
       total l - m, then ModeId order
    4. Re-anchoring: shift l so the absolute frequencies agree at the fitted radius
    """

    def __init__(
        self,
        max_l_minus_m: int = Config.ASSIGN_MAX_L_MINUS_M,
        radius_span: float = Config.ASSIGN_RADIUS_SPAN,
        ellipticity_range: Tuple[float, float] = Config.ASSIGN_ELLIPTICITY_RANGE,
        max_rms_ghz: float = Config.ASSIGN_MAX_RMS_GHZ,
    ):
        """
        Initialize the wide-to-narrow assignment strategy.

        Args:
            max_l_minus_m: Largest l - m in the label set
            radius_span: Relative radius range searched around the prior
            ellipticity_range: Bounds of the ellipticity search
            max_rms_ghz: Acceptance threshold on the rms interval residual
        """
        self.max_l_minus_m = max_l_minus_m
        self.radius_span = radius_span
        self.ellipticity_range = ellipticity_range
        self.max_rms_ghz = max_rms_ghz

    def _label_set(self, anchor_l: int, fsr_count: int) -> List[Label]:
        labels = []
        for l in range(anchor_l - 2, anchor_l + fsr_count + 2):
            for d in range(self.max_l_minus_m + 1):
                if l < Config.MIN_ANGULAR_L or d > l:
                    continue
                for polarization in (Polarization.TE, Polarization.TM):
                    labels.append((l, d, polarization))
        return labels

    @staticmethod
    def _pattern(labels: Sequence[Label]) -> Tuple:
        base = min(l for l, _, _ in labels)
        return tuple((l - base, d, p.value) for l, d, p in labels)

    @staticmethod
    def _objective(observed: np.ndarray, model: np.ndarray) -> float:
        """Sum over pairs of squared interval residuals, via the residual variance."""
        residual = observed - model
        return float(len(residual) * np.sum((residual - residual.mean()) ** 2))

    def _model(self, labels: Sequence[Label], radius: float, ellipticity: float,
               material: OpticalMaterial, hint: float) -> np.ndarray:
        """Model frequencies (THz) of labels."""
        sphere: Dict[Tuple[int, Polarization], float] = {}
        for l, _, p in labels:
            if (l, p) not in sphere:
                sphere[(l, p)] = sphere_frequency(radius, material, 1, l, p, hint)
        return np.array([sphere[(l, p)] * equatorial_factor(ellipticity, l, l - d)
                         for l, d, p in labels])

    @staticmethod
    def _match(x_ghz: np.ndarray, model: np.ndarray, offset: float) -> np.ndarray:
        """
        Cheapest order-preserving matching of sorted dips to sorted model lines.

        The squared cost of x - model - offset is convex, so some optimal
        one-to-one matching preserves order; dynamic programming finds it.
        Equal costs go to the lower model index.
        """
        cost = (x_ghz[:, None] - model[None, :] - offset) ** 2
        rows = [cost[0]]
        for i in range(1, len(x_ghz)):
            best_before = np.minimum.accumulate(rows[-1])
            rows.append(cost[i] + np.concatenate(([np.inf], best_before[:-1])))
        chosen = np.empty(len(x_ghz), dtype=int)
        j = int(np.argmin(rows[-1]))
        chosen[-1] = j
        for i in range(len(x_ghz) - 2, -1, -1):
            j = int(np.argmin(rows[i][:j]))
            chosen[i] = j
        return chosen

    def _envelope(self, x_ghz: np.ndarray, model: np.ndarray) -> List[np.ndarray]:
        """
        Every matching that is optimal for some common offset.

        For a fixed matching the cost is n·c² - 2c·Σr + Σr² in the offset c,
        so the optimum over all matchings is a lower envelope of lines once
        n·c² is dropped. The envelope is traced exactly by matching at the
        ends of the offset range and at every crossing point.
        """
        n = len(x_ghz)

        def line(chosen: np.ndarray) -> Tuple[float, float]:
            r = x_ghz - model[chosen]
            return float(np.sum(r * r)), float(np.sum(r))

        lo = float(x_ghz[0] - model[-1])
        hi = float(x_ghz[-1] - model[0])
        first = self._match(x_ghz, model, lo)
        last = self._match(x_ghz, model, hi)
        found = {tuple(first.tolist()): first, tuple(last.tolist()): last}
        stack = [(lo, first, hi, last)]
        while stack:
            c_lo, s_lo, c_hi, s_hi = stack.pop()
            if np.array_equal(s_lo, s_hi):
                continue
            a_lo, b_lo = line(s_lo)
            a_hi, b_hi = line(s_hi)
            if b_lo == b_hi:
                continue
            cross = (a_lo - a_hi) / (2 * (b_lo - b_hi))
            if not c_lo < cross < c_hi:
                continue
            middle = self._match(x_ghz, model, cross)
            a_mid, b_mid = line(middle)
            if a_mid - 2 * cross * b_mid < a_lo - 2 * cross * b_lo - 1e-9 * (1.0 + abs(a_lo)):
                found[tuple(middle.tolist())] = middle
                stack.append((c_lo, s_lo, cross, middle))
                stack.append((cross, middle, c_hi, s_hi))
        logger.debug("Matching envelope: %d labellings for %d dips", len(found), n)
        return list(found.values())

    def _labellings(self, x_ghz: np.ndarray, model: np.ndarray,
                    labels: List[Label]) -> List[Tuple[float, Tuple[Label, ...]]]:
        """Envelope labellings at one geometry with their objectives, best first."""
        order = np.argsort(model, kind="stable")
        result = []
        for chosen in self._envelope(x_ghz, model[order]):
            index = order[chosen]
            result.append((self._objective(x_ghz, model[index]),
                           tuple(labels[c] for c in index)))
        result.sort(key=lambda item: (item[0], self._pattern(item[1])))
        return result

    def _wide_scan(self, x_ghz: np.ndarray, x0: float, prior: SpheroidGeometry,
                   material: OpticalMaterial, labels: List[Label],
                   hint: float) -> Dict[Tuple, Tuple[float, float, float, Tuple[Label, ...]]]:
        l_arr = np.array([l for l, _, _ in labels], dtype=float)
        d_arr = np.array([d for _, d, _ in labels], dtype=float)
        shape = 0.5 * (l_arr ** 2 - (l_arr - d_arr) ** 2) / (l_arr * (l_arr + 1))
        radii = prior.equatorial_radius_a * np.linspace(
            1 - self.radius_span, 1 + self.radius_span, Config.ASSIGN_RADIUS_STEPS)
        ellipticities = np.linspace(*self.ellipticity_range, Config.ASSIGN_ELLIPTICITY_STEPS)

        found: Dict[Tuple, Tuple[float, float, float, Tuple[Label, ...]]] = {}
        for radius in radii:
            sphere_cache = {}
            for l, _, p in labels:
                if (l, p) not in sphere_cache:
                    sphere_cache[(l, p)] = sphere_frequency(radius, material, 1, l, p, hint)
            sphere = np.array([sphere_cache[(l, p)] for l, _, p in labels])
            for eps in ellipticities:
                model = (sphere * (1.0 - eps * shape) - x0) * 1e3
                for value, assigned in self._labellings(x_ghz, model, labels):
                    key = self._pattern(assigned)
                    if key not in found or value < found[key][0]:
                        found[key] = (value, float(radius), float(eps), assigned)
        return found

    def _refine(self, labels: Tuple[Label, ...], radius: float, ellipticity: float,
                x_ghz: np.ndarray, prior: SpheroidGeometry, material: OpticalMaterial,
                hint: float) -> Tuple[float, float, float]:
        pairs = np.array(list(combinations(range(len(labels)), 2)))
        observed = x_ghz[pairs[:, 1]] - x_ghz[pairs[:, 0]]
        a_lo = prior.equatorial_radius_a * (1 - self.radius_span)
        a_hi = prior.equatorial_radius_a * (1 + self.radius_span)
        eps_lo, eps_hi = self.ellipticity_range

        def residuals(params: np.ndarray) -> np.ndarray:
            model = self._model(labels, params[0], params[1], material, hint) * 1e3
            return observed - (model[pairs[:, 1]] - model[pairs[:, 0]])

        x0 = [min(max(radius, a_lo), a_hi), min(max(ellipticity, eps_lo), eps_hi)]
        result = least_squares(
            residuals, x0=x0, bounds=([a_lo, eps_lo], [a_hi, eps_hi]), method="trf",
            x_scale=[0.01 * prior.equatorial_radius_a, 0.05], diff_step=1e-7,
        )
        return float(result.x[0]), float(result.x[1]), float(np.sum(result.fun ** 2))

    @staticmethod
    def _to_modes(labels: Sequence[Label]) -> Tuple[ModeId, ...]:
        return tuple(ModeId(1, l, l - d, p) for l, d, p in labels)

    def _rank(self, candidates: List[AssignmentCandidate]) -> List[AssignmentCandidate]:
        """Order by objective; near-ties go to the simpler labelling."""
        ordered = sorted(candidates, key=lambda c: (c.objective, c.labels))
        best = ordered[0].objective
        limit = best + max(Config.ASSIGN_TIE_ATOL, Config.ASSIGN_TIE_RTOL * best)
        tied = [c for c in ordered if c.objective <= limit]
        rest = [c for c in ordered if c.objective > limit]
        tied.sort(key=lambda c: (c.l_span, c.total_l_minus_m, c.labels))
        return tied + rest

    def assign(
        self,
        dip_centers: Sequence[float],
        geometry_prior: SpheroidGeometry,
        material: OpticalMaterial,
    ) -> ModeAssignment:
        """
        Execute the wide-to-narrow assignment.

        Raises:
            DomainError: Fewer than two dips, or dips spanning less than
                Config.ASSIGN_MIN_SPAN_FSR of the prior FSR
        """
        if len(dip_centers) < 2:
            raise DomainError("Mode assignment needs at least two dips")
        order = np.argsort(np.asarray(dip_centers, dtype=float), kind="stable")
        x = np.asarray(dip_centers, dtype=float)[order]
        hint = Config.SPEED_OF_LIGHT / x[0]
        fsr = free_spectral_range(geometry_prior, material, hint)
        span = (x[-1] - x[0]) * 1e3
        if span < Config.ASSIGN_MIN_SPAN_FSR * fsr:
            raise DomainError(
                f"Dips span {span:.1f} GHz, less than {Config.ASSIGN_MIN_SPAN_FSR} FSR "
                f"({fsr:.1f} GHz)"
            )
        x_ghz = (x - x[0]) * 1e3
        anchor = angular_number_near(geometry_prior, material, x[0])
        labels = self._label_set(anchor, int(math.ceil(span / fsr)))
        if len(labels) < len(x):
            raise DomainError(f"{len(x)} dips exceed the {len(labels)} labels in range")

        logger.info("Assignment wide scan: %d dips, %d labels, anchor l=%d",
                    len(x), len(labels), anchor)
        found = self._wide_scan(x_ghz, x[0], geometry_prior, material, labels, hint)

        by_objective = sorted(found.items(), key=lambda kv: (kv[1][0], kv[0]))
        n_pairs = len(x) * (len(x) - 1) / 2
        plausible = [kv for kv in by_objective
                     if kv[1][0] <= n_pairs * Config.ASSIGN_WIDE_RMS_GHZ ** 2]

        def simplicity(item):
            (value, _, _, assigned) = item[1]
            ls = [l for l, _, _ in assigned]
            return (max(ls) - min(ls), sum(d for _, d, _ in assigned), value, item[0])

        shortlist = dict(by_objective[:Config.ASSIGN_REFINE_CANDIDATES])
        shortlist.update(sorted(plausible, key=simplicity)[:Config.ASSIGN_REFINE_CANDIDATES])

        logger.info("Assignment narrow phase: refining %d labellings", len(shortlist))
        refined: Dict[Tuple, AssignmentCandidate] = {}
        pending = shortlist
        for _ in range(Config.ASSIGN_REMATCH_ROUNDS):
            geometries = []
            for key in sorted(pending):
                _, radius, eps, assigned = pending[key]
                a_fit, eps_fit, objective = self._refine(
                    assigned, radius, eps, x_ghz, geometry_prior, material, hint)
                refined[key] = AssignmentCandidate(
                    self._to_modes(assigned), a_fit, eps_fit, objective)
                geometries.append((a_fit, eps_fit))
            pending = {}
            for a_fit, eps_fit in geometries:
                model = (self._model(labels, a_fit, eps_fit, material, hint) - x[0]) * 1e3
                top = self._labellings(x_ghz, model, labels)[:Config.ASSIGN_REMATCH_KEEP]
                for value, assigned in top:
                    key = self._pattern(assigned)
                    if key not in refined and (key not in pending or value < pending[key][0]):
                        pending[key] = (value, a_fit, eps_fit, assigned)
            if not pending:
                break
            logger.debug("Re-matching at refined geometries: %d new labellings", len(pending))
        ranked = self._rank(list(refined.values()))
        best = self._reanchor(ranked[0], x, x_ghz, geometry_prior, material, hint)

        model = self._model(self._labels_of(best), best.radius, best.ellipticity, material, hint)
        residual = (x - model) * 1e3
        residual -= residual.mean()
        rms = math.sqrt(best.objective / n_pairs)
        assigned_ok = rms <= self.max_rms_ghz
        if not assigned_ok:
            logger.warning("No labelling reaches %.1f GHz rms (best %.2f GHz); unassigned",
                           self.max_rms_ghz, rms)

        return ModeAssignment(
            labels={int(order[i]): mode for i, mode in enumerate(best.labels)} if assigned_ok else {},
            fitted_radius=best.radius,
            fitted_ellipticity=best.ellipticity,
            objective_value=best.objective,
            rms_residual=rms,
            assigned=assigned_ok,
            model_frequencies={int(order[i]): float(f) for i, f in enumerate(model)},
            residuals={int(order[i]): float(r) for i, r in enumerate(residual)},
            candidates=ranked[:Config.ASSIGN_REFINE_CANDIDATES],
        )

    @staticmethod
    def _labels_of(candidate: AssignmentCandidate) -> List[Label]:
        return [(m.angular_l, m.angular_l - m.azimuthal_m, m.polarization) for m in candidate.labels]

    def _reanchor(self, candidate: AssignmentCandidate, x: np.ndarray, x_ghz: np.ndarray,
                  prior: SpheroidGeometry, material: OpticalMaterial,
                  hint: float) -> AssignmentCandidate:
        """Shift every l so the model matches the absolute dip frequencies."""
        for _ in range(3):
            labels = self._labels_of(candidate)
            model = self._model(labels, candidate.radius, candidate.ellipticity, material, hint)
            offset = float(np.mean(x - model)) * 1e3
            fitted = replace(prior, equatorial_radius_a=candidate.radius, ellipticity_eps=0.0)
            shift = int(round(offset / free_spectral_range(fitted, material, hint)))
            if shift == 0:
                break
            logger.debug("Re-anchoring labels by %+d in l", shift)
            shifted = tuple((l + shift, d, p) for l, d, p in labels)
            radius, eps, objective = self._refine(
                shifted, candidate.radius, candidate.ellipticity, x_ghz, prior, material, hint)
            candidate = AssignmentCandidate(self._to_modes(shifted), radius, eps, objective)
        return candidate


def assign_modes(
    dip_centers: Sequence[float],
    geometry_prior: SpheroidGeometry,
    material: OpticalMaterial,
    strategy: Optional[AssignmentStrategy] = None,
) -> ModeAssignment:
    """Label dips with the default wide-to-narrow strategy."""
    return (strategy or WideToNarrowAssignment()).assign(dip_centers, geometry_prior, material)
