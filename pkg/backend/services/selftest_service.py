"""
Servicio de autoprueba: ejecuta el barrido por defecto, las verificaciones
1-D y de monotonía, y la batería de identidades contra los oráculos
"""
import math
import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from config.settings import (
    SELFTEST_ALPHAS,
    SELFTEST_RHOS,
    MONOTONICITY_Z_GRID,
    MC_SELFTEST_SEEDS,
    MC_SELFTEST_SAMPLES,
    MC_SIGMA_BAND,
    QUAD_SELFTEST_RHO_MAX,
    QUAD_SELFTEST_REL_TOL,
    BETA_PRODUCT_MAX_FACTORS,
)
from backend.errors import ConvergenceError
from backend.models import (
    BivariatePairSpec,
    ExponentPair,
    HypergeometricInput,
    IdentityCheck,
    SelftestReport,
    SweepGrid,
    VerdictRecord,
)
from backend.services.special_functions_service import SpecialFunctionsService, special_functions
from backend.services.moments_service import MomentsService, moments_service
from backend.services.verification_service import VerificationService, verification_service
from backend.services.oracle_service import OracleService, oracle_service

logger = logging.getLogger(__name__)

ONE_DIM_OPPOSITE = [(a1, a2) for a1 in (-0.9, -0.5, -0.1) for a2 in (0.5, 1.0, 2.0, 4.0)]
ONE_DIM_SAME = (
    [(a1, a2) for a1 in (0.5, 1.0, 2.0, 4.0) for a2 in (0.5, 1.0, 2.0, 4.0)]
    + [(a1, a2) for a1 in (-0.45, -0.3, -0.1) for a2 in (-0.45, -0.3, -0.1)]
)
DERIVATIVE_PAIRS = [
    (-0.5, 2.0), (-0.9, 0.5), (-0.1, 4.0), (-0.5, 3.0),
    (2.0, 2.0), (0.5, 1.0), (1.0, 4.0), (4.0, 4.0),
    (-0.5, -0.5), (-0.9, -0.1), (-0.3, -0.7), (3.0, -0.8),
]
DERIVATIVE_Z_GRID = [0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.9]
FD_STEP = 1e-5
EVEN_EXPONENT_ALPHAS = [-0.9, -0.5, -0.1, 0.5, 1.0, 2.0, 3.3]
EVEN_EXPONENT_RHOS = [0.1, -0.1, 0.5, -0.5, 0.9, -0.9]
ISSERLIS_RHOS = [0.0, 0.3, -0.3, 0.7, -0.7]
CONTINUITY_RHOS = [0.99, 0.995, 0.9975]
BETA_GRID = [0.1, 0.5, 1.0, 2.5, 5.0]
# Un punto con varianza finita por régimen en cada banda de |rho| (baja, media, alta)
MC_POINTS = [
    (1.0, 1.0, 0.1),
    (2.0, 2.0, 0.5),
    (1.0, 4.0, -0.5),
    (0.5, 0.5, 0.9),
    (0.5, -0.4, -0.1),
    (-0.4, 1.0, 0.3),
    (-0.1, 2.0, 0.9),
    (-0.4, -0.1, 0.1),
    (-0.3, -0.2, -0.5),
    (-0.2, -0.1, 0.9),
]
THRESHOLD_SAMPLES = 1000


def relative_gap(observed: float, expected: float) -> float:
    """|observed - expected| / |expected| (absoluto si expected = 0)"""
    scale = abs(expected) if expected != 0 else 1.0
    return abs(observed - expected) / scale


class SelftestService:
    """Orquesta la batería completa de verificaciones"""

    def __init__(
        self,
        special: Optional[SpecialFunctionsService] = None,
        moments: Optional[MomentsService] = None,
        verification: Optional[VerificationService] = None,
        oracle: Optional[OracleService] = None,
    ):
        self.special = special or special_functions
        self.moments = moments or moments_service
        self.verification = verification or verification_service
        self.oracle = oracle or oracle_service

    def run(
        self,
        seed: int = 0,
        samples: int = MC_SELFTEST_SAMPLES,
        tolerance: Optional[float] = None,
        include_oracles: bool = True,
        workers: Optional[int] = None,
    ) -> SelftestReport:
        """
        Ejecuta la autoprueba completa

        Args:
            seed: Semilla base de Monte Carlo (la semilla i es seed + i)
            samples: Muestras por corrida de Monte Carlo
            tolerance: Banda de igualdad del barrido (None = automática)
            include_oracles: Si se corren cuadratura y Monte Carlo
            workers: Hilos para barrido y Monte Carlo

        Returns:
            SelftestReport
        """
        logger.info("Autoprueba iniciada")
        grid = SweepGrid(list(SELFTEST_ALPHAS), list(SELFTEST_ALPHAS), list(SELFTEST_RHOS))
        sweep = self.verification.sweep(grid, tolerance=tolerance, workers=workers)

        verdicts = self._one_dim_verdicts() + self._monotonicity_verdicts()

        identities = [
            self._check_even_exponent_consistency(),
            *self._check_terminating_anchors(),
            self._check_one_dim_anchor(),
            self._check_derivative_sign(),
            self._check_derivative_finite_difference(),
            self._check_derivative_forms(),
            self._check_euler_transformation(),
            self._check_beta_product(),
            self._check_gamma_recurrence(),
            self._check_isserlis_ratio(),
            self._check_isserlis_joint_moment(),
            self._check_rho_one_continuity(),
            self._check_threshold_algebra(seed),
        ]
        if include_oracles:
            identities.append(self._check_quadrature())
            identities.append(self._check_monte_carlo(seed, samples, workers))

        report = SelftestReport(sweep=sweep, verdicts=verdicts, identities=identities)
        logger.info(
            f"Autoprueba terminada: {report.violations} violaciones, "
            f"identidades fallidas: {report.failed_identities or 'ninguna'}"
        )
        return report

    # ===========================================
    # VEREDICTOS
    # ===========================================

    def _one_dim_verdicts(self) -> List[VerdictRecord]:
        records = []
        for alpha1, alpha2 in ONE_DIM_OPPOSITE + ONE_DIM_SAME:
            verdict = self.verification.check_one_dim(alpha1, alpha2, tolerance=1e-10)
            records.append(VerdictRecord(inputs={"alpha1": alpha1, "alpha2": alpha2}, verdict=verdict))
        return records

    def _monotonicity_verdicts(self) -> List[VerdictRecord]:
        records = []
        for alpha1, alpha2 in DERIVATIVE_PAIRS:
            verdict = self.verification.check_monotonicity(ExponentPair(alpha1, alpha2), MONOTONICITY_Z_GRID)
            records.append(VerdictRecord(
                inputs={"alpha1": alpha1, "alpha2": alpha2, "z_grid": list(MONOTONICITY_Z_GRID)},
                verdict=verdict,
            ))
        return records

    # ===========================================
    # IDENTIDADES
    # ===========================================

    @staticmethod
    def _worst(name: str, gaps: List[float], limit: float) -> IdentityCheck:
        return IdentityCheck(name=name, points=len(gaps), worst_gap=max(gaps) if gaps else 0.0, limit=limit)

    def _check_even_exponent_consistency(self) -> IdentityCheck:
        gaps = []
        for alpha1 in EVEN_EXPONENT_ALPHAS:
            for m in range(1, 5):
                for rho in EVEN_EXPONENT_RHOS:
                    explicit = self.moments.even_exponent_ratio(alpha1, m, rho)
                    series = self.moments.moment_ratio(ExponentPair(alpha1, 2.0 * m), rho)
                    gaps.append(relative_gap(explicit, series))
        return self._worst("even_exponent_vs_series", gaps, 1e-9)

    def _check_terminating_anchors(self) -> List[IdentityCheck]:
        opposite = abs(self.moments.moment_ratio(ExponentPair(-0.5, 2.0), 0.5) - 0.875)
        quadratic = [
            abs(self.moments.moment_ratio(ExponentPair(2.0, 2.0), rho) - (1 + 2 * rho * rho))
            for rho in (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
        ]
        quartic = abs(self.moments.moment_ratio(ExponentPair(2.0, 4.0), 0.5) - 2.0)
        return [
            IdentityCheck("anchor_opposite_terminating", 1, opposite, 1e-12),
            self._worst("anchor_isserlis_2_2", quadratic, 1e-10),
            IdentityCheck("anchor_isserlis_2_4", 1, quartic, 1e-9),
        ]

    def _check_one_dim_anchor(self) -> IdentityCheck:
        gap = abs(self.moments.one_dim_ratio(1.0, 1.0) - math.pi / 2)
        return IdentityCheck("anchor_one_dim_pi_over_2", 1, gap, 1e-11)

    def _check_derivative_sign(self) -> IdentityCheck:
        mismatches = 0
        points = 0
        for alpha1, alpha2 in DERIVATIVE_PAIRS:
            expected = math.copysign(1.0, alpha1 * alpha2)
            for z in DERIVATIVE_Z_GRID:
                derivative = self.special.gpi_kernel_derivative(alpha1, alpha2, z)
                points += 1
                if derivative == 0 or math.copysign(1.0, derivative) != expected:
                    mismatches += 1
        return IdentityCheck("derivative_sign", points, float(mismatches), 0.0)

    def _finite_difference(self, alpha1: float, alpha2: float, z: float) -> float:
        upper = self.special.gpi_kernel(alpha1, alpha2, z + FD_STEP).value
        lower = self.special.gpi_kernel(alpha1, alpha2, z - FD_STEP).value
        return (upper - lower) / (2 * FD_STEP)

    def _check_derivative_finite_difference(self) -> IdentityCheck:
        # Discrepancia normalizada por max(1e-6, 1e-4 |G'|)
        gaps = []
        for alpha1, alpha2 in DERIVATIVE_PAIRS:
            for z in DERIVATIVE_Z_GRID:
                derivative = self.special.gpi_kernel_derivative(alpha1, alpha2, z)
                allowance = max(1e-6, 1e-4 * abs(derivative))
                gaps.append(abs(derivative - self._finite_difference(alpha1, alpha2, z)) / allowance)
        return self._worst("derivative_finite_difference", gaps, 1.0)

    def _check_derivative_forms(self) -> IdentityCheck:
        gaps = []
        for alpha1, alpha2 in DERIVATIVE_PAIRS:
            for z in DERIVATIVE_Z_GRID:
                gaps.append(relative_gap(
                    self.special.gpi_kernel_derivative_direct(alpha1, alpha2, z),
                    self.special.gpi_kernel_derivative(alpha1, alpha2, z),
                ))
        return self._worst("derivative_euler_vs_direct", gaps, 1e-9)

    def _check_euler_transformation(self) -> IdentityCheck:
        families: List[Tuple[float, float, float]] = []
        for alpha1 in SELFTEST_ALPHAS:
            for alpha2 in SELFTEST_ALPHAS:
                families.append((-alpha1 / 2, -alpha2 / 2, 0.5))
                families.append(((alpha1 + 1) / 2, (alpha2 + 1) / 2, 1.5))
        gaps = []
        for a, b, c in families:
            for z in (0.0, 0.1, 0.3, 0.5, 0.7, 0.8, 0.9):
                direct = self.special.gauss_2f1(HypergeometricInput(a, b, c, z)).value
                transformed = (1 - z) ** (c - a - b) * self.special.gauss_2f1(
                    HypergeometricInput(c - a, c - b, c, z)
                ).value
                gaps.append(relative_gap(transformed, direct))
        return self._worst("euler_transformation", gaps, 1e-9)

    def _check_beta_product(self) -> IdentityCheck:
        gaps = []
        for x in BETA_GRID:
            for y in BETA_GRID:
                product = self.special.beta_product(x, y, BETA_PRODUCT_MAX_FACTORS)
                gaps.append(relative_gap(product.value, self.special.beta(x, y)))
        return self._worst("beta_product_vs_beta", gaps, 1e-8)

    def _check_gamma_recurrence(self) -> IdentityCheck:
        gaps = []
        for x in np.linspace(0.05, 50.0, 200):
            x = float(x)
            gaps.append(relative_gap(x * self.special.gamma(x), self.special.gamma(x + 1)))
        return self._worst("gamma_recurrence", gaps, 1e-12)

    def _check_isserlis_ratio(self) -> IdentityCheck:
        gaps = []
        for p in range(4):
            for q in range(4):
                normalizer = self.special.double_factorial(2 * p - 1) * self.special.double_factorial(2 * q - 1)
                for rho in ISSERLIS_RHOS:
                    wick = self.oracle.isserlis_even_moment(p, q, rho) / normalizer
                    gaps.append(relative_gap(self.moments.moment_ratio(ExponentPair(2.0 * p, 2.0 * q), rho), wick))
                    if q >= 1:
                        gaps.append(relative_gap(self.moments.even_exponent_ratio(2.0 * p, q, rho), wick))
        return self._worst("isserlis_ratio", gaps, 1e-9)

    def _check_isserlis_joint_moment(self) -> IdentityCheck:
        gaps = []
        for p in range(6):
            for q in range(6 - p):
                for rho in ISSERLIS_RHOS:
                    closed = self.moments.joint_abs_moment(
                        ExponentPair(2.0 * p, 2.0 * q), BivariatePairSpec(1.0, 1.0, rho)
                    ).value
                    gaps.append(relative_gap(closed, self.oracle.isserlis_even_moment(p, q, rho)))
        return self._worst("isserlis_joint_moment", gaps, 1e-9)

    def _check_rho_one_continuity(self) -> IdentityCheck:
        # La distancia |G(rho^2) - G(1)| debe decrecer al acercarse a rho = 1
        non_monotone = 0
        points = 0
        for alpha1 in SELFTEST_ALPHAS:
            for alpha2 in SELFTEST_ALPHAS:
                if alpha1 + alpha2 <= -1:
                    continue
                limit = self.moments.one_dim_ratio(alpha1, alpha2)
                distances = [
                    abs(self.moments.moment_ratio(ExponentPair(alpha1, alpha2), rho) - limit)
                    for rho in CONTINUITY_RHOS
                ]
                points += 1
                if not all(later < earlier for earlier, later in zip(distances, distances[1:])):
                    non_monotone += 1
        return IdentityCheck("rho_one_continuity", points, float(non_monotone), 0.0)

    def _check_threshold_algebra(self, seed: int) -> IdentityCheck:
        rng = np.random.Generator(np.random.Philox(key=seed))
        samples = rng.uniform(-0.999, 5.0, size=(THRESHOLD_SAMPLES, 2))
        mismatches = 0
        for alpha1, alpha2 in samples:
            alpha1, alpha2 = float(alpha1), float(alpha2)
            sign, _, _ = self.verification.algebraic_threshold_check(alpha1, alpha2)
            expected = -((alpha1 > 0) - (alpha1 < 0)) * ((alpha2 > 0) - (alpha2 < 0))
            if sign != expected:
                mismatches += 1
        return IdentityCheck("threshold_algebra", THRESHOLD_SAMPLES, float(mismatches), 0.0)

    # ===========================================
    # ORÁCULOS
    # ===========================================

    def _check_quadrature(self) -> IdentityCheck:
        logger.info("Autoprueba: cuadratura sobre la malla por defecto")
        cache: Dict[Tuple[float, float, float], float] = {}
        gaps = []
        for alpha1 in SELFTEST_ALPHAS:
            for alpha2 in SELFTEST_ALPHAS:
                pair = ExponentPair(alpha1, alpha2)
                for rho in SELFTEST_RHOS:
                    if abs(rho) > QUAD_SELFTEST_RHO_MAX:
                        continue
                    # La cuadratura solo depende de |rho|
                    key = (alpha1, alpha2, abs(rho))
                    if key not in cache:
                        spec = BivariatePairSpec(1.0, 1.0, abs(rho))
                        try:
                            cache[key] = self.oracle.quad_joint_moment(
                                pair, spec, rel_tol=QUAD_SELFTEST_REL_TOL / 10
                            ).value
                        except ConvergenceError as e:
                            logger.warning(f"Cuadratura sin converger en {key}: {e}")
                            cache[key] = math.inf
                    closed = self.moments.joint_abs_moment(pair, BivariatePairSpec(1.0, 1.0, rho)).value
                    gaps.append(relative_gap(cache[key], closed))
        return self._worst("quadrature_vs_closed_form", gaps, QUAD_SELFTEST_REL_TOL)

    def _check_monte_carlo(self, seed: int, samples: int, workers: Optional[int]) -> IdentityCheck:
        # Fracción de semillas fuera de la banda de 4 errores estándar, por punto
        logger.info(f"Autoprueba: Monte Carlo con {MC_SELFTEST_SEEDS} semillas por punto")
        worst = 0.0
        for alpha1, alpha2, rho in MC_POINTS:
            pair = ExponentPair(alpha1, alpha2)
            spec = BivariatePairSpec(1.0, 1.0, rho)
            closed = self.moments.joint_abs_moment(pair, spec).value
            outside = 0
            for i in range(MC_SELFTEST_SEEDS):
                estimate = self.oracle.mc_joint_moment(pair, spec, samples, (seed + i) % 2 ** 64, workers)
                if abs(estimate.mean - closed) > MC_SIGMA_BAND * estimate.std_error:
                    outside += 1
            worst = max(worst, outside / MC_SELFTEST_SEEDS)
        return IdentityCheck("monte_carlo_4_sigma", len(MC_POINTS) * MC_SELFTEST_SEEDS, worst, 0.05)


# Instancia global
selftest_service = SelftestService()
