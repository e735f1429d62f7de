"""
Servicio de verificación de desigualdades: clasifica el régimen de
exponentes, compara cocientes contra la dirección que predice cada desigualdad
(GPI, GPI opuesta, cotas 1-D), revisa el signo de G' y ejecuta barridos
"""
import math
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from config.settings import (
    DEFAULT_TOLERANCE,
    TOLERANCE_TAIL_FACTOR,
    LIBRARY_VERSION,
    RHO_MAX,
    WORKERS,
)
from backend.errors import DomainError
from backend.models import (
    Direction,
    ExponentPair,
    InequalityVerdict,
    Regime,
    SkippedRecord,
    Statement,
    SweepGrid,
    SweepReport,
    Verdict,
    VerdictRecord,
)
from backend.services.moments_service import MomentsService, moments_service

logger = logging.getLogger(__name__)

# Holgura relativa al comparar valores consecutivos de G sobre la malla
KERNEL_ROUNDING = 4 * sys.float_info.epsilon


def _check_tolerance(tolerance: float):
    if isinstance(tolerance, bool) or not isinstance(tolerance, (int, float)) or not math.isfinite(tolerance):
        raise DomainError(f"tolerance debe ser un real finito, se recibió {tolerance!r}")
    if tolerance < 0:
        raise DomainError(f"tolerance debe ser >= 0, se recibió {tolerance}")


def judge(
    statement: Statement,
    ratio: float,
    threshold: float,
    expected: Direction,
    tolerance: float,
    error_bound: float = 0.0,
    method: str = "hypergeometric",
) -> InequalityVerdict:
    """
    Arma el veredicto a partir del margen ratio - threshold

    Args:
        statement: Desigualdad certificada
        ratio: Valor calculado
        threshold: Valor de comparación
        expected: Signo del margen que predice la desigualdad
        tolerance: Ancho de la banda de igualdad
        error_bound: Cota de error propagada del cociente
        method: Origen del cociente

    Returns:
        InequalityVerdict
    """
    margin = ratio - threshold
    if abs(margin) <= tolerance:
        verdict = Verdict.EQUALITY
    elif expected is Direction.ZERO:
        verdict = Verdict.VIOLATED
    elif (margin > 0) == (expected is Direction.POSITIVE):
        verdict = Verdict.HOLDS_STRICT
    else:
        verdict = Verdict.VIOLATED

    result = InequalityVerdict(
        statement=statement,
        ratio=ratio,
        threshold=threshold,
        margin=margin,
        verdict=verdict,
        tolerance=tolerance,
        error_bound=error_bound,
        method=method,
    )
    if result.violated:
        logger.warning(
            f"Veredicto Violated en {statement.value}: ratio={ratio!r}, threshold={threshold!r}, "
            f"margin={margin!r}, tolerance={tolerance!r}"
        )
    return result


class VerificationService:
    """Certificación numérica de las desigualdades GPI"""

    def __init__(self, moments: Optional[MomentsService] = None, workers: int = WORKERS):
        self.moments = moments or moments_service
        self.workers = workers

    # ===========================================
    # RÉGIMEN
    # ===========================================

    @staticmethod
    def classify_regime(pair: ExponentPair) -> Regime:
        """Régimen de signos; OppositeSign también cubre alpha2 < 0 < alpha1"""
        if not isinstance(pair, ExponentPair):
            raise DomainError(f"Se esperaba un ExponentPair, se recibió {pair!r}")
        if pair.alpha1 == 0 or pair.alpha2 == 0:
            return Regime.DEGENERATE
        if pair.alpha1 > 0 and pair.alpha2 > 0:
            return Regime.SAME_SIGN_POSITIVE
        if pair.alpha1 < 0 and pair.alpha2 < 0:
            return Regime.SAME_SIGN_NEGATIVE
        return Regime.OPPOSITE_SIGN

    @staticmethod
    def default_tolerance(tail_bound: float) -> float:
        """max(1e-9, 10 x cota de cola propagada)"""
        return max(DEFAULT_TOLERANCE, TOLERANCE_TAIL_FACTOR * tail_bound)

    # ===========================================
    # CASO BIVARIADO
    # ===========================================

    def check_bivariate(
        self,
        pair: ExponentPair,
        rho: float,
        tolerance: Optional[float] = None,
    ) -> InequalityVerdict:
        """
        Compara G(rho^2) contra 1 en la dirección de la desigualdad que aplica

        Args:
            pair: Exponentes
            rho: Correlación (|rho| <= 0.9975)
            tolerance: Banda de igualdad; por defecto max(1e-9, 10 x cola)

        Returns:
            InequalityVerdict; Violated es un valor de retorno, no un error
        """
        regime = self.classify_regime(pair)
        series = self.moments.moment_ratio_series(pair, rho)

        if tolerance is None:
            tolerance = self.default_tolerance(series.tail_bound)
        _check_tolerance(tolerance)
        if tolerance == 0 or tolerance < series.tail_bound:
            raise DomainError(
                f"tolerance={tolerance} debe ser positiva y cubrir la cota de la serie ({series.tail_bound})"
            )

        if regime is Regime.OPPOSITE_SIGN:
            statement = Statement.BIVARIATE_OPPOSITE_GPI
            expected = Direction.NEGATIVE
        else:
            statement = Statement.BIVARIATE_GPI
            expected = Direction.POSITIVE
        if regime is Regime.DEGENERATE or rho == 0:
            expected = Direction.ZERO

        return judge(
            statement=statement,
            ratio=series.value,
            threshold=1.0,
            expected=expected,
            tolerance=tolerance,
            error_bound=series.tail_bound,
            method="hypergeometric",
        )

    def check_independence_equality(self, pair: ExponentPair, tolerance: Optional[float] = None) -> InequalityVerdict:
        """Caso de igualdad de ambas desigualdades: con rho = 0 el cociente es 1"""
        return self.check_bivariate(pair, 0.0, tolerance)

    # ===========================================
    # CASO 1-D
    # ===========================================

    def check_one_dim(self, alpha1: float, alpha2: float, tolerance: float = DEFAULT_TOLERANCE) -> InequalityVerdict:
        """
        Compara el cociente de Betas contra (a1+1)(a2+1)/(a1+a2+1)

        Desigualdad estricta < (OneDimUpper) con signos opuestos y > (OneDimLower)
        con signos iguales; un exponente nulo da igualdad.
        """
        _check_tolerance(tolerance)
        if tolerance == 0:
            raise DomainError("tolerance debe ser > 0")
        pair = ExponentPair(alpha1, alpha2)
        ratio = self.moments.one_dim_ratio(pair.alpha1, pair.alpha2)
        threshold = (pair.alpha1 + 1) * (pair.alpha2 + 1) / (pair.alpha1 + pair.alpha2 + 1)
        regime = self.classify_regime(pair)

        if regime is Regime.OPPOSITE_SIGN:
            statement, expected = Statement.ONE_DIM_UPPER, Direction.NEGATIVE
        elif regime is Regime.DEGENERATE:
            statement, expected = Statement.ONE_DIM_LOWER, Direction.ZERO
        else:
            statement, expected = Statement.ONE_DIM_LOWER, Direction.POSITIVE

        return judge(
            statement=statement,
            ratio=ratio,
            threshold=threshold,
            expected=expected,
            tolerance=tolerance,
            error_bound=0.0,
            method="beta_ratio",
        )

    @staticmethod
    def algebraic_threshold_check(alpha1: float, alpha2: float) -> Tuple[int, bool, bool]:
        """
        Identidad (a1+a2+1) - (a1+1)(a2+1) = -a1 a2 en aritmética racional exacta

        Returns:
            (signo de -a1 a2, dirección de signos opuestos confirmada,
             dirección de signos iguales confirmada)
        """
        pair = ExponentPair(alpha1, alpha2)
        a1, a2 = Fraction(pair.alpha1), Fraction(pair.alpha2)
        # ((a1+a2+1)/2)(1/2) - ((a1+1)/2)((a2+1)/2)
        difference = (a1 + a2 + 1) / 4 - (a1 + 1) * (a2 + 1) / 4
        if difference != -a1 * a2 / 4:
            raise ArithmeticError("La identidad algebraica del umbral no se cumple")
        sign = (difference > 0) - (difference < 0)
        return sign, sign > 0, sign < 0

    @staticmethod
    def one_dim_product_comparison(alpha1: float, alpha2: float) -> float:
        """((a1+a2+1)/2)(1/2) - ((a1+1)/2)((a2+1)/2) en punto flotante"""
        pair = ExponentPair(alpha1, alpha2)
        return (pair.alpha1 + pair.alpha2 + 1) / 4.0 - (pair.alpha1 + 1) * (pair.alpha2 + 1) / 4.0

    # ===========================================
    # MONOTONÍA DE G
    # ===========================================

    def check_monotonicity(
        self,
        pair: ExponentPair,
        z_grid: Sequence[float],
        tolerance: float = 0.0,
    ) -> InequalityVerdict:
        """
        Signo de G'(z) sobre la malla y monotonía de G en la misma dirección

        ratio es el valor de G' más cercano a violar la desigualdad (el máximo
        si se espera decreciente, el mínimo si creciente) y threshold = 0.

        Args:
            pair: Exponentes
            z_grid: Puntos en [0, 0.9]
            tolerance: Banda de igualdad para el margen

        Returns:
            InequalityVerdict; Equality para el régimen degenerado
        """
        _check_tolerance(tolerance)
        grid = sorted(float(z) for z in z_grid)
        if not grid:
            raise DomainError("z_grid no puede estar vacía")
        if grid[0] < 0 or grid[-1] > 0.9:
            raise DomainError(f"z_grid debe estar en [0, 0.9], se recibió [{grid[0]}, {grid[-1]}]")

        regime = self.classify_regime(pair)
        if regime is Regime.DEGENERATE:
            return judge(Statement.MONOTONE_INCREASING, 0.0, 0.0, Direction.ZERO, tolerance, method="derivative")

        derivatives = [self.moments.special.gpi_kernel_derivative(pair.alpha1, pair.alpha2, z) for z in grid]
        if regime is Regime.OPPOSITE_SIGN:
            statement, expected = Statement.MONOTONE_DECREASING, Direction.NEGATIVE
            extreme = max(derivatives)
        else:
            statement, expected = Statement.MONOTONE_INCREASING, Direction.POSITIVE
            extreme = min(derivatives)

        verdict = judge(statement, extreme, 0.0, expected, tolerance, method="derivative")

        # G sobre la malla debe moverse en la misma dirección que G'; un empate
        # dentro del redondeo entre puntos muy cercanos no cuenta como retroceso
        kernel = [self.moments.special.gpi_kernel(pair.alpha1, pair.alpha2, z).value for z in grid]
        backwards = [
            (k1 - k0) * expected.value < -max(tolerance, KERNEL_ROUNDING * max(abs(k0), abs(k1)))
            for z0, z1, k0, k1 in zip(grid, grid[1:], kernel, kernel[1:])
            if z1 > z0
        ]
        if verdict.verdict is Verdict.HOLDS_STRICT and any(backwards):
            logger.warning(f"G no es monótona en la dirección de G' para {pair}")
            return InequalityVerdict(
                statement=verdict.statement,
                ratio=verdict.ratio,
                threshold=verdict.threshold,
                margin=verdict.margin,
                verdict=Verdict.VIOLATED,
                tolerance=verdict.tolerance,
                error_bound=verdict.error_bound,
                method=verdict.method,
            )
        return verdict

    # ===========================================
    # BARRIDOS
    # ===========================================

    def sweep(self, grid: SweepGrid, tolerance: Optional[float] = None, workers: Optional[int] = None) -> SweepReport:
        """
        Ejecuta check_bivariate sobre alpha1 x alpha2 x rho

        Las combinaciones fuera de dominio se registran como omitidas con su
        motivo. El orden de los registros es el de iteración de la malla
        aunque la evaluación sea concurrente.

        Args:
            grid: Malla de barrido
            tolerance: Banda de igualdad fija; None usa la de cada punto
            workers: Hilos de evaluación (por defecto GPI_WORKERS)

        Returns:
            SweepReport con registros, omisiones, metadatos y conteos
        """
        if tolerance is not None:
            _check_tolerance(tolerance)
        workers = workers or self.workers

        combinations: List[Tuple[float, float, float]] = [
            (alpha1, alpha2, rho)
            for alpha1 in grid.alpha1_values
            for alpha2 in grid.alpha2_values
            for rho in grid.rho_values
        ]
        logger.info(f"Barrido iniciado: {len(combinations)} combinaciones, {workers} hilo(s)")

        def evaluate(combination):
            alpha1, alpha2, rho = combination
            inputs = {"alpha1": alpha1, "alpha2": alpha2, "rho": rho}
            reason = self._skip_reason(alpha1, alpha2, rho)
            if reason:
                return SkippedRecord(inputs=inputs, reason=reason)
            try:
                verdict = self.check_bivariate(ExponentPair(alpha1, alpha2), rho, tolerance)
            except DomainError as e:
                return SkippedRecord(inputs=inputs, reason=str(e))
            return VerdictRecord(inputs=inputs, verdict=verdict)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as executor:
                results = list(executor.map(evaluate, combinations))
        else:
            results = [evaluate(combination) for combination in combinations]

        records = [r for r in results if isinstance(r, VerdictRecord)]
        skipped = [r for r in results if isinstance(r, SkippedRecord)]
        for skip in skipped:
            logger.warning(f"Combinación omitida {skip.inputs}: {skip.reason}")

        report = SweepReport(
            records=records,
            skipped=skipped,
            metadata={
                "tolerance": DEFAULT_TOLERANCE if tolerance is None else tolerance,
                "tolerance_mode": "auto" if tolerance is None else "fixed",
                "timestamp": datetime.now(timezone.utc).isoformat(),
                "library_version": LIBRARY_VERSION,
                "series_caps": {
                    "term_cap": self.moments.special.term_cap,
                    "z_max": self.moments.special.z_max,
                    "rel_target": self.moments.special.rel_target,
                },
            },
            counts=self._count(records),
        )
        logger.info(
            f"Barrido terminado: {len(records)} registros, {len(skipped)} omitidos, "
            f"{report.violations} violaciones"
        )
        return report

    @staticmethod
    def _skip_reason(alpha1: float, alpha2: float, rho: float) -> Optional[str]:
        if alpha1 <= -1:
            return f"alpha1={alpha1} <= -1: momento marginal divergente"
        if alpha2 <= -1:
            return f"alpha2={alpha2} <= -1: momento marginal divergente"
        if abs(rho) > RHO_MAX:
            return f"|rho|={abs(rho)} fuera del rango certificado (<= {RHO_MAX})"
        return None

    def _count(self, records: List[VerdictRecord]) -> Dict[str, Dict[str, int]]:
        counts: Dict[str, Dict[str, int]] = {
            regime.value: {verdict.value: 0 for verdict in Verdict} for regime in Regime
        }
        for record in records:
            pair = ExponentPair(record.inputs["alpha1"], record.inputs["alpha2"])
            counts[self.classify_regime(pair).value][record.verdict.verdict.value] += 1
        return counts


# Instancia global
verification_service = VerificationService()
