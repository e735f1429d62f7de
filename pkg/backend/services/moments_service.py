"""
Servicio de momentos absolutos de variables gaussianas centradas y de pares
bivariados: marginales, producto de marginales, fórmula de Nabeya, cociente
hipergeométrico, cociente explícito para exponente par y cociente 1-D
"""
import math
import logging
from typing import List, Optional

from config.settings import RHO_MAX, CLOSED_FORM_REL_ERROR
from backend.errors import DomainError, GammaOverflowError
from backend.models import (
    ExponentPair,
    BivariatePairSpec,
    MomentValue,
    MomentMethod,
    SeriesEvaluation,
)
from backend.services.special_functions_service import (
    LOG_FLOAT_MAX,
    SpecialFunctionsService,
    special_functions,
)

logger = logging.getLogger(__name__)

LOG_SQRT_PI = 0.5 * math.log(math.pi)
LOG_TWO = math.log(2.0)


def _check_rho(rho: float, allow_unit: bool = False) -> float:
    if isinstance(rho, bool) or not isinstance(rho, (int, float)) or not math.isfinite(rho):
        raise DomainError(f"rho debe ser un real finito, se recibió {rho!r}")
    if allow_unit and abs(rho) == 1.0:
        return rho
    if abs(rho) > RHO_MAX:
        raise DomainError(
            f"|rho| = {abs(rho)} fuera del rango certificado de la serie (|rho| <= {RHO_MAX})"
        )
    return rho


def _checked_exp(log_value: float, what: str) -> float:
    if log_value > LOG_FLOAT_MAX:
        raise GammaOverflowError(f"{what} excede el rango de punto flotante (log = {log_value:.6g})")
    return math.exp(log_value)


def _log_sum_exp(log_terms: List[float]) -> float:
    top = max(log_terms)
    return top + math.log(math.fsum(math.exp(term - top) for term in log_terms))


def _log_even_terms(alpha1: float, m: int, log_x: float) -> List[float]:
    """
    log de C(m,j) x^j [a1+2j-1]...(a1+1) / (2j-1)!! para j = 0..m

    El coeficiente se acumula como un solo cociente para que ni el producto
    ascendente ni (2j-1)!! desborden por separado. Con a1 > -1 todos los
    factores son positivos.
    """
    terms = [0.0]
    log_binom = 0.0
    log_coef = 0.0
    for j in range(1, m + 1):
        log_binom += math.log((m - j + 1) / j)
        log_coef += math.log((alpha1 + 2 * j - 1) / (2 * j - 1))
        terms.append(log_binom + j * log_x + log_coef)
    return terms


class MomentsService:
    """Momentos absolutos gaussianos en forma cerrada"""

    def __init__(self, special: Optional[SpecialFunctionsService] = None):
        self.special = special or special_functions

    def marginal_abs_moment(self, nu: float, sigma: float = 1.0) -> MomentValue:
        """
        E[|σU|^ν] = σ^ν 2^(ν/2) Γ((ν+1)/2) / √π

        Args:
            nu: Exponente (> -1)
            sigma: Desviación estándar (> 0)

        Returns:
            MomentValue con method = closed_form
        """
        value = _checked_exp(self._log_marginal(nu, sigma), f"E[|σU|^{nu}] con σ={sigma}")
        return MomentValue(value=value, method=MomentMethod.CLOSED_FORM, error_bound=value * CLOSED_FORM_REL_ERROR)

    def _log_marginal(self, nu: float, sigma: float = 1.0) -> float:
        if isinstance(nu, bool) or not isinstance(nu, (int, float)) or not math.isfinite(nu):
            raise DomainError(f"nu debe ser un real finito, se recibió {nu!r}")
        if nu <= -1:
            raise DomainError(f"E[|U|^nu] diverge para nu={nu} <= -1")
        if isinstance(sigma, bool) or not isinstance(sigma, (int, float)) or not (sigma > 0 and math.isfinite(sigma)):
            raise DomainError(f"sigma debe ser positiva y finita, se recibió {sigma!r}")
        return (
            nu * math.log(sigma)
            + 0.5 * nu * LOG_TWO
            + self.special.log_gamma((nu + 1) / 2.0)
            - LOG_SQRT_PI
        )

    def _log_double_factorial_odd(self, m: int) -> float:
        # (2m-1)!! = 2^m Γ(m + 1/2) / √π
        return m * LOG_TWO + self.special.log_gamma(m + 0.5) - LOG_SQRT_PI

    def marginal_product(self, pair: ExponentPair, spec: BivariatePairSpec) -> MomentValue:
        """E[|X1|^a1] E[|X2|^a2]; no depende de rho"""
        log_value = self._log_marginal(pair.alpha1, spec.sigma1) + self._log_marginal(pair.alpha2, spec.sigma2)
        value = _checked_exp(log_value, f"E[|X1|^{pair.alpha1}] E[|X2|^{pair.alpha2}]")
        return MomentValue(
            value=value,
            method=MomentMethod.CLOSED_FORM,
            error_bound=2 * value * CLOSED_FORM_REL_ERROR,
        )

    def moment_ratio_series(self, pair: ExponentPair, rho: float) -> SeriesEvaluation:
        """G(rho^2) con su cota de cola"""
        _check_rho(rho)
        return self.special.gpi_kernel(pair.alpha1, pair.alpha2, rho * rho)

    def moment_ratio(self, pair: ExponentPair, rho: float) -> float:
        """
        G(rho^2) = F(-a1/2, -a2/2; 1/2; rho^2), el momento conjunto dividido
        por el producto de marginales
        """
        return self.moment_ratio_series(pair, rho).value

    def joint_abs_moment(self, pair: ExponentPair, spec: BivariatePairSpec) -> MomentValue:
        """
        E[|X1|^a1 |X2|^a2] por la fórmula de Nabeya

        Para |rho| = 1 se usa la identidad casi segura X2 = ±(σ2/σ1) X1.

        Args:
            pair: Exponentes
            spec: Varianzas y correlación

        Returns:
            MomentValue con method hypergeometric o limit_rho_one

        Raises:
            DomainError: 0.9975 < |rho| < 1, o |rho| = 1 con a1 + a2 <= -1
        """
        rho = _check_rho(spec.rho, allow_unit=True)

        if abs(rho) == 1.0:
            total = pair.alpha1 + pair.alpha2
            if total <= -1:
                raise DomainError(
                    f"Con |rho| = 1 el momento conjunto diverge (alpha1 + alpha2 = {total} <= -1)"
                )
            log_value = (
                self._log_marginal(total, 1.0)
                + pair.alpha1 * math.log(spec.sigma1)
                + pair.alpha2 * math.log(spec.sigma2)
            )
            value = _checked_exp(log_value, f"E[|X1|^{pair.alpha1} |X2|^{pair.alpha2}] con |rho| = 1")
            return MomentValue(
                value=value,
                method=MomentMethod.LIMIT_RHO_ONE,
                error_bound=value * CLOSED_FORM_REL_ERROR,
            )

        product = self.marginal_product(pair, spec)
        series = self.moment_ratio_series(pair, rho)
        value = product.value * series.value
        error_bound = (
            product.value * series.tail_bound
            + product.error_bound * abs(series.value)
        )
        return MomentValue(value=value, method=MomentMethod.HYPERGEOMETRIC, error_bound=error_bound)

    def even_exponent_ratio(self, alpha1: float, m: int, rho: float) -> float:
        """
        Cociente explícito para a2 = 2m:
        (1-ρ²)^m + Σ_j C(m,j) ρ^(2j) (1-ρ²)^(m-j) [a1+2j-1]...(a1+1) / (2j-1)!!

        Args:
            alpha1: Primer exponente (> -1)
            m: Mitad del exponente par (>= 1)
            rho: Correlación con |rho| < 1

        Returns:
            La suma finita, sin truncamiento
        """
        self._check_even_args(alpha1, m, rho)
        z = rho * rho
        if z == 0:
            return 1.0
        # Σ_j C(m,j) z^j w^(m-j) c_j = w^m Σ_j C(m,j) (z/w)^j c_j
        w = 1.0 - z
        log_terms = _log_even_terms(alpha1, m, math.log(z / w))
        return _checked_exp(m * math.log(w) + _log_sum_exp(log_terms), f"Cociente con a1={alpha1}, m={m}")

    def even_exponent_joint_moment(self, alpha1: float, m: int, rho: float) -> float:
        """
        E[|U1|^a1 |a U1 + U2|^(2m)] con a² = ρ²/(1-ρ²), U1, U2 normales
        estándar independientes
        """
        self._check_even_args(alpha1, m, rho)
        log_base = self._log_marginal(alpha1) + self._log_double_factorial_odd(m)
        if rho == 0:
            return _checked_exp(log_base, f"E[|U1|^{alpha1} |U2|^{2 * m}]")
        log_a_squared = math.log(rho * rho / (1.0 - rho * rho))
        log_sum = _log_sum_exp(_log_even_terms(alpha1, m, log_a_squared))
        return _checked_exp(log_base + log_sum, f"E[|U1|^{alpha1} |a U1 + U2|^{2 * m}]")

    def even_exponent_marginal_product(self, alpha1: float, m: int, rho: float) -> float:
        """E[|U1|^a1] E[|a U1 + U2|^(2m)] = 2^(a1/2) Γ((a1+1)/2) (1+a²)^m (2m-1)!! / √π"""
        self._check_even_args(alpha1, m, rho)
        log_value = (
            self._log_marginal(alpha1)
            - m * math.log1p(-rho * rho)
            + self._log_double_factorial_odd(m)
        )
        return _checked_exp(log_value, f"E[|U1|^{alpha1}] E[|a U1 + U2|^{2 * m}]")

    @staticmethod
    def _check_even_args(alpha1: float, m: int, rho: float):
        if isinstance(alpha1, bool) or not isinstance(alpha1, (int, float)) or not math.isfinite(alpha1) or alpha1 <= -1:
            raise DomainError(f"alpha1 debe ser > -1, se recibió {alpha1!r}")
        if isinstance(m, bool) or not isinstance(m, int) or m < 1:
            raise DomainError(f"m debe ser un entero positivo, se recibió {m!r}")
        if isinstance(rho, bool) or not isinstance(rho, (int, float)) or not math.isfinite(rho) or abs(rho) >= 1:
            raise DomainError(f"Se requiere |rho| < 1, se recibió {rho!r}")

    def one_dim_ratio(self, alpha1: float, alpha2: float) -> float:
        """
        E[|X|^(a1+a2)] / (E[|X|^a1] E[|X|^a2]) como cociente de Betas:
        B((a1+a2+1)/2, 1/2) / B((a1+1)/2, (a2+1)/2)
        """
        pair = ExponentPair(alpha1, alpha2)
        total = pair.alpha1 + pair.alpha2
        if total <= -1:
            raise DomainError(f"E[|X|^(alpha1+alpha2)] diverge (alpha1 + alpha2 = {total} <= -1)")
        log_ratio = (
            self.special.log_beta((total + 1) / 2.0, 0.5)
            - self.special.log_beta((pair.alpha1 + 1) / 2.0, (pair.alpha2 + 1) / 2.0)
        )
        return _checked_exp(log_ratio, f"Cociente 1-D con a1={alpha1}, a2={alpha2}")


# Instancia global
moments_service = MomentsService()
