"""
Servicio de funciones especiales: log-gamma, gamma, doble factorial, Beta
(directa y por producto infinito) y la hipergeométrica de Gauss 2F1
"""
import math
import sys
import logging
from typing import List

from config.settings import (
    SERIES_TERM_CAP,
    SERIES_REL_TARGET,
    EULER_SWITCH_Z,
    Z_MAX,
    BETA_PRODUCT_REL_TARGET,
)
from backend.errors import DomainError, ConvergenceError, GammaOverflowError
from backend.models import HypergeometricInput, SeriesEvaluation, is_non_positive_integer

logger = logging.getLogger(__name__)

# Aproximación de Lanczos con g = 7, n = 9
LANCZOS_G = 7.0
LANCZOS_COEFFICIENTS = [
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
]
HALF_LOG_TWO_PI = 0.5 * math.log(2.0 * math.pi)

# Por debajo de este valor se aplica la recurrencia antes de Lanczos
LANCZOS_SHIFT_BELOW = 1.5
EXACT_FACTORIAL_LIMIT = 171
LOG_FLOAT_MAX = math.log(sys.float_info.max)
EPS = sys.float_info.epsilon


def _check_positive(name: str, x: float):
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        raise DomainError(f"{name} debe ser un real finito, se recibió {x!r}")
    if x <= 0:
        raise DomainError(f"{name} debe ser > 0, se recibió {x}")


def _check_exponent(name: str, alpha: float):
    if isinstance(alpha, bool) or not isinstance(alpha, (int, float)) or not math.isfinite(alpha):
        raise DomainError(f"{name} debe ser un real finito, se recibió {alpha!r}")
    if alpha <= -1:
        raise DomainError(f"{name} debe ser > -1, se recibió {alpha}")


class SpecialFunctionsService:
    """Funciones especiales escalares de alta precisión"""

    def __init__(
        self,
        term_cap: int = SERIES_TERM_CAP,
        rel_target: float = SERIES_REL_TARGET,
        z_max: float = Z_MAX,
    ):
        self.term_cap = term_cap
        self.rel_target = rel_target
        self.z_max = z_max

    # ===========================================
    # GAMMA Y AFINES
    # ===========================================

    def log_gamma(self, x: float) -> float:
        """
        ln Γ(x) para x > 0

        Los enteros hasta 171 se resuelven con el factorial exacto; el resto
        con Lanczos en espacio logarítmico, desplazando los argumentos
        pequeños con ln Γ(x) = ln Γ(x + k) - ln(x (x+1) ... (x+k-1)).

        Args:
            x: Argumento positivo y finito

        Returns:
            ln Γ(x)
        """
        _check_positive("x", x)
        if float(x).is_integer() and x <= EXACT_FACTORIAL_LIMIT:
            return math.log(math.factorial(int(x) - 1))

        shift_log = 0.0
        while x < LANCZOS_SHIFT_BELOW:
            shift_log += math.log(x)
            x += 1.0
        return self._lanczos_log_gamma(x) - shift_log

    @staticmethod
    def _lanczos_log_gamma(x: float) -> float:
        z = x - 1.0
        series = LANCZOS_COEFFICIENTS[0]
        for i in range(1, len(LANCZOS_COEFFICIENTS)):
            series += LANCZOS_COEFFICIENTS[i] / (z + i)
        t = z + LANCZOS_G + 0.5
        return HALF_LOG_TWO_PI + (z + 0.5) * math.log(t) - t + math.log(series)

    def gamma(self, x: float) -> float:
        """
        Γ(x) = exp(ln Γ(x)); exacto para enteros pequeños

        Raises:
            DomainError: x <= 0 o no finito
            GammaOverflowError: Γ(x) fuera del rango de punto flotante
        """
        _check_positive("x", x)
        if float(x).is_integer() and x <= EXACT_FACTORIAL_LIMIT:
            return float(math.factorial(int(x) - 1))
        log_value = self.log_gamma(x)
        if log_value > LOG_FLOAT_MAX:
            raise GammaOverflowError(f"Γ({x}) excede el rango de punto flotante")
        return math.exp(log_value)

    def double_factorial(self, n: int) -> float:
        """
        n!! con la convención 0!! = (-1)!! = 1

        Args:
            n: Entero >= -1

        Returns:
            n (n-2) (n-4) ... como float
        """
        if isinstance(n, bool) or not isinstance(n, int):
            if isinstance(n, float) and n.is_integer():
                n = int(n)
            else:
                raise DomainError(f"n debe ser entero, se recibió {n!r}")
        if n < -1:
            raise DomainError(f"n!! no está definido para n={n}")
        try:
            return float(math.prod(range(n, 0, -2)))
        except OverflowError as e:
            raise GammaOverflowError(f"{n}!! excede el rango de punto flotante") from e

    def log_beta(self, x: float, y: float) -> float:
        """ln B(x, y)"""
        _check_positive("x", x)
        _check_positive("y", y)
        return self.log_gamma(x) + self.log_gamma(y) - self.log_gamma(x + y)

    def beta(self, x: float, y: float) -> float:
        """B(x, y) = Γ(x) Γ(y) / Γ(x + y)"""
        log_value = self.log_beta(x, y)
        if log_value > LOG_FLOAT_MAX:
            raise GammaOverflowError(f"B({x}, {y}) excede el rango de punto flotante")
        return math.exp(log_value)

    def beta_product(self, x: float, y: float, max_factors: int) -> SeriesEvaluation:
        """
        B(x, y) por el producto infinito ((x+y)/(xy)) ∏ (1 + xy/(n(x+y+n)))^-1

        Los factores omitidos se corrigen con la integral de punto medio de
        xy/(t(t+s)) sobre [N + 1/2, ∞); la cota de cola cubre el error de esa
        corrección y el término cuadrático de log(1+u), y decae como N^-3.

        Args:
            x: Primer argumento (> 0)
            y: Segundo argumento (> 0)
            max_factors: Máximo de factores a multiplicar

        Returns:
            SeriesEvaluation con el valor, factores usados y cota de cola

        Raises:
            ConvergenceError: si la cota no baja de BETA_PRODUCT_REL_TARGET
                dentro de max_factors
        """
        _check_positive("x", x)
        _check_positive("y", y)
        if isinstance(max_factors, bool) or not isinstance(max_factors, int) or max_factors < 1:
            raise DomainError(f"max_factors debe ser un entero >= 1, se recibió {max_factors!r}")

        s = x + y
        xy = x * y
        log_factors: List[float] = []
        running = 0.0
        tail_coefficient = xy / 12.0 + xy * xy / 6.0

        for n in range(1, max_factors + 1):
            log_factor = math.log1p(xy / (n * (s + n)))
            log_factors.append(log_factor)
            running += log_factor

            half_width = tail_coefficient / (2.0 * n ** 3)
            log_tail = xy * math.log1p(s / (n + 0.5)) / s - half_width
            slack = half_width + 8.0 * EPS * (1.0 + abs(running + log_tail))
            rel_bound = math.expm1(slack)
            if rel_bound <= BETA_PRODUCT_REL_TARGET:
                value = (s / xy) * math.exp(-(math.fsum(log_factors) + log_tail))
                return SeriesEvaluation(value=value, terms_used=n, tail_bound=value * rel_bound)

        raise ConvergenceError(
            f"Producto de B({x}, {y}) sin converger en {max_factors} factores"
        )

    # ===========================================
    # HIPERGEOMÉTRICA DE GAUSS
    # ===========================================

    def gauss_2f1(self, params: HypergeometricInput) -> SeriesEvaluation:
        """
        F(a, b; c; z) por serie de potencias con suma compensada

        Para z > EULER_SWITCH_Z y c - a - b > 0 se usa la transformación de
        Euler F(a,b;c;z) = (1-z)^(c-a-b) F(c-a, c-b; c; z) cuando la serie
        transformada termina, tiene todos sus términos positivos (y la
        original no) o parámetros de menor magnitud.

        Args:
            params: Parámetros (a, b, c, z) ya validados

        Returns:
            SeriesEvaluation con cota de cola geométrica certificada
        """
        a, b, c, z = params.a, params.b, params.c, params.z
        if abs(z) > self.z_max:
            raise DomainError(f"|z| = {abs(z)} excede el tope {self.z_max}")
        if z == 0.0:
            return SeriesEvaluation(value=1.0, terms_used=1, tail_bound=0.0)
        if params.terminates:
            return self._terminating_series(a, b, c, z)

        if z > EULER_SWITCH_Z and c - a - b > 0 and self._prefer_euler(a, b, c):
            prefactor = (1.0 - z) ** (c - a - b)
            transformed = HypergeometricInput(c - a, c - b, c, z)
            if transformed.terminates:
                inner = self._terminating_series(c - a, c - b, c, z)
            else:
                inner = self._power_series(c - a, c - b, c, z)
            logger.debug(f"2F1({a}, {b}; {c}; {z}) evaluada vía transformación de Euler")
            return SeriesEvaluation(
                value=prefactor * inner.value,
                terms_used=inner.terms_used,
                tail_bound=prefactor * inner.tail_bound,
            )
        return self._power_series(a, b, c, z)

    @staticmethod
    def _prefer_euler(a: float, b: float, c: float) -> bool:
        ta, tb = c - a, c - b
        if is_non_positive_integer(ta) or is_non_positive_integer(tb):
            return True
        raw_positive = a > 0 and b > 0 and c > 0
        transformed_positive = ta > 0 and tb > 0 and c > 0
        if transformed_positive and not raw_positive:
            return True
        return abs(ta) + abs(tb) < abs(a) + abs(b)

    @staticmethod
    def _terminating_series(a: float, b: float, c: float, z: float) -> SeriesEvaluation:
        degree = min(-int(p) for p in (a, b) if is_non_positive_integer(p))
        terms = [1.0]
        term = 1.0
        for n in range(degree):
            term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * z
            terms.append(term)
        return SeriesEvaluation(value=math.fsum(terms), terms_used=len(terms), tail_bound=0.0)

    def _power_series(self, a: float, b: float, c: float, z: float) -> SeriesEvaluation:
        # Cota de la razón f(k) = (a+k)(b+k)/((c+k)(k+1)):
        # f(k) - 1 = (A k + B)/((c+k)(k+1)) <= (|A| + |B|/K)/(K - |c|) para k >= K > |c|
        slope = a + b - c - 1.0
        offset = a * b - c
        threshold = max(abs(a), abs(b), abs(c))
        abs_z = abs(z)

        terms = [1.0]
        term = 1.0
        running = 1.0
        for n in range(self.term_cap):
            term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * z
            terms.append(term)
            running += term

            k = n + 1
            if k <= threshold:
                continue
            excess = max(0.0, (abs(slope) + abs(offset) / k) / (k - abs(c)))
            ratio_bound = abs_z * (1.0 + excess)
            if ratio_bound >= 1.0:
                continue
            tail = abs(term) * ratio_bound / (1.0 - ratio_bound)
            if tail <= self.rel_target * abs(running) or tail < sys.float_info.min:
                return SeriesEvaluation(value=math.fsum(terms), terms_used=len(terms), tail_bound=tail)

        raise ConvergenceError(
            f"2F1({a}, {b}; {c}; {z}) sin converger en {self.term_cap} términos"
        )

    def hypergeometric_derivative(self, params: HypergeometricInput) -> SeriesEvaluation:
        """d/dz F(a,b;c;z) = (ab/c) F(a+1, b+1; c+1; z)"""
        factor = params.a * params.b / params.c
        if factor == 0.0:
            return SeriesEvaluation(value=0.0, terms_used=1, tail_bound=0.0)
        shifted = self.gauss_2f1(HypergeometricInput(params.a + 1, params.b + 1, params.c + 1, params.z))
        return SeriesEvaluation(
            value=factor * shifted.value,
            terms_used=shifted.terms_used,
            tail_bound=abs(factor) * shifted.tail_bound,
        )

    # ===========================================
    # NÚCLEO G(z) = F(-a1/2, -a2/2; 1/2; z)
    # ===========================================

    def gpi_kernel(self, alpha1: float, alpha2: float, z: float) -> SeriesEvaluation:
        """G(z), cociente entre el momento conjunto y el producto de marginales"""
        _check_exponent("alpha1", alpha1)
        _check_exponent("alpha2", alpha2)
        return self.gauss_2f1(HypergeometricInput(-alpha1 / 2.0, -alpha2 / 2.0, 0.5, z))

    def gpi_kernel_derivative(self, alpha1: float, alpha2: float, z: float) -> float:
        """
        G'(z) en la forma transformada por Euler:
        (a1 a2 / 2) (1-z)^((a1+a2-1)/2) F((a1+1)/2, (a2+1)/2; 3/2; z)

        El último factor es estrictamente positivo en [0, 1), así que el
        signo es el de a1 a2.

        Args:
            alpha1: Primer exponente (> -1)
            alpha2: Segundo exponente (> -1)
            z: Argumento con |z| <= z_max

        Returns:
            G'(z); exactamente 0.0 si a1 a2 = 0
        """
        _check_exponent("alpha1", alpha1)
        _check_exponent("alpha2", alpha2)
        self._check_z(z)
        prefactor = alpha1 * alpha2 / 2.0
        if prefactor == 0.0:
            return 0.0
        series = self.gauss_2f1(HypergeometricInput((alpha1 + 1) / 2.0, (alpha2 + 1) / 2.0, 1.5, z))
        return prefactor * (1.0 - z) ** ((alpha1 + alpha2 - 1) / 2.0) * series.value

    def gpi_kernel_derivative_direct(self, alpha1: float, alpha2: float, z: float) -> float:
        """G'(z) sin transformar: (a1 a2 / 2) F(1 - a1/2, 1 - a2/2; 3/2; z)"""
        _check_exponent("alpha1", alpha1)
        _check_exponent("alpha2", alpha2)
        self._check_z(z)
        prefactor = alpha1 * alpha2 / 2.0
        if prefactor == 0.0:
            return 0.0
        series = self.gauss_2f1(HypergeometricInput(1 - alpha1 / 2.0, 1 - alpha2 / 2.0, 1.5, z))
        return prefactor * series.value

    def _check_z(self, z: float):
        if isinstance(z, bool) or not isinstance(z, (int, float)) or not math.isfinite(z):
            raise DomainError(f"z debe ser un real finito, se recibió {z!r}")
        if abs(z) > self.z_max:
            raise DomainError(f"|z| = {abs(z)} excede el tope {self.z_max}")


# Instancia global
special_functions = SpecialFunctionsService()
