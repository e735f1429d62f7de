"""
Servicio de oráculos independientes: Monte Carlo con flujos contadores
reproducibles, cuadratura adaptativa con manejo de la singularidad en el
eje y sumas de emparejamientos de Wick/Isserlis para exponentes pares
"""
import math
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from config.settings import (
    MIN_SAMPLES,
    MC_BLOCK_SIZE,
    QUAD_RHO_MAX,
    QUAD_CUTOFF,
    QUAD_LIMIT,
    QUAD_REL_TOL,
    QUAD_MIN_REL_TOL,
    ISSERLIS_MAX_ORDER,
    WORKERS,
)
from backend.errors import DomainError, ConvergenceError
from backend.models import ExponentPair, BivariatePairSpec, McEstimate, QuadratureEstimate

logger = logging.getLogger(__name__)

SEED_LIMIT = 2 ** 64
# La palabra alta del contador de Philox identifica el bloque
BLOCK_COUNTER_SHIFT = 192
INV_SQRT_TWO_PI = 1.0 / math.sqrt(2.0 * math.pi)


def all_pairings(items: Sequence[int]) -> Iterator[List[Tuple[int, int]]]:
    """
    Genera todos los emparejamientos perfectos de items

    Args:
        items: Símbolos a emparejar (cantidad par)

    Yields:
        Lista de pares (i, j)
    """
    items = list(items)
    if not items:
        yield []
        return
    first = items.pop(0)
    for i, item in enumerate(items):
        for rest in all_pairings(items[:i] + items[i + 1:]):
            yield [(first, item)] + rest


class OracleService:
    """Estimadores de referencia para validar las formas cerradas"""

    def __init__(
        self,
        block_size: int = MC_BLOCK_SIZE,
        quad_limit: int = QUAD_LIMIT,
        cutoff: float = QUAD_CUTOFF,
        workers: int = WORKERS,
    ):
        self.block_size = block_size
        self.quad_limit = quad_limit
        self.cutoff = cutoff
        self.workers = workers

    # ===========================================
    # MONTE CARLO
    # ===========================================

    def mc_joint_moment(
        self,
        pair: ExponentPair,
        spec: BivariatePairSpec,
        n: int,
        seed: int,
        workers: Optional[int] = None,
    ) -> McEstimate:
        """
        Media muestral de |X1|^a1 |X2|^a2 con X1 = σ1 U1,
        X2 = σ2 (ρ U1 + √(1-ρ²) U2)

        Cada bloque de muestras usa su propio flujo Philox con clave = seed y
        contador = índice de bloque, así que el resultado no depende del
        número de hilos.

        Args:
            pair: Exponentes
            spec: Varianzas y correlación
            n: Número de muestras (>= 1000)
            seed: Semilla de 64 bits sin signo
            workers: Hilos (por defecto GPI_WORKERS)

        Returns:
            McEstimate; variance_finite = False marca el error estándar como
            solo indicativo
        """
        if isinstance(n, bool) or not isinstance(n, int) or n < MIN_SAMPLES:
            raise DomainError(f"n debe ser un entero >= {MIN_SAMPLES}, se recibió {n!r}")
        if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < SEED_LIMIT:
            raise DomainError(f"seed debe ser un entero de 64 bits sin signo, se recibió {seed!r}")
        workers = workers or self.workers

        variance_finite = pair.alpha1 > -0.5 and pair.alpha2 > -0.5
        if abs(spec.rho) == 1.0:
            variance_finite = variance_finite and pair.alpha1 + pair.alpha2 > -0.5
        if not variance_finite:
            logger.warning(
                f"Varianza infinita para alpha=({pair.alpha1}, {pair.alpha2}): error estándar solo indicativo"
            )

        sizes = [self.block_size] * (n // self.block_size)
        if n % self.block_size:
            sizes.append(n % self.block_size)
        jobs = list(enumerate(sizes))

        def run_block(job):
            index, size = job
            return self._mc_block(pair, spec, seed, index, size)

        logger.info(f"Monte Carlo: {n} muestras en {len(jobs)} bloques, seed={seed}")
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as executor:
                blocks = list(executor.map(run_block, jobs))
        else:
            blocks = [run_block(job) for job in jobs]

        # Combinación de Chan en orden de bloque
        count, mean, m2 = 0, 0.0, 0.0
        for block_count, block_mean, block_m2 in blocks:
            total = count + block_count
            delta = block_mean - mean
            mean += delta * block_count / total
            m2 += block_m2 + delta * delta * count * block_count / total
            count = total

        std_error = math.sqrt(m2 / (count - 1)) / math.sqrt(count)
        return McEstimate(
            mean=mean,
            std_error=std_error,
            n_samples=count,
            seed=seed,
            variance_finite=variance_finite,
        )

    @staticmethod
    def _mc_block(
        pair: ExponentPair,
        spec: BivariatePairSpec,
        seed: int,
        index: int,
        size: int,
    ) -> Tuple[int, float, float]:
        bit_generator = np.random.Philox(key=seed, counter=index << BLOCK_COUNTER_SHIFT)
        rng = np.random.Generator(bit_generator)
        u1, u2 = rng.standard_normal((2, size))
        x1 = spec.sigma1 * u1
        x2 = spec.sigma2 * (spec.rho * u1 + math.sqrt(1.0 - spec.rho * spec.rho) * u2)
        values = np.abs(x1) ** pair.alpha1 * np.abs(x2) ** pair.alpha2
        block_mean = float(np.mean(values))
        block_m2 = float(np.sum((values - block_mean) ** 2))
        return size, block_mean, block_m2

    # ===========================================
    # CUADRATURA
    # ===========================================

    def quad_joint_moment(
        self,
        pair: ExponentPair,
        spec: BivariatePairSpec,
        rel_tol: float = QUAD_REL_TOL,
    ) -> QuadratureEstimate:
        """
        E[|X1|^a1 g(X1)] con g(x) = E[|N(ρx, 1-ρ²)|^a2] por cuadratura anidada

        Para exponentes negativos el lado singular [0, 1] se integra tras
        x = t^(1/(1+α)), que deja el integrando acotado. La integral externa
        se trunca en QUAD_CUTOFF desviaciones y el resto gaussiano se suma a
        la estimación de error.

        Args:
            pair: Exponentes
            spec: Varianzas y correlación (|rho| <= 0.999)
            rel_tol: Tolerancia relativa (>= 1e-10)

        Returns:
            QuadratureEstimate

        Raises:
            ConvergenceError: si se agota el tope de subdivisiones
        """
        if abs(spec.rho) > QUAD_RHO_MAX:
            raise DomainError(f"|rho| = {abs(spec.rho)} excede {QUAD_RHO_MAX} para la cuadratura")
        if isinstance(rel_tol, bool) or not isinstance(rel_tol, (int, float)) or not rel_tol >= QUAD_MIN_REL_TOL:
            raise DomainError(f"rel_tol debe ser >= {QUAD_MIN_REL_TOL}, se recibió {rel_tol!r}")

        rho = spec.rho
        s = math.sqrt(1.0 - rho * rho)
        inner_tol = rel_tol / 10.0
        inner_rel_errors: List[float] = [0.0]

        def conditional_moment(x: float) -> float:
            if pair.alpha2 == 0:
                return 1.0
            mu = abs(rho * x)
            norm = INV_SQRT_TWO_PI / s

            def density(y: float) -> float:
                return norm * (
                    math.exp(-0.5 * ((y - mu) / s) ** 2) + math.exp(-0.5 * ((y + mu) / s) ** 2)
                )

            value, error, _ = self._half_line(pair.alpha2, density, mu + self.cutoff * s, inner_tol, mu)
            if value > 0:
                inner_rel_errors[0] = max(inner_rel_errors[0], error / value)
            return value

        def outer(x: float) -> float:
            return 2.0 * INV_SQRT_TWO_PI * math.exp(-0.5 * x * x) * conditional_moment(x)

        value, error, subdivisions = self._half_line(pair.alpha1, outer, self.cutoff, rel_tol / 2.0, None)

        power = abs(pair.alpha1) + abs(pair.alpha2) + 1.0
        tail = 2.0 * math.exp(-0.5 * self.cutoff ** 2 + power * math.log(self.cutoff))
        scale = spec.sigma1 ** pair.alpha1 * spec.sigma2 ** pair.alpha2

        abs_error = error + abs(value) * inner_rel_errors[0] + tail
        logger.info(f"Cuadratura: valor={value * scale!r}, error={abs_error * scale!r}, subdivisiones={subdivisions}")
        return QuadratureEstimate(
            value=value * scale,
            abs_error_estimate=abs_error * scale,
            subdivisions=subdivisions,
        )

    def _half_line(
        self,
        alpha: float,
        weight: Callable[[float], float],
        upper: float,
        rel_tol: float,
        peak: Optional[float],
    ) -> Tuple[float, float, int]:
        """∫_0^upper x^alpha weight(x) dx, con cambio de variable si alpha < 0"""
        if alpha >= 0:
            return self._quad(lambda x: x ** alpha * weight(x), 0.0, upper, rel_tol, peak)

        split = min(1.0, upper)
        power = 1.0 + alpha
        inverse = 1.0 / power
        peak_t = peak ** power if peak is not None and peak > 0 else None
        singular, singular_error, singular_steps = self._quad(
            lambda t: weight(t ** inverse), 0.0, split ** power, rel_tol, peak_t
        )
        value, error, steps = singular / power, singular_error / power, singular_steps
        if upper > split:
            regular, regular_error, regular_steps = self._quad(
                lambda x: x ** alpha * weight(x), split, upper, rel_tol, peak
            )
            value += regular
            error += regular_error
            steps += regular_steps
        return value, error, steps

    def _quad(
        self,
        integrand: Callable[[float], float],
        lower: float,
        upper: float,
        rel_tol: float,
        peak: Optional[float],
    ) -> Tuple[float, float, int]:
        points = [peak] if peak is not None and lower < peak < upper else None
        result = integrate.quad(
            integrand,
            lower,
            upper,
            epsabs=0.0,
            epsrel=rel_tol,
            limit=self.quad_limit,
            points=points,
            full_output=1,
        )
        value, error, info = result[0], result[1], result[2]
        if len(result) > 3 and error > rel_tol * abs(value):
            raise ConvergenceError(
                f"Cuadratura sin converger en [{lower}, {upper}] con {self.quad_limit} subdivisiones: {result[3]}"
            )
        return value, error, int(info["last"])

    # ===========================================
    # ISSERLIS / WICK
    # ===========================================

    @staticmethod
    def _check_orders(p: int, q: int):
        for name, value in (("p", p), ("q", q)):
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise DomainError(f"{name} debe ser un entero >= 0, se recibió {value!r}")
        if p + q > ISSERLIS_MAX_ORDER:
            raise DomainError(f"p + q = {p + q} excede {ISSERLIS_MAX_ORDER} (explosión combinatoria)")

    def isserlis_pairing_counts(self, p: int, q: int) -> List[int]:
        """
        Emparejamientos de {x^(2p), y^(2q)} agrupados por número de pares cruzados

        Returns:
            counts[k] = emparejamientos con k pares x-y
        """
        self._check_orders(p, q)
        kinds = [0] * (2 * p) + [1] * (2 * q)
        counts = [0] * (min(2 * p, 2 * q) + 1)
        for pairing in all_pairings(range(len(kinds))):
            crossed = sum(1 for i, j in pairing if kinds[i] != kinds[j])
            counts[crossed] += 1
        return counts

    def isserlis_even_moment(self, p: int, q: int, rho: float) -> float:
        """
        E[X1^(2p) X2^(2q)] con varianzas unitarias: suma sobre emparejamientos
        de rho^(pares cruzados)
        """
        if isinstance(rho, bool) or not isinstance(rho, (int, float)) or not math.isfinite(rho) or abs(rho) > 1:
            raise DomainError(f"rho debe estar en [-1, 1], se recibió {rho!r}")
        counts = self.isserlis_pairing_counts(p, q)
        return math.fsum(count * rho ** k for k, count in enumerate(counts))


# Instancia global
oracle_service = OracleService()
