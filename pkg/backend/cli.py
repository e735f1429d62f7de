"""
Línea de comandos del toolkit GPI

Uso:
    python run.py moment joint --alpha1 -0.5 --alpha2 2 --rho 0.5
    python run.py ratio --alpha1 2 --alpha2 2 --rho 0
    python run.py verify bivariate --alpha1 -0.5 --alpha2 2 --rho 0.5 --format json
    python run.py sweep --alpha1-grid=-0.9,-0.5 --alpha2-grid 0.5:4:0.5 --rho-grid 0,0.5,0.9
    python run.py oracle mc --alpha1 2 --alpha2 2 --rho 0.5 --samples 100000 --seed 7
    python run.py selftest

Códigos de salida: 0 éxito, 1 error de uso o de dominio, 2 algún veredicto Violated.
"""
import sys
import logging
from typing import Any, Callable, Dict, List, Optional, Tuple

import click

from config.settings import (
    LOG_LEVEL,
    WORKERS,
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    DEFAULT_TOLERANCE,
    MONOTONICITY_Z_GRID,
    SELFTEST_ALPHAS,
    SELFTEST_RHOS,
    QUAD_REL_TOL,
    LIBRARY_VERSION,
)
from backend.errors import GPIError, UsageError
from backend.models import (
    BivariatePairSpec,
    ExponentPair,
    RunConfig,
    SweepGrid,
    Verdict,
    VerdictRecord,
)
from backend.services import (
    moments_service,
    verification_service,
    oracle_service,
    report_service,
    selftest_service,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATED = 2
SEED_MAX = 2 ** 64 - 1


# ===========================================
# MALLAS
# ===========================================

def parse_grid(text: str) -> List[float]:
    """
    Convierte una malla de la línea de comandos en una lista de reales

    Acepta listas separadas por comas ("-0.5,0,0.5") o rangos inclusivos
    "inicio:fin:paso". El número de pasos es round((fin - inicio) / paso),
    así que la deriva de punto flotante no agrega ni quita un extremo.

    Args:
        text: Especificación de la malla

    Returns:
        Lista de valores en orden

    Raises:
        UsageError: si la malla está mal formada
    """
    text = text.strip()
    if not text:
        raise UsageError("La malla está vacía")

    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"Rango mal formado '{text}' (se espera inicio:fin:paso)")
        try:
            start, stop, step = (float(part) for part in parts)
        except ValueError as e:
            raise UsageError(f"Rango mal formado '{text}': {e}") from e
        if step == 0 or (stop - start) * step < 0:
            raise UsageError(f"El paso {step} no avanza de {start} a {stop}")
        count = round((stop - start) / step)
        return [round(start + i * step, 12) for i in range(count + 1)]

    values = []
    for part in text.split(","):
        try:
            values.append(float(part))
        except ValueError as e:
            raise UsageError(f"Valor de malla inválido '{part}' en '{text}'") from e
    return values


class GridParamType(click.ParamType):
    """Tipo click para mallas"""
    name = "grid"

    def convert(self, value, param, ctx):
        if isinstance(value, list):
            return value
        try:
            return parse_grid(value)
        except UsageError as e:
            self.fail(str(e), param, ctx)


GRID = GridParamType()


# ===========================================
# EJECUCIÓN
# ===========================================

def _require(config: RunConfig, *names: str):
    missing = [name for name in names if getattr(config, name) is None]
    if missing:
        flags = ", ".join("--" + name.replace("_", "-") for name in missing)
        raise UsageError(f"'{config.subcommand}' requiere {flags}")


def _pair_inputs(config: RunConfig, **extra) -> Dict[str, Any]:
    inputs = {"alpha1": config.alpha1, "alpha2": config.alpha2}
    inputs.update(extra)
    return inputs


def _verdict_exit(records: List[VerdictRecord]) -> int:
    return EXIT_VIOLATED if any(record.verdict.verdict is Verdict.VIOLATED for record in records) else EXIT_OK


def _moment_marginal(config: RunConfig) -> Tuple[str, int]:
    _require(config, "alpha1")
    if config.alpha2 is None:
        moment = moments_service.marginal_abs_moment(config.alpha1, config.sigma1)
        inputs = {"nu": config.alpha1, "sigma": config.sigma1}
    else:
        pair = ExponentPair(config.alpha1, config.alpha2)
        spec = BivariatePairSpec(config.sigma1, config.sigma2, 0.0)
        moment = moments_service.marginal_product(pair, spec)
        inputs = {**pair.to_dict(), "sigma1": config.sigma1, "sigma2": config.sigma2}
    return report_service.render([report_service.moment_to_dict(inputs, moment)], config.format), EXIT_OK


def _moment_joint(config: RunConfig) -> Tuple[str, int]:
    _require(config, "alpha1", "alpha2")
    pair = ExponentPair(config.alpha1, config.alpha2)
    spec = BivariatePairSpec(config.sigma1, config.sigma2, config.rho)
    moment = moments_service.joint_abs_moment(pair, spec)
    row = report_service.moment_to_dict({**pair.to_dict(), **spec.to_dict()}, moment)
    return report_service.render([row], config.format), EXIT_OK


def _ratio(config: RunConfig) -> Tuple[str, int]:
    _require(config, "alpha1")
    if config.m is not None:
        ratio = moments_service.even_exponent_ratio(config.alpha1, config.m, config.rho)
        row = report_service.ratio_to_dict(
            {"alpha1": config.alpha1, "m": config.m, "rho": config.rho}, ratio, 0.0, "even_exponent"
        )
        return report_service.render([row], config.format), EXIT_OK

    _require(config, "alpha2")
    if abs(config.rho) == 1.0:
        ratio = moments_service.one_dim_ratio(config.alpha1, config.alpha2)
        row = report_service.ratio_to_dict(_pair_inputs(config, rho=config.rho), ratio, 0.0, "beta_ratio")
    else:
        series = moments_service.moment_ratio_series(ExponentPair(config.alpha1, config.alpha2), config.rho)
        row = report_service.ratio_to_dict(
            _pair_inputs(config, rho=config.rho), series.value, series.tail_bound, "hypergeometric"
        )
    return report_service.render([row], config.format), EXIT_OK


def _verify_bivariate(config: RunConfig) -> Tuple[str, int]:
    _require(config, "alpha1", "alpha2")
    verdict = verification_service.check_bivariate(
        ExponentPair(config.alpha1, config.alpha2), config.rho, config.tolerance
    )
    records = [VerdictRecord(inputs=_pair_inputs(config, rho=config.rho), verdict=verdict)]
    return _render_verdicts(records, config.format), _verdict_exit(records)


def _verify_one_dim(config: RunConfig) -> Tuple[str, int]:
    _require(config, "alpha1", "alpha2")
    tolerance = DEFAULT_TOLERANCE if config.tolerance is None else config.tolerance
    verdict = verification_service.check_one_dim(config.alpha1, config.alpha2, tolerance)
    records = [VerdictRecord(inputs=_pair_inputs(config), verdict=verdict)]
    return _render_verdicts(records, config.format), _verdict_exit(records)


def _verify_monotonicity(config: RunConfig) -> Tuple[str, int]:
    _require(config, "alpha1", "alpha2")
    z_grid = config.z_grid if config.z_grid is not None else list(MONOTONICITY_Z_GRID)
    tolerance = 0.0 if config.tolerance is None else config.tolerance
    verdict = verification_service.check_monotonicity(ExponentPair(config.alpha1, config.alpha2), z_grid, tolerance)
    records = [VerdictRecord(inputs=_pair_inputs(config, z_grid=z_grid), verdict=verdict)]
    return _render_verdicts(records, config.format), _verdict_exit(records)


def _sweep(config: RunConfig) -> Tuple[str, int]:
    grid = SweepGrid(
        config.alpha1_grid if config.alpha1_grid is not None else list(SELFTEST_ALPHAS),
        config.alpha2_grid if config.alpha2_grid is not None else list(SELFTEST_ALPHAS),
        config.rho_grid if config.rho_grid is not None else list(SELFTEST_RHOS),
    )
    report = verification_service.sweep(grid, tolerance=config.tolerance, workers=config.workers)
    rows = [report_service.verdict_to_dict(record) for record in report.records]
    summary = report_service.sweep_summary(report)
    if config.format == "text":
        summary["summary"]["timestamp"] = report.metadata["timestamp"]
    code = EXIT_VIOLATED if report.violations else EXIT_OK
    return report_service.render(rows, config.format, summary), code


def _oracle_mc(config: RunConfig) -> Tuple[str, int]:
    _require(config, "alpha1", "alpha2")
    pair = ExponentPair(config.alpha1, config.alpha2)
    spec = BivariatePairSpec(config.sigma1, config.sigma2, config.rho)
    estimate = oracle_service.mc_joint_moment(pair, spec, config.samples, config.seed, config.workers)
    row = report_service.mc_to_dict({**pair.to_dict(), **spec.to_dict()}, estimate)
    return report_service.render([row], config.format), EXIT_OK


def _oracle_quad(config: RunConfig) -> Tuple[str, int]:
    _require(config, "alpha1", "alpha2")
    pair = ExponentPair(config.alpha1, config.alpha2)
    spec = BivariatePairSpec(config.sigma1, config.sigma2, config.rho)
    rel_tol = QUAD_REL_TOL if config.tolerance is None else config.tolerance
    estimate = oracle_service.quad_joint_moment(pair, spec, rel_tol)
    row = report_service.quad_to_dict({**pair.to_dict(), **spec.to_dict()}, estimate)
    return report_service.render([row], config.format), EXIT_OK


def _even_order(name: str, value: float) -> int:
    if value < 0 or not float(value).is_integer() or int(value) % 2:
        raise UsageError(f"Isserlis requiere exponentes pares no negativos (--{name} {value})")
    return int(value) // 2


def _oracle_isserlis(config: RunConfig) -> Tuple[str, int]:
    _require(config, "alpha1", "alpha2")
    p = _even_order("alpha1", config.alpha1)
    q = _even_order("alpha2", config.alpha2)
    value = oracle_service.isserlis_even_moment(p, q, config.rho)
    row = {
        "inputs": _pair_inputs(config, rho=config.rho),
        "value": value,
        "pairing_counts": oracle_service.isserlis_pairing_counts(p, q),
        "method": "isserlis",
    }
    return report_service.render([row], config.format), EXIT_OK


def _selftest(config: RunConfig) -> Tuple[str, int]:
    report = selftest_service.run(
        seed=config.seed,
        samples=config.samples,
        tolerance=config.tolerance,
        include_oracles=config.oracles,
        workers=config.workers,
    )
    rows = [report_service.verdict_to_dict(record) for record in report.sweep.records]
    rows += [report_service.verdict_to_dict(record) for record in report.verdicts]
    rows += [check.to_dict() for check in report.identities]
    summary = report_service.sweep_summary(report.sweep)
    summary["summary"]["violations"] = report.violations
    summary["summary"]["identities"] = len(report.identities)
    summary["summary"]["failed_identities"] = report.failed_identities
    code = EXIT_VIOLATED if report.violations or report.failed_identities else EXIT_OK
    return report_service.render(rows, config.format, summary), code


def _render_verdicts(records: List[VerdictRecord], fmt: str) -> str:
    return report_service.render([report_service.verdict_to_dict(record) for record in records], fmt)


HANDLERS: Dict[str, Callable[[RunConfig], Tuple[str, int]]] = {
    "moment marginal": _moment_marginal,
    "moment joint": _moment_joint,
    "ratio": _ratio,
    "verify bivariate": _verify_bivariate,
    "verify one-dim": _verify_one_dim,
    "verify monotonicity": _verify_monotonicity,
    "sweep": _sweep,
    "oracle mc": _oracle_mc,
    "oracle quad": _oracle_quad,
    "oracle isserlis": _oracle_isserlis,
    "selftest": _selftest,
}


def execute(config: RunConfig) -> Tuple[str, int]:
    """
    Ejecuta un subcomando ya parseado

    Returns:
        (salida completa, código de salida)
    """
    handler = HANDLERS.get(config.subcommand)
    if handler is None:
        raise UsageError(f"Subcomando desconocido: {config.subcommand}")
    logger.info(f"Ejecutando '{config.subcommand}'")
    return handler(config)


# ===========================================
# COMANDOS CLICK
# ===========================================

def _pair_options(func):
    func = click.option("--sigma2", type=float, default=1.0, show_default=True, help="Desviación de X2")(func)
    func = click.option("--sigma1", type=float, default=1.0, show_default=True, help="Desviación de X1")(func)
    func = click.option("--rho", type=float, default=0.0, show_default=True, help="Correlación")(func)
    func = click.option("--alpha2", type=float, default=None, help="Exponente de |X2|")(func)
    func = click.option("--alpha1", type=float, default=None, help="Exponente de |X1|")(func)
    return func


def _output_options(func):
    func = click.option("--verbose", is_flag=True, help="Log INFO en stderr")(func)
    func = click.option(
        "--format", "fmt", type=click.Choice(["text", "json", "csv"]), default="text", show_default=True
    )(func)
    return func


def _dispatch(ctx: click.Context, subcommand: str, fmt: str, verbose: bool, **fields):
    _configure_logging(verbose)
    config = RunConfig(subcommand=subcommand, format=fmt, **fields)
    output, code = execute(config)
    ctx.obj["output"] = output
    ctx.obj["code"] = code


@click.group()
@click.version_option(version=LIBRARY_VERSION, prog_name="gpi")
def cli():
    """
    Momentos absolutos gaussianos y certificación numérica de la GPI.

    Ejemplos:

        gpi verify bivariate --alpha1 -0.5 --alpha2 2 --rho 0.5

        gpi sweep --rho-grid 0:0.9:0.1

        gpi selftest --format json
    """


@cli.group()
def moment():
    """Momentos absolutos (marginal o conjunto)"""


@moment.command("marginal")
@_pair_options
@_output_options
@click.pass_context
def moment_marginal(ctx, alpha1, alpha2, rho, sigma1, sigma2, fmt, verbose):
    """E[|σU|^alpha1] o, con --alpha2, el producto de marginales"""
    _dispatch(ctx, "moment marginal", fmt, verbose,
              alpha1=alpha1, alpha2=alpha2, rho=rho, sigma1=sigma1, sigma2=sigma2)


@moment.command("joint")
@_pair_options
@_output_options
@click.pass_context
def moment_joint(ctx, alpha1, alpha2, rho, sigma1, sigma2, fmt, verbose):
    """E[|X1|^alpha1 |X2|^alpha2]; --rho 1 usa el límite casi seguro"""
    _dispatch(ctx, "moment joint", fmt, verbose,
              alpha1=alpha1, alpha2=alpha2, rho=rho, sigma1=sigma1, sigma2=sigma2)


@cli.command()
@_pair_options
@click.option("--m", type=click.IntRange(min=1), default=None, help="Cociente explícito con alpha2 = 2m")
@_output_options
@click.pass_context
def ratio(ctx, alpha1, alpha2, rho, sigma1, sigma2, m, fmt, verbose):
    """Momento conjunto dividido por el producto de marginales"""
    _dispatch(ctx, "ratio", fmt, verbose, alpha1=alpha1, alpha2=alpha2, rho=rho, m=m)


@cli.group()
def verify():
    """Certifica una desigualdad (bivariate | one-dim | monotonicity)"""


@verify.command("bivariate")
@_pair_options
@click.option("--tolerance", type=float, default=None, help="Banda de igualdad (por defecto max(1e-9, 10 x cola))")
@_output_options
@click.pass_context
def verify_bivariate(ctx, alpha1, alpha2, rho, sigma1, sigma2, tolerance, fmt, verbose):
    """GPI (signos iguales) u opuesta (signos opuestos)"""
    _dispatch(ctx, "verify bivariate", fmt, verbose,
              alpha1=alpha1, alpha2=alpha2, rho=rho, tolerance=tolerance)


@verify.command("one-dim")
@click.option("--alpha1", type=float, default=None)
@click.option("--alpha2", type=float, default=None)
@click.option("--tolerance", type=float, default=None, help=f"Banda de igualdad (por defecto {DEFAULT_TOLERANCE})")
@_output_options
@click.pass_context
def verify_one_dim(ctx, alpha1, alpha2, tolerance, fmt, verbose):
    """Cociente de Betas contra (a1+1)(a2+1)/(a1+a2+1)"""
    _dispatch(ctx, "verify one-dim", fmt, verbose, alpha1=alpha1, alpha2=alpha2, tolerance=tolerance)


@verify.command("monotonicity")
@click.option("--alpha1", type=float, default=None)
@click.option("--alpha2", type=float, default=None)
@click.option("--z-grid", type=GRID, default=None, help="Puntos en [0, 0.9] (por defecto 0.1:0.9:0.1)")
@click.option("--tolerance", type=float, default=None)
@_output_options
@click.pass_context
def verify_monotonicity(ctx, alpha1, alpha2, z_grid, tolerance, fmt, verbose):
    """Signo de G' y monotonía de G sobre la malla"""
    _dispatch(ctx, "verify monotonicity", fmt, verbose,
              alpha1=alpha1, alpha2=alpha2, z_grid=z_grid, tolerance=tolerance)


@cli.command()
@click.option("--alpha1-grid", type=GRID, default=None, help="Lista a,b,c o rango inicio:fin:paso")
@click.option("--alpha2-grid", type=GRID, default=None)
@click.option("--rho-grid", type=GRID, default=None)
@click.option("--tolerance", type=float, default=None, help="Banda fija; por defecto automática por punto")
@click.option("--workers", type=click.IntRange(min=1), default=WORKERS, show_default=True)
@_output_options
@click.pass_context
def sweep(ctx, alpha1_grid, alpha2_grid, rho_grid, tolerance, workers, fmt, verbose):
    """Verificación bivariada sobre alpha1 x alpha2 x rho"""
    _dispatch(ctx, "sweep", fmt, verbose, alpha1_grid=alpha1_grid, alpha2_grid=alpha2_grid,
              rho_grid=rho_grid, tolerance=tolerance, workers=workers)


@cli.group()
def oracle():
    """Oráculos independientes (mc | quad | isserlis)"""


@oracle.command("mc")
@_pair_options
@click.option("--samples", type=click.IntRange(min=1), default=DEFAULT_SAMPLES, show_default=True)
@click.option("--seed", type=click.IntRange(0, SEED_MAX), default=DEFAULT_SEED, show_default=True)
@click.option("--workers", type=click.IntRange(min=1), default=WORKERS, show_default=True)
@_output_options
@click.pass_context
def oracle_mc(ctx, alpha1, alpha2, rho, sigma1, sigma2, samples, seed, workers, fmt, verbose):
    """Monte Carlo reproducible del momento conjunto"""
    _dispatch(ctx, "oracle mc", fmt, verbose, alpha1=alpha1, alpha2=alpha2, rho=rho,
              sigma1=sigma1, sigma2=sigma2, samples=samples, seed=seed, workers=workers)


@oracle.command("quad")
@_pair_options
@click.option("--tolerance", type=float, default=None, help=f"Tolerancia relativa (por defecto {QUAD_REL_TOL})")
@_output_options
@click.pass_context
def oracle_quad(ctx, alpha1, alpha2, rho, sigma1, sigma2, tolerance, fmt, verbose):
    """Cuadratura adaptativa anidada del momento conjunto"""
    _dispatch(ctx, "oracle quad", fmt, verbose, alpha1=alpha1, alpha2=alpha2, rho=rho,
              sigma1=sigma1, sigma2=sigma2, tolerance=tolerance)


@oracle.command("isserlis")
@click.option("--alpha1", type=float, default=None, help="Exponente par 2p")
@click.option("--alpha2", type=float, default=None, help="Exponente par 2q")
@click.option("--rho", type=float, default=0.0, show_default=True)
@_output_options
@click.pass_context
def oracle_isserlis(ctx, alpha1, alpha2, rho, fmt, verbose):
    """E[X1^(2p) X2^(2q)] por emparejamientos de Wick"""
    _dispatch(ctx, "oracle isserlis", fmt, verbose, alpha1=alpha1, alpha2=alpha2, rho=rho)


@cli.command()
@click.option("--samples", type=click.IntRange(min=1), default=DEFAULT_SAMPLES, show_default=True)
@click.option("--seed", type=click.IntRange(0, SEED_MAX), default=DEFAULT_SEED, show_default=True)
@click.option("--tolerance", type=float, default=None, help="Banda fija del barrido")
@click.option("--workers", type=click.IntRange(min=1), default=WORKERS, show_default=True)
@click.option("--skip-oracles", is_flag=True, help="Omite cuadratura y Monte Carlo")
@_output_options
@click.pass_context
def selftest(ctx, samples, seed, tolerance, workers, skip_oracles, fmt, verbose):
    """Barrido por defecto, oráculos e identidades numéricas"""
    _dispatch(ctx, "selftest", fmt, verbose, samples=samples, seed=seed, tolerance=tolerance,
              workers=workers, oracles=not skip_oracles)


# ===========================================
# PUNTO DE ENTRADA
# ===========================================

def _configure_logging(verbose: bool = False):
    level = logging.INFO if verbose else getattr(logging, LOG_LEVEL, logging.WARNING)
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )


def run(argv: Optional[List[str]] = None) -> int:
    """
    Ejecuta la CLI y devuelve el código de salida

    La salida se acumula completa antes de escribirse, así que un error no
    deja registros parciales en stdout.

    Args:
        argv: Argumentos sin el nombre del programa

    Returns:
        0 éxito, 1 error de uso o dominio, 2 algún veredicto Violated
    """
    state: Dict[str, Any] = {"output": "", "code": EXIT_OK}
    try:
        cli.main(args=list(argv or []), prog_name="gpi", standalone_mode=False, obj=state)
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.ClickException as e:
        click.echo(f"error: {e.format_message()}", err=True)
        return EXIT_ERROR
    except click.exceptions.Abort:
        click.echo("error: abortado", err=True)
        return EXIT_ERROR
    except GPIError as e:
        click.echo(f"error: {e}", err=True)
        return EXIT_ERROR
    except ArithmeticError as e:
        # Desbordes de punto flotante fuera de los servicios (p. ej. dentro del integrando)
        click.echo(f"error: fuera del rango de punto flotante: {e}", err=True)
        return EXIT_ERROR

    if state["output"]:
        click.echo(state["output"], nl=False)
    return state["code"]
