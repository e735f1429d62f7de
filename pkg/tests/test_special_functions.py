import math

import pytest
from pytest import approx, mark, raises
from hypothesis import given, settings
from hypothesis.strategies import floats, integers

from backend.errors import ConvergenceError, DomainError, GammaOverflowError
from backend.models import HypergeometricInput
from backend.services.special_functions_service import SpecialFunctionsService, special_functions


@mark.parametrize("x expected".split(),
                  ((1.0, 0.0),
                   (0.5, 0.5723649429247001),
                   (5.0, math.log(24.0)),
                   (0.25, math.lgamma(0.25)),
                   (3.7, math.lgamma(3.7)),
                   (150.5, math.lgamma(150.5))))
def test_log_gamma_values(x, expected):
    assert special_functions.log_gamma(x) == approx(expected, rel=1e-13, abs=1e-15)


@mark.parametrize("x", (0.0, -1.0, -0.5, math.inf, math.nan))
def test_log_gamma_rejects_non_positive(x):
    with raises(DomainError):
        special_functions.log_gamma(x)


@mark.parametrize("x expected".split(),
                  ((1.0, 1.0),
                   (0.25, 3.6256099082219083),
                   (6.0, 120.0),
                   (0.5, math.sqrt(math.pi))))
def test_gamma_values(x, expected):
    assert special_functions.gamma(x) == approx(expected, rel=1e-12)


def test_gamma_overflow():
    with raises(GammaOverflowError):
        special_functions.gamma(180.5)


def test_gamma_domain():
    with raises(DomainError):
        special_functions.gamma(-2.0)


@given(floats(min_value=0.01, max_value=50.0))
@settings(max_examples=300)
def test_gamma_recurrence(x):
    assert special_functions.gamma(x + 1) == approx(x * special_functions.gamma(x), rel=1e-12)


@mark.parametrize("n expected".split(), ((0, 1.0), (5, 15.0), (6, 48.0), (-1, 1.0), (1, 1.0), (10, 3840.0)))
def test_double_factorial(n, expected):
    assert special_functions.double_factorial(n) == expected


@mark.parametrize("n", (-2, -7, 2.5))
def test_double_factorial_domain(n):
    with raises(DomainError):
        special_functions.double_factorial(n)


@mark.parametrize("x y expected".split(),
                  ((1.0, 1.0, 1.0),
                   (1.5, 0.5, math.pi / 2),
                   (0.25, 1.0, 4.0),
                   (2.0, 3.0, 1.0 / 12.0)))
def test_beta_values(x, y, expected):
    assert special_functions.beta(x, y) == approx(expected, rel=1e-12)


@given(floats(min_value=0.05, max_value=20.0), floats(min_value=0.05, max_value=20.0))
@settings(max_examples=200)
def test_beta_symmetric_and_positive(x, y):
    value = special_functions.beta(x, y)
    assert value > 0
    assert special_functions.beta(y, x) == approx(value, rel=1e-14)


@mark.parametrize("x y".split(), ((0.0, 1.0), (1.0, -1.0)))
def test_beta_domain(x, y):
    with raises(DomainError):
        special_functions.beta(x, y)


@mark.parametrize("x y expected".split(),
                  ((1.0, 1.0, 1.0),
                   (0.5, 0.5, math.pi),
                   (2.0, 3.0, 1.0 / 12.0)))
def test_beta_product_examples(x, y, expected):
    result = special_functions.beta_product(x, y, 10 ** 6)
    assert result.value == approx(expected, rel=1e-9)
    assert result.tail_bound < 1e-9 * result.value
    assert result.terms_used <= 10 ** 6


@mark.parametrize("x", (0.1, 0.5, 1.0, 2.5, 5.0))
@mark.parametrize("y", (0.1, 1.0, 5.0))
def test_beta_product_matches_beta(x, y):
    result = special_functions.beta_product(x, y, 10 ** 6)
    exact = special_functions.beta(x, y)
    assert abs(result.value - exact) <= exact * (1e-9 + 1e-8)
    assert abs(result.value - exact) <= result.tail_bound + 1e-12 * exact


def test_beta_product_reports_non_convergence():
    with raises(ConvergenceError):
        special_functions.beta_product(3.0, 4.0, 10)


def test_beta_product_rejects_bad_cap():
    with raises(DomainError):
        special_functions.beta_product(1.0, 1.0, 0)


def test_gauss_2f1_terminating():
    result = special_functions.gauss_2f1(HypergeometricInput(-1.0, -1.0, 0.5, 0.36))
    assert result.value == approx(1.72, rel=1e-15)
    assert result.tail_bound == 0.0


def test_gauss_2f1_terminating_at_b():
    result = special_functions.gauss_2f1(HypergeometricInput(0.25, -1.0, 0.5, 0.25))
    assert result.value == approx(0.875, rel=1e-15)
    assert result.tail_bound == 0.0


@given(floats(min_value=-5, max_value=5), floats(min_value=-5, max_value=5), floats(min_value=0.1, max_value=5))
def test_gauss_2f1_at_zero(a, b, c):
    assert special_functions.gauss_2f1(HypergeometricInput(a, b, c, 0.0)).value == 1.0


@mark.parametrize("z", (0.1, 0.5, 0.81, 0.95, 0.99))
def test_gauss_2f1_arcsin_closed_form(z):
    result = special_functions.gauss_2f1(HypergeometricInput(0.5, 0.5, 1.5, z))
    root = math.sqrt(z)
    tolerance = 1e-10 if z <= 0.9 else 1e-7
    assert result.value == approx(math.asin(root) / root, rel=tolerance)


@mark.parametrize("z", (-0.5, 0.3, 0.8))
def test_gauss_2f1_log_closed_form(z):
    # F(1, 1; 2; z) = -log(1 - z) / z
    result = special_functions.gauss_2f1(HypergeometricInput(1.0, 1.0, 2.0, z))
    assert result.value == approx(-math.log1p(-z) / z, rel=1e-10)


@mark.parametrize("a b c z".split(),
                  ((-0.25, -1.0, 0.5, 0.9),
                   (0.45, 0.45, 0.5, 0.5),
                   (-0.25, -0.5, 0.5, 0.85),
                   (1.5, 2.25, 1.5, 0.7),
                   (0.05, -2.0, 0.5, 0.9)))
def test_euler_transformation(a, b, c, z):
    direct = special_functions.gauss_2f1(HypergeometricInput(a, b, c, z)).value
    transformed = (1 - z) ** (c - a - b) * special_functions.gauss_2f1(HypergeometricInput(c - a, c - b, c, z)).value
    assert transformed == approx(direct, rel=1e-9)


def test_gauss_2f1_argument_cap():
    with raises(DomainError):
        special_functions.gauss_2f1(HypergeometricInput(0.5, 0.5, 1.5, 0.996))


def test_gauss_2f1_cap_admits_rho_max():
    result = special_functions.gauss_2f1(HypergeometricInput(-0.25, -0.5, 0.5, 0.9975 ** 2))
    assert math.isfinite(result.value)


@mark.parametrize("c", (0.0, -1.0, -3.0))
def test_hypergeometric_input_rejects_pole(c):
    with raises(DomainError):
        HypergeometricInput(0.5, 0.5, c, 0.5)


@mark.parametrize("z", (1.0, -1.0, 1.5))
def test_hypergeometric_input_rejects_unit_disk_boundary(z):
    with raises(DomainError):
        HypergeometricInput(0.5, 0.5, 1.5, z)


def test_gauss_2f1_term_cap():
    service = SpecialFunctionsService(term_cap=5)
    with raises(ConvergenceError):
        service.gauss_2f1(HypergeometricInput(0.3, 0.7, 1.2, 0.9))


def test_hypergeometric_derivative_matches_rule():
    params = HypergeometricInput(0.5, 0.5, 1.5, 0.4)
    derivative = special_functions.hypergeometric_derivative(params)
    h = 1e-5
    upper = special_functions.gauss_2f1(HypergeometricInput(0.5, 0.5, 1.5, 0.4 + h)).value
    lower = special_functions.gauss_2f1(HypergeometricInput(0.5, 0.5, 1.5, 0.4 - h)).value
    assert derivative.value == approx((upper - lower) / (2 * h), rel=1e-7)


@mark.parametrize("alpha1 alpha2 z expected".split(),
                  ((2.0, 2.0, 0.0, 2.0),
                   (-0.5, 2.0, 0.0, -0.5)))
def test_gpi_kernel_derivative_at_origin(alpha1, alpha2, z, expected):
    assert special_functions.gpi_kernel_derivative(alpha1, alpha2, z) == approx(expected, rel=1e-15)


def test_gpi_kernel_derivative_degenerate_is_zero():
    assert special_functions.gpi_kernel_derivative(0.0, 3.0, 0.7) == 0.0


@mark.parametrize("alpha1 alpha2".split(), ((-0.5, 3.0), (-0.9, 0.5), (2.0, 2.0), (-0.3, -0.7), (1.0, 4.0)))
@mark.parametrize("z", (0.05, 0.5, 0.9))
def test_gpi_kernel_derivative_finite_difference(alpha1, alpha2, z):
    derivative = special_functions.gpi_kernel_derivative(alpha1, alpha2, z)
    h = 1e-5
    upper = special_functions.gpi_kernel(alpha1, alpha2, z + h).value
    lower = special_functions.gpi_kernel(alpha1, alpha2, z - h).value
    assert abs(derivative - (upper - lower) / (2 * h)) <= max(1e-6, 1e-4 * abs(derivative))
    assert math.copysign(1.0, derivative) == math.copysign(1.0, alpha1 * alpha2)


@given(floats(min_value=-0.95, max_value=4.0), floats(min_value=-0.95, max_value=4.0),
       floats(min_value=0.0, max_value=0.9))
@settings(max_examples=200)
def test_gpi_kernel_derivative_forms_agree(alpha1, alpha2, z):
    euler = special_functions.gpi_kernel_derivative(alpha1, alpha2, z)
    direct = special_functions.gpi_kernel_derivative_direct(alpha1, alpha2, z)
    assert direct == approx(euler, rel=1e-9, abs=1e-300)


@mark.parametrize("alpha1 alpha2 z".split(), ((-1.0, 2.0, 0.5), (1.0, 1.0, 0.999)))
def test_gpi_kernel_derivative_domain(alpha1, alpha2, z):
    with raises(DomainError):
        special_functions.gpi_kernel_derivative(alpha1, alpha2, z)


@given(integers(min_value=1, max_value=170))
def test_gamma_exact_on_integers(n):
    assert special_functions.gamma(float(n)) == float(math.factorial(n - 1))


def test_log_beta_large_arguments():
    expected = math.lgamma(200.0) + math.lgamma(300.0) - math.lgamma(500.0)
    assert special_functions.log_beta(200.0, 300.0) == approx(expected, rel=1e-12)
