"""
Excepciones del toolkit GPI
"""


class GPIError(Exception):
    """Error base del toolkit"""


class DomainError(GPIError, ValueError):
    """Argumentos fuera del dominio de la operación"""


class ConvergenceError(GPIError, ArithmeticError):
    """Se alcanzó el tope de términos/subdivisiones sin llegar a la cota pedida"""


class GammaOverflowError(GPIError, OverflowError):
    """El resultado excede el rango de punto flotante"""


class UsageError(GPIError):
    """Entrada mal formada en la línea de comandos"""
