"""
Configuración del toolkit de desigualdades gaussianas (GPI)
"""
import os

# ===========================================
# CONFIGURACIÓN BASE
# ===========================================
LIBRARY_VERSION = '1.0.0'
LOG_LEVEL = os.environ.get('GPI_LOG_LEVEL', 'WARNING').upper()
WORKERS = int(os.environ.get('GPI_WORKERS', '1'))

# ===========================================
# FUNCIONES ESPECIALES
# ===========================================
# |rho| <= 0.9975  <=>  z = rho^2 <= 0.99500625
RHO_MAX = 0.9975
Z_MAX = RHO_MAX ** 2

SERIES_TERM_CAP = 10 ** 6
SERIES_REL_TARGET = 1e-16  # Cota de cola relativa para cortar la serie 2F1
EULER_SWITCH_Z = 0.75

BETA_PRODUCT_REL_TARGET = 1e-10
BETA_PRODUCT_MAX_FACTORS = 10 ** 6

# Relación de error usada como error_bound de las formas cerradas
CLOSED_FORM_REL_ERROR = 1e-12

# ===========================================
# VERIFICACIÓN
# ===========================================
DEFAULT_TOLERANCE = 1e-9
TOLERANCE_TAIL_FACTOR = 10.0

SELFTEST_ALPHAS = [-0.9, -0.5, -0.1, 0.5, 1.0, 2.0, 4.0]
SELFTEST_RHOS = [0.0, 0.1, -0.1, 0.5, -0.5, 0.9, -0.9, 0.9975, -0.9975]
MONOTONICITY_Z_GRID = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]

# ===========================================
# ORÁCULOS
# ===========================================
DEFAULT_SAMPLES = 10 ** 6
DEFAULT_SEED = 0
MIN_SAMPLES = 10 ** 3
MC_BLOCK_SIZE = 2 ** 16
MC_SELFTEST_SEEDS = 20
MC_SELFTEST_SAMPLES = 10 ** 6
MC_SIGMA_BAND = 4.0

QUAD_RHO_MAX = 0.999
QUAD_CUTOFF = 40.0  # En desviaciones estándar
QUAD_LIMIT = 200
QUAD_REL_TOL = 1e-8
QUAD_MIN_REL_TOL = 1e-10
QUAD_SELFTEST_RHO_MAX = 0.99
QUAD_SELFTEST_REL_TOL = 1e-7

ISSERLIS_MAX_ORDER = 6
