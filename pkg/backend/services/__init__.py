"""
Servicios del toolkit GPI
"""
from backend.services.special_functions_service import special_functions, SpecialFunctionsService
from backend.services.moments_service import moments_service, MomentsService
from backend.services.verification_service import verification_service, VerificationService
from backend.services.oracle_service import oracle_service, OracleService
from backend.services.report_service import report_service, ReportService
from backend.services.selftest_service import selftest_service, SelftestService

__all__ = [
    'special_functions',
    'SpecialFunctionsService',
    'moments_service',
    'MomentsService',
    'verification_service',
    'VerificationService',
    'oracle_service',
    'OracleService',
    'report_service',
    'ReportService',
    'selftest_service',
    'SelftestService'
]
