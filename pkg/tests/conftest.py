"""
Configuración de pytest: path del proyecto y marca slow
"""
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="Corre también los oráculos largos")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: Monte Carlo con 20 semillas y malla completa de cuadratura")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="usar --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)
