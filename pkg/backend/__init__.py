"""
GPI Toolkit - Backend Module
Momentos absolutos gaussianos y certificación numérica de la GPI
"""
