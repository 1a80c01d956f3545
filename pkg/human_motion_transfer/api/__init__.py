"""
API module

Interfaz de linea de comandos.
"""
