"""
Human Motion Transfer Package

Transferencia de movimiento humano en cascada: pose -> forma -> estructura
de la prenda -> apariencia -> refinamiento, con realimentacion recurrente.
"""

__version__ = "1.0.0"
__author__ = "Your Name"
