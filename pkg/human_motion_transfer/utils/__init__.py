"""
Utility functions

Configuracion, preparacion del dataset y entrada/salida de archivos.
"""
