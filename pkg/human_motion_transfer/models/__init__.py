"""
Motion Transfer Models

Generadores de la cascada, funciones de perdida, entrenamiento y recreacion.
"""
