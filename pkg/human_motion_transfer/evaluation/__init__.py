"""
Model evaluation module

Metricas de imagen, analisis del estudio perceptual y comparacion de variantes.
"""
