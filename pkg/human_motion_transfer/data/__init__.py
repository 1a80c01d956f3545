"""
Data module

Keypoints, condicionamiento de pose, mapas de parsing, campos de estructura
y escenas sinteticas.
"""
