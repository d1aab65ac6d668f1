"""srudgp: procesos gaussianos profundos con unidades SRU para modelado de secuencias."""

__version__ = "0.1.0"
