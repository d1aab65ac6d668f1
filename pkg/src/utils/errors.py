#!/usr/bin/env python3
"""
Jerarquía de errores del proyecto
Cada error lleva el contexto necesario para un diagnóstico de una sola línea.
"""

from typing import Optional


class SruDgpError(Exception):
    """Error base de srudgp"""


class InputError(SruDgpError, ValueError):
    """Dimensiones o formas de entrada incompatibles"""


class DomainError(SruDgpError, ValueError):
    """Argumento fuera del dominio de la función (p.ej. vector cero en ArcCos)"""


class ContractError(SruDgpError):
    """Uso de una operación fuera de su contrato"""


class ConfigurationError(SruDgpError, ValueError):
    """Configuración inválida; ``field`` nombra la clave problemática"""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        if field and field not in message:
            message = f"{field}: {message}"
        super().__init__(message)


class SingularityError(SruDgpError):
    """Cholesky falló para todo el esquema de jitter"""

    def __init__(self, message: str, jitter: float, layer: Optional[str] = None):
        self.jitter = jitter
        self.layer = layer
        where = f" [capa {layer}]" if layer else ""
        super().__init__(f"{message}{where} (jitter máximo probado: {jitter:g})")


class NumericalError(SruDgpError):
    """Valor no finito; ``term`` nombra el término o parámetro culpable"""

    def __init__(self, message: str, term: str):
        self.term = term
        super().__init__(f"{message}: {term}")


class DatasetParseError(SruDgpError, ValueError):
    """Archivo de dataset mal formado"""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        where = f" (línea {line})" if line is not None else ""
        super().__init__(f"{message}{where}")


class CheckpointError(SruDgpError):
    """Checkpoint ilegible o incompatible con el dataset"""


class TrainingAbortedError(SruDgpError):
    """Entrenamiento abortado por un error numérico irrecuperable"""

    def __init__(self, message: str, iteration: int, layer: Optional[str] = None):
        self.iteration = iteration
        self.layer = layer
        super().__init__(f"iteración {iteration}, capa {layer or 'desconocida'}: {message}")
