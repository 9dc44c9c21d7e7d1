"""
Excepciones tipadas del sistema de cotas AoA bajo suplantación.

Los errores de entrada se heredan de ValueError para que los llamadores que ya
capturan ValueError sigan funcionando; los de salida se heredan de OSError.
"""

from typing import Optional


class AoaBoundsError(Exception):
    """Error base de la librería."""


class DomainError(AoaBoundsError, ValueError):
    """Ángulo fuera de [-π/2, π/2] o dimensiones inconsistentes."""


class DegenerateScenarioError(AoaBoundsError, ValueError):
    """Escenario en el que las cotas no están definidas (M < 2, |θ| = π/2, σ² <= 0)."""


class ConfigError(AoaBoundsError, ValueError):
    """Configuración inválida; `key` indica la clave con notación de puntos."""

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        if key:
            message = f"{key}: {message}"
        super().__init__(message)


class OutputError(AoaBoundsError, OSError):
    """Fallo al escribir CSV o figuras."""
