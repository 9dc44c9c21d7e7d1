"""
Álgebra del vector de dirección para un arreglo lineal uniforme (ULA).

Contiene a(θ), su derivada, Γ(θ), la suma geométrica ponderada S_M(r), el
producto interno ȧ(θ)^H a(φ) y la búsqueda del máximo de Re{a(θ)^H x}
(rejilla gruesa + refinamiento acotado) que usan el estimador ML y el
diagnóstico del ángulo pseudo-verdadero.

Todas las funciones son puras: trabajan en radianes y no guardan estado.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from exceptions import DomainError, DegenerateScenarioError

logger = logging.getLogger(__name__)

HALF_PI = math.pi / 2

# Umbral |1 - r| por debajo del cual la forma cerrada usa el límite M(M-1)/2
CLOSED_FORM_UNIT_THRESHOLD = 1e-7
# Banda alrededor de r = 1 donde la forma cerrada estable usa la suma directa
CLOSED_FORM_STABLE_BAND = 1e-2


@dataclass(frozen=True)
class ArrayGeometry:
    """
    Geometría del ULA.

    Args:
        num_elements: número de antenas M (>= 2)
        spacing_ratio: razón d/λ (> 0)
    """
    num_elements: int
    spacing_ratio: float = 0.5

    def __post_init__(self):
        if int(self.num_elements) != self.num_elements or self.num_elements < 2:
            raise DegenerateScenarioError(
                f"El ULA necesita M >= 2 elementos (recibido {self.num_elements})"
            )
        if not math.isfinite(self.spacing_ratio) or self.spacing_ratio <= 0:
            raise DegenerateScenarioError(
                f"spacing_ratio debe ser finito y positivo (recibido {self.spacing_ratio})"
            )

    @property
    def wavenumber(self) -> float:
        """κ = 2π·d/λ"""
        return 2.0 * math.pi * self.spacing_ratio

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.num_elements, dtype=float)


@dataclass(frozen=True)
class SteeringVector:
    """Respuesta del arreglo a una onda plana desde `angle`."""
    elements: np.ndarray
    angle: float

    def __len__(self) -> int:
        return len(self.elements)


@dataclass(frozen=True)
class SearchSpec:
    """
    Parámetros de la búsqueda del máximo de Re{a(θ)^H x}.

    Args:
        grid_step_deg: paso de la rejilla gruesa sobre [-90°, 90°]
        xatol: tolerancia absoluta (rad) del refinamiento acotado
    """
    grid_step_deg: float = 0.02
    xatol: float = 1e-7

    def __post_init__(self):
        if not (0 < self.grid_step_deg <= 180):
            raise DomainError(f"grid_step_deg fuera de rango: {self.grid_step_deg}")
        if not (self.xatol > 0):
            raise DomainError(f"xatol debe ser positivo: {self.xatol}")

    def grid(self) -> np.ndarray:
        """Rejilla de ángulos en radianes, extremos incluidos."""
        num_points = int(round(180.0 / self.grid_step_deg)) + 1
        return np.linspace(-HALF_PI, HALF_PI, num_points)


def check_angle(theta: float, name: str = "theta") -> float:
    """Valida que el ángulo esté en [-π/2, π/2]."""
    theta = float(theta)
    if not math.isfinite(theta) or abs(theta) > HALF_PI:
        raise DomainError(f"{name}={theta!r} fuera de [-π/2, π/2]")
    return theta


def _phases(geometry: ArrayGeometry, theta: float) -> np.ndarray:
    return np.exp(-1j * geometry.wavenumber * geometry.indices * math.sin(theta))


def steering(geometry: ArrayGeometry, theta: float) -> SteeringVector:
    """a(θ)_m = exp(-j·κ·m·sin θ), m = 0..M-1."""
    theta = check_angle(theta)
    return SteeringVector(elements=_phases(geometry, theta), angle=theta)


def steering_matrix(geometry: ArrayGeometry, angles: np.ndarray) -> np.ndarray:
    """Matriz (len(angles), M) con a(θ) por fila; sin validación por ángulo."""
    angles = np.asarray(angles, dtype=float)
    return np.exp(-1j * geometry.wavenumber * np.outer(np.sin(angles), geometry.indices))


def steering_derivative(geometry: ArrayGeometry, theta: float) -> np.ndarray:
    """ȧ(θ) = -jκ cos θ · diag{0, 1, ..., M-1} · a(θ)."""
    theta = check_angle(theta)
    kappa = geometry.wavenumber
    return -1j * kappa * math.cos(theta) * geometry.indices * _phases(geometry, theta)


def gamma(geometry: ArrayGeometry, theta: float) -> float:
    """
    Γ(θ) = ‖ȧ(θ)‖² = κ² cos²θ (M-1)M(2M-1)/6.

    Devuelve 0 en |θ| = π/2; quien calcule cotas debe usar `require_gamma`.
    """
    theta = check_angle(theta)
    m = geometry.num_elements
    kappa = geometry.wavenumber
    return kappa ** 2 * math.cos(theta) ** 2 * (m - 1) * m * (2 * m - 1) / 6.0


def require_gamma(geometry: ArrayGeometry, theta: float) -> float:
    """Γ(θ) estrictamente positivo o DegenerateScenarioError."""
    theta = check_angle(theta)
    if abs(theta) >= HALF_PI:
        raise DegenerateScenarioError(f"θ={theta!r}: cos θ = 0, Γ(θ) = 0")
    value = gamma(geometry, theta)
    if not value > 0:
        raise DegenerateScenarioError(f"Γ(θ)={value!r} no es positivo")
    return value


def weighted_geometric_sum(num_elements: int, r: complex) -> complex:
    """
    S_M(r) = Σ_{m=0}^{M-1} m·r^m por suma directa.

    Es la ruta canónica: estable cerca de r = 1, donde la forma cerrada divide
    entre (1-r)².
    """
    if num_elements < 1:
        raise DomainError(f"M debe ser >= 1 (recibido {num_elements})")
    m = np.arange(num_elements, dtype=float)
    return complex(np.sum(m * np.power(complex(r), m)))


def weighted_geometric_sum_closed(num_elements: int, r: complex, stable: bool = True) -> complex:
    """
    Forma cerrada r(1 - M r^{M-1} + (M-1) r^M)/(1-r)².

    Con `stable=True`, dentro de la banda |1 - r| < CLOSED_FORM_STABLE_BAND se
    delega en la suma directa: ahí la forma cerrada pierde dígitos por
    cancelación y el límite M(M-1)/2 solo es exacto a primer orden.
    Con `stable=False` se evalúa la fórmula tal cual, usando el límite cuando
    |1 - r| < CLOSED_FORM_UNIT_THRESHOLD.
    """
    if num_elements < 1:
        raise DomainError(f"M debe ser >= 1 (recibido {num_elements})")
    r = complex(r)
    m = num_elements
    if stable and abs(1 - r) < CLOSED_FORM_STABLE_BAND:
        return weighted_geometric_sum(m, r)
    if abs(1 - r) < CLOSED_FORM_UNIT_THRESHOLD:
        return complex(m * (m - 1) / 2.0)
    return r * (1 - m * r ** (m - 1) + (m - 1) * r ** m) / (1 - r) ** 2


def phase_ratio(geometry: ArrayGeometry, theta: float, phi: float) -> complex:
    """r = exp(jκ(sin φ - sin θ))"""
    return complex(np.exp(1j * geometry.wavenumber * (math.sin(phi) - math.sin(theta))))


def cross_inner_product(geometry: ArrayGeometry, theta: float, phi: float) -> complex:
    """
    ȧ(θ)^H a(φ) = jκ cos θ · S_M(r), r = exp(jκ(sin φ - sin θ)).

    Convención de la forma cerrada; el cálculo elemento a elemento desde a(θ)
    produce el negativo conjugado de este valor (ver DESIGN.md).
    """
    theta = check_angle(theta)
    phi = check_angle(phi, "phi")
    s_m = weighted_geometric_sum(geometry.num_elements, phase_ratio(geometry, theta, phi))
    return 1j * geometry.wavenumber * math.cos(theta) * s_m


def beam_response(geometry: ArrayGeometry, theta: float, x: np.ndarray) -> float:
    """Re{a(θ)^H x}"""
    return float(np.real(np.vdot(_phases(geometry, theta), x)))


@lru_cache(maxsize=16)
def search_grid_matrix(geometry: ArrayGeometry, search: SearchSpec) -> np.ndarray:
    """steering_matrix sobre la rejilla de `search`, en caché por geometría."""
    return steering_matrix(geometry, search.grid())


def _refine_peak(x: np.ndarray, geometry: ArrayGeometry, search: SearchSpec,
                 grid: np.ndarray, objective: np.ndarray) -> float:
    if np.ptp(objective) == 0.0:
        return float(grid[0])

    best = int(np.argmax(objective))
    lower = grid[max(best - 1, 0)]
    upper = grid[min(best + 1, len(grid) - 1)]

    result = minimize_scalar(
        lambda t: -beam_response(geometry, t, x),
        bounds=(lower, upper),
        method="bounded",
        options={"xatol": search.xatol},
    )
    # El refinamiento nunca debe empeorar el punto de la rejilla
    if -result.fun < objective[best]:
        return float(grid[best])
    return float(result.x)


def beam_search_batch(snapshots: np.ndarray, geometry: ArrayGeometry,
                      search: Optional[SearchSpec] = None) -> np.ndarray:
    """
    Maximizador de Re{a(θ)^H x} para cada fila de `snapshots` (N, M).

    Pasada gruesa sobre la rejilla de `search` para todo el bloque y luego
    refinamiento acotado (Brent) entre los vecinos del mejor punto. Si el
    objetivo es constante en la rejilla (x = 0) se devuelve el menor ángulo.
    """
    search = search or SearchSpec()
    snapshots = np.asarray(snapshots, dtype=complex)
    if snapshots.ndim != 2 or snapshots.shape[1] != geometry.num_elements:
        raise DomainError(
            f"Se esperaban snapshots (N, {geometry.num_elements}), llegó {snapshots.shape}"
        )

    grid = search.grid()
    objectives = np.real(search_grid_matrix(geometry, search).conj() @ snapshots.T)
    estimates = np.empty(snapshots.shape[0])
    for i, x in enumerate(snapshots):
        estimates[i] = _refine_peak(x, geometry, search, grid, objectives[:, i])
    return estimates


def beam_search(x: np.ndarray, geometry: ArrayGeometry, search: Optional[SearchSpec] = None) -> float:
    """Maximizador de Re{a(θ)^H x} sobre [-π/2, π/2] para un solo vector."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (geometry.num_elements,):
        raise DomainError(f"Se esperaba un vector de longitud {geometry.num_elements}, llegó {x.shape}")
    estimate = float(beam_search_batch(x[np.newaxis, :], geometry, search)[0])
    logger.debug(f"beam_search: θ̂={estimate:.9f}")
    return estimate
