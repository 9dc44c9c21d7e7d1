"""
Modelo del atacante: señal media suplantada s = Σ q_ℓ a(θ̂_ℓ), vector de
desajuste Δ(θ) = s - a(θ) y estrategias de precodificación (explícita, fases
aleatorias, peor caso con |q_ℓ| = 1/√L y peor caso con magnitudes libres).
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from config import PrecodingStrategy
from exceptions import DomainError
from ula_model import (
    ArrayGeometry,
    check_angle,
    phase_ratio,
    steering,
    weighted_geometric_sum,
)

logger = logging.getLogger(__name__)

POWER_TOLERANCE = 1e-12


@dataclass(frozen=True)
class AttackerConfig:
    """
    Atacante con L componentes (θ̂_ℓ en radianes, q_ℓ complejo).

    Los arreglos se guardan como tuplas para que la configuración sea inmutable
    y serializable entre procesos.
    """
    angles: Tuple[float, ...]
    precoding: Tuple[complex, ...]

    def __post_init__(self):
        angles = tuple(check_angle(a, "attacker angle") for a in self.angles)
        precoding = tuple(complex(q) for q in self.precoding)
        if len(angles) < 1:
            raise DomainError("El atacante necesita al menos un componente (L >= 1)")
        if len(angles) != len(precoding):
            raise DomainError(
                f"Ángulos ({len(angles)}) y precodificación ({len(precoding)}) con longitudes distintas"
            )
        if not all(math.isfinite(q.real) and math.isfinite(q.imag) for q in precoding):
            raise DomainError("Precodificación con valores no finitos")
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "precoding", precoding)

    @property
    def count(self) -> int:
        return len(self.angles)

    @property
    def total_power(self) -> float:
        """Σ|q_ℓ|²"""
        return float(np.sum(np.abs(np.asarray(self.precoding)) ** 2))

    @property
    def amplitude_sum(self) -> float:
        """Σ|q_ℓ|"""
        return float(np.sum(np.abs(np.asarray(self.precoding))))

    @classmethod
    def single(cls, angle: float, q: complex = 1.0) -> "AttackerConfig":
        return cls(angles=(angle,), precoding=(q,))

    def with_precoding(self, precoding: Sequence[complex]) -> "AttackerConfig":
        return AttackerConfig(angles=self.angles, precoding=tuple(precoding))


@dataclass(frozen=True)
class MismatchVector:
    """Δ(θ) = s - a(θ) evaluado en `evaluated_at`."""
    delta: np.ndarray
    evaluated_at: float

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.delta))


def spoofed_mean(geometry: ArrayGeometry, attacker: AttackerConfig) -> np.ndarray:
    """s = Σ_ℓ q_ℓ·a(θ̂_ℓ)"""
    s = np.zeros(geometry.num_elements, dtype=complex)
    for angle, q in zip(attacker.angles, attacker.precoding):
        s += q * steering(geometry, angle).elements
    return s


def mismatch_vector(geometry: ArrayGeometry, attacker: AttackerConfig, theta: float) -> MismatchVector:
    theta = check_angle(theta)
    delta = spoofed_mean(geometry, attacker) - steering(geometry, theta).elements
    return MismatchVector(delta=delta, evaluated_at=theta)


def alignment_exemption(attacker: AttackerConfig, theta: float) -> bool:
    """
    Exención por alineación perfecta: todos los componentes en θ̂_ℓ = θ.

    Se reporta por separado de η; para q complejo la forma cerrada de η no es
    cero aunque el atacante esté alineado (ver DESIGN.md).
    """
    return all(angle == theta for angle in attacker.angles)


def component_sums(geometry: ArrayGeometry, theta: float, angles: Sequence[float]) -> np.ndarray:
    """S_M(r_ℓ) para cada componente, r_ℓ = exp(jκ(sin θ̂_ℓ - sin θ))."""
    theta = check_angle(theta)
    return np.array([
        weighted_geometric_sum(geometry.num_elements, phase_ratio(geometry, theta, check_angle(a, "attacker angle")))
        for a in angles
    ], dtype=complex)


def equal_power_precoding(count: int) -> np.ndarray:
    """q_ℓ = 1/√L, todos reales."""
    if count < 1:
        raise DomainError(f"L debe ser >= 1 (recibido {count})")
    return np.full(count, 1.0 / math.sqrt(count), dtype=complex)


def random_phase_precoding(count: int, rng_seed=None, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """
    q_ℓ = (1/√L)·exp(jφ_ℓ), φ_ℓ ~ U[0, 2π).

    Determinista dado `rng_seed`; si se pasa `rng` se consume ese generador.
    """
    if count < 1:
        raise DomainError(f"L debe ser >= 1 (recibido {count})")
    rng = rng if rng is not None else np.random.default_rng(rng_seed)
    phases = rng.uniform(0.0, 2.0 * math.pi, size=count)
    return np.exp(1j * phases) / math.sqrt(count)


def worst_case_precoding(geometry: ArrayGeometry, theta: float, angles: Sequence[float]) -> np.ndarray:
    """
    Fases φ_ℓ = π/2 - arg S_M(r_ℓ) con |q_ℓ| = 1/√L.

    Cada término q_ℓ·S_M(r_ℓ) queda en +j|S_M(r_ℓ)|/√L. Si S_M(r_ℓ) = 0 la fase
    de ese componente es 0.
    """
    sums = component_sums(geometry, theta, angles)
    count = len(sums)
    phases = np.where(np.abs(sums) > 0, math.pi / 2 - np.angle(sums), 0.0)
    return np.exp(1j * phases) / math.sqrt(count)


def worst_case_unconstrained_magnitudes(geometry: ArrayGeometry, theta: float,
                                        angles: Sequence[float]) -> np.ndarray:
    """
    Óptimo de Cauchy-Schwarz sobre Σ|q_ℓ|² <= 1: |q_ℓ| ∝ |S_M(r_ℓ)|.

    Alcanza |Im{Σ q_ℓ S_M(r_ℓ)}| = ‖S‖₂. Si todas las sumas son cero se
    usa la precodificación de igual potencia.
    """
    sums = component_sums(geometry, theta, angles)
    norm = float(np.linalg.norm(sums))
    if norm == 0.0:
        return equal_power_precoding(len(sums))
    phases = np.where(np.abs(sums) > 0, math.pi / 2 - np.angle(sums), 0.0)
    return np.abs(sums) / norm * np.exp(1j * phases)


def build_attacker(geometry: ArrayGeometry, theta: float, angles: Sequence[float],
                   strategy: PrecodingStrategy = PrecodingStrategy.EXPLICIT,
                   precoding: Optional[Sequence[complex]] = None,
                   rng_seed=None) -> AttackerConfig:
    """Construye un AttackerConfig aplicando la estrategia pedida."""
    angles = tuple(angles)
    if strategy == PrecodingStrategy.EXPLICIT:
        q = np.asarray(precoding, dtype=complex) if precoding is not None else equal_power_precoding(len(angles))
    elif strategy == PrecodingStrategy.RANDOM_PHASE:
        q = random_phase_precoding(len(angles), rng_seed)
    elif strategy == PrecodingStrategy.WORST_CASE:
        q = worst_case_precoding(geometry, theta, angles)
    elif strategy == PrecodingStrategy.WORST_CASE_UNCONSTRAINED:
        q = worst_case_unconstrained_magnitudes(geometry, theta, angles)
    else:
        raise DomainError(f"Estrategia de precodificación desconocida: {strategy}")

    attacker = AttackerConfig(angles=angles, precoding=tuple(q))
    if strategy != PrecodingStrategy.EXPLICIT and abs(attacker.total_power - 1.0) > POWER_TOLERANCE:
        # solo puede fallar por redondeo grave
        raise DomainError(f"Restricción de potencia violada: Σ|q|² = {attacker.total_power!r}")
    return attacker
