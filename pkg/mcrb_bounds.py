"""
Motor de cotas en forma cerrada.

Para el modelo asumido x = a(θ) + n y el modelo verdadero x̂ = s + n con
n ~ CN(0, σ²I):

    J(θ)  = 2Γ(θ)/σ²
    K(θ)  = 2Γ(θ)/σ² + (2η(θ)/σ²)²
    MCRB  = J⁻¹ K J⁻¹ = σ²/(2Γ) + η²/Γ²

con η(θ) = -κ cos θ · Im{Σ q_ℓ S_M(r_ℓ)}. La penalización η²/Γ² no depende
de σ², de ahí el piso de error independiente de la SNR.

Convención de SNR: pilotos de módulo unitario, SNR por antena = 1/σ².
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from exceptions import DegenerateScenarioError, DomainError
from spoofing import (
    AttackerConfig,
    alignment_exemption,
    component_sums,
    mismatch_vector,
    random_phase_precoding,
    spoofed_mean,
)
from ula_model import (
    HALF_PI,
    ArrayGeometry,
    SearchSpec,
    beam_search,
    check_angle,
    require_gamma,
    steering,
    steering_derivative,
)

logger = logging.getLogger(__name__)

RAD2_TO_DEG2 = (180.0 / math.pi) ** 2


def snr_db_to_noise_variance(snr_db: float) -> float:
    """σ² = 10^(-SNR_dB/10)"""
    return 10.0 ** (-float(snr_db) / 10.0)


def noise_variance_to_snr_db(noise_variance: float) -> float:
    return -10.0 * math.log10(noise_variance)


@dataclass(frozen=True)
class Scenario:
    """
    Geometría + ángulo legítimo + atacante + varianza de ruido por antena.
    """
    geometry: ArrayGeometry
    theta: float
    attacker: AttackerConfig
    noise_variance: float

    def __post_init__(self):
        theta = check_angle(self.theta)
        if abs(theta) >= HALF_PI:
            raise DegenerateScenarioError(f"θ={theta!r}: se requiere |θ| < π/2")
        if not math.isfinite(self.noise_variance) or self.noise_variance <= 0:
            raise DegenerateScenarioError(f"σ² debe ser finito y positivo (recibido {self.noise_variance!r})")
        object.__setattr__(self, "theta", theta)

    @property
    def snr_db(self) -> float:
        return noise_variance_to_snr_db(self.noise_variance)

    def with_noise_variance(self, noise_variance: float) -> "Scenario":
        return Scenario(self.geometry, self.theta, self.attacker, noise_variance)

    def with_attacker(self, attacker: AttackerConfig) -> "Scenario":
        return Scenario(self.geometry, self.theta, attacker, self.noise_variance)


class BoundReport(BaseModel):
    """Resultado de las cotas para un escenario (rad²)."""
    model_config = ConfigDict(frozen=True)

    gamma: float = Field(..., description="Γ(θ) = ‖ȧ(θ)‖²")
    eta: float = Field(..., description="η(θ), escalar de desajuste")
    crb: float = Field(..., description="CRB clásico en rad²")
    penalty: float = Field(..., description="Penalización η²/Γ² en rad²")
    mcrb: float = Field(..., description="MCRB en rad²")
    j_info: float = Field(..., description="Información de Fisher J(θ)")
    k_moment: float = Field(..., description="Segundo momento K(θ) bajo el modelo verdadero")
    aligned: bool = Field(False, description="Todos los componentes del atacante en θ")

    @model_validator(mode='after')
    def _check_invariants(self):
        if self.penalty < 0 or self.mcrb < self.crb:
            raise ValueError("Se esperaba penalty >= 0 y mcrb >= crb")
        return self

    @property
    def crb_deg2(self) -> float:
        return self.crb * RAD2_TO_DEG2

    @property
    def penalty_deg2(self) -> float:
        return self.penalty * RAD2_TO_DEG2

    @property
    def mcrb_deg2(self) -> float:
        return self.mcrb * RAD2_TO_DEG2


# =====================================
# FUNCIÓN SCORE Y SUS MOMENTOS
# =====================================

def score(x: np.ndarray, theta: float, scenario: Scenario):
    """
    u(x; θ) = (2/σ²)·Re{ȧ(θ)^H (x - a(θ))}.

    Acepta un snapshot de longitud M o un bloque (N, M); en el segundo caso
    devuelve un arreglo de N scores.
    """
    x = np.asarray(x, dtype=complex)
    if x.ndim not in (1, 2) or x.shape[-1] != scenario.geometry.num_elements:
        raise DomainError(f"Se esperaba un snapshot de longitud {scenario.geometry.num_elements}, llegó {x.shape}")
    a_dot = steering_derivative(scenario.geometry, theta)
    a = steering(scenario.geometry, theta).elements
    residual = x - a
    value = (2.0 / scenario.noise_variance) * np.real(residual @ a_dot.conj())
    return float(value) if np.ndim(value) == 0 else value


def fisher_information(scenario: Scenario) -> float:
    """J(θ) = 2Γ(θ)/σ²"""
    return 2.0 * require_gamma(scenario.geometry, scenario.theta) / scenario.noise_variance


def eta(scenario: Scenario) -> float:
    """η(θ) = -κ cos θ · Im{Σ q_ℓ S_M(r_ℓ)}, r_ℓ = exp(jκ(sin θ̂_ℓ - sin θ))."""
    geometry = scenario.geometry
    sums = component_sums(geometry, scenario.theta, scenario.attacker.angles)
    weighted = complex(np.sum(np.asarray(scenario.attacker.precoding) * sums))
    return -geometry.wavenumber * math.cos(scenario.theta) * weighted.imag


def eta_elementwise(scenario: Scenario) -> float:
    """
    η(θ) por definición: Re{ȧ(θ)^H Δ(θ)}, producto interno elemento a elemento.

    Cumple eta_elementwise(q) == -eta(conj(q)); para q real coincide η².
    """
    a_dot = steering_derivative(scenario.geometry, scenario.theta)
    delta = mismatch_vector(scenario.geometry, scenario.attacker, scenario.theta).delta
    return float(np.real(np.vdot(a_dot, delta)))


def score_mean(scenario: Scenario) -> float:
    """
    E_true[u] = (2/σ²)·η(θ) con el η de la forma cerrada.

    La media muestral del score coincide con 2·eta_elementwise/σ²; para q real
    difiere solo en el signo.
    """
    return 2.0 * eta(scenario) / scenario.noise_variance


def score_variance(scenario: Scenario) -> float:
    """Var_true[u] = 2Γ(θ)/σ²"""
    return 2.0 * require_gamma(scenario.geometry, scenario.theta) / scenario.noise_variance


def k_moment(scenario: Scenario) -> float:
    """K(θ) = Var_true[u] + E_true[u]²"""
    return score_variance(scenario) + score_mean(scenario) ** 2


def crb(scenario: Scenario) -> float:
    """CRB(θ) = σ²/(2Γ(θ))"""
    return scenario.noise_variance / (2.0 * require_gamma(scenario.geometry, scenario.theta))


def mismatch_penalty(scenario: Scenario) -> float:
    """η²/Γ², independiente de σ²"""
    gamma_value = require_gamma(scenario.geometry, scenario.theta)
    return eta(scenario) ** 2 / gamma_value ** 2


# =====================================
# LAS TRES RUTAS DEL MCRB
# =====================================

def mcrb_sandwich(scenario: Scenario) -> float:
    """J⁻¹ K J⁻¹"""
    j_info = fisher_information(scenario)
    return k_moment(scenario) / j_info ** 2


def mcrb_decomposed(scenario: Scenario) -> float:
    """CRB + η²/Γ²"""
    return crb(scenario) + mismatch_penalty(scenario)


def mcrb_explicit(scenario: Scenario) -> float:
    """Forma cerrada con Γ explícito y Im{Σ q_ℓ S_M(r_ℓ)}."""
    geometry = scenario.geometry
    require_gamma(geometry, scenario.theta)
    m = geometry.num_elements
    kappa_cos_sq = geometry.wavenumber ** 2 * math.cos(scenario.theta) ** 2
    cubic = (m - 1) * m * (2 * m - 1)
    sums = component_sums(geometry, scenario.theta, scenario.attacker.angles)
    imag_part = complex(np.sum(np.asarray(scenario.attacker.precoding) * sums)).imag
    return (3.0 * scenario.noise_variance / (kappa_cos_sq * cubic)
            + imag_part ** 2 / (kappa_cos_sq * (cubic / 6.0) ** 2))


def mcrb(scenario: Scenario) -> BoundReport:
    """Reporte completo de cotas para el escenario."""
    gamma_value = require_gamma(scenario.geometry, scenario.theta)
    eta_value = eta(scenario)
    crb_value = scenario.noise_variance / (2.0 * gamma_value)
    penalty = eta_value ** 2 / gamma_value ** 2
    j_info = 2.0 * gamma_value / scenario.noise_variance
    k_value = j_info + (2.0 * eta_value / scenario.noise_variance) ** 2
    if not all(math.isfinite(v) for v in (gamma_value, eta_value, crb_value, penalty, j_info, k_value)):
        raise DegenerateScenarioError("Cotas no finitas para el escenario")
    report = BoundReport(
        gamma=gamma_value,
        eta=eta_value,
        crb=crb_value,
        penalty=penalty,
        mcrb=crb_value + penalty,
        j_info=j_info,
        k_moment=k_value,
        aligned=alignment_exemption(scenario.attacker, scenario.theta),
    )
    logger.debug(f"mcrb: Γ={gamma_value:.6g} η={eta_value:.6g} CRB={crb_value:.6g} MCRB={report.mcrb:.6g}")
    return report


def penalty_upper_bound(scenario: Scenario) -> float:
    """
    9(Σ|q_ℓ|)²/(κ² cos²θ (2M-1)²), cota que se sigue de |S_M(r)| <= M(M-1)/2.
    """
    geometry = scenario.geometry
    require_gamma(geometry, scenario.theta)
    m = geometry.num_elements
    kappa_cos_sq = geometry.wavenumber ** 2 * math.cos(scenario.theta) ** 2
    return 9.0 * scenario.attacker.amplitude_sum ** 2 / (kappa_cos_sq * (2 * m - 1) ** 2)


def expected_random_phase_penalty(scenario: Scenario) -> float:
    """
    E[η²/Γ²] con fases uniformes independientes y |q_ℓ| = 1/√L:
    κ² cos²θ · Σ|S_M(r_ℓ)|²/(2L) / Γ².
    """
    geometry = scenario.geometry
    gamma_value = require_gamma(geometry, scenario.theta)
    sums = component_sums(geometry, scenario.theta, scenario.attacker.angles)
    count = len(sums)
    kappa_cos_sq = geometry.wavenumber ** 2 * math.cos(scenario.theta) ** 2
    return kappa_cos_sq * float(np.sum(np.abs(sums) ** 2)) / (2.0 * count) / gamma_value ** 2


def random_phase_penalties(scenario: Scenario, realizations: int, seed) -> np.ndarray:
    """Penalización para `realizations` precodificaciones de fase aleatoria."""
    if realizations < 1:
        raise ValueError(f"realizations debe ser >= 1 (recibido {realizations})")
    rng = np.random.default_rng(seed)
    count = scenario.attacker.count
    penalties = np.empty(realizations)
    for i in range(realizations):
        q = random_phase_precoding(count, rng=rng)
        penalties[i] = mismatch_penalty(scenario.with_attacker(scenario.attacker.with_precoding(q)))
    return penalties


def average_penalty(scenario: Scenario, realizations: int, seed) -> float:
    return math.fsum(random_phase_penalties(scenario, realizations, seed)) / realizations


def average_mcrb(scenario: Scenario, realizations: int, seed) -> float:
    """MCRB promedio sobre `realizations` precodificaciones de fase aleatoria."""
    return crb(scenario) + average_penalty(scenario, realizations, seed)


def pseudo_true_angle(scenario: Scenario, search_tolerance: float = 1e-7,
                      search: Optional[SearchSpec] = None) -> float:
    """
    Ángulo que minimiza ‖s - a(θ')‖² sobre [-π/2, π/2].

    Como ‖a(θ')‖² = M, equivale a maximizar Re{a(θ')^H s}. Diagnóstico: las
    cotas se evalúan siempre en el θ legítimo.
    """
    base = search or SearchSpec()
    search = SearchSpec(grid_step_deg=base.grid_step_deg, xatol=search_tolerance)
    s = spoofed_mean(scenario.geometry, scenario.attacker)
    return beam_search(s, scenario.geometry, search)
