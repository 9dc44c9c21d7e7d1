"""
Estimador ML desajustado y simulación Monte-Carlo de un solo snapshot.

Cada ensayo usa un generador derivado de (semilla global, índice de ensayo),
de modo que el resultado no depende del orden de evaluación ni del número de
trabajadores. La suma de errores cuadráticos usa math.fsum, que es exacta e
insensible al orden.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field

from config import MC_CONFIG
from exceptions import DomainError
from mcrb_bounds import Scenario
from spoofing import spoofed_mean
from ula_model import ArrayGeometry, SearchSpec, beam_search, beam_search_batch

logger = logging.getLogger(__name__)

CI_Z = 1.959963984540054  # cuantil 97.5 % de la normal


@dataclass(frozen=True)
class Snapshot:
    """Una observación x̂ = s + n del arreglo."""
    samples: np.ndarray

    def __len__(self) -> int:
        return len(self.samples)


class McResult(BaseModel):
    """Resultado Monte-Carlo de un punto (rad²)."""
    model_config = ConfigDict(frozen=True)

    mse: float = Field(..., ge=0, description="MSE E[(θ̂ - θ)²] en rad²")
    trials: int = Field(..., ge=1, description="Número de ensayos")
    seed: int = Field(..., ge=0, description="Semilla global")
    standard_error: float = Field(..., ge=0, description="Error estándar del MSE")
    snr_db: float = Field(..., description="SNR por antena en dB")

    @property
    def ci_low(self) -> float:
        """Límite inferior del intervalo de confianza al 95 %."""
        return max(0.0, self.mse - CI_Z * self.standard_error)

    @property
    def ci_high(self) -> float:
        return self.mse + CI_Z * self.standard_error


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    """Generador independiente para el ensayo `trial_index`."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(trial_index)]))


def _noise(rng: np.random.Generator, num_elements: int, noise_variance: float) -> np.ndarray:
    # CN(0, σ²): partes real e imaginaria con varianza σ²/2 cada una
    scale = math.sqrt(noise_variance / 2.0)
    return scale * (rng.standard_normal(num_elements) + 1j * rng.standard_normal(num_elements))


def draw_snapshot(scenario: Scenario, trial_index: int, seed: int,
                  mean: Optional[np.ndarray] = None) -> Snapshot:
    """
    x̂ = s + n con n ~ CN(0, σ²I).

    Args:
        mean: señal suplantada precalculada (opcional, evita recalcularla)
    """
    if mean is None:
        mean = spoofed_mean(scenario.geometry, scenario.attacker)
    rng = trial_rng(seed, trial_index)
    noise = _noise(rng, scenario.geometry.num_elements, scenario.noise_variance)
    return Snapshot(samples=mean + noise)


def ml_estimate(snapshot: Snapshot, geometry: ArrayGeometry, search: Optional[SearchSpec] = None) -> float:
    """
    θ̂ = argmax Re{a(θ)^H x} sobre [-π/2, π/2].

    Equivale a minimizar ‖x - a(θ)‖² porque ‖a(θ)‖² = M no depende de θ.
    """
    samples = np.asarray(snapshot.samples, dtype=complex)
    if samples.shape != (geometry.num_elements,):
        raise DomainError(f"Snapshot de longitud {samples.shape}, se esperaba {geometry.num_elements}")
    return beam_search(samples, geometry, search)


def _squared_errors(scenario: Scenario, trial_indices: Sequence[int], seed: int,
                    search: SearchSpec, batch_size: int) -> List[float]:
    """Errores cuadráticos (θ̂_t - θ)² para un bloque de ensayos."""
    mean = spoofed_mean(scenario.geometry, scenario.attacker)
    errors: List[float] = []
    for start in range(0, len(trial_indices), batch_size):
        block = trial_indices[start:start + batch_size]
        snapshots = np.stack([draw_snapshot(scenario, t, seed, mean=mean).samples for t in block])
        estimates = beam_search_batch(snapshots, scenario.geometry, search)
        errors.extend(float((estimate - scenario.theta) ** 2) for estimate in estimates)
    return errors


def run_mse(scenario: Scenario, trials: int, seed: int, search: Optional[SearchSpec] = None,
            workers: int = 1, batch_size: int = MC_CONFIG['batch_size']) -> McResult:
    """
    MSE del estimador ML respecto al θ legítimo.

    Args:
        scenario: escenario verdadero (atacante incluido)
        trials: número de ensayos (>= 1)
        seed: semilla global de 64 bits
        search: parámetros de la búsqueda ML
        workers: procesos de joblib; el resultado no depende de este valor
        batch_size: snapshots por bloque en la pasada gruesa
    """
    if trials < 1:
        raise DomainError(f"trials debe ser >= 1 (recibido {trials})")
    search = search or SearchSpec()
    indices = list(range(trials))

    if workers > 1:
        # Bloques múltiplos de batch_size: los lotes son los mismos con cualquier número de trabajadores
        chunk = math.ceil(math.ceil(trials / workers) / batch_size) * batch_size
        chunks = [indices[i:i + chunk] for i in range(0, trials, chunk)]
        parts = Parallel(n_jobs=workers)(
            delayed(_squared_errors)(scenario, part, seed, search, batch_size) for part in chunks
        )
        errors = [e for part in parts for e in part]
    else:
        errors = _squared_errors(scenario, indices, seed, search, batch_size)

    mse = math.fsum(errors) / trials
    if trials > 1:
        variance = math.fsum((e - mse) ** 2 for e in errors) / (trials - 1)
        standard_error = math.sqrt(variance) / math.sqrt(trials)
    else:
        standard_error = 0.0

    logger.debug(f"run_mse: SNR={scenario.snr_db:.1f} dB, {trials} ensayos, MSE={mse:.6g}")
    return McResult(mse=mse, trials=trials, seed=seed, standard_error=standard_error,
                    snr_db=scenario.snr_db)
