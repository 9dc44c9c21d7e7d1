"""
Servicio de experimentos: construye escenarios a partir de ExperimentConfig y
produce las tablas (pandas) de los subcomandos bounds, fig1, fig2, fig3 y
montecarlo.

Los puntos degenerados no generan filas; se registran en `errors` y en el
log, y la CLI termina con código 3.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import pandas as pd
from joblib import Parallel, delayed

from config import CSV_COLUMNS, ExperimentConfig, PrecodingStrategy
from estimation import run_mse
from exceptions import DegenerateScenarioError, DomainError, OutputError
from mcrb_bounds import (
    RAD2_TO_DEG2,
    Scenario,
    crb,
    mcrb,
    mismatch_penalty,
    random_phase_penalties,
    snr_db_to_noise_variance,
)
from spoofing import build_attacker
from ula_model import ArrayGeometry, SearchSpec

logger = logging.getLogger(__name__)


@dataclass
class RowError:
    """Punto del barrido que no pudo evaluarse."""
    label: str
    message: str


@dataclass
class ExperimentService:
    """
    Orquesta los barridos de un experimento.

    Args:
        config: configuración validada
        threads: trabajadores de joblib para los puntos Monte-Carlo
    """
    config: ExperimentConfig
    threads: int = 1
    errors: List[RowError] = field(default_factory=list)

    # =====================================
    # CONSTRUCCIÓN DE ESCENARIOS
    # =====================================

    @property
    def search(self) -> SearchSpec:
        return SearchSpec(grid_step_deg=self.config.search.grid_step_deg, xatol=self.config.search.xatol)

    @property
    def theta(self) -> float:
        return math.radians(self.config.scenario.theta_deg)

    def geometry(self, elements: Optional[int] = None) -> ArrayGeometry:
        return ArrayGeometry(
            num_elements=elements if elements is not None else self.config.geometry.elements,
            spacing_ratio=self.config.geometry.spacing_ratio,
        )

    def attacker_angles(self, delta_deg: float, count: Optional[int] = None) -> Tuple[float, ...]:
        """θ̂_ℓ = θ + Δ (+ desfase por componente si está configurado)."""
        attacker = self.config.attacker
        count = count if count is not None else attacker.count
        extra = attacker.component_offsets_deg
        if extra is None or len(extra) != count:
            extra = [0.0] * count
        return tuple(math.radians(self.config.scenario.theta_deg + delta_deg + e) for e in extra)

    def build_scenario(self, delta_deg: float, noise_variance: float, elements: Optional[int] = None,
                       count: Optional[int] = None, strategy: Optional[PrecodingStrategy] = None,
                       variant: int = 0) -> Scenario:
        attacker_cfg = self.config.attacker
        count = count if count is not None else attacker_cfg.count
        strategy = strategy or attacker_cfg.strategy
        geometry = self.geometry(elements)
        precoding = attacker_cfg.precoding_values() if count == attacker_cfg.count else None
        attacker = build_attacker(
            geometry,
            self.theta,
            self.attacker_angles(delta_deg, count),
            strategy=strategy,
            precoding=precoding,
            rng_seed=[self.config.mc.seed, variant],
        )
        return Scenario(geometry=geometry, theta=self.theta, attacker=attacker, noise_variance=noise_variance)

    def _record_error(self, label: str, error: Exception) -> None:
        logger.error(f"❌ Punto degenerado {label}: {error}")
        self.errors.append(RowError(label=label, message=str(error)))

    # =====================================
    # TABLAS
    # =====================================

    def bounds_table(self) -> pd.DataFrame:
        """Una fila por (Δ, SNR) con CRB, penalización y MCRB."""
        rows = []
        for variant, delta_deg in enumerate(self.config.attacker.offsets_deg):
            for snr_db in self.config.sweep.values():
                sigma2 = snr_db_to_noise_variance(snr_db)
                try:
                    report = mcrb(self.build_scenario(delta_deg, sigma2, variant=variant))
                except (DegenerateScenarioError, DomainError) as e:
                    self._record_error(f"delta_deg={delta_deg} snr_db={snr_db}", e)
                    continue
                rows.append({
                    'delta_deg': delta_deg,
                    'snr_db': snr_db,
                    'sigma2': sigma2,
                    'gamma': report.gamma,
                    'eta': report.eta,
                    'crb_rad2': report.crb,
                    'penalty_rad2': report.penalty,
                    'mcrb_rad2': report.mcrb,
                    'crb_deg2': report.crb_deg2,
                    'penalty_deg2': report.penalty_deg2,
                    'mcrb_deg2': report.mcrb_deg2,
                })
        logger.info(f"✅ Tabla de cotas: {len(rows)} filas")
        return pd.DataFrame(rows, columns=CSV_COLUMNS['bounds'])

    def montecarlo_table(self, offsets_deg: Optional[Sequence[float]] = None, prefix: str = "mc") -> pd.DataFrame:
        """
        MSE Monte-Carlo por (Δ, SNR) junto con CRB y MCRB.

        Los puntos se reparten entre `threads` trabajadores; joblib devuelve
        los resultados en el orden de envío.
        """
        offsets = list(offsets_deg if offsets_deg is not None else self.config.attacker.offsets_deg)
        trials, seed = self.config.mc.trials, self.config.mc.seed
        search = self.search

        points = []
        for variant, delta_deg in enumerate(offsets):
            for snr_db in self.config.sweep.values():
                sigma2 = snr_db_to_noise_variance(snr_db)
                try:
                    scenario = self.build_scenario(delta_deg, sigma2, variant=variant)
                    report = mcrb(scenario)
                except (DegenerateScenarioError, DomainError) as e:
                    self._record_error(f"delta_deg={delta_deg} snr_db={snr_db}", e)
                    continue
                points.append((f"{prefix}-delta{delta_deg:g}", delta_deg, snr_db, scenario, report))

        logger.info(f"🔍 Monte-Carlo: {len(points)} puntos x {trials} ensayos, {self.threads} trabajador(es)")
        if self.threads > 1:
            results = Parallel(n_jobs=self.threads)(
                delayed(run_mse)(p[3], trials, seed, search) for p in points
            )
        else:
            results = []
            for p in points:
                results.append(run_mse(p[3], trials, seed, search))
                logger.info(f"   📈 {p[0]} SNR={p[2]:g} dB: MSE={results[-1].mse:.4g} rad²")

        rows = []
        for (scenario_id, delta_deg, snr_db, scenario, report), result in zip(points, results):
            rows.append({
                'scenario_id': scenario_id,
                'delta_deg': delta_deg,
                'snr_db': snr_db,
                'sigma2': scenario.noise_variance,
                'trials': result.trials,
                'seed': result.seed,
                'mse_rad2': result.mse,
                'standard_error_rad2': result.standard_error,
                'crb_rad2': report.crb,
                'mcrb_rad2': report.mcrb,
                'mse_deg2': result.mse * RAD2_TO_DEG2,
                'crb_deg2': report.crb_deg2,
                'mcrb_deg2': report.mcrb_deg2,
            })
        return pd.DataFrame(rows, columns=CSV_COLUMNS['montecarlo'])

    def fig1_table(self) -> pd.DataFrame:
        """MSE vs SNR para cada Δ configurado (por defecto 0°, 0.25°, 0.5°)."""
        return self.montecarlo_table(prefix="fig1")

    def fig2_table(self) -> pd.DataFrame:
        """Penalización η²/Γ² sobre la rejilla Δ ∈ [0, Δ_max] x M."""
        figures = self.config.figures
        num_deltas = int(round(figures.fig2_delta_max_deg / figures.fig2_delta_step_deg)) + 1
        deltas = [round(i * figures.fig2_delta_step_deg, 12) for i in range(num_deltas)]
        # la penalización no depende de σ²; se usa σ² = 1
        rows = []
        for elements in figures.fig2_elements:
            for delta_deg in deltas:
                try:
                    report = mcrb(self.build_scenario(delta_deg, 1.0, elements=elements))
                except (DegenerateScenarioError, DomainError) as e:
                    self._record_error(f"elements={elements} delta_deg={delta_deg}", e)
                    continue
                rows.append({
                    'elements': elements,
                    'delta_deg': delta_deg,
                    'gamma': report.gamma,
                    'eta': report.eta,
                    'penalty_rad2': report.penalty,
                    'penalty_deg2': report.penalty_deg2,
                })
        logger.info(f"✅ Figura 2: {len(rows)} filas")
        return pd.DataFrame(rows, columns=CSV_COLUMNS['fig2'])

    def fig3_table(self) -> pd.DataFrame:
        """CRB, MCRB promedio (fases aleatorias) y MCRB de peor caso vs SNR para cada L."""
        figures = self.config.figures
        realizations, seed = self.config.attacker.realizations, self.config.mc.seed
        rows = []
        for count in figures.fig3_counts:
            label = f"attacker_count={count}"
            try:
                worst = self.build_scenario(figures.fig3_offset_deg, 1.0, count=count,
                                            strategy=PrecodingStrategy.WORST_CASE)
                random_base = self.build_scenario(figures.fig3_offset_deg, 1.0, count=count,
                                                  strategy=PrecodingStrategy.RANDOM_PHASE)
                penalty_worst = mismatch_penalty(worst)
                penalties = random_phase_penalties(random_base, realizations, [seed, count])
                penalty_avg = math.fsum(penalties) / realizations
            except (DegenerateScenarioError, DomainError) as e:
                self._record_error(label, e)
                continue

            for snr_db in self.config.sweep.values():
                sigma2 = snr_db_to_noise_variance(snr_db)
                crb_value = crb(worst.with_noise_variance(sigma2))
                rows.append({
                    'attacker_count': count,
                    'snr_db': snr_db,
                    'sigma2': sigma2,
                    'realizations': realizations,
                    'seed': seed,
                    'crb_rad2': crb_value,
                    'mcrb_avg_rad2': crb_value + penalty_avg,
                    'mcrb_worst_rad2': crb_value + penalty_worst,
                    'penalty_avg_rad2': penalty_avg,
                    'penalty_worst_rad2': penalty_worst,
                })
            logger.info(f"   📊 L={count}: penalización promedio={penalty_avg:.4g}, peor caso={penalty_worst:.4g} rad²")
        return pd.DataFrame(rows, columns=CSV_COLUMNS['fig3'])


def render_csv(table: pd.DataFrame) -> str:
    """CSV UTF-8 con cabecera, separador decimal '.' y precisión completa."""
    return table.to_csv(index=False, lineterminator='\n')


def write_csv(table: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(render_csv(table), encoding='utf-8')
    except OSError as e:
        raise OutputError(f"No se pudo escribir {path}: {e}")
    logger.info(f"💾 CSV escrito en {path} ({len(table)} filas)")
    return path
