"""
Configuración centralizada del sistema de cotas AoA bajo suplantación.

Tres capas:
- Constantes por defecto (diccionarios) con los parámetros de la evaluación
  de referencia: ULA de media longitud de onda, θ = 10°, M = 16, L = 1,
  SNR ∈ [0, 50] dB, 4,000 ensayos Monte-Carlo.
- AppConfig: ajustes del proceso leídos de variables de entorno (o `.env`).
- ExperimentConfig: esquema pydantic de un experimento, cargado desde YAML
  con claves anidadas o con notación de puntos y sobrescrito desde la CLI.
"""

from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union
import logging
import os

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from exceptions import ConfigError

logger = logging.getLogger(__name__)

# =============================================================================
# VALORES POR DEFECTO DE LA EVALUACIÓN DE REFERENCIA
# =============================================================================

ARRAY_DEFAULTS = {
    'elements': 16,
    'spacing_ratio': 0.5,  # d = λ/2 → κ = π
}

SCENARIO_DEFAULTS = {
    'theta_deg': 10.0,
    'offsets_deg': [0.0, 0.25, 0.5],
    'attacker_count': 1,
    'realizations': 200,  # realizaciones de fases aleatorias para el MCRB promedio
}

SWEEP_DEFAULTS = {
    'snr_db': [0.0, 50.0, 5.0],  # [inicio, fin, paso], fin incluido
}

SEARCH_CONFIG = {
    'grid_step_deg': 0.02,  # 9,001 puntos sobre [-90°, 90°]
    'xatol': 1e-7,          # tolerancia del refinamiento en rad
}

MC_CONFIG = {
    'trials': 4000,
    'seed': 20240601,
    'batch_size': 256,  # snapshots por bloque en la pasada gruesa
}

FIGURE_CONFIG = {
    'fig2_elements': [4, 8, 16, 32],
    'fig2_delta_max_deg': 1.0,
    'fig2_delta_step_deg': 0.01,
    'fig3_counts': [2, 4],
    'fig3_offset_deg': 0.5,
}

# Columnas de los CSV (orden fijo)
CSV_COLUMNS = {
    'bounds': ['delta_deg', 'snr_db', 'sigma2', 'gamma', 'eta', 'crb_rad2', 'penalty_rad2',
               'mcrb_rad2', 'crb_deg2', 'penalty_deg2', 'mcrb_deg2'],
    'montecarlo': ['scenario_id', 'delta_deg', 'snr_db', 'sigma2', 'trials', 'seed', 'mse_rad2',
                   'standard_error_rad2', 'crb_rad2', 'mcrb_rad2', 'mse_deg2', 'crb_deg2', 'mcrb_deg2'],
    'fig2': ['elements', 'delta_deg', 'gamma', 'eta', 'penalty_rad2', 'penalty_deg2'],
    'fig3': ['attacker_count', 'snr_db', 'sigma2', 'realizations', 'seed', 'crb_rad2',
             'mcrb_avg_rad2', 'mcrb_worst_rad2', 'penalty_avg_rad2', 'penalty_worst_rad2'],
}
CSV_COLUMNS['fig1'] = CSV_COLUMNS['montecarlo']

# Códigos de salida de la CLI
EXIT_CODES = {
    'ok': 0,
    'config': 2,
    'degenerate': 3,
    'io': 4,
}

# Colores y estilo de las figuras
COLORS = {
    'background': '#ffffff',
    'grid': 'rgba(173, 216, 230, 0.3)',
    'text': '#2c3e50',
    'series': ['#00505C', '#e74c3c', '#3498db', '#2ecc71', '#8F3F97', '#FF7E00'],
}

CHART_CONFIG = {
    'width': 720,
    'height': 480,
    'margin': dict(t=50, b=60, l=80, r=30),
    'font_family': 'Helvetica, sans-serif',
}


class PrecodingStrategy(Enum):
    """
    Estrategias de precodificación del atacante.

    - EXPLICIT: q_ℓ dados en la configuración (por defecto 1/√L)
    - RANDOM_PHASE: q_ℓ = e^{jφ_ℓ}/√L con φ_ℓ uniformes
    - WORST_CASE: fases que maximizan la penalización con |q_ℓ| = 1/√L
    - WORST_CASE_UNCONSTRAINED: magnitudes y fases libres con Σ|q_ℓ|² = 1
    """
    EXPLICIT = "explicit"
    RANDOM_PHASE = "random_phase"
    WORST_CASE = "worst_case"
    WORST_CASE_UNCONSTRAINED = "worst_case_unconstrained_magnitudes"


# =============================================================================
# AJUSTES DEL PROCESO (ENTORNO)
# =============================================================================

class AppConfig:
    """
    Ajustes del proceso que no forman parte de un experimento.
    """

    def __init__(self):
        self.log_level = 'INFO'
        self.threads = 1
        self.output_dir = Path('.')
        self._load_from_environment()

    def _load_from_environment(self):
        """Carga configuración desde variables de entorno (y `.env` si existe)."""
        load_dotenv()

        level = os.getenv('AOA_LOG_LEVEL', 'INFO').upper()
        if level in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
            self.log_level = level
        else:
            logger.warning(f"⚠️ AOA_LOG_LEVEL '{level}' no válido, usando INFO")

        threads_str = os.getenv('AOA_THREADS')
        if threads_str:
            try:
                threads = int(threads_str)
                if threads < 1:
                    raise ValueError(threads_str)
                self.threads = threads
            except ValueError:
                logger.warning(f"⚠️ AOA_THREADS '{threads_str}' no válido, usando 1")

        self.output_dir = Path(os.getenv('AOA_OUTPUT_DIR', '.'))

    def resolve_output(self, path: Optional[str]) -> Optional[Path]:
        """Rutas relativas se resuelven contra AOA_OUTPUT_DIR."""
        if path is None:
            return None
        path = Path(path)
        return path if path.is_absolute() else self.output_dir / path


def get_app_config() -> AppConfig:
    """Relee el entorno en cada llamada (la CLI la invoca una vez)."""
    return AppConfig()


# =============================================================================
# ESQUEMA DEL EXPERIMENTO
# =============================================================================

class _Section(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)


class GeometrySection(_Section):
    elements: int = Field(ARRAY_DEFAULTS['elements'], ge=2, description="Número de antenas M")
    spacing_ratio: float = Field(ARRAY_DEFAULTS['spacing_ratio'], gt=0, description="Razón d/λ")


class ScenarioSection(_Section):
    theta_deg: float = Field(SCENARIO_DEFAULTS['theta_deg'], gt=-90, lt=90,
                             description="Ángulo legítimo en grados")


class AttackerSection(_Section):
    count: int = Field(SCENARIO_DEFAULTS['attacker_count'], ge=1, description="Componentes L")
    offsets_deg: List[float] = Field(default_factory=lambda: list(SCENARIO_DEFAULTS['offsets_deg']),
                                     min_length=1, description="Desfases Δ (una variante por valor)")
    component_offsets_deg: Optional[List[float]] = Field(
        None, description="Desfase adicional por componente (longitud L)")
    strategy: PrecodingStrategy = Field(PrecodingStrategy.EXPLICIT, description="Estrategia de precodificación")
    precoding: Optional[List[str]] = Field(None, description="q_ℓ explícitos, p. ej. '0.5+0.5j'")
    realizations: int = Field(SCENARIO_DEFAULTS['realizations'], ge=1,
                              description="Realizaciones de fase para promediar")

    @field_validator('precoding')
    @classmethod
    def _parse_complex(cls, value):
        if value is None:
            return value
        parsed = []
        for item in value:
            try:
                complex(str(item).replace(' ', ''))
            except ValueError:
                raise ValueError(f"'{item}' no es un número complejo")
            parsed.append(str(item).replace(' ', ''))
        return parsed

    @model_validator(mode='after')
    def _check_lengths(self):
        if self.component_offsets_deg is not None and len(self.component_offsets_deg) != self.count:
            raise ValueError("component_offsets_deg debe tener longitud count")
        if self.precoding is not None and len(self.precoding) != self.count:
            raise ValueError("precoding debe tener longitud count")
        return self

    def precoding_values(self) -> Optional[List[complex]]:
        return None if self.precoding is None else [complex(q) for q in self.precoding]


class SweepSection(_Section):
    snr_db: Tuple[float, float, float] = Field(tuple(SWEEP_DEFAULTS['snr_db']),
                                               description="[inicio, fin, paso] en dB")

    @field_validator('snr_db')
    @classmethod
    def _check_sweep(cls, value):
        start, stop, step = value
        if step <= 0:
            raise ValueError("el paso debe ser positivo")
        if stop < start:
            raise ValueError("fin menor que inicio")
        return value

    def values(self) -> List[float]:
        start, stop, step = self.snr_db
        count = int(round((stop - start) / step)) + 1
        values = [start + i * step for i in range(count)]
        return [v for v in values if v <= stop + 1e-9 * step]


class MonteCarloSection(_Section):
    trials: int = Field(MC_CONFIG['trials'], ge=1)
    seed: int = Field(MC_CONFIG['seed'], ge=0, lt=2 ** 64)


class SearchSection(_Section):
    grid_step_deg: float = Field(SEARCH_CONFIG['grid_step_deg'], gt=0, le=180)
    xatol: float = Field(SEARCH_CONFIG['xatol'], gt=0)


class FiguresSection(_Section):
    fig2_elements: List[int] = Field(default_factory=lambda: list(FIGURE_CONFIG['fig2_elements']), min_length=1)
    fig2_delta_max_deg: float = Field(FIGURE_CONFIG['fig2_delta_max_deg'], ge=0)
    fig2_delta_step_deg: float = Field(FIGURE_CONFIG['fig2_delta_step_deg'], gt=0)
    fig3_counts: List[int] = Field(default_factory=lambda: list(FIGURE_CONFIG['fig3_counts']), min_length=1)
    fig3_offset_deg: float = Field(FIGURE_CONFIG['fig3_offset_deg'])

    @field_validator('fig2_elements', 'fig3_counts')
    @classmethod
    def _positive(cls, value):
        if any(v < 1 for v in value):
            raise ValueError("todos los valores deben ser >= 1")
        return value


class OutputSection(_Section):
    csv: Optional[str] = None
    svg: Optional[str] = None
    threads: Optional[int] = Field(None, ge=1, description="Trabajadores; sin fijar se usa AOA_THREADS")


class ExperimentConfig(_Section):
    """Configuración completa de un experimento."""
    geometry: GeometrySection = Field(default_factory=GeometrySection)
    scenario: ScenarioSection = Field(default_factory=ScenarioSection)
    attacker: AttackerSection = Field(default_factory=AttackerSection)
    sweep: SweepSection = Field(default_factory=SweepSection)
    mc: MonteCarloSection = Field(default_factory=MonteCarloSection)
    search: SearchSection = Field(default_factory=SearchSection)
    figures: FiguresSection = Field(default_factory=FiguresSection)
    output: OutputSection = Field(default_factory=OutputSection)

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode='json')

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    @classmethod
    def from_yaml(cls, text: str) -> "ExperimentConfig":
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"YAML inválido: {e}")
        if not isinstance(data, dict):
            raise ConfigError("La configuración debe ser un mapeo de claves")
        return build_config(data)


def expand_dotted(data: Dict[str, Any]) -> Dict[str, Any]:
    """{'geometry.elements': 8} → {'geometry': {'elements': 8}}"""
    nested: Dict[str, Any] = {}
    for key, value in data.items():
        if isinstance(value, dict):
            value = expand_dotted(value)
        parts = str(key).split('.')
        node = nested
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError("clave con valor escalar y subclaves a la vez", key=str(key))
            node = child
        leaf = parts[-1]
        if isinstance(value, dict) and isinstance(node.get(leaf), dict):
            node[leaf] = _merge(node[leaf], value)
        else:
            node[leaf] = value
    return nested


def _merge(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def build_config(data: Dict[str, Any]) -> ExperimentConfig:
    """Valida un diccionario (anidado o con puntos); los errores nombran la clave."""
    try:
        return ExperimentConfig.model_validate(expand_dotted(data))
    except ValidationError as e:
        first = e.errors()[0]
        key = '.'.join(str(part) for part in first['loc'] if not isinstance(part, int)) or None
        raise ConfigError(first['msg'], key=key)


def parse_override(item: str) -> Tuple[str, Any]:
    """'geometry.elements=32' → ('geometry.elements', 32)"""
    if '=' not in item:
        raise ConfigError(f"Se esperaba clave=valor, llegó '{item}'")
    key, raw = item.split('=', 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"Clave vacía en '{item}'")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError:
        raise ConfigError(f"Valor no interpretable '{raw}'", key=key)
    return key, value


def load_experiment_config(path: Optional[Union[str, Path]] = None,
                           overrides: Sequence[str] = (),
                           extra: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """
    Carga la configuración de un archivo YAML y aplica sobrescrituras.

    Args:
        path: archivo YAML (opcional; sin archivo se usan los valores por defecto)
        overrides: elementos 'clave.con.puntos=valor'
        extra: sobrescrituras ya interpretadas (banderas globales de la CLI)
    """
    data: Dict[str, Any] = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding='utf-8')
        except OSError as e:
            raise ConfigError(f"No se pudo leer el archivo de configuración: {e}")
        try:
            loaded = yaml.safe_load(text) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"YAML inválido: {e}")
        if not isinstance(loaded, dict):
            raise ConfigError("La configuración debe ser un mapeo de claves")
        data = expand_dotted(loaded)
        logger.info(f"✅ Configuración cargada desde {path}")

    updates = dict(parse_override(item) for item in overrides)
    updates.update({k: v for k, v in (extra or {}).items() if v is not None})
    if updates:
        data = _merge(data, expand_dotted(updates))
    return build_config(data)


if __name__ == "__main__":
    print("🔧 CONFIGURACIÓN POR DEFECTO")
    print("=" * 50)
    print(ExperimentConfig().to_yaml())
    print("=" * 50)
