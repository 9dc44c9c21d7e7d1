"""
Punto de entrada de línea de comandos.

    python cli.py [--config archivo.yaml] [--seed N] [--out tabla.csv]
                  [--svg figura.svg] [--threads N] [--set clave=valor ...]
                  {bounds,fig1,fig2,fig3,montecarlo}

El CSV va a `--out` o, si no se indica, a stdout. Los logs van a stderr.
Códigos de salida: 0 éxito, 2 configuración, 3 escenario degenerado, 4 E/S.
"""

import argparse
import logging
import sys
from typing import Callable, Dict, List, Optional

import pandas as pd

from config import EXIT_CODES, get_app_config, load_experiment_config
from exceptions import ConfigError, DegenerateScenarioError, DomainError, OutputError
from experiments import ExperimentService, render_csv, write_csv
from visualization import create_figure, write_figure

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

COMMANDS: Dict[str, Callable[[ExperimentService], pd.DataFrame]] = {
    'bounds': ExperimentService.bounds_table,
    'fig1': ExperimentService.fig1_table,
    'fig2': ExperimentService.fig2_table,
    'fig3': ExperimentService.fig3_table,
    'montecarlo': ExperimentService.montecarlo_table,
}

# montecarlo comparte columnas con fig1; bounds no tiene figura
FIGURE_KINDS = {'fig1': 'fig1', 'fig2': 'fig2', 'fig3': 'fig3', 'montecarlo': 'fig1'}

COMMAND_HELP = {
    'bounds': "CRB, penalización y MCRB por (Δ, SNR) sin simulación",
    'fig1': "MSE Monte-Carlo vs SNR para Δ ∈ {0°, 0.25°, 0.5°}",
    'fig2': "Penalización vs Δ para varios M",
    'fig3': "MCRB promedio y de peor caso vs SNR para varios L",
    'montecarlo': "MSE Monte-Carlo con la configuración dada",
}


def _global_options() -> argparse.ArgumentParser:
    # default=SUPPRESS permite usar las banderas antes o después del subcomando
    parent = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    parent.add_argument('--config', help='Archivo YAML de configuración')
    parent.add_argument('--seed', type=int, help='Semilla global (u64)')
    parent.add_argument('--out', help='Ruta del CSV (por defecto stdout)')
    parent.add_argument('--svg', help='Ruta de la figura (.svg requiere kaleido; .html no)')
    parent.add_argument('--threads', type=int, help='Trabajadores para Monte-Carlo')
    parent.add_argument('--set', dest='overrides', action='append', metavar='CLAVE=VALOR',
                        help='Sobrescribe una clave con notación de puntos (repetible)')
    return parent


def build_parser() -> argparse.ArgumentParser:
    common = _global_options()
    parser = argparse.ArgumentParser(
        prog='aoa-mcrb',
        description='Cotas CRB/MCRB para estimación de AoA en un ULA bajo suplantación',
        parents=[common],
    )
    subparsers = parser.add_subparsers(dest='command', required=True, metavar='COMANDO')
    for name in COMMANDS:
        subparsers.add_parser(name, parents=[common], help=COMMAND_HELP[name])
    return parser


def _configure_logging(level: str) -> None:
    logging.basicConfig(level=getattr(logging, level, logging.INFO), format=LOG_FORMAT, stream=sys.stderr)


def run(args: argparse.Namespace) -> int:
    """Ejecuta el subcomando ya interpretado y devuelve el código de salida."""
    app_config = get_app_config()
    extra = {
        'mc.seed': getattr(args, 'seed', None),
        'output.csv': getattr(args, 'out', None),
        'output.svg': getattr(args, 'svg', None),
        'output.threads': getattr(args, 'threads', None),
    }
    config = load_experiment_config(getattr(args, 'config', None), getattr(args, 'overrides', None) or (), extra)

    # bandera o archivo > AOA_THREADS
    threads = config.output.threads if config.output.threads is not None else app_config.threads
    service = ExperimentService(config=config, threads=threads)

    logger.info(f"🚀 Ejecutando '{args.command}' (semilla {config.mc.seed}, {threads} trabajador(es))")
    table = COMMANDS[args.command](service)

    csv_path = app_config.resolve_output(config.output.csv)
    if csv_path is not None:
        write_csv(table, csv_path)
    else:
        sys.stdout.write(render_csv(table))
        sys.stdout.flush()

    svg_path = app_config.resolve_output(config.output.svg)
    if svg_path is not None:
        kind = FIGURE_KINDS.get(args.command)
        if kind is None:
            logger.warning(f"⚠️ '{args.command}' no genera figura; se ignora --svg")
        else:
            write_figure(create_figure(kind, table), svg_path)

    if service.errors:
        logger.error(f"❌ {len(service.errors)} punto(s) degenerado(s) omitidos")
        return EXIT_CODES['degenerate']
    logger.info(f"✅ '{args.command}' completado: {len(table)} filas")
    return EXIT_CODES['ok']


def main(argv: Optional[List[str]] = None) -> int:
    """Entrada de la CLI; devuelve el código de salida sin terminar el proceso."""
    _configure_logging(get_app_config().log_level)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse sale con 2 ante argumentos inválidos y 0 con --help
        return int(e.code or 0)

    try:
        return run(args)
    except ConfigError as e:
        logger.error(f"❌ Configuración inválida: {e}")
        return EXIT_CODES['config']
    except (DegenerateScenarioError, DomainError) as e:
        logger.error(f"❌ Escenario degenerado: {e}")
        return EXIT_CODES['degenerate']
    except (OutputError, OSError) as e:
        logger.error(f"❌ Error de E/S: {e}")
        return EXIT_CODES['io']


if __name__ == "__main__":
    sys.exit(main())
