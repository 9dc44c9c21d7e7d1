"""
Módulo de visualización: figuras plotly de las tablas de experimentos.

Cada figura usa eje y logarítmico, leyenda y títulos de ejes. El CSV es la
salida de referencia; las figuras son solo para visualizar.
"""

import logging
from pathlib import Path
from typing import Union

import pandas as pd
import plotly.graph_objects as go

from config import CHART_CONFIG, COLORS
from exceptions import OutputError

logger = logging.getLogger(__name__)


class FigureVisualizer:
    """Construye las figuras de los subcomandos fig1, fig2 y fig3."""

    @staticmethod
    def _base_layout(fig: go.Figure, title: str, x_title: str, y_title: str) -> go.Figure:
        fig.update_layout(
            title=dict(text=title, font=dict(size=16, family=CHART_CONFIG['font_family'])),
            width=CHART_CONFIG['width'],
            height=CHART_CONFIG['height'],
            margin=CHART_CONFIG['margin'],
            paper_bgcolor=COLORS['background'],
            plot_bgcolor=COLORS['background'],
            font=dict(family=CHART_CONFIG['font_family'], color=COLORS['text']),
            legend=dict(bgcolor='rgba(255,255,255,0.8)'),
        )
        fig.update_xaxes(title_text=x_title, gridcolor=COLORS['grid'])
        fig.update_yaxes(title_text=y_title, type='log', exponentformat='power', gridcolor=COLORS['grid'])
        return fig

    @staticmethod
    def _color(index: int) -> str:
        palette = COLORS['series']
        return palette[index % len(palette)]

    @staticmethod
    def _positive(frame: pd.DataFrame, column: str) -> pd.DataFrame:
        # el eje log no admite ceros (Δ = 0 ⇒ penalización 0)
        return frame[frame[column] > 0]

    @staticmethod
    def create_fig1(table: pd.DataFrame) -> go.Figure:
        """MSE Monte-Carlo, CRB y MCRB vs SNR, una familia por Δ."""
        fig = go.Figure()
        for i, (delta, group) in enumerate(table.groupby('delta_deg', sort=True)):
            color = FigureVisualizer._color(i)
            fig.add_trace(go.Scatter(x=group['snr_db'], y=group['mse_deg2'], mode='markers',
                                     name=f"MSE Δ={delta:g}°", marker=dict(color=color, size=8)))
            fig.add_trace(go.Scatter(x=group['snr_db'], y=group['mcrb_deg2'], mode='lines',
                                     name=f"MCRB Δ={delta:g}°", line=dict(color=color)))
        if not table.empty:
            crb = table.drop_duplicates('snr_db').sort_values('snr_db')
            fig.add_trace(go.Scatter(x=crb['snr_db'], y=crb['crb_deg2'], mode='lines', name="CRB",
                                     line=dict(color='black', dash='dash')))
        return FigureVisualizer._base_layout(fig, "MSE vs SNR bajo suplantación", "SNR (dB)", "MSE (deg²)")

    @staticmethod
    def create_fig2(table: pd.DataFrame) -> go.Figure:
        """Penalización η²/Γ² vs Δ, una línea por M."""
        fig = go.Figure()
        for i, (elements, group) in enumerate(table.groupby('elements', sort=True)):
            group = FigureVisualizer._positive(group, 'penalty_deg2')
            fig.add_trace(go.Scatter(x=group['delta_deg'], y=group['penalty_deg2'], mode='lines',
                                     name=f"M={elements}", line=dict(color=FigureVisualizer._color(i))))
        return FigureVisualizer._base_layout(fig, "Penalización por desajuste vs Δ", "Δ (deg)",
                                             "Penalización (deg²)")

    @staticmethod
    def create_fig3(table: pd.DataFrame) -> go.Figure:
        """CRB, MCRB promedio y MCRB de peor caso vs SNR para cada L."""
        fig = go.Figure()
        for i, (count, group) in enumerate(table.groupby('attacker_count', sort=True)):
            color = FigureVisualizer._color(i)
            fig.add_trace(go.Scatter(x=group['snr_db'], y=group['mcrb_avg_rad2'], mode='lines+markers',
                                     name=f"MCRB promedio L={count}", line=dict(color=color)))
            fig.add_trace(go.Scatter(x=group['snr_db'], y=group['mcrb_worst_rad2'], mode='lines',
                                     name=f"MCRB peor caso L={count}", line=dict(color=color, dash='dot')))
        if not table.empty:
            crb = table.drop_duplicates('snr_db').sort_values('snr_db')
            fig.add_trace(go.Scatter(x=crb['snr_db'], y=crb['crb_rad2'], mode='lines', name="CRB",
                                     line=dict(color='black', dash='dash')))
        return FigureVisualizer._base_layout(fig, "MCRB promedio y de peor caso vs SNR", "SNR (dB)",
                                             "Cota (rad²)")


FIGURE_BUILDERS = {
    'fig1': FigureVisualizer.create_fig1,
    'fig2': FigureVisualizer.create_fig2,
    'fig3': FigureVisualizer.create_fig3,
}


def create_figure(kind: str, table: pd.DataFrame) -> go.Figure:
    """Construye la figura `kind` ('fig1', 'fig2' o 'fig3')."""
    return FIGURE_BUILDERS[kind](table)


def write_figure(fig: go.Figure, path: Union[str, Path]) -> Path:
    """
    Escribe la figura: `.html` con plotly directamente, cualquier otra
    extensión (`.svg`, `.png`, `.pdf`) con kaleido.
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if path.suffix.lower() == '.html':
            fig.write_html(str(path), include_plotlyjs='cdn')
        else:
            fig.write_image(str(path), format=path.suffix.lstrip('.').lower() or 'svg')
    except (OSError, ValueError) as e:
        raise OutputError(f"No se pudo escribir la figura {path}: {e}")
    logger.info(f"🖼️ Figura escrita en {path}")
    return path
