"""Fixtures compartidas: geometría y escenarios de la evaluación de referencia."""

import math

import numpy as np
import pytest

from mcrb_bounds import Scenario
from spoofing import AttackerConfig
from ula_model import ArrayGeometry

THETA = math.radians(10.0)


@pytest.fixture
def geometry16():
    return ArrayGeometry(num_elements=16, spacing_ratio=0.5)


@pytest.fixture
def theta():
    return THETA


@pytest.fixture
def make_scenario():
    """Fábrica: M=16, θ=10°, un atacante en θ+Δ con q=1 por defecto."""

    def _make(delta_deg=0.5, noise_variance=0.1, elements=16, q=1.0, theta=THETA):
        geometry = ArrayGeometry(num_elements=elements, spacing_ratio=0.5)
        attacker = AttackerConfig.single(theta + math.radians(delta_deg), q)
        return Scenario(geometry=geometry, theta=theta, attacker=attacker, noise_variance=noise_variance)

    return _make


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_scenario(rng, max_elements=128, max_components=8):
    """Escenario aleatorio con Σ|q|² = 1, M ∈ [2, max], θ ∈ (-80°, 80°), σ² ∈ [1e-5, 1]."""
    elements = int(rng.integers(2, max_elements + 1))
    count = int(rng.integers(1, max_components + 1))
    theta = math.radians(rng.uniform(-80.0, 80.0))
    angles = tuple(float(np.clip(theta + math.radians(rng.uniform(-5.0, 5.0)), -math.pi / 2, math.pi / 2))
                   for _ in range(count))
    q = rng.standard_normal(count) + 1j * rng.standard_normal(count)
    q = q / np.linalg.norm(q)
    noise_variance = 10.0 ** rng.uniform(-5.0, 0.0)
    return Scenario(
        geometry=ArrayGeometry(num_elements=elements, spacing_ratio=0.5),
        theta=theta,
        attacker=AttackerConfig(angles=angles, precoding=tuple(q)),
        noise_variance=noise_variance,
    )
