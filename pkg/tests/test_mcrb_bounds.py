import math

import numpy as np
import pytest

from exceptions import DegenerateScenarioError, DomainError
from mcrb_bounds import (
    RAD2_TO_DEG2,
    Scenario,
    average_mcrb,
    crb,
    eta,
    eta_elementwise,
    expected_random_phase_penalty,
    fisher_information,
    k_moment,
    mcrb,
    mcrb_decomposed,
    mcrb_explicit,
    mcrb_sandwich,
    mismatch_penalty,
    noise_variance_to_snr_db,
    penalty_upper_bound,
    pseudo_true_angle,
    random_phase_penalties,
    score,
    score_mean,
    score_variance,
    snr_db_to_noise_variance,
)
from spoofing import AttackerConfig, worst_case_precoding
from tests.conftest import random_scenario
from ula_model import ArrayGeometry, gamma, steering, steering_derivative


def _no_attack(elements=2, theta=0.0, noise_variance=1.0):
    return Scenario(ArrayGeometry(elements), theta, AttackerConfig.single(theta), noise_variance)


def test_snr_convention():
    assert snr_db_to_noise_variance(50) == pytest.approx(1e-5, rel=1e-14)
    assert snr_db_to_noise_variance(0) == 1.0
    assert noise_variance_to_snr_db(0.1) == pytest.approx(10.0)


def test_scenario_rejects_degenerate_inputs(geometry16):
    attacker = AttackerConfig.single(0.0)
    with pytest.raises(DegenerateScenarioError):
        Scenario(geometry16, math.pi / 2, attacker, 1.0)
    with pytest.raises(DegenerateScenarioError):
        Scenario(geometry16, 0.0, attacker, 0.0)
    with pytest.raises(DegenerateScenarioError):
        Scenario(geometry16, 0.0, attacker, float("inf"))


def test_score_vanishes_at_assumed_mean(make_scenario, theta):
    scenario = make_scenario()
    assert score(steering(scenario.geometry, theta).elements, theta, scenario) == pytest.approx(0.0, abs=1e-9)


def test_score_along_derivative_equals_gamma(make_scenario, theta):
    scenario = make_scenario()
    a_dot = steering_derivative(scenario.geometry, theta)
    x = steering(scenario.geometry, theta).elements + a_dot * scenario.noise_variance / 2
    assert score(x, theta, scenario) == pytest.approx(gamma(scenario.geometry, theta), rel=1e-12)


@pytest.mark.parametrize("shape", [(15,), (17,), (3, 8), (2, 2, 16), ()])
def test_score_rejects_wrong_snapshot_shape(make_scenario, shape):
    with pytest.raises(DomainError):
        score(np.ones(shape, dtype=complex), 0.0, make_scenario())


def test_score_accepts_snapshot_block(make_scenario, theta):
    scenario = make_scenario()
    block = np.vstack([steering(scenario.geometry, theta).elements] * 3)
    np.testing.assert_allclose(score(block, theta, scenario), np.zeros(3), atol=1e-9)


def test_fisher_information_reference_values(make_scenario, theta):
    assert fisher_information(_no_attack()) == pytest.approx(2 * math.pi ** 2, rel=1e-14)
    expected = 20 * math.pi ** 2 * math.cos(theta) ** 2 * 1240
    assert fisher_information(make_scenario(noise_variance=0.1)) == pytest.approx(expected, rel=1e-12)
    assert fisher_information(make_scenario(noise_variance=0.05)) == pytest.approx(
        2 * fisher_information(make_scenario(noise_variance=0.1)), rel=1e-14)


def test_crb_reference_values(make_scenario, theta):
    assert crb(_no_attack()) == pytest.approx(1 / (2 * math.pi ** 2), rel=1e-14)
    expected = 3e-5 / (math.pi ** 2 * math.cos(theta) ** 2 * 7440)
    assert crb(make_scenario(noise_variance=1e-5)) == pytest.approx(expected, rel=1e-12)
    assert crb(make_scenario(noise_variance=0.2)) == pytest.approx(2 * crb(make_scenario(noise_variance=0.1)),
                                                                   rel=1e-14)


def test_eta_zero_without_mismatch(make_scenario):
    scenario = make_scenario(delta_deg=0.0)
    assert eta(scenario) == 0.0
    assert eta_elementwise(scenario) == pytest.approx(0.0, abs=1e-9)
    assert k_moment(scenario) == fisher_information(scenario)


def test_eta_matches_elementwise_oracle(make_scenario):
    scenario = make_scenario(delta_deg=0.5)
    assert eta(scenario) ** 2 == pytest.approx(eta_elementwise(scenario) ** 2, rel=1e-10)


def test_eta_conjugate_relation_for_complex_precoding(rng, geometry16, theta):
    for _ in range(50):
        count = int(rng.integers(1, 5))
        angles = tuple(theta + math.radians(d) for d in rng.uniform(-3, 3, size=count))
        q = rng.standard_normal(count) + 1j * rng.standard_normal(count)
        scenario = Scenario(geometry16, theta, AttackerConfig(angles, tuple(q)), 0.1)
        conjugated = scenario.with_attacker(AttackerConfig(angles, tuple(np.conj(q))))
        assert eta_elementwise(scenario) == pytest.approx(-eta(conjugated), rel=1e-9, abs=1e-9)


def test_aligned_complex_precoding_flags_exemption(geometry16, theta):
    scenario = Scenario(geometry16, theta, AttackerConfig.single(theta, 1j), 0.1)
    report = mcrb(scenario)
    assert report.aligned
    # la forma cerrada ve Im{q·S_M(1)} ≠ 0 aunque el atacante esté alineado
    assert report.eta != 0.0


def test_no_attack_mcrb_equals_crb(make_scenario):
    report = mcrb(make_scenario(delta_deg=0.0))
    assert report.penalty == 0.0
    assert report.mcrb == report.crb
    assert report.k_moment == report.j_info
    assert report.aligned


def test_mcrb_floor_at_high_snr(make_scenario):
    penalty = mismatch_penalty(make_scenario())
    assert mcrb(make_scenario(noise_variance=1e-12)).mcrb == pytest.approx(penalty, rel=1e-6)


def test_three_mcrb_routes_agree_on_reference(make_scenario):
    scenario = make_scenario(delta_deg=0.5, noise_variance=0.1)
    sandwich = mcrb_sandwich(scenario)
    assert mcrb_decomposed(scenario) == pytest.approx(sandwich, rel=1e-12)
    assert mcrb_explicit(scenario) == pytest.approx(sandwich, rel=1e-12)
    assert mcrb(scenario).mcrb == pytest.approx(sandwich, rel=1e-12)


@pytest.mark.slow
def test_three_mcrb_routes_agree_on_random_scenarios(rng):
    for _ in range(10_000):
        scenario = random_scenario(rng)
        sandwich = mcrb_sandwich(scenario)
        report = mcrb(scenario)
        assert mcrb_decomposed(scenario) == pytest.approx(sandwich, rel=1e-12)
        assert mcrb_explicit(scenario) == pytest.approx(sandwich, rel=1e-12)
        assert report.mcrb >= report.crb
        assert report.mcrb == pytest.approx(report.crb + report.penalty, rel=1e-12)
        assert report.crb == pytest.approx(scenario.noise_variance / (2 * report.gamma), rel=1e-12)
        assert report.penalty <= penalty_upper_bound(scenario) * (1 + 1e-9)


def test_report_degree_columns(make_scenario):
    report = mcrb(make_scenario())
    assert report.mcrb_deg2 == pytest.approx(report.mcrb * (180 / math.pi) ** 2, rel=1e-14)
    assert report.crb_deg2 == report.crb * RAD2_TO_DEG2


def test_penalty_independent_of_noise(make_scenario):
    penalties = {mcrb(make_scenario(noise_variance=s)).penalty for s in (1.0, 0.1, 1e-3, 1e-5)}
    assert len(penalties) == 1


def test_penalty_upper_bound_reference(make_scenario, theta):
    expected = 9 / (math.pi ** 2 * math.cos(theta) ** 2 * 961)
    assert penalty_upper_bound(make_scenario()) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("elements", [4, 8, 16, 32, 64, 128])
def test_penalty_scaling_in_elements(elements, theta):
    geometry = ArrayGeometry(elements)
    for delta in (0.1, 0.5, 1.0, 3.0, 10.0):
        scenario = Scenario(geometry, theta, AttackerConfig.single(theta + math.radians(delta)), 1.0)
        bound = 9 / (math.pi ** 2 * math.cos(theta) ** 2)
        assert mismatch_penalty(scenario) * (2 * elements - 1) ** 2 <= bound * (1 + 1e-9)


def test_worst_case_penalty_grows_at_most_linearly(geometry16, theta):
    angle = theta + math.radians(0.5)
    penalties = []
    for count in (1, 2, 4, 8):
        angles = (angle,) * count
        q = worst_case_precoding(geometry16, theta, angles)
        penalties.append(mismatch_penalty(Scenario(geometry16, theta, AttackerConfig(angles, tuple(q)), 1.0)))
    for smaller, larger in zip(penalties, penalties[1:]):
        assert larger / smaller <= 2 + 1e-9


def test_score_moments_match_monte_carlo(make_scenario, theta):
    scenario = make_scenario(delta_deg=0.5, noise_variance=0.1)
    rng = np.random.default_rng(2024)
    draws = 100_000
    s = steering(scenario.geometry, theta + math.radians(0.5)).elements
    noise = math.sqrt(0.05) * (rng.standard_normal((draws, 16)) + 1j * rng.standard_normal((draws, 16)))
    u = score(s + noise, theta, scenario)

    # la media empírica sigue la definición Re{ȧ^H Δ}; la forma cerrada de η difiere en el signo
    mean_expected = 2 * eta_elementwise(scenario) / scenario.noise_variance
    assert abs(score_mean(scenario)) == pytest.approx(abs(mean_expected), rel=1e-9)
    assert abs(u.mean() - mean_expected) <= 3 * u.std(ddof=1) / math.sqrt(draws)

    variance = u.var(ddof=1)
    assert abs(variance - score_variance(scenario)) <= 3 * score_variance(scenario) * math.sqrt(2 / (draws - 1))

    second = u ** 2
    assert abs(second.mean() - k_moment(scenario)) <= 3 * second.std(ddof=1) / math.sqrt(draws)


def test_expected_random_phase_penalty_matches_average(geometry16, theta):
    angles = tuple(theta + math.radians(d) for d in (0.5, 0.5, 0.25, 0.75))
    scenario = Scenario(geometry16, theta, AttackerConfig(angles, (0.5,) * 4), 1.0)
    penalties = random_phase_penalties(scenario, 4000, seed=11)
    expected = expected_random_phase_penalty(scenario)
    standard_error = penalties.std(ddof=1) / math.sqrt(len(penalties))
    assert abs(penalties.mean() - expected) <= 4 * standard_error
    assert average_mcrb(scenario, 4000, 11) == pytest.approx(crb(scenario) + penalties.mean(), rel=1e-12)


def test_random_phase_penalties_validation(make_scenario):
    with pytest.raises(ValueError):
        random_phase_penalties(make_scenario(), 0, seed=1)


def test_pseudo_true_angle(make_scenario, theta, geometry16):
    assert pseudo_true_angle(make_scenario(delta_deg=0.0)) == pytest.approx(theta, abs=1e-6)
    offset = theta + math.radians(0.5)
    assert pseudo_true_angle(make_scenario(delta_deg=0.5)) == pytest.approx(offset, abs=1e-6)

    angles = (theta + math.radians(0.3), theta + math.radians(0.8))
    two = Scenario(geometry16, theta, AttackerConfig(angles, (1 / math.sqrt(2),) * 2), 0.1)
    assert angles[0] - 1e-6 <= pseudo_true_angle(two) <= angles[1] + 1e-6
