import io

import numpy as np
import pandas as pd
import pytest

from config import CSV_COLUMNS, build_config
from exceptions import OutputError
from experiments import ExperimentService, render_csv, write_csv


@pytest.fixture
def quick_config():
    return build_config({'mc.trials': 30, 'sweep.snr_db': [40, 50, 10], 'attacker.offsets_deg': [0.0, 0.5]})


def test_bounds_table_invariants():
    table = ExperimentService(build_config({})).bounds_table()
    assert list(table.columns) == CSV_COLUMNS['bounds']
    assert len(table) == 3 * 11
    assert np.isfinite(table.to_numpy(dtype=float)).all()

    no_attack = table[table['delta_deg'] == 0.0]
    assert (no_attack['penalty_rad2'] == 0.0).all()
    assert (no_attack['mcrb_rad2'] == no_attack['crb_rad2']).all()

    np.testing.assert_allclose(table['mcrb_rad2'], table['crb_rad2'] + table['penalty_rad2'], rtol=1e-12)
    for _, group in table.groupby('delta_deg'):
        assert group['penalty_rad2'].nunique() == 1


def test_degenerate_rows_are_skipped_and_recorded():
    service = ExperimentService(build_config({'attacker.offsets_deg': [0.5, 100.0], 'sweep.snr_db': [0, 10, 5]}))
    table = service.bounds_table()
    assert len(table) == 3
    assert len(service.errors) == 3
    assert 'delta_deg=100.0' in service.errors[0].label


def test_fig2_penalty_decreases_with_elements():
    table = ExperimentService(build_config({})).fig2_table()
    assert list(table.columns) == CSV_COLUMNS['fig2']
    assert len(table) == 4 * 101
    assert (table[table['delta_deg'] == 0.0]['penalty_rad2'] == 0.0).all()
    for delta in (0.25, 0.5, 1.0):
        rows = table[np.isclose(table['delta_deg'], delta)].sort_values('elements')
        assert list(rows['elements']) == [4, 8, 16, 32]
        assert (np.diff(rows['penalty_rad2'].to_numpy()) < 0).all()


def test_fig2_small_offset_penalty_ratio():
    table = ExperimentService(build_config({})).fig2_table()
    rows = table[np.isclose(table['delta_deg'], 0.25)].set_index('elements')['penalty_rad2']
    # θ = 10°, Δ = 0.25°: penalty ≈ Δ_ef²·(1 - φ²(3M²-3M-1)/30)², Δ_ef = (sin(θ+Δ) - sin θ)/cos θ
    assert rows[16] == pytest.approx(1.8858e-5, rel=1e-3)
    assert rows[32] / rows[16] == pytest.approx(0.9729, abs=1e-3)


def test_fig3_worst_case_dominates_average():
    table = ExperimentService(build_config({'sweep.snr_db': [0, 50, 10]})).fig3_table()
    assert list(table.columns) == CSV_COLUMNS['fig3']
    assert (table['mcrb_worst_rad2'] >= table['mcrb_avg_rad2']).all()
    assert (table['realizations'] == 200).all()

    floors = {}
    for count, group in table.groupby('attacker_count'):
        assert group['penalty_worst_rad2'].nunique() == 1
        assert group['penalty_avg_rad2'].nunique() == 1
        np.testing.assert_allclose(group['mcrb_worst_rad2'] - group['crb_rad2'], group['penalty_worst_rad2'],
                                   rtol=1e-9)
        floors[count] = group['penalty_worst_rad2'].iloc[0]
    assert floors[4] >= floors[2]


def test_montecarlo_table_metadata(quick_config):
    table = ExperimentService(quick_config).montecarlo_table()
    assert list(table.columns) == CSV_COLUMNS['montecarlo']
    assert len(table) == 4
    assert (table['trials'] == 30).all()
    assert (table['seed'] == quick_config.mc.seed).all()
    assert list(table['scenario_id'].unique()) == ['mc-delta0', 'mc-delta0.5']

    fig1 = ExperimentService(quick_config).fig1_table()
    assert fig1['scenario_id'].iloc[0] == 'fig1-delta0'
    pd.testing.assert_series_equal(fig1['mse_rad2'], table['mse_rad2'])


def test_montecarlo_table_independent_of_threads(quick_config):
    serial = ExperimentService(quick_config, threads=1).fig1_table()
    parallel = ExperimentService(quick_config, threads=2).fig1_table()
    pd.testing.assert_frame_equal(serial, parallel, check_exact=True)
    assert render_csv(serial) == render_csv(parallel)


def test_csv_is_round_trip_exact():
    table = ExperimentService(build_config({'sweep.snr_db': [0, 50, 25]})).bounds_table()
    text = render_csv(table)
    assert text.splitlines()[0] == ','.join(CSV_COLUMNS['bounds'])
    parsed = pd.read_csv(io.StringIO(text), float_precision='round_trip')
    pd.testing.assert_frame_equal(parsed, table, check_exact=True)


def test_write_csv(tmp_path):
    table = pd.DataFrame({'a': [1.5]})
    path = write_csv(table, tmp_path / 'sub' / 'table.csv')
    assert path.read_text(encoding='utf-8') == 'a\n1.5\n'

    blocker = tmp_path / 'file.txt'
    blocker.write_text('x', encoding='utf-8')
    with pytest.raises(OutputError):
        write_csv(table, blocker / 'table.csv')
