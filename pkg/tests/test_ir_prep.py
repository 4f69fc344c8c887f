"""
Copyright 2022 NOAA
All rights reserved.

Unit tests for ir_prep

"""
import pathlib
import pytest

import numpy as np

from core_model import ModelParams, Spinor
from flow_engine import FlowConfig, FlowScale
import ir_prep
from ir_prep import IrPrepRequest, LatticeSpec, PulsePlan, PulseStep
from run_config import ConfigFieldError


PYTEST_CALLING_DIR = pathlib.Path(__file__).parent.resolve()

PARAMS = ModelParams(3.0 / 16.0)
SMALL = LatticeSpec(4)


def test_validate_lattice_spec():
    with pytest.raises(ValueError):
        LatticeSpec(1)

    with pytest.raises(TypeError):
        LatticeSpec(4.0)

    np.testing.assert_array_equal(SMALL.indices(), [-1, 0, 1, 2])
    np.testing.assert_array_equal(LatticeSpec(5).indices(), [-2, -1, 0, 1, 2])

    with pytest.raises(ValueError):
        SMALL.check_index(-2, 0)


def test_wave_functions():
    kx, ky = SMALL.momentum(1, 0)
    assert ir_prep.ground_wave(2, 3, kx, ky) == pytest.approx(-1.0)

    assert ir_prep.bus_wave(1, 2, SMALL) == pytest.approx(
        np.sin(np.pi / 5.0) * np.sin(2.0 * np.pi / 5.0))
    assert ir_prep.bus_wave(0, 3, SMALL) == pytest.approx(0.0)

    with pytest.raises(ValueError):
        ir_prep.bus_wave(6, 1, SMALL)

    assert ir_prep.light_field(1, 1, 0.0, 0.0, SMALL) == pytest.approx(
        1.0 / np.sin(np.pi / 5.0)**2)
    qx, qy = SMALL.momentum(0, 1)
    assert ir_prep.light_field(2, 1, qx, qy, SMALL) * \
        ir_prep.bus_wave(2, 1, SMALL) == pytest.approx(-1j)

    with pytest.raises(ValueError):
        ir_prep.light_field(0, 1, 0.0, 0.0, SMALL)


def test_coupling_overlap():
    assert ir_prep.coupling_overlap((1, 0), (1, 0), SMALL) == \
        pytest.approx(16.0)
    assert abs(ir_prep.coupling_overlap((1, 0), (0, 0), SMALL)) < 1e-12
    assert abs(ir_prep.coupling_overlap((2, -1), (2, 1), SMALL)) < 1e-12

    with pytest.raises(ValueError):
        ir_prep.coupling_overlap((3, 0), (0, 0), SMALL)


def test_selection_rule_table():
    for n_sites in range(2, 9):
        table = ir_prep.selection_rule_table(LatticeSpec(n_sites))
        assert len(table) == n_sites**4
        assert ir_prep.selection_rule_residual(table) < 1e-12

    spec = LatticeSpec(3)
    table = ir_prep.selection_rule_table(spec)
    factorized = table['overlap_re'].to_numpy() \
        + 1j * table['overlap_im'].to_numpy()
    np.testing.assert_allclose(ir_prep.brute_force_overlaps(spec), factorized,
                               atol=1e-10)


def test_selection_rule_residual_detects_leak():
    table = ir_prep.selection_rule_table(SMALL)
    table.loc[1, 'overlap_re'] = 0.5
    assert ir_prep.selection_rule_residual(table) == pytest.approx(0.5 / 16.0)


def test_pulse_plan():
    plan = ir_prep.pulse_plan([((0, 0), Spinor(1.0, 0.0))], 2.0)
    assert [step.area for step in plan.steps] == [0.0, 0.0]
    assert plan.targets() == [(0, 0)]

    theta = 0.7
    plan = ir_prep.pulse_plan([((1, 0), Spinor(0.0, np.exp(-1j * theta)))],
                              2.0)
    first, second = plan.steps
    assert first.area == pytest.approx(np.pi)
    assert second.area == pytest.approx(np.pi)
    assert first.duration == pytest.approx(np.pi / 2.0)
    assert np.exp(1j * second.phase) == pytest.approx(
        np.exp(1j * (np.pi - theta)))

    skipped = ir_prep.pulse_plan([((0, 0), Spinor(1.0, 0.0))], 1.0,
                                 threshold=1e-3)
    assert skipped.steps == []

    with pytest.raises(ValueError):
        ir_prep.pulse_plan([((0, 0), Spinor(1.0, 1.0))], 1.0)


def test_validate_pulse_plan():
    with pytest.raises(ValueError):
        PulsePlan(0.0)

    with pytest.raises(ValueError):
        PulsePlan(1.0, [PulseStep(0, 0, 'e_to_g2', 1.0, 0.0, 1.0)])

    with pytest.raises(ValueError):
        PulsePlan(1.0, [PulseStep(0, 0, 'g1_to_e', 1.0, 0.0, 1.0),
                        PulseStep(1, 0, 'e_to_g2', 1.0, 0.0, 1.0)])

    with pytest.raises(ValueError):
        PulsePlan(1.0, [PulseStep(0, 0, 'g1_to_g2', 1.0, 0.0, 1.0)])

    with pytest.raises(ValueError):
        PulsePlan.from_dict({'rabi': 1.0})

    plan = ir_prep.pulse_plan([((1, 1), Spinor(0.6j, 0.8))], 1.0)
    restored = PulsePlan.from_dict(plan.to_dict())
    assert restored.steps == plan.steps
    assert restored.global_phases == pytest.approx(plan.global_phases)
    assert plan.global_phases[(1, 1)] == pytest.approx(np.pi / 2.0)


def test_pulse_unitary():
    for leg in ir_prep.VALID_LEGS:
        unitary = ir_prep.pulse_unitary(leg, 1.1, 0.4)
        np.testing.assert_allclose(unitary.conj().T @ unitary, np.eye(3),
                                   atol=1e-15)

    with pytest.raises(ValueError):
        ir_prep.pulse_unitary('g1_to_g2', 1.0, 0.0)


def test_simulate_pulses():
    scale = FlowScale(-1.0)
    empty = ir_prep.simulate_pulses(PulsePlan(1.0), SMALL, scale)
    np.testing.assert_array_equal(empty.p, 1.0)
    np.testing.assert_array_equal(empty.q, 0.0)

    target = Spinor(np.sqrt(0.3) * np.exp(0.5j), np.sqrt(0.7) * np.exp(-2.0j))
    plan = ir_prep.pulse_plan([((1, 2), target)], 1.0)
    state = ir_prep.simulate_pulses(plan, SMALL, scale)
    n1_grid, n2_grid = SMALL.index_grid()
    chosen = (n1_grid == 1) & (n2_grid == 2)
    phase = np.exp(-1j * plan.global_phases[(1, 2)])
    assert state.p[chosen][0] == pytest.approx(target.p * phase, abs=1e-12)
    assert state.q[chosen][0] == pytest.approx(target.q * phase, abs=1e-12)
    np.testing.assert_array_equal(state.p[~chosen], 1.0)
    np.testing.assert_array_equal(state.q[~chosen], 0.0)

    partial = PulsePlan(1.0, [
        PulseStep(1, 2, 'g1_to_e', np.pi, 0.0, np.pi),
        PulseStep(1, 2, 'e_to_g2', np.pi / 2.0, 0.0, np.pi / 2.0)
    ])
    with pytest.raises(RuntimeError):
        ir_prep.simulate_pulses(partial, SMALL, scale)


def test_random_targets():
    rng = np.random.default_rng(41)
    targets = []
    for pair in [(-1, 0), (0, 2), (2, 2)]:
        vector = rng.normal(size=2) + 1j * rng.normal(size=2)
        vector /= np.linalg.norm(vector)
        targets.append((pair, Spinor(*vector)))
    plan = ir_prep.pulse_plan(targets, 1.5)
    state = ir_prep.simulate_pulses(plan, SMALL, FlowScale(0.0))
    n1_grid, n2_grid = SMALL.index_grid()
    for (n1, n2), spinor in targets:
        index = np.flatnonzero((n1_grid == n1) & (n2_grid == n2))[0]
        overlap = abs(np.conj(spinor.p) * state.p[index]
                      + np.conj(spinor.q) * state.q[index])
        assert overlap == pytest.approx(1.0, abs=1e-12)


def test_inner_indices():
    assert ir_prep.inner_indices(SMALL, 1) == [(0, 0)]
    assert ir_prep.inner_indices(SMALL, 5) == [(0, 0), (-1, 0), (0, -1),
                                               (0, 1), (1, 0)]


def test_inner_point_preparation():
    request = IrPrepRequest({'cmera_request_name': 'irprep'})
    assert request.spec.n_sites == 32
    assert request.scale.u == -4.0
    assert request.inner_point_check() <= 1e-10


def test_prepare_near_ir_state():
    spec = LatticeSpec(6)
    result = ir_prep.prepare_near_ir_state(spec, PARAMS, FlowScale(-2.0), 1.0,
                                           1e-3, FlowConfig(du=0.01))
    assert result.evolved.scale.u == 0.0
    assert result.addressed.any()
    assert result.fidelity[result.addressed].min() >= 1.0 - 1e-4
    assert result.fidelity[~result.addressed].min(initial=1.0) >= \
        1.0 - 1e-6 - 1e-4


def test_irprep_request_invalid_config():
    with pytest.raises(ConfigFieldError) as err:
        IrPrepRequest({'cmera_request_name': 'irprep',
                       'irprep': {'n_sites': 1}})
    assert err.value.field_name == 'irprep.n_sites'

    with pytest.raises(ConfigFieldError) as err:
        IrPrepRequest({'cmera_request_name': 'irprep',
                       'irprep': {'inner_points': 17, 'n_sites': 4}})
    assert err.value.field_name == 'irprep.inner_points'

    with pytest.raises(ConfigFieldError) as err:
        IrPrepRequest({'cmera_request_name': 'irprep',
                       'irprep': {'u_start': 1.0}})
    assert err.value.field_name == 'irprep'

    with pytest.raises(ConfigFieldError) as err:
        IrPrepRequest({'cmera_request_name': 'irprep',
                       'irprep': {'rabi': -1.0}})
    assert err.value.field_name == 'irprep.rabi'


def test_irprep_request(tmp_path):
    request_dict = {
        'cmera_request_name': 'irprep',
        'output_dir': str(tmp_path),
        'irprep': {
            'n_sites': 6,
            'u_start': -2.0,
            'max_enumeration': 4,
            'brute_force_sites': 3,
            'du': 0.01
        }
    }
    response = IrPrepRequest(request_dict).submit()
    assert response.success, response.message
    for name in ['selection_rule.csv', 'pulse_plan.json', 'prepared_grid.csv']:
        assert (tmp_path / name).is_file()
    names = [row['name'] for row in response.details['criteria']]
    assert 'inner_preparation_deficit' in names
