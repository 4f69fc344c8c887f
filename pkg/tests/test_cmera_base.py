"""
Copyright 2022 NOAA
All rights reserved.

Unit tests for cmera_base and the request registry

"""
import json
import os
import pathlib
import pytest

from cmera_action_response import CmeraActionResponse
import cmera_base
import cmera_request_registry as crr
from run_config import VALID_SCENARIOS, ConfigFieldError


PYTEST_CALLING_DIR = pathlib.Path(__file__).parent.resolve()

FLOW_CONFIG_FILE = os.path.join(
    PYTEST_CALLING_DIR,
    'flow_config__valid.yaml'
)


def test_registry_covers_scenarios():
    assert sorted(crr.request_registry) == sorted(VALID_SCENARIOS)
    for handler in crr.request_registry.values():
        assert handler.result is CmeraActionResponse


def test_build_request_unknown_name():
    with pytest.raises(ConfigFieldError) as err:
        cmera_base.build_request({'cmera_request_name': 'plot'})
    assert err.value.field_name == 'cmera_request_name'


def test_handle_request_file(monkeypatch, tmp_path):
    monkeypatch.setenv('CMERA_OUTPUT_DIR', str(tmp_path))
    response = cmera_base.handle_request(FLOW_CONFIG_FILE)
    assert response.success, response.message
    assert response.request['cmera_request_name'] == 'flow'
    assert (tmp_path / 'flow_grid.csv').is_file()


def test_handle_request_dict(tmp_path):
    request_dict = {
        'cmera_request_name': 'chern',
        'chern': {'scales': [0.0], 'masses': [0.1875], 'grid_n': 64,
                  'profile_points': 20},
        'tolerances': {'chern_plaquette': 1e-2},
        'output_dir': str(tmp_path)
    }
    response = cmera_base.handle_request(request_dict)
    assert isinstance(response, CmeraActionResponse)
    assert response.errors is None
    assert (tmp_path / 'chern_table.csv').is_file()


def test_main_success(tmp_path):
    status = cmera_base.main(['--config', FLOW_CONFIG_FILE,
                              '--out', str(tmp_path)])
    assert status == cmera_base.EXIT_SUCCESS
    report = json.loads((tmp_path / cmera_base.REPORT_FILE).read_text())
    assert report['scenario'] == 'flow'
    assert report['success']
    assert report['errors'] is None
    assert all(row['passed'] for row in report['criteria'])
    assert str(tmp_path / 'flow_grid.csv') in report['artifacts']


def test_main_failed_criteria(tmp_path):
    config_file = tmp_path / 'coarse.json'
    config_file.write_text(json.dumps({
        'cmera_request_name': 'flow',
        'flow': {'u_start': -3.0, 'du': 0.5, 'n_radial': 4, 'n_angular': 2},
        'tolerances': {'flow_fidelity': 1e-300}
    }))
    out_dir = tmp_path / 'out'
    status = cmera_base.main(['--config', str(config_file),
                              '--out', str(out_dir)])
    assert status == cmera_base.EXIT_FAILED_CRITERIA
    report = json.loads((out_dir / cmera_base.REPORT_FILE).read_text())
    assert not report['success']
    assert report['errors'] is None
    assert report['criteria'][0]['threshold'] == 1e-300


def test_main_evaluation_error(tmp_path, capsys):
    # two fit radii cannot define a decay length
    config_file = tmp_path / 'short_fit.yaml'
    config_file.write_text('cmera_request_name: kernel\n'
                           'kernel:\n'
                           '  scales: [0.0]\n'
                           '  profile_radii: [1.0, 2.0]\n'
                           '  profile_points: 2\n'
                           '  fit_points: 2\n')
    status = cmera_base.main(['--config', str(config_file),
                              '--out', str(tmp_path)])
    assert status == cmera_base.EXIT_FAILED_CRITERIA
    out = capsys.readouterr().out
    assert '"type": "RequestError"' in out
    assert 'decay fit needs at least 3 radii' in out
    report = json.loads((tmp_path / cmera_base.REPORT_FILE).read_text())
    assert not report['success']
    assert 'decay fit needs at least 3 radii' in report['errors']


def test_main_submit_raises(tmp_path, capsys, monkeypatch):
    def broken_submit(self):
        raise ValueError('no usable radii')

    request_class = type(cmera_base.build_request(
        {'cmera_request_name': 'flow'}))
    monkeypatch.setattr(request_class, 'submit', broken_submit)
    status = cmera_base.main(['--config', FLOW_CONFIG_FILE,
                              '--out', str(tmp_path)])
    assert status == cmera_base.EXIT_FAILED_CRITERIA
    out = capsys.readouterr().out
    assert '"type": "ValueError"' in out
    assert 'no usable radii' in out
    assert not (tmp_path / cmera_base.REPORT_FILE).exists()


def test_main_invalid_config(tmp_path, capsys):
    status = cmera_base.main(['--scenario', 'plot', '--out', str(tmp_path)])
    assert status == cmera_base.EXIT_INVALID_CONFIG
    out = capsys.readouterr().out
    assert '"field": "cmera_request_name"' in out
    assert '"type": "ConfigFieldError"' in out
    assert not (tmp_path / cmera_base.REPORT_FILE).exists()

    status = cmera_base.main(['--config', FLOW_CONFIG_FILE, '--seed', '-1',
                              '--out', str(tmp_path)])
    assert status == cmera_base.EXIT_INVALID_CONFIG
    assert '"field": "seed"' in capsys.readouterr().out

    assert cmera_base.main([]) == cmera_base.EXIT_INVALID_CONFIG

    text_file = tmp_path / 'request.txt'
    text_file.write_text('cmera_request_name: flow\n')
    assert cmera_base.main(['--config', str(text_file)]) == \
        cmera_base.EXIT_INVALID_CONFIG


def test_apply_overrides():
    args = cmera_base.parse_args(['--scenario', 'kernel', '--seed', '9'])
    values = cmera_base.apply_overrides({'cmera_request_name': 'flow',
                                         'output_dir': 'a'}, args)
    assert values == {'cmera_request_name': 'kernel', 'output_dir': 'a',
                      'seed': 9}


def test_error_payload():
    payload = cmera_base.error_payload(ConfigFieldError('flow.du', 'bad du'))
    assert payload == {'error': 'bad du', 'field': 'flow.du',
                       'type': 'ConfigFieldError'}
    assert cmera_base.error_payload(TypeError('x'))['field'] is None
