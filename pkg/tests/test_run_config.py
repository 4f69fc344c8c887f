"""
Copyright 2022 NOAA
All rights reserved.

Unit tests for run_config

"""
import pathlib
import pytest

import numpy as np

import run_config
from run_config import ConfigFieldError, RunConfig


PYTEST_CALLING_DIR = pathlib.Path(__file__).parent.resolve()


def field_of(config_dict):
    with pytest.raises(ConfigFieldError) as err:
        RunConfig(config_dict)
    return err.value.field_name


def test_validate_top_level():
    assert field_of({'cmera_request_name': 'flow', 'bogus': 1}) == 'bogus'
    assert field_of({'cmera_request_name': 'flow',
                     'schema_version': 2}) == 'schema_version'
    assert field_of({}) == 'cmera_request_name'
    assert field_of({'cmera_request_name': 'plot'}) == 'cmera_request_name'
    assert field_of({'cmera_request_name': 'flow',
                     'output_dir': ''}) == 'output_dir'

    with pytest.raises(TypeError):
        RunConfig(['flow'])


def test_validate_model():
    assert field_of({'cmera_request_name': 'flow',
                     'model': {'m': -1.0}}) == 'model.m'
    assert field_of({'cmera_request_name': 'flow',
                     'model': {'m': 'abc'}}) == 'model.m'
    assert field_of({'cmera_request_name': 'flow',
                     'model': {'mass': 0.1}}) == 'model.mass'
    assert field_of({'cmera_request_name': 'flow', 'model': 0.1}) == 'model'

    config = RunConfig({'cmera_request_name': 'flow'})
    assert config.params.m == pytest.approx(3.0 / 16.0)
    assert config.params.quasi_local_regime


def test_tolerances():
    config = RunConfig({'cmera_request_name': 'chern',
                        'tolerances': {'chern_plaquette': 0.01}})
    assert config.tolerance('chern_plaquette') == 0.01
    assert config.tolerance('chern_radial') == \
        run_config.DEFAULT_TOLERANCES['chern_radial']

    assert field_of({'cmera_request_name': 'chern',
                     'tolerances': {'bogus': 1.0}}) == 'tolerances.bogus'
    assert field_of({'cmera_request_name': 'chern',
                     'tolerances': {'overlap': -1.0}}) == 'tolerances.overlap'
    assert field_of({'cmera_request_name': 'chern',
                     'tolerances': [1.0]}) == 'tolerances'


def test_seed(monkeypatch):
    monkeypatch.delenv('CMERA_SEED', raising=False)
    assert RunConfig({'cmera_request_name': 'flow'}).seed == \
        run_config.DEFAULT_SEED

    config = RunConfig({'cmera_request_name': 'flow', 'seed': 7})
    np.testing.assert_array_equal(config.rng().normal(size=4),
                                  np.random.default_rng(7).normal(size=4))

    assert field_of({'cmera_request_name': 'flow', 'seed': True}) == 'seed'
    assert field_of({'cmera_request_name': 'flow', 'seed': -1}) == 'seed'
    assert field_of({'cmera_request_name': 'flow', 'seed': 2**64}) == 'seed'
    assert RunConfig({'cmera_request_name': 'flow',
                      'seed': 2**64 - 1}).seed == 2**64 - 1


def test_environment(monkeypatch, tmp_path):
    monkeypatch.setenv('CMERA_SEED', '12')
    monkeypatch.setenv('CMERA_OUTPUT_DIR', str(tmp_path))
    config = RunConfig({'cmera_request_name': 'kernel'})
    assert config.seed == 12
    assert config.output_dir == str(tmp_path)

    config = RunConfig({'cmera_request_name': 'kernel', 'seed': 3,
                        'output_dir': 'elsewhere'})
    assert config.seed == 3
    assert config.output_dir == 'elsewhere'

    monkeypatch.setenv('CMERA_SEED', 'abc')
    assert field_of({'cmera_request_name': 'kernel'}) == 'seed'


def test_section():
    config = RunConfig({'cmera_request_name': 'flow',
                        'flow': {'du': 0.01}})
    merged = config.section('flow', {'du': 0.001, 'method': 'rk4'})
    assert merged == {'du': 0.01, 'method': 'rk4'}
    assert config.section('chern', {'grid_n': 256}) == {'grid_n': 256}

    with pytest.raises(ConfigFieldError) as err:
        config.section('flow', {'method': 'rk4'})
    assert err.value.field_name == 'flow.du'


def test_value_helpers():
    assert run_config.positive_number('a', 'b', 2) == 2.0
    assert run_config.positive_int('a', 'b', 3) == 3
    assert run_config.scale_list('a', 'b', [0, -1.5]) == [0.0, -1.5]
    assert run_config.positive_window('a', 'b', [0.1, 2]) == (0.1, 2.0)

    for value in [0.0, -1.0, True, float('nan'), 'x']:
        with pytest.raises(ConfigFieldError) as err:
            run_config.positive_number('a', 'b', value)
        assert err.value.field_name == 'a.b'

    with pytest.raises(ConfigFieldError):
        run_config.positive_int('a', 'b', 2.0)

    with pytest.raises(ConfigFieldError):
        run_config.scale_list('a', 'b', [])

    with pytest.raises(ConfigFieldError):
        run_config.scale_list('a', 'b', [0.5])

    with pytest.raises(ConfigFieldError):
        run_config.positive_window('a', 'b', [2.0, 1.0])

    with pytest.raises(ConfigFieldError):
        run_config.positive_window('a', 'b', [1.0])

    for value in [['x', 2.0], [1.0, None], [True, 2.0], [1.0, float('inf')],
                  [{'low': 1.0}, 2.0]]:
        with pytest.raises(ConfigFieldError) as err:
            run_config.positive_window('kernel', 'fit_window', value)
        assert err.value.field_name == 'kernel.fit_window'
