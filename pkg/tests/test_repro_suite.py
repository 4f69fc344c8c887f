"""
Copyright 2022 NOAA
All rights reserved.

Unit tests for repro_suite

"""
import pathlib
import pytest

import repro_suite
from repro_suite import ReproRequest
from run_config import ConfigFieldError


PYTEST_CALLING_DIR = pathlib.Path(__file__).parent.resolve()


def test_scenario_config():
    config = {'cmera_request_name': 'repro', 'seed': 4}
    flow = repro_suite.scenario_config(config, 'flow')
    assert flow == {'cmera_request_name': 'flow', 'seed': 4}
    assert config['cmera_request_name'] == 'repro'


def test_repro_builds_every_request():
    request = ReproRequest({'cmera_request_name': 'repro'})
    assert [name for name, _ in request.requests] == \
        [name for name, _ in repro_suite.SUITE]


def test_repro_rejects_bad_section():
    with pytest.raises(ConfigFieldError) as err:
        ReproRequest({'cmera_request_name': 'repro',
                      'irprep': {'n_sites': 1}})
    assert err.value.field_name == 'irprep.n_sites'

    with pytest.raises(ConfigFieldError) as err:
        ReproRequest({'cmera_request_name': 'repro', 'model': {'m': 0.3}})
    assert err.value.field_name == 'model.m'
