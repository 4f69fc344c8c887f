"""
Copyright 2022 NOAA
All rights reserved.

Unit tests for topology

"""
import pathlib
import pytest

import numpy as np

import core_model
from core_model import ModelParams
from flow_engine import FlowScale
import topology
from topology import ChernRequest
from run_config import ConfigFieldError


PYTEST_CALLING_DIR = pathlib.Path(__file__).parent.resolve()

PARAMS = ModelParams(3.0 / 16.0)
UV = FlowScale(0.0)


def constant_family(kx, ky):
    kx = np.asarray(kx, dtype=float)
    return np.full(kx.shape, 0.6, dtype=complex), \
        np.full(kx.shape, 0.8j, dtype=complex)


def test_berry_curvature():
    family = topology.ground_family(PARAMS)
    origin = topology.berry_curvature(family, 0.0, 0.0)
    assert np.isfinite(origin) and origin > 0.0
    assert origin == pytest.approx(
        core_model.berry_curvature_closed_form(0.0, PARAMS.m), rel=1e-5)

    k = np.array([0.05, 0.3, 0.7, 1.5, 4.0])
    np.testing.assert_allclose(
        topology.berry_curvature(family, k, np.zeros_like(k)),
        core_model.berry_curvature_closed_form(k, PARAMS.m), rtol=1e-5)

    # rotational symmetry
    np.testing.assert_allclose(
        topology.berry_curvature(family, k, np.zeros_like(k)),
        topology.berry_curvature(family, np.zeros_like(k), k), rtol=1e-9)


def test_berry_curvature_self_similar():
    u = -2.0
    deep = topology.analytic_family(FlowScale(u), PARAMS)
    uv = topology.ground_family(PARAMS)
    k = np.array([0.01, 0.05, 0.1, 0.3])
    np.testing.assert_allclose(
        topology.berry_curvature(deep, k, np.zeros_like(k)),
        np.exp(-2.0 * u) * topology.berry_curvature(
            uv, np.exp(-u) * k, np.zeros_like(k)), rtol=1e-5)


def test_chern_number_radial():
    assert topology.chern_number_radial(UV, PARAMS) == \
        pytest.approx(1.0, abs=1e-6)
    assert topology.chern_number_radial(FlowScale(-3.0), PARAMS) == \
        pytest.approx(1.0, abs=1e-4)
    assert topology.chern_number_radial_integral(UV, PARAMS) == \
        pytest.approx(1.0, abs=1e-6)
    assert topology.chern_number_radial(
        UV, PARAMS, family=topology.ir_family()) == pytest.approx(0.0,
                                                                  abs=1e-9)


def test_chern_number_plaquette():
    chern, gap = topology.chern_number_plaquette(UV, PARAMS, 256, 20.0)
    assert chern == pytest.approx(1.0, abs=1e-3)
    assert gap < 1e-3

    for u in [-1.0, -2.0, -3.0]:
        scale = FlowScale(u)
        plaquette, _ = topology.chern_number_plaquette(scale, PARAMS, 256,
                                                       20.0)
        assert plaquette == pytest.approx(
            topology.chern_number_radial(scale, PARAMS), abs=1e-3)

    chern, _ = topology.chern_number_plaquette(UV, PARAMS, 64, 20.0,
                                               family=constant_family)
    assert chern == pytest.approx(0.0, abs=1e-12)

    with pytest.raises(ValueError):
        topology.chern_number_plaquette(UV, PARAMS, 8, 20.0)


def test_curvature_weight_radius():
    reference = topology.curvature_weight_radius(UV, PARAMS)
    for u in [-1.0, -3.0]:
        radius = topology.curvature_weight_radius(FlowScale(u), PARAMS)
        assert radius == pytest.approx(np.exp(u) * reference, rel=1e-6)

    with pytest.raises(ValueError):
        topology.curvature_weight_radius(UV, PARAMS, fraction=1.5)


def test_curvature_profile():
    frame = topology.curvature_profile(FlowScale(-1.0), PARAMS,
                                       np.linspace(0.01, 1.0, 5))
    assert list(frame.columns) == ['u', 'k', 'F']
    assert np.all(frame['u'] == -1.0)


def test_chern_request_invalid_config():
    with pytest.raises(ConfigFieldError) as err:
        ChernRequest({'cmera_request_name': 'chern',
                      'chern': {'grid_n': 8}})
    assert err.value.field_name == 'chern.grid_n'

    with pytest.raises(ConfigFieldError) as err:
        ChernRequest({'cmera_request_name': 'chern',
                      'chern': {'scales': [0.0, 0.5]}})
    assert err.value.field_name == 'chern.scales'


def test_chern_request(tmp_path):
    request_dict = {
        'cmera_request_name': 'chern',
        'model': {'m': 0.1875},
        'chern': {'scales': [0.0, -1.0], 'grid_n': 128, 'profile_points': 20},
        'output_dir': str(tmp_path)
    }
    response = ChernRequest(request_dict).submit()
    assert response.success, response.message
    table = (tmp_path / 'chern_table.csv').read_text().splitlines()
    assert table[0] == 'u,C_radial,C_plaquette,gap'
    assert len(table) == 3
