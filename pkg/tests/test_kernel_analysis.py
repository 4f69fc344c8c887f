"""
Copyright 2022 NOAA
All rights reserved.

Unit tests for kernel_analysis

"""
import pathlib
import pytest

import numpy as np
from scipy import special

from core_model import ModelParams
from flow_engine import FlowScale
import kernel_analysis
from kernel_analysis import KernelProfile, KernelRequest
from run_config import ConfigFieldError


PYTEST_CALLING_DIR = pathlib.Path(__file__).parent.resolve()

PARAMS = ModelParams(3.0 / 16.0)
UV = FlowScale(0.0)


def lorentzian(kappa):
    return lambda k: k / (k * k + kappa * kappa)


def test_hankel1():
    value = kernel_analysis.hankel1(lorentzian(1.0), 2.0, tail_coefficient=1.0)
    assert value == pytest.approx(special.k1(2.0), abs=1e-7)
    assert value == pytest.approx(0.139866, abs=1e-6)

    # tail coefficient estimated from the far momentum
    assert kernel_analysis.hankel1(lorentzian(1.0), 2.0) == \
        pytest.approx(special.k1(2.0), abs=1e-7)

    combined = kernel_analysis.hankel1(
        lambda k: 0.3 * lorentzian(1.0)(k) - 2.0 * lorentzian(0.5)(k), 3.0,
        tail_coefficient=-1.7)
    separate = 0.3 * kernel_analysis.hankel1(lorentzian(1.0), 3.0,
                                             tail_coefficient=1.0) \
        - 2.0 * kernel_analysis.hankel1(lorentzian(0.5), 3.0,
                                        tail_coefficient=1.0)
    assert combined == pytest.approx(separate, abs=1e-8)

    assert abs(kernel_analysis.hankel1(lorentzian(1.0), 60.0,
                                       tail_coefficient=1.0)) < 1e-12

    with pytest.raises(ValueError):
        kernel_analysis.hankel1(lorentzian(1.0), 0.0)

    with pytest.raises(ValueError):
        kernel_analysis.hankel1(lorentzian(1.0), 2.0, k_scale=0.0)


def test_hankel1_far_radii():
    # remainder after the two-term model is nonzero when kappa != k_scale
    for radius in [11.0, 20.5, 33.3]:
        expected = 0.5 * special.k1(0.5 * radius)
        estimated = kernel_analysis.hankel1(lorentzian(0.5), radius)
        assert estimated == pytest.approx(expected, rel=1e-6)
        explicit = kernel_analysis.hankel1(lorentzian(0.5), radius,
                                           tail_coefficient=1.0,
                                           tail_correction=-0.25)
        assert explicit == pytest.approx(expected, rel=1e-6)


def test_real_space_kernel():
    radii = np.array([1.0, 5.0, 11.0, 12.0, 20.5, 25.0, 40.0])
    profile = kernel_analysis.real_space_kernel(UV, PARAMS, radii)
    closed = kernel_analysis.kernel_closed_form(UV, PARAMS, radii)
    np.testing.assert_allclose(profile.values.real, closed, rtol=1e-6)
    np.testing.assert_allclose(profile.values.imag, 0.0)

    with pytest.raises(ValueError):
        kernel_analysis.real_space_kernel(UV, ModelParams(0.3), radii)


def test_kernel_scale_covariance():
    u = -1.0
    radii = np.array([2.0, 10.0, 30.0])
    deep = kernel_analysis.kernel_closed_form(FlowScale(u), PARAMS, radii)
    uv = kernel_analysis.kernel_closed_form(UV, PARAMS, np.exp(u) * radii)
    np.testing.assert_allclose(deep, np.exp(2.0 * u) * uv, rtol=1e-12)

    numeric = kernel_analysis.real_space_kernel(FlowScale(u), PARAMS, [10.0])
    assert numeric.values[0].real == pytest.approx(
        np.exp(2.0 * u) * uv[1], rel=1e-6)


def test_fit_decay_length():
    radii = np.linspace(5.0, 40.0, 30)
    synthetic = KernelProfile(0.0, radii, np.exp(-radii / 3.0)
                              / np.sqrt(radii))
    fit = kernel_analysis.fit_decay_length(synthetic, (5.0, 40.0))
    assert fit.xi == pytest.approx(3.0, abs=1e-6)
    assert fit.r_squared == pytest.approx(1.0)

    with pytest.raises(ValueError):
        kernel_analysis.fit_decay_length(synthetic, (39.5, 40.0))

    flipped = KernelProfile(0.0, radii, np.where(radii > 20.0, -1.0, 1.0))
    with pytest.raises(ValueError):
        kernel_analysis.fit_decay_length(flipped, (5.0, 40.0))


def test_decay_length_candidates():
    window = np.linspace(20.0, 60.0, 21)
    fits = {}
    for u in [0.0, -1.0]:
        scale = FlowScale(u)
        stretch = np.exp(-u)
        profile = KernelProfile(u, stretch * window,
                                kernel_analysis.kernel_closed_form(
                                    scale, PARAMS, stretch * window))
        fits[u] = kernel_analysis.fit_decay_length(
            profile, (stretch * window[0], stretch * window[-1]))
    assert fits[0.0].xi == pytest.approx(4.0, rel=0.02)
    assert fits[-1.0].xi / fits[0.0].xi == pytest.approx(np.e, rel=0.02)

    inverse_root, quoted = kernel_analysis.decay_length_candidates(UV, PARAMS)
    assert inverse_root == pytest.approx(4.0)
    assert quoted == pytest.approx(0.75)
    report = kernel_analysis.decay_length_report(UV, PARAMS, fits[0.0])
    assert report['supported'] == 'inverse_root'


def test_asymptotic_dominance():
    radii = np.linspace(20.5, 60.0, 9)
    closed = KernelProfile(0.0, radii,
                           kernel_analysis.kernel_closed_form(UV, PARAMS,
                                                              radii))
    assert kernel_analysis.asymptotic_dominance_error(
        UV, PARAMS, closed, 4.0) < 1e-3

    numeric = kernel_analysis.real_space_kernel(UV, PARAMS, radii[:5])
    assert kernel_analysis.asymptotic_dominance_error(
        UV, PARAMS, numeric, 4.0) < 1e-3

    # the dominant term alone would match exactly, a wrong pole would not
    dominant = kernel_analysis.dominant_kernel_term(UV, PARAMS, radii)
    np.testing.assert_allclose(dominant, 0.03125 * special.k1(radii / 4.0))

    near = np.linspace(1.0, 6.0, 6)
    short = KernelProfile(0.0, near, kernel_analysis.kernel_closed_form(
        UV, PARAMS, near))
    assert kernel_analysis.asymptotic_dominance_error(
        UV, PARAMS, short, 0.1) > 1e-3

    with pytest.raises(ValueError):
        kernel_analysis.asymptotic_dominance_error(UV, PARAMS, closed, 20.0)

    deep = FlowScale(-1.0)
    stretched = np.e * radii
    profile = KernelProfile(-1.0, stretched, kernel_analysis.kernel_closed_form(
        deep, PARAMS, stretched))
    assert kernel_analysis.asymptotic_dominance_error(
        deep, PARAMS, profile, 4.0 * np.e) < 1e-3


def test_profile_round_trip():
    error = kernel_analysis.profile_round_trip_error(
        UV, PARAMS, np.array([0.05, 1.0, 5.0]))
    assert error < 1e-6

    momenta = np.linspace(0.05, 5.0, 12)
    assert kernel_analysis.profile_round_trip_error(UV, PARAMS,
                                                    momenta) < 1e-6


def test_validate_kernel_profile():
    with pytest.raises(ValueError):
        KernelProfile(0.0, [1.0, 2.0], [1.0])

    with pytest.raises(ValueError):
        KernelProfile(0.0, [0.0, 2.0], [1.0, 1.0])

    profile = KernelProfile(0.0, [1.0, 2.0], [1.0, 0.5])
    np.testing.assert_allclose(
        profile.full_kernel(0.0), 1j / (2.0 * np.pi) * np.array([1.0, 0.5]))
    assert list(profile.to_dataframe().columns) == \
        ['u', 'r', 'Re g', 'Im g', '|g|']


def test_kernel_request_invalid_config():
    with pytest.raises(ConfigFieldError) as err:
        KernelRequest({'cmera_request_name': 'kernel', 'model': {'m': 0.3}})
    assert err.value.field_name == 'model.m'

    with pytest.raises(ConfigFieldError) as err:
        KernelRequest({'cmera_request_name': 'kernel',
                       'kernel': {'fit_window': [60.0, 20.0]}})
    assert err.value.field_name == 'kernel.fit_window'


def test_kernel_request(tmp_path):
    request_dict = {
        'cmera_request_name': 'kernel',
        'output_dir': str(tmp_path),
        'model': {'m': 3.0 / 16.0},
        'kernel': {
            'scales': [0.0, -1.0],
            'profile_radii': [1.0, 40.0],
            'profile_points': 6,
            'fit_window': [20.0, 60.0],
            'fit_points': 9,
            'round_trip_momenta': [0.05, 5.0],
            'round_trip_points': 4
        }
    }
    response = KernelRequest(request_dict).submit()
    assert response.success, response.message
    assert (tmp_path / 'kernel_profile.csv').is_file()
    assert (tmp_path / 'decay_fits.csv').is_file()
    names = [row['name'] for row in response.details['criteria']]
    assert 'asymptotic_dominance_deviation' in names
    assert 'hankel_round_trip_deviation' in names
