"""
Copyright 2022 NOAA
All rights reserved.

Berry curvature and Chern number of the renormalized wavefunction at any
scale.  A state family is any callable (kx, ky) -> (P, Q) accepting numpy
arrays.  Two independent Chern estimates are provided: a radial one using
the n_z endpoints (with a quadrature variant) and the gauge-invariant
plaquette field-strength sum on a compactified grid.

"""
from dataclasses import dataclass, field

import numpy as np
from pandas import DataFrame
from scipy import integrate, optimize

from cmera_action_response import at_most, build_response
from core_model import ModelParams, spinor_n_field
import file_utils
from flow_engine import FlowScale, analytic_amplitudes
from run_config import ConfigFieldError, RunConfig
from run_config import positive_int, positive_number, scale_list

RELATIVE_STEP = 1e-4
STEP_FLOOR = 1e-6
RADIAL_PROXY = 200.0
TAIL_TOLERANCE = 1e-8
INFINITY_RADIUS = 1e12
QUANTIZATION_WARNING = 1e-2
DEFAULT_WEIGHT_FRACTION = 0.9


def analytic_family(scale, params):
    ''' renormalized state at scale u as a state family '''
    def family(kx, ky):
        return analytic_amplitudes(scale.u, kx, ky, params.m)
    return family


def ground_family(params):
    return analytic_family(FlowScale(0.0), params)


def ir_family():
    ''' the unentangled fixed point (0, e^{-i theta}) '''
    def family(kx, ky):
        kx = np.asarray(kx, dtype=float)
        ky = np.asarray(ky, dtype=float)
        return np.zeros(kx.shape, dtype=complex), \
            np.exp(-1j * np.arctan2(ky, kx))
    return family


def _n_field(family, kx, ky):
    p_amp, q_amp = family(kx, ky)
    return spinor_n_field(p_amp, q_amp)


def _derivative(family, kx, ky, step, axis):
    shift_x = step if axis == 0 else 0.0
    shift_y = step if axis == 1 else 0.0
    forward = _n_field(family, kx + shift_x, ky + shift_y)
    backward = _n_field(family, kx - shift_x, ky - shift_y)
    central = (forward - backward) / (2.0 * step)
    bad = ~np.all(np.isfinite(central), axis=0)
    if np.any(bad):
        # one-sided stencils where a central sample is unusable
        center = _n_field(family, kx, ky)
        one_sided = np.where(np.all(np.isfinite(forward), axis=0),
                             (forward - center) / step,
                             (center - backward) / step)
        central = np.where(bad, one_sided, central)
    return central


def berry_curvature(family, kx, ky, step=None):
    """
    F(k) = n . (dn/dkx x dn/dky) / 2 by central finite differences.

    Parameters
    ----------
    family: callable (kx, ky) -> (P, Q)
    kx, ky: scalars or arrays
    step: fixed step, defaults to max(1e-4 |k|, 1e-6) per point

    Returns
    -------
    curvature with the shape of kx
    """
    kx = np.asarray(kx, dtype=float)
    ky = np.asarray(ky, dtype=float)
    if step is None:
        step = np.maximum(RELATIVE_STEP * np.hypot(kx, ky), STEP_FLOOR)
    n_vec = _n_field(family, kx, ky)
    d_x = _derivative(family, kx, ky, step, 0)
    d_y = _derivative(family, kx, ky, step, 1)
    curvature = 0.5 * np.einsum('i...,i...->...', n_vec,
                                np.cross(d_x, d_y, axis=0))
    if curvature.ndim == 0:
        return float(curvature)
    return curvature


def _n_z(family, k):
    k = np.asarray(k, dtype=float)
    return _n_field(family, k, np.zeros_like(k))[2]


def chern_number_radial(scale, params, family=None, k_max=None):
    """
    C = (n_z(0) - n_z(inf))/2 for a rotationally covariant family with unit
    winding.  n_z(inf) is Richardson-extrapolated from k_max and 2 k_max
    (the tail falls off as 1/k^2); a second estimate from 2 k_max and
    4 k_max must agree to 1e-8.
    """
    if family is None:
        family = analytic_family(scale, params)
    if k_max is None:
        k_max = RADIAL_PROXY * np.exp(scale.u)
    n_z = _n_z(family, np.array([0.0, k_max, 2.0 * k_max, 4.0 * k_max]))
    first = (4.0 * n_z[2] - n_z[1]) / 3.0
    second = (4.0 * n_z[3] - n_z[2]) / 3.0
    tail = abs(first - second)
    if tail > TAIL_TOLERANCE:
        msg = f'Richardson tail not converged at k_max: {k_max}, ' \
            f'tail estimate: {tail}'
        print(msg)
        raise RuntimeError(msg)
    return float((n_z[0] - second) / 2.0)


def chern_number_radial_integral(scale, params, family=None):
    ''' C = int_0^inf F(k) k dk with adaptive quadrature '''
    if family is None:
        family = analytic_family(scale, params)
    split = RADIAL_PROXY * np.exp(scale.u)

    def integrand(k):
        return berry_curvature(family, k, 0.0) * k

    head, head_err = integrate.quad(integrand, 0.0, split, limit=400,
                                    epsabs=1e-11, epsrel=1e-11)
    tail, tail_err = integrate.quad(integrand, split, np.inf, limit=400,
                                    epsabs=1e-11)
    if head_err + tail_err > 1e-8:
        msg = f'radial curvature quadrature did not converge, error ' \
            f'estimate: {head_err + tail_err}'
        print(msg)
        raise RuntimeError(msg)
    return float(head + tail)


def _tangent_axis(grid_n, k_max, k_scale):
    nodes = np.linspace(-1.0, 1.0, grid_n)
    stretch = 2.0 / np.pi * np.arctan(k_max / k_scale)
    return k_scale * np.tan(stretch * nodes * np.pi / 2.0)


def _links(vectors, axis):
    overlap = np.sum(np.conj(vectors) * np.roll(vectors, -1, axis=axis + 1),
                     axis=0)
    return overlap / np.abs(overlap)


def chern_number_plaquette(scale, params, grid_n, k_max, family=None,
                           k_scale=None):
    """
    Plaquette field-strength Chern number on a grid_n x grid_n grid over
    [-k_max, k_max]^2 with tangent spacing.  Boundary nodes carry the state at
    infinity, which closes the square into a sphere.

    Returns
    -------
    (C, gap) with gap = |C - round(C)|
    """
    if grid_n < 16:
        msg = f'grid_n must be at least 16, actually: {grid_n}'
        raise ValueError(msg)
    if family is None:
        family = analytic_family(scale, params)
    if k_scale is None:
        k_scale = np.exp(scale.u) * np.sqrt(params.m)
    axis = _tangent_axis(grid_n, k_max, k_scale)
    kx, ky = np.meshgrid(axis, axis, indexing='ij')
    boundary = np.zeros(kx.shape, dtype=bool)
    boundary[[0, -1], :] = True
    boundary[:, [0, -1]] = True
    stretch = np.ones(kx.shape)
    stretch[boundary] = INFINITY_RADIUS / np.hypot(kx[boundary], ky[boundary])
    p_amp, q_amp = family(kx * stretch, ky * stretch)
    vectors = np.stack([-q_amp, p_amp])

    links_x = _links(vectors, 0)
    links_y = _links(vectors, 1)
    plaquette = (links_x[:-1, :-1] * links_y[1:, :-1]
                 * np.conj(links_x[:-1, 1:]) * np.conj(links_y[:-1, :-1]))
    chern = float(-np.sum(np.angle(plaquette)) / (2.0 * np.pi))
    gap = abs(chern - round(chern))
    if gap > QUANTIZATION_WARNING:
        print(f'WARNING: plaquette Chern number {chern} is not quantized, '
              f'gap: {gap}; the grid is too coarse')
    return chern, gap


def curvature_profile(scale, params, k_values, family=None):
    ''' DataFrame with columns u, k, F along the kx axis '''
    if family is None:
        family = analytic_family(scale, params)
    k_values = np.asarray(k_values, dtype=float)
    return DataFrame({
        'u': np.full(k_values.shape, scale.u),
        'k': k_values,
        'F': berry_curvature(family, k_values, np.zeros_like(k_values))
    })


def curvature_weight_radius(scale, params, fraction=DEFAULT_WEIGHT_FRACTION,
                            family=None):
    ''' radius R enclosing the given fraction of the total curvature '''
    if not 0.0 < fraction < 1.0:
        msg = f'fraction must lie in (0, 1), actually: {fraction}'
        raise ValueError(msg)
    if family is None:
        family = analytic_family(scale, params)
    n_origin = float(_n_z(family, 0.0))
    total = chern_number_radial(scale, params, family)

    def excess(radius):
        return (n_origin - float(_n_z(family, radius))) / 2.0 \
            - fraction * total

    upper = np.exp(scale.u)
    while excess(upper) < 0.0:
        upper *= 2.0
        if upper > INFINITY_RADIUS:
            msg = f'curvature weight fraction {fraction} not reached'
            raise RuntimeError(msg)
    return float(optimize.brentq(excess, 0.0, upper, xtol=1e-14,
                                 rtol=1e-13))


CHERN_DEFAULTS = {
    'scales': [0.0, -1.0, -2.0, -3.0, -4.0],
    'masses': [0.05, 3.0 / 16.0, 0.22],
    'grid_n': 256,
    'k_max': 20.0,
    'profile_points': 200
}


@dataclass
class ChernRequest:
    """
    Chern number of the renormalized state by both methods across scales
    and masses, the IR fixed point and the self-similar curvature radius.
    """
    config_dict: dict
    run_config: RunConfig = field(default=None, init=False)
    settings: dict = field(default_factory=dict, init=False)
    scales: list = field(default_factory=list, init=False)
    masses: list = field(default_factory=list, init=False)

    def __post_init__(self):
        self.run_config = RunConfig(self.config_dict)
        self.settings = self.run_config.section('chern', CHERN_DEFAULTS)
        try:
            self.scales = [
                FlowScale(u) for u in
                scale_list('chern', 'scales', self.settings['scales'])
            ]
            self.masses = [ModelParams(m) for m in self.settings['masses']]
        except (TypeError, ValueError) as err:
            if isinstance(err, ConfigFieldError):
                raise
            raise ConfigFieldError('chern', str(err)) from err
        if positive_int('chern', 'grid_n', self.settings['grid_n']) < 16:
            raise ConfigFieldError('chern.grid_n',
                                   'chern.grid_n must be at least 16')
        positive_number('chern', 'k_max', self.settings['k_max'])
        positive_int('chern', 'profile_points',
                     self.settings['profile_points'])

    def evaluate(self):
        params = self.run_config.params
        out_dir = self.run_config.output_dir
        tol = self.run_config.tolerance
        grid_n = self.settings['grid_n']
        k_max = float(self.settings['k_max'])

        rows = []
        profiles = []
        for scale in self.scales:
            radial = chern_number_radial(scale, params)
            plaquette, gap = chern_number_plaquette(scale, params, grid_n,
                                                    k_max)
            print(f'u: {scale.u}, C radial: {radial}, C plaquette: '
                  f'{plaquette}')
            rows.append({'u': scale.u, 'C_radial': radial,
                         'C_plaquette': plaquette, 'gap': gap})
            k_values = np.geomspace(1e-3, k_max, self.settings['profile_points'])
            profiles.append(curvature_profile(scale, params, k_values))
        table = DataFrame(rows, columns=['u', 'C_radial', 'C_plaquette', 'gap'])

        artifacts = [
            file_utils.write_csv(table, out_dir, 'chern_table.csv'),
            file_utils.write_csv(
                DataFrame(np.concatenate([frame.to_numpy() for frame in
                                          profiles]), columns=['u', 'k', 'F']),
                out_dir, 'curvature_profile.csv')
        ]

        uv = FlowScale(0.0)
        radial_uv = max(abs(chern_number_radial(uv, mass) - 1.0)
                        for mass in self.masses)
        plaquette_uv = max(
            abs(chern_number_plaquette(uv, mass, grid_n, k_max)[0] - 1.0)
            for mass in self.masses)
        ir_value = abs(chern_number_radial(uv, params, family=ir_family()))

        reference = curvature_weight_radius(uv, params)
        radius_error = max(
            abs(curvature_weight_radius(scale, params)
                / (np.exp(scale.u) * reference) - 1.0)
            for scale in self.scales)

        criteria = [
            at_most('chern_radial_uv_deviation', radial_uv,
                    tol('chern_radial')),
            at_most('chern_plaquette_uv_deviation', plaquette_uv,
                    tol('chern_plaquette')),
            at_most('chern_flow_deviation',
                    float(np.max(np.abs(table['C_radial'] - 1.0))),
                    tol('chern_flow')),
            at_most('chern_method_agreement',
                    float(np.max(np.abs(table['C_radial']
                                        - table['C_plaquette']))),
                    tol('chern_plaquette')),
            at_most('chern_ir_fixed_point', ir_value, tol('chern_ir')),
            at_most('curvature_radius_scaling', radius_error,
                    tol('weight_radius'))
        ]
        return criteria, artifacts

    def submit(self):
        error_msg = None
        criteria = []
        artifacts = []
        try:
            criteria, artifacts = self.evaluate()
        except (RuntimeError, ValueError) as err:
            error_msg = f'Problems encountered computing Chern numbers - {err}'
            print(error_msg)
        response = build_response(self.config_dict, criteria, artifacts,
                                  error_msg)
        print(f'response: {response.message}')
        return response
