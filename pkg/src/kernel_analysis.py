"""
Copyright 2022 NOAA
All rights reserved.

Real-space structure of the interaction-picture disentangler.  With the
convention psi(x) = int d^2k / (2 pi)^2 e^{i k.x} psi(k), the transform of
f(k) e^{-i theta_k} is (i / 2 pi) e^{-i theta_x} int_0^inf f(k) J_1(k r) k dk,
so only the order-1 Hankel transform g(r) of the radial profile is computed
and the angular factor is carried symbolically.

"""
from collections import namedtuple
from dataclasses import dataclass, field
import math

import mpmath
import numpy as np
from pandas import DataFrame
from scipy import integrate, special, stats

from cmera_action_response import at_most, build_response
from core_model import ModelParams
import file_utils
from flow_engine import FlowScale, disentangler_profile, lambda_roots
from flow_engine import partial_fraction_residues, pole_momenta
from flow_engine import require_quasi_local
from run_config import ConfigFieldError, RunConfig
from run_config import positive_int, positive_window, scale_list

ANGULAR_PREFACTOR = 1j / (2.0 * np.pi)
HEAD_SCALE = 20.0
MIN_HEAD_ZEROS = 8
TAIL_SEGMENTS = 24
FAR_MOMENTUM = 1e8
LARGE_MOMENTUM = 1e4
SHANKS_DPS = 30
HANKEL_TOLERANCE = 1e-9
SEGMENT_EPSABS = 1e-15
NEGLIGIBLE_SEGMENT = 1e-17
MIN_R_SQUARED = 0.999
DEFAULT_FIT_WINDOW = (20.0, 60.0)
CANDIDATE_TOLERANCE = 0.02
DOMINANCE_LENGTHS = 5.0

DecayFit = namedtuple(
    'DecayFit',
    [
        'xi',
        'r_squared',
        'slope',
        'intercept'
    ],
)


def _segment(func, lower, upper, r):
    value, _ = integrate.quad(lambda k: func(k) * special.j1(k * r),
                              lower, upper, epsabs=SEGMENT_EPSABS,
                              epsrel=1e-13, limit=100)
    return value


def _accelerated_tail(segments):
    """
    Shanks-accelerated sum of the tail segments.

    Returns
    -------
    (value, error estimate)
    """
    with mpmath.workdps(SHANKS_DPS):
        partial_sums = []
        total = mpmath.mpf(0)
        for val in segments:
            total += mpmath.mpf(float(val))
            partial_sums.append(total)
        table = mpmath.shanks(partial_sums)
        if not table or len(table[-1]) < 3:
            return float(partial_sums[-1]), \
                float(abs(partial_sums[-1] - partial_sums[-2]))
        # odd columns hold the extrapolates, even columns are auxiliary
        return float(table[-1][-1]), float(abs(table[-1][-1] - table[-1][-3]))


def _tail_model_transform(tail_coefficient, tail_correction, a, r):
    ''' transform of c + d / (k^2 + a^2): c/r + d (1/r - a K_1(a r)) / a^2 '''
    value = tail_coefficient / r
    if tail_correction != 0.0:
        value += tail_correction * (1.0 / r - a * special.k1(a * r)) / a**2
    return value


def hankel1(func, r, k_scale=1.0, tail_coefficient=None,
            tail_correction=None, tol=HANKEL_TOLERANCE):
    """
    Order-1 Hankel transform int_0^inf f(k) J_1(k r) k dk.

    With c = lim f(k) k and d = lim k^2 (f(k) k - c), the model
    c + d / (k^2 + a^2), a = k_scale, is subtracted and restored through its
    closed-form transform, leaving a remainder that falls off as k^-4.  The
    remainder is integrated segment by segment between zeros of J_1 up to at
    least 20 k_scale, then a further 24 segments are summed and their partial
    sums are accelerated with the Shanks transform.

    Parameters
    ----------
    func: callable f(k), scalar in and out
    r: float > 0
    k_scale: momentum scale on which f varies
    tail_coefficient: c, estimated from f at a far momentum when omitted
    tail_correction: d, estimated from f at a large momentum when omitted
    tol: absolute bound on the extrapolation error estimate

    Returns
    -------
    float
    """
    if r <= 0.0:
        msg = f'hankel1 requires r > 0, actually: {r}'
        raise ValueError(msg)
    if k_scale <= 0.0:
        msg = f'hankel1 requires k_scale > 0, actually: {k_scale}'
        raise ValueError(msg)
    if tail_coefficient is None:
        far = FAR_MOMENTUM * k_scale
        tail_coefficient = float(func(far) * far)
    if tail_correction is None:
        large = LARGE_MOMENTUM * k_scale
        tail_correction = float(
            large**2 * (func(large) * large - tail_coefficient))
    a_sq = k_scale**2

    def remainder(k):
        return func(k) * k - tail_coefficient - tail_correction / (k * k + a_sq)

    n_head = max(MIN_HEAD_ZEROS,
                 int(np.ceil(HEAD_SCALE * k_scale * r / np.pi)) + 1)
    zeros = np.concatenate(
        [[0.0], special.jn_zeros(1, n_head + TAIL_SEGMENTS) / r])

    head = math.fsum(_segment(remainder, zeros[idx], zeros[idx + 1], r)
                     for idx in range(n_head))
    segments = np.array([
        _segment(remainder, zeros[idx], zeros[idx + 1], r)
        for idx in range(n_head, n_head + TAIL_SEGMENTS)
    ])

    if np.max(np.abs(segments)) < NEGLIGIBLE_SEGMENT:
        tail = math.fsum(segments)
    else:
        tail, error = _accelerated_tail(segments)
        if error > tol:
            msg = f'hankel1 did not converge at r: {r}, last tail ' \
                f'segments: {segments[-3:]}, accelerated tail: {tail}, ' \
                f'error estimate: {error}'
            print(msg)
            raise RuntimeError(msg)
    return head + tail + _tail_model_transform(
        tail_coefficient, tail_correction, k_scale, r)


def inverse_hankel1(func, k, r_scale=1.0, tol=HANKEL_TOLERANCE):
    ''' the order-1 Hankel transform is its own inverse '''
    return hankel1(func, k, k_scale=r_scale, tail_coefficient=0.0,
                   tail_correction=0.0, tol=tol)


@dataclass
class KernelProfile:
    ''' radial amplitude g(r); the full kernel is i/(2 pi) e^{-i theta} g '''
    u: float
    radii: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.radii.shape != self.values.shape:
            msg = f'radii and values differ in shape: {self.radii.shape} ' \
                f'vs {self.values.shape}'
            raise ValueError(msg)
        if np.any(self.radii <= 0.0):
            raise ValueError('kernel radii must be positive')

    def full_kernel(self, theta):
        return ANGULAR_PREFACTOR * np.exp(-1j * theta) * self.values

    def to_dataframe(self):
        return DataFrame({
            'u': np.full(self.radii.shape, self.u),
            'r': self.radii,
            'Re g': self.values.real,
            'Im g': self.values.imag,
            '|g|': np.abs(self.values)
        })


def _scaled_poles(scale, params):
    kappa_plus, kappa_minus = pole_momenta(params)
    stretch = np.exp(scale.u)
    return kappa_plus * stretch, kappa_minus * stretch


def kernel_closed_form(scale, params, radii):
    """
    g_u(r) = e^u sum_pm c_pm kappa_pm K_1(kappa_pm r), with
    kappa_pm = sqrt(-lambda_pm) e^u.
    """
    residues = partial_fraction_residues(params)
    kappa_plus, kappa_minus = _scaled_poles(scale, params)
    radii = np.asarray(radii, dtype=float)
    return np.exp(scale.u) * (
        residues.c_plus * kappa_plus * special.k1(kappa_plus * radii)
        + residues.c_minus * kappa_minus * special.k1(kappa_minus * radii))


def real_space_kernel(scale, params, radii):
    """
    Numeric g_u(r) as the residue-weighted sum of the Hankel transforms of
    the two partial-fraction terms of H(e^{-u} k).
    """
    require_quasi_local(params)
    residues = partial_fraction_residues(params)
    kappa_plus, kappa_minus = _scaled_poles(scale, params)
    stretch = np.exp(scale.u)

    def term(kappa, radius):
        # f k -> stretch - stretch kappa^2 / k^2
        return hankel1(lambda k: stretch * k / (k * k + kappa * kappa),
                       radius, k_scale=stretch, tail_coefficient=stretch,
                       tail_correction=-stretch * kappa**2)

    values = []
    for radius in np.atleast_1d(np.asarray(radii, dtype=float)):
        values.append(residues.c_plus * term(kappa_plus, radius)
                      + residues.c_minus * term(kappa_minus, radius))
    return KernelProfile(scale.u, np.atleast_1d(radii), np.array(values))


def fit_decay_length(profile, r_window):
    """
    Least-squares fit of log|g| + log(r)/2 against r inside r_window.

    Returns
    -------
    DecayFit with xi = -1/slope
    """
    low, high = r_window
    inside = (profile.radii >= low) & (profile.radii <= high)
    if np.count_nonzero(inside) < 3:
        msg = f'decay fit needs at least 3 radii in window {r_window}'
        print(msg)
        raise ValueError(msg)
    values = profile.values[inside].real
    if np.any(np.sign(values) != np.sign(values[0])) or np.any(values == 0.0):
        msg = f'kernel changes sign inside the fit window {r_window}'
        print(msg)
        raise ValueError(msg)
    radii = profile.radii[inside]
    fit = stats.linregress(radii, np.log(np.abs(values)) + 0.5 * np.log(radii))
    if fit.slope >= 0.0:
        msg = f'kernel does not decay inside {r_window}, slope: {fit.slope}'
        print(msg)
        raise ValueError(msg)
    r_squared = fit.rvalue**2
    if r_squared < MIN_R_SQUARED:
        print(f'WARNING: decay fit R^2 {r_squared} below {MIN_R_SQUARED} '
              f'for window {r_window}')
    return DecayFit(-1.0 / fit.slope, r_squared, fit.slope, fit.intercept)


def decay_length_candidates(scale, params):
    """
    The two closed-form characteristic lengths:
    e^{-u} / min sqrt(-lambda) and e^{-u} max sqrt(-lambda).
    """
    roots = lambda_roots(params)
    require_quasi_local(params)
    sqrt_roots = np.sqrt(-np.array([roots.lambda_plus, roots.lambda_minus]))
    stretch = np.exp(-scale.u)
    return stretch / sqrt_roots.min(), stretch * sqrt_roots.max()


def decay_length_report(scale, params, fit):
    ''' compare a fitted xi with both candidates, printing both '''
    inverse_root, quoted = decay_length_candidates(scale, params)
    inverse_error = abs(fit.xi / inverse_root - 1.0)
    quoted_error = abs(fit.xi / quoted - 1.0)
    supported = 'neither'
    if inverse_error <= CANDIDATE_TOLERANCE and inverse_error <= quoted_error:
        supported = 'inverse_root'
    elif quoted_error <= CANDIDATE_TOLERANCE:
        supported = 'quoted'
    print(f'u: {scale.u}, fitted xi: {fit.xi}, e^-u/min sqrt(-lambda): '
          f'{inverse_root}, e^-u max sqrt(-lambda): {quoted}, '
          f'supported: {supported}')
    return {
        'u': scale.u,
        'xi': fit.xi,
        'r_squared': fit.r_squared,
        'candidate_inverse_root': inverse_root,
        'candidate_quoted': quoted,
        'inverse_root_error': inverse_error,
        'quoted_error': quoted_error,
        'supported': supported
    }


def dominant_kernel_term(scale, params, radii):
    ''' the c_plus K_1 term; kappa_plus <= kappa_minus so it decays slowest '''
    residues = partial_fraction_residues(params)
    kappa_plus, _ = _scaled_poles(scale, params)
    radii = np.asarray(radii, dtype=float)
    return np.exp(scale.u) * residues.c_plus * kappa_plus \
        * special.k1(kappa_plus * radii)


def asymptotic_dominance_error(scale, params, profile, xi):
    """
    Max of |g - dominant term| / |g| over the profile radii beyond 5 xi.
    """
    beyond = profile.radii > DOMINANCE_LENGTHS * xi
    if not np.any(beyond):
        msg = f'no profile radius beyond {DOMINANCE_LENGTHS} xi: ' \
            f'{DOMINANCE_LENGTHS * xi}'
        raise ValueError(msg)
    values = profile.values.real[beyond]
    dominant = dominant_kernel_term(scale, params, profile.radii[beyond])
    return float(np.max(np.abs(values - dominant) / np.abs(values)))


def profile_round_trip_error(scale, params, k_values):
    """
    Max relative gap between H(e^{-u} k) and the inverse transform of the
    closed-form kernel.
    """
    k_values = np.asarray(k_values, dtype=float)
    r_scale = np.exp(-scale.u)

    def kernel(radius):
        return float(kernel_closed_form(scale, params, radius))

    recovered = np.array([inverse_hankel1(kernel, k, r_scale=r_scale)
                          for k in k_values])
    expected = disentangler_profile(np.exp(-scale.u) * k_values, params)
    return float(np.max(np.abs(recovered / expected - 1.0)))


KERNEL_DEFAULTS = {
    'scales': [0.0, -0.5, -1.0],
    'profile_radii': [1.0, 40.0],
    'profile_points': 40,
    'fit_window': list(DEFAULT_FIT_WINDOW),
    'fit_points': 21,
    'round_trip_momenta': [0.05, 5.0],
    'round_trip_points': 12
}


@dataclass
class KernelRequest:
    """
    Numeric real-space kernels versus the Bessel closed form, decay-length
    fits across scales and the adjudication of both candidate lengths.
    Radii and windows are given at u = 0 and stretched by e^{-u}.
    """
    config_dict: dict
    run_config: RunConfig = field(default=None, init=False)
    settings: dict = field(default_factory=dict, init=False)
    scales: list = field(default_factory=list, init=False)

    def __post_init__(self):
        self.run_config = RunConfig(self.config_dict)
        if not self.run_config.params.quasi_local_regime:
            msg = f'kernel analysis requires 0 < m < 1/4, m: ' \
                f'{self.run_config.params.m}'
            raise ConfigFieldError('model.m', msg)
        self.settings = self.run_config.section('kernel', KERNEL_DEFAULTS)
        try:
            self.scales = [
                FlowScale(u) for u in
                scale_list('kernel', 'scales', self.settings['scales'])
            ]
        except ValueError as err:
            if isinstance(err, ConfigFieldError):
                raise
            raise ConfigFieldError('kernel.scales', str(err)) from err
        for key in ['profile_radii', 'fit_window', 'round_trip_momenta']:
            self.settings[key] = positive_window('kernel', key,
                                                 self.settings[key])
        for key in ['profile_points', 'fit_points', 'round_trip_points']:
            positive_int('kernel', key, self.settings[key])

    def evaluate(self):
        params = self.run_config.params
        out_dir = self.run_config.output_dir
        tol = self.run_config.tolerance
        base_radii = np.linspace(*self.settings['profile_radii'],
                                 self.settings['profile_points'])
        base_window = np.linspace(*self.settings['fit_window'],
                                  self.settings['fit_points'])

        frames = []
        reports = []
        hankel_error = 0.0
        dominance = 0.0
        for scale in self.scales:
            stretch = np.exp(-scale.u)
            profile = real_space_kernel(scale, params, stretch * base_radii)
            closed = kernel_closed_form(scale, params, profile.radii)
            hankel_error = max(hankel_error, float(np.max(
                np.abs(profile.values.real / closed - 1.0))))
            frames.append(profile.to_dataframe())

            window = real_space_kernel(scale, params, stretch * base_window)
            fit = fit_decay_length(
                window, (stretch * base_window[0], stretch * base_window[-1]))
            reports.append(decay_length_report(scale, params, fit))
            dominance = max(dominance, asymptotic_dominance_error(
                scale, params, window, fit.xi))

        fits = DataFrame(reports, columns=[
            'u', 'xi', 'r_squared', 'candidate_inverse_root',
            'candidate_quoted', 'inverse_root_error', 'quoted_error',
            'supported'])
        artifacts = [
            file_utils.write_csv(
                DataFrame(np.concatenate([frame.to_numpy() for frame in
                                          frames]),
                          columns=['u', 'r', 'Re g', 'Im g', '|g|']),
                out_dir, 'kernel_profile.csv'),
            file_utils.write_csv(fits, out_dir, 'decay_fits.csv')
        ]

        reference = fits['xi'].iloc[0] / np.exp(-fits['u'].iloc[0])
        scaling_error = float(np.max(np.abs(
            fits['xi'] / (reference * np.exp(-fits['u'])) - 1.0)))
        best_candidate = float(np.max(np.minimum(fits['inverse_root_error'],
                                                 fits['quoted_error'])))
        round_trip = profile_round_trip_error(
            FlowScale(0.0), params,
            np.linspace(*self.settings['round_trip_momenta'],
                        self.settings['round_trip_points']))
        criteria = [
            at_most('hankel_closed_form_deviation', hankel_error,
                    tol('hankel_match')),
            at_most('hankel_round_trip_deviation', round_trip,
                    tol('hankel_match')),
            at_most('asymptotic_dominance_deviation', dominance,
                    tol('asymptotic_dominance')),
            at_most('decay_length_scaling_deviation', scaling_error,
                    tol('kernel_scaling')),
            at_most('decay_length_candidate_deviation', best_candidate,
                    tol('kernel_scaling'))
        ]
        return criteria, artifacts

    def submit(self):
        error_msg = None
        criteria = []
        artifacts = []
        try:
            criteria, artifacts = self.evaluate()
        except (RuntimeError, ValueError) as err:
            error_msg = f'Problems encountered analyzing kernels - {err}'
            print(error_msg)
        response = build_response(self.config_dict, criteria, artifacts,
                                  error_msg)
        print(f'response: {response.message}')
        return response
