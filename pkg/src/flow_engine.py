"""
Copyright 2022 NOAA
All rights reserved.

Scale-invariant disentangler profile H(k), the closed-form renormalized
wavefunction and the numerical integration of the interaction-picture flow
d(P, Q)/du = G(u, k) (P, Q) for each momentum mode.  Every momentum point
evolves independently, so the integrators advance the whole grid as one
numpy array.

"""
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np
from pandas import DataFrame
from scipy import integrate

from cmera_action_response import at_most, build_response
import core_model
from core_model import ModelParams, Momentum, Spinor
import file_utils
from run_config import ConfigFieldError, RunConfig
from run_config import positive_int, positive_number

DEFAULT_U_MIN = -8.0
DEFAULT_DU = 1e-3
GRID_NORM_TOLERANCE = 1e-10
MAX_NORM_DRIFT = 1e-6
MAX_RK4_STEPS = 10_000_000
PHI_ABS_TOLERANCE = 1e-10

METHOD_RK4 = 'rk4'
METHOD_ADAPTIVE = 'adaptive'
VALID_METHODS = [METHOD_RK4, METHOD_ADAPTIVE]

# A_k and B_k of the boundary matching
A_COEFFICIENT = -1.0 / 2.0j
B_COEFFICIENT = 1.0 / 2.0j

GRID_COLUMNS = ['kx', 'ky', 'Re P', 'Im P', 'Re Q', 'Im Q']

RootPair = namedtuple(
    'RootPair',
    [
        'lambda_plus',
        'lambda_minus',
        'is_complex',
        'is_degenerate'
    ],
)

Residues = namedtuple(
    'Residues',
    [
        'c_plus',
        'c_minus'
    ],
)


@dataclass
class FlowScale:
    ''' renormalization scale u in [u_min, 0] '''
    u: float
    u_min: float = field(default=DEFAULT_U_MIN)

    def __post_init__(self):
        self.u = float(self.u)
        if self.u_min >= 0.0:
            msg = f'u_min must be negative, actually: {self.u_min}'
            print(msg)
            raise ValueError(msg)
        if not self.u_min <= self.u <= 0.0:
            msg = f'scale u must lie in [{self.u_min}, 0], actually: {self.u}'
            print(msg)
            raise ValueError(msg)


def lambda_roots(params):
    ''' roots of x^2 + (1 - 2m) x + m^2, lambda_plus >= lambda_minus '''
    m = params.m
    discriminant = 1.0 - 4.0 * m
    if discriminant < 0.0:
        root = np.emath.sqrt(discriminant)
        return RootPair(
            (-1.0 + 2.0 * m + root) / 2.0,
            (-1.0 + 2.0 * m - root) / 2.0,
            True,
            False
        )
    root = np.sqrt(discriminant)
    return RootPair(
        (-1.0 + 2.0 * m + root) / 2.0,
        (-1.0 + 2.0 * m - root) / 2.0,
        False,
        discriminant == 0.0
    )


def require_quasi_local(params):
    if not params.quasi_local_regime:
        msg = f'operation requires 0 < m < 1/4 (real negative roots), ' \
            f'm: {params.m}'
        print(msg)
        raise ValueError(msg)


def pole_momenta(params):
    ''' kappa_pm = sqrt(-lambda_pm), the imaginary pole positions of H '''
    require_quasi_local(params)
    roots = lambda_roots(params)
    return np.sqrt(-roots.lambda_plus), np.sqrt(-roots.lambda_minus)


def partial_fraction_residues(params):
    """
    Residues with H(k) = sum_pm c_pm k / (k^2 - lambda_pm).

    With s = sqrt(1 - 4m): c_plus = (1 - s)/4, c_minus = (1 + s)/4.
    """
    require_quasi_local(params)
    s = np.sqrt(1.0 - 4.0 * params.m)
    return Residues((1.0 - s) / 4.0, (1.0 + s) / 4.0)


def quoted_residues(params):
    ''' the pair (-1 + s)/(4s), (1 + s)/(4s); kept for comparison only '''
    require_quasi_local(params)
    s = np.sqrt(1.0 - 4.0 * params.m)
    return Residues((-1.0 + s) / (4.0 * s), (1.0 + s) / (4.0 * s))


def _profile(k, m):
    k = np.asarray(k, dtype=float)
    k_sq = k**2
    denominator = 2.0 * (k_sq**2 + k_sq * (1.0 - 2.0 * m) + m**2)
    return k * (m + k_sq) / denominator


def disentangler_profile(k, params):
    ''' H(k) = k (m + k^2) / (2 [k^4 + k^2 (1 - 2m) + m^2]) '''
    return _profile(k, params.m)


def partial_fraction_profile(k, params, residues=None):
    ''' H(k) rebuilt from residues and roots '''
    roots = lambda_roots(params)
    if residues is None:
        residues = partial_fraction_residues(params)
    k = np.asarray(k, dtype=float)
    k_sq = k**2
    return (residues.c_plus * k / (k_sq - roots.lambda_plus)
            + residues.c_minus * k / (k_sq - roots.lambda_minus))


def _phi_integrand(t, m):
    # H(t)/t
    t_sq = t * t
    return (m + t_sq) / (2.0 * (t_sq * t_sq + t_sq * (1.0 - 2.0 * m) + m * m))


def _phi_inverted_integrand(s, m):
    # H(t)/t dt with t = 1/s
    s_sq = s * s
    return (m * s_sq + 1.0) / (
        2.0 * (1.0 + (1.0 - 2.0 * m) * s_sq + m * m * s_sq * s_sq))


def _checked_quad(func, lower, upper, m):
    value, abserr, info = integrate.quad(
        func, lower, upper, args=(m,), epsabs=PHI_ABS_TOLERANCE / 4.0,
        epsrel=1e-13, limit=200, full_output=1)[:3]
    if abserr > PHI_ABS_TOLERANCE:
        msg = f'phi quadrature did not converge on [{lower}, {upper}], ' \
            f'achieved: {abserr}, evaluations: {info.get("neval")}'
        print(msg)
        raise RuntimeError(msg)
    return value


def _phi_scalar(k, m):
    switch = 10.0 * max(1.0, np.sqrt(m))
    if k >= switch:
        return _checked_quad(_phi_inverted_integrand, 0.0, 1.0 / k, m)
    head = _checked_quad(_phi_integrand, k, switch, m)
    tail = _checked_quad(_phi_inverted_integrand, 0.0, 1.0 / switch, m)
    return head + tail


def phi(k, params):
    """
    phi(k) = int_k^inf H(t) dt / t by adaptive quadrature.  The tail beyond
    t = 10 max(1, sqrt(m)) is integrated in s = 1/t.
    """
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr < 0.0):
        msg = f'phi requires k >= 0, actually min k: {k_arr.min()}'
        raise ValueError(msg)
    values = np.array([_phi_scalar(float(kv), params.m)
                       for kv in k_arr.ravel()])
    if k_arr.ndim == 0:
        return float(values[0])
    return values.reshape(k_arr.shape)


def phi_closed_form(k, params):
    ''' sum_pm c_pm / kappa_pm (pi/2 - arctan(k / kappa_pm)) '''
    residues = partial_fraction_residues(params)
    kappa_plus, kappa_minus = pole_momenta(params)
    k = np.asarray(k, dtype=float)
    return (residues.c_plus / kappa_plus
            * (np.pi / 2.0 - np.arctan(k / kappa_plus))
            + residues.c_minus / kappa_minus
            * (np.pi / 2.0 - np.arctan(k / kappa_minus)))


def analytic_amplitudes(u, kx, ky, m):
    """
    Renormalized amplitudes at scale u: the ground amplitudes evaluated at
    the scaled momentum e^{-u} k, i.e. P = sin phi(e^{-u} k) and
    Q = e^{-i theta} cos phi(e^{-u} k) with P real and non-negative.
    """
    scale = np.exp(-u)
    return core_model.ground_amplitudes(
        scale * np.asarray(kx, dtype=float),
        scale * np.asarray(ky, dtype=float),
        m
    )


def analytic_state(scale, momentum, params):
    p_amp, q_amp = analytic_amplitudes(
        scale.u, momentum.kx, momentum.ky, params.m)
    return Spinor(complex(p_amp), complex(q_amp))


def flow_generator(scale, momentum, params):
    ''' G = [[0, H e^{i theta}], [-H e^{-i theta}, 0]], H at e^{-u} k '''
    h_val = float(disentangler_profile(np.exp(-scale.u) * momentum.k, params))
    phase = np.exp(1j * momentum.theta)
    return np.array([
        [0.0, h_val * phase],
        [-h_val * np.conj(phase), 0.0]
    ], dtype=complex)


def fidelity(a, b):
    ''' phase-insensitive overlap modulus |<b|a>| '''
    return float(abs(a.p * np.conj(b.p) + a.q * np.conj(b.q)))


def grid_fidelity(a_grid, b_grid):
    ''' per-point overlap modulus of two grids on the same momenta '''
    if a_grid.kx.shape != b_grid.kx.shape:
        msg = f'grids differ in size: {a_grid.kx.shape} vs {b_grid.kx.shape}'
        raise ValueError(msg)
    return np.abs(a_grid.p * np.conj(b_grid.p) + a_grid.q * np.conj(b_grid.q))


@dataclass
class FlowStateGrid:
    ''' spinors on a set of momenta at a common scale '''
    scale: FlowScale
    kx: np.ndarray
    ky: np.ndarray
    p: np.ndarray
    q: np.ndarray
    norm_tolerance: float = field(default=GRID_NORM_TOLERANCE)

    def __post_init__(self):
        self.kx = np.asarray(self.kx, dtype=float).ravel()
        self.ky = np.asarray(self.ky, dtype=float).ravel()
        self.p = np.asarray(self.p, dtype=complex).ravel()
        self.q = np.asarray(self.q, dtype=complex).ravel()
        sizes = {arr.size for arr in [self.kx, self.ky, self.p, self.q]}
        if len(sizes) != 1:
            msg = f'kx, ky, P and Q must have the same length, found: {sizes}'
            raise ValueError(msg)
        drift = self.norm_drift()
        if drift > self.norm_tolerance:
            msg = f'grid spinors not normalized, max deviation: {drift}'
            print(msg)
            raise ValueError(msg)

    def norm_drift(self):
        if self.p.size == 0:
            return 0.0
        norms = np.sqrt(np.abs(self.p)**2 + np.abs(self.q)**2)
        return float(np.max(np.abs(norms - 1.0)))

    @property
    def points(self):
        return [
            (Momentum(kx, ky), Spinor(p_amp, q_amp))
            for kx, ky, p_amp, q_amp in zip(self.kx, self.ky, self.p, self.q)
        ]

    def to_dataframe(self):
        return DataFrame({
            'kx': self.kx,
            'ky': self.ky,
            'Re P': self.p.real,
            'Im P': self.p.imag,
            'Re Q': self.q.real,
            'Im Q': self.q.imag
        }, columns=GRID_COLUMNS)

    @classmethod
    def from_dataframe(cls, frame, scale):
        missing = [col for col in GRID_COLUMNS if col not in frame.columns]
        if missing:
            msg = f'flow grid frame is missing columns: {missing}'
            raise KeyError(msg)
        return cls(
            scale,
            frame['kx'].to_numpy(),
            frame['ky'].to_numpy(),
            frame['Re P'].to_numpy() + 1j * frame['Im P'].to_numpy(),
            frame['Re Q'].to_numpy() + 1j * frame['Im Q'].to_numpy()
        )


def radial_polar_grid(n_radial, n_angular, k_min, k_max):
    ''' log-spaced radii times equally spaced angles, radius-major order '''
    if n_radial < 1 or n_angular < 1:
        msg = f'grid needs at least one point, n_radial: {n_radial}, ' \
            f'n_angular: {n_angular}'
        raise ValueError(msg)
    if not 0.0 < k_min <= k_max:
        msg = f'need 0 < k_min <= k_max, k_min: {k_min}, k_max: {k_max}'
        raise ValueError(msg)
    radii = np.geomspace(k_min, k_max, n_radial)
    # offset keeps points off the axes
    angles = -np.pi + (np.arange(n_angular) + 0.5) * 2.0 * np.pi / n_angular
    k_grid, theta_grid = np.meshgrid(radii, angles, indexing='ij')
    return (k_grid * np.cos(theta_grid)).ravel(), \
        (k_grid * np.sin(theta_grid)).ravel()


def analytic_grid(scale, kx, ky, params):
    p_amp, q_amp = analytic_amplitudes(scale.u, kx, ky, params.m)
    return FlowStateGrid(scale, kx, ky, p_amp, q_amp)


@dataclass
class FlowConfig:
    ''' integrator settings for integrate_flow '''
    du: float = field(default=DEFAULT_DU)
    method: str = field(default=METHOD_RK4)
    u_min: float = field(default=DEFAULT_U_MIN)
    max_norm_drift: float = field(default=MAX_NORM_DRIFT)
    rtol: float = field(default=1e-11)
    atol: float = field(default=1e-13)

    def __post_init__(self):
        if self.method not in VALID_METHODS:
            msg = f'flow method must be one of: {VALID_METHODS}, ' \
                f'actually: {self.method}'
            raise ValueError(msg)
        for name in ['du', 'max_norm_drift', 'rtol', 'atol']:
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0.0:
                msg = f'{name} must be positive, actually: {value}'
                raise ValueError(msg)


def _flow_rhs(u, p_amp, q_amp, k, phase, m):
    h_val = _profile(np.exp(-u) * k, m)
    return h_val * phase * q_amp, -h_val * np.conj(phase) * p_amp


def _rk4(u_start, u_end, p_amp, q_amp, k, phase, m, du):
    span = u_end - u_start
    n_steps = int(np.ceil(abs(span) / du - 1e-9))
    if n_steps > MAX_RK4_STEPS:
        msg = f'step-size underflow: {n_steps} steps of {du} requested'
        print(msg)
        raise RuntimeError(msg)
    step = span / n_steps
    u = u_start
    for index in range(n_steps):
        k1p, k1q = _flow_rhs(u, p_amp, q_amp, k, phase, m)
        k2p, k2q = _flow_rhs(u + step / 2.0, p_amp + step / 2.0 * k1p,
                             q_amp + step / 2.0 * k1q, k, phase, m)
        k3p, k3q = _flow_rhs(u + step / 2.0, p_amp + step / 2.0 * k2p,
                             q_amp + step / 2.0 * k2q, k, phase, m)
        k4p, k4q = _flow_rhs(u + step, p_amp + step * k3p,
                             q_amp + step * k3q, k, phase, m)
        p_amp = p_amp + step / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        q_amp = q_amp + step / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
        u = u_start + (index + 1) * step
    return p_amp, q_amp


def _adaptive(u_start, u_end, p_amp, q_amp, k, phase, m, config):
    size = p_amp.size

    def rhs(u, state):
        dp, dq = _flow_rhs(u, state[:size], state[size:], k, phase, m)
        return np.concatenate([dp, dq])

    solution = integrate.solve_ivp(
        rhs, (u_start, u_end), np.concatenate([p_amp, q_amp]),
        method='DOP853', rtol=config.rtol, atol=config.atol)
    if not solution.success:
        msg = f'adaptive flow integration failed: {solution.message}'
        print(msg)
        raise RuntimeError(msg)
    final = solution.y[:, -1]
    return final[:size], final[size:]


def integrate_flow(initial, u_target, params, config=None):
    """
    Evolve every point of the grid from initial.scale.u to u_target.

    Parameters
    ----------
    initial: FlowStateGrid
    u_target: FlowScale or float
    params: ModelParams
    config: FlowConfig, defaults to fixed-step RK4 with du = 1e-3

    Returns
    -------
    FlowStateGrid at u_target.  The spinors are not renormalized; the
    achieved deviation is available through norm_drift().
    """
    if config is None:
        config = FlowConfig()
    if not isinstance(u_target, FlowScale):
        u_target = FlowScale(u_target, config.u_min)
    u_start = initial.scale.u
    if u_start == u_target.u:
        return FlowStateGrid(u_target, initial.kx.copy(), initial.ky.copy(),
                             initial.p.copy(), initial.q.copy(),
                             initial.norm_tolerance)

    k = np.hypot(initial.kx, initial.ky)
    phase = np.exp(1j * np.arctan2(initial.ky, initial.kx))
    if config.method == METHOD_RK4:
        p_amp, q_amp = _rk4(u_start, u_target.u, initial.p, initial.q, k,
                            phase, params.m, config.du)
    else:
        p_amp, q_amp = _adaptive(u_start, u_target.u, initial.p, initial.q,
                                 k, phase, params.m, config)

    norms = np.sqrt(np.abs(p_amp)**2 + np.abs(q_amp)**2)
    drift = float(np.max(np.abs(norms - 1.0))) if norms.size else 0.0
    if drift > config.max_norm_drift:
        msg = f'flow integration failed, norm drift {drift} exceeds ' \
            f'{config.max_norm_drift}'
        print(msg)
        raise RuntimeError(msg)
    return FlowStateGrid(u_target, initial.kx.copy(), initial.ky.copy(),
                         p_amp, q_amp, config.max_norm_drift)


def ground_phase_angle(k, params):
    ''' arctan2(u_k, |v_k|), the angle whose sine is u_k '''
    u_k, v_k = core_model.ground_amplitudes(k, np.zeros_like(k), params.m)
    return np.arctan2(u_k, np.abs(v_k))


def boundary_identity_residual(k, params, step=1e-5):
    ''' max |d/dk arcsin(u_k) + H(k)/k| by central differences '''
    k = np.asarray(k, dtype=float)
    derivative = (ground_phase_angle(k + step, params)
                  - ground_phase_angle(k - step, params)) / (2.0 * step)
    return float(np.max(np.abs(derivative + disentangler_profile(k, params) / k)))


def phi_amplitude_residual(k, params):
    ''' max deviation of (sin phi, cos phi) from (u_k, |v_k|) '''
    k = np.asarray(k, dtype=float)
    angle = phi(k, params)
    u_k, v_k = core_model.ground_amplitudes(k, np.zeros_like(k), params.m)
    return float(max(np.max(np.abs(np.sin(angle) - u_k)),
                     np.max(np.abs(np.cos(angle) - np.abs(v_k)))))


def partial_fraction_deviation(k, params):
    ''' max relative gap between the rational and partial-fraction forms '''
    direct = disentangler_profile(k, params)
    rebuilt = partial_fraction_profile(k, params)
    return float(np.max(np.abs(rebuilt - direct) / np.abs(direct)))


FLOW_DEFAULTS = {
    'u_start': -5.0,
    'u_end': 0.0,
    'du': DEFAULT_DU,
    'method': METHOD_RK4,
    'u_min': DEFAULT_U_MIN,
    'n_radial': 16,
    'n_angular': 4,
    'k_min': 0.01,
    'k_max': 10.0
}

IDENTITY_WINDOW = (0.01, 10.0)
PARTIAL_FRACTION_WINDOW = (1e-3, 50.0)
PARTIAL_FRACTION_MASSES = [0.05, 3.0 / 16.0, 0.22]


@dataclass
class FlowRequest:
    """
    Integrate the flow from u_start to u_end on a radial-polar grid, compare
    with the closed-form state and check the analytic identities behind the
    disentangler profile.
    """
    config_dict: dict
    run_config: RunConfig = field(default=None, init=False)
    settings: dict = field(default_factory=dict, init=False)
    flow_config: FlowConfig = field(default=None, init=False)
    start_scale: FlowScale = field(default=None, init=False)
    end_scale: FlowScale = field(default=None, init=False)

    def __post_init__(self):
        self.run_config = RunConfig(self.config_dict)
        self.settings = self.run_config.section('flow', FLOW_DEFAULTS)
        try:
            self.flow_config = FlowConfig(
                du=positive_number('flow', 'du', self.settings['du']),
                method=self.settings['method'],
                u_min=float(self.settings['u_min'])
            )
            self.start_scale = FlowScale(self.settings['u_start'],
                                         self.flow_config.u_min)
            self.end_scale = FlowScale(self.settings['u_end'],
                                       self.flow_config.u_min)
        except (TypeError, ValueError) as err:
            if isinstance(err, ConfigFieldError):
                raise
            raise ConfigFieldError('flow', str(err)) from err
        for key in ['n_radial', 'n_angular']:
            positive_int('flow', key, self.settings[key])
        for key in ['k_min', 'k_max']:
            positive_number('flow', key, self.settings[key])

    def evaluate(self):
        ''' run the flow checks, write artifacts, return (criteria, paths) '''
        params = self.run_config.params
        out_dir = self.run_config.output_dir
        kx, ky = radial_polar_grid(
            self.settings['n_radial'], self.settings['n_angular'],
            float(self.settings['k_min']), float(self.settings['k_max']))

        start = analytic_grid(self.start_scale, kx, ky, params)
        evolved = integrate_flow(start, self.end_scale, params,
                                 self.flow_config)
        reference = analytic_grid(self.end_scale, kx, ky, params)
        overlaps = grid_fidelity(evolved, reference)
        norms = np.sqrt(np.abs(evolved.p)**2 + np.abs(evolved.q)**2)
        print(f'flow min fidelity: {overlaps.min()}, '
              f'norm drift: {evolved.norm_drift()}')

        artifacts = [
            file_utils.write_csv(evolved.to_dataframe(), out_dir,
                                 'flow_grid.csv'),
            file_utils.write_csv(DataFrame({
                'kx': kx,
                'ky': ky,
                'fidelity': overlaps,
                'norm_deviation': norms - 1.0
            }), out_dir, 'flow_fidelity.csv')
        ]

        tol = self.run_config.tolerance
        k_window = np.linspace(*IDENTITY_WINDOW, 200)
        criteria = [
            at_most('flow_fidelity_deficit', 1.0 - overlaps.min(),
                    tol('flow_fidelity')),
            at_most('flow_norm_drift', evolved.norm_drift(),
                    tol('flow_norm_drift')),
            at_most('boundary_identity_residual',
                    boundary_identity_residual(k_window, params),
                    tol('boundary_identity')),
            at_most('phi_origin_deviation',
                    abs(phi(0.0, params) - np.pi / 2.0),
                    tol('phi_endpoint')),
            at_most('phi_amplitude_residual',
                    phi_amplitude_residual(k_window, params),
                    tol('phi_endpoint'))
        ]

        k_fraction = np.geomspace(*PARTIAL_FRACTION_WINDOW, 400)
        deviation = max(
            partial_fraction_deviation(k_fraction, ModelParams(mass))
            for mass in PARTIAL_FRACTION_MASSES
        )
        criteria.append(at_most('partial_fraction_deviation', deviation,
                                tol('partial_fraction')))
        return criteria, artifacts

    def submit(self):
        error_msg = None
        criteria = []
        artifacts = []
        try:
            criteria, artifacts = self.evaluate()
        except (RuntimeError, ValueError) as err:
            error_msg = f'Problems encountered integrating the flow - {err}'
            print(error_msg)
        response = build_response(self.config_dict, criteria, artifacts,
                                  error_msg)
        print(f'response: {response.message}')
        return response
