"""
Copyright 2022 NOAA
All rights reserved.

Preparation of the near-IR state on a finite lattice.  A light field
shaped against the standing-wave bus state makes the ground-to-bus
coupling select a single lattice momentum, so each momentum point can be
driven g1 -> e -> g2 on its own.  Pulse plans are built from exact Rabi
rotations and simulated per momentum.

"""
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np
from pandas import DataFrame, concat

from cmera_action_response import at_most, build_response
import core_model
import file_utils
from flow_engine import FlowConfig, FlowScale, FlowStateGrid
from flow_engine import DEFAULT_DU, analytic_amplitudes
from flow_engine import grid_fidelity, integrate_flow
from run_config import ConfigFieldError, RunConfig
from run_config import positive_int, positive_number

LEG_GROUND = 'g1_to_e'
LEG_TARGET = 'e_to_g2'
VALID_LEGS = [LEG_GROUND, LEG_TARGET]

DEFAULT_THRESHOLD = 1e-3
BUS_TOLERANCE = 1e-12
REACHABLE_TOLERANCE = 1e-10

# amplitude order inside a momentum point
GROUND, BUS, TARGET = 0, 1, 2

PulseStep = namedtuple(
    'PulseStep',
    [
        'n1',
        'n2',
        'leg',
        'area',
        'phase',
        'duration'
    ],
)


@dataclass
class LatticeSpec:
    """
    (N + 2) x (N + 2) square lattice with the wavefunction supported on the
    N x N active sites 1 <= x1, x2 <= N.  Momenta are k = 2 pi (n1, n2)/N
    with n in (-N/2, N/2].
    """
    n_sites: int

    def __post_init__(self):
        if isinstance(self.n_sites, bool) or not isinstance(self.n_sites, int):
            msg = f'n_sites must be an integer, actually: {type(self.n_sites)}'
            raise TypeError(msg)
        if self.n_sites < 2:
            raise ValueError(f'n_sites must be >= 2, actually: {self.n_sites}')

    def indices(self):
        ''' 1D momentum indices in increasing order '''
        return np.arange(self.n_sites) - (self.n_sites - 1) // 2

    def index_grid(self):
        ''' (n1, n2) over the whole zone, n1-major '''
        n1, n2 = np.meshgrid(self.indices(), self.indices(), indexing='ij')
        return n1.ravel(), n2.ravel()

    def momentum(self, n1, n2):
        return 2.0 * np.pi * np.asarray(n1) / self.n_sites, \
            2.0 * np.pi * np.asarray(n2) / self.n_sites

    def active_sites(self):
        sites = np.arange(1, self.n_sites + 1)
        x1, x2 = np.meshgrid(sites, sites, indexing='ij')
        return x1.ravel(), x2.ravel()

    def check_index(self, n1, n2):
        valid = self.indices()
        if n1 not in valid or n2 not in valid:
            msg = f'momentum index ({n1}, {n2}) is not on the N = ' \
                f'{self.n_sites} grid'
            raise ValueError(msg)


def ground_wave(x1, x2, kx, ky):
    ''' unnormalized plane wave exp(i k.x) of g1 '''
    return np.exp(1j * (np.asarray(kx) * np.asarray(x1)
                        + np.asarray(ky) * np.asarray(x2)))


def bus_wave(x1, x2, spec):
    ''' lowest standing wave sin(pi x1/(N+1)) sin(pi x2/(N+1)) of the bus '''
    x1 = np.asarray(x1)
    x2 = np.asarray(x2)
    edge = spec.n_sites + 1
    if np.any((x1 < 0) | (x1 > edge) | (x2 < 0) | (x2 > edge)):
        msg = f'site outside the {edge + 1} x {edge + 1} lattice: ({x1}, {x2})'
        raise ValueError(msg)
    return np.sin(np.pi * x1 / edge) * np.sin(np.pi * x2 / edge)


def light_field(x1, x2, qx, qy, spec):
    ''' e^{-i q.x} divided by the bus profile; undefined on the boundary '''
    x1 = np.asarray(x1)
    x2 = np.asarray(x2)
    edge = spec.n_sites + 1
    if np.any((x1 <= 0) | (x1 >= edge) | (x2 <= 0) | (x2 >= edge)):
        msg = f'light field is undefined on the lattice boundary: ({x1}, {x2})'
        raise ValueError(msg)
    return np.exp(-1j * (np.asarray(qx) * x1 + np.asarray(qy) * x2)) \
        / bus_wave(x1, x2, spec)


def coupling_overlap(n_k, n_q, spec):
    ''' sum over active sites of bus * light field * ground wave '''
    spec.check_index(*n_k)
    spec.check_index(*n_q)
    x1, x2 = spec.active_sites()
    kx, ky = spec.momentum(*n_k)
    qx, qy = spec.momentum(*n_q)
    return complex(np.sum(bus_wave(x1, x2, spec)
                          * light_field(x1, x2, qx, qy, spec)
                          * ground_wave(x1, x2, kx, ky)))


def selection_rule_table(spec):
    """
    Overlaps for every (k, q) pair of the zone.  The site sum factorizes
    into two 1D sums of exp(i (k - q) x) over x = 1..N.
    """
    index = spec.indices()
    sites = np.arange(1, spec.n_sites + 1)
    delta = 2.0 * np.pi * (index[:, None] - index[None, :]) / spec.n_sites
    line = np.exp(1j * delta[:, :, None] * sites[None, None, :]).sum(axis=2)
    overlap = np.einsum('ac,bd->abcd', line, line)
    n1, n2, m1, m2 = np.meshgrid(index, index, index, index, indexing='ij')
    return DataFrame({
        'n_sites': spec.n_sites,
        'k_n1': n1.ravel(),
        'k_n2': n2.ravel(),
        'q_n1': m1.ravel(),
        'q_n2': m2.ravel(),
        'overlap_re': overlap.real.ravel(),
        'overlap_im': overlap.imag.ravel()
    })


def selection_rule_residual(table):
    ''' worst |overlap - N^2 delta_kq| / N^2 '''
    n_sq = table['n_sites'].to_numpy(dtype=float)**2
    same = (table['k_n1'] == table['q_n1']) & (table['k_n2'] == table['q_n2'])
    expected = np.where(same, n_sq, 0.0)
    error = np.hypot(table['overlap_re'] - expected, table['overlap_im'])
    return float(np.max(error / n_sq))


@dataclass
class PulsePlan:
    ''' ordered pulse steps plus the global phase left at each target '''
    rabi: float
    steps: list = field(default_factory=list)
    global_phases: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.isfinite(self.rabi) or self.rabi <= 0.0:
            raise ValueError(f'rabi must be positive, actually: {self.rabi}')
        for step in self.steps:
            if step.leg not in VALID_LEGS:
                msg = f'unknown pulse leg: {step.leg}, valid: {VALID_LEGS}'
                raise ValueError(msg)
        legs = [step.leg for step in self.steps]
        if legs[0::2] != [LEG_GROUND] * len(legs[0::2]) \
                or legs[1::2] != [LEG_TARGET] * len(legs[1::2]) \
                or len(legs) % 2:
            raise ValueError('pulse steps must come in (g1 -> e, e -> g2) pairs')
        for first, second in zip(self.steps[0::2], self.steps[1::2]):
            if (first.n1, first.n2) != (second.n1, second.n2):
                msg = f'pulse pair addresses two momenta: ' \
                    f'({first.n1}, {first.n2}) and ({second.n1}, {second.n2})'
                raise ValueError(msg)

    def targets(self):
        return [(step.n1, step.n2) for step in self.steps[0::2]]

    def to_dict(self):
        return {
            'rabi': self.rabi,
            'steps': [step._asdict() for step in self.steps],
            'global_phases': [
                {'n1': n1, 'n2': n2, 'phase': phase}
                for (n1, n2), phase in sorted(self.global_phases.items())
            ]
        }

    @classmethod
    def from_dict(cls, values):
        try:
            steps = [
                PulseStep(int(step['n1']), int(step['n2']), step['leg'],
                          float(step['area']), float(step['phase']),
                          float(step['duration']))
                for step in values['steps']
            ]
            phases = {
                (int(row['n1']), int(row['n2'])): float(row['phase'])
                for row in values.get('global_phases', [])
            }
            return cls(float(values['rabi']), steps, phases)
        except (KeyError, TypeError) as err:
            msg = f'invalid pulse plan: {err}'
            raise ValueError(msg) from err


def pulse_plan(targets, rabi, threshold=None):
    """
    Two-pulse sequence per target spinor.

    Parameters
    ----------
    targets: list of ((n1, n2), Spinor)
    rabi: float - Rabi frequency; durations are area / rabi
    threshold: float - targets with |Q| <= threshold are skipped; None
        keeps every target, (1, 0) then gets a pair of zero-area pulses

    The first pulse leaves |P| on g1 and puts |Q| on the bus; the second is
    a pi pulse whose phase sets arg Q relative to arg P.  The state reached
    is e^{-i arg P} (P, Q); arg P is recorded per target.
    """
    steps = []
    global_phases = {}
    for (n1, n2), spinor in targets:
        weight = abs(spinor.p)**2 + abs(spinor.q)**2
        if abs(weight - 1.0) > REACHABLE_TOLERANCE:
            msg = f'target at ({n1}, {n2}) is unreachable, ' \
                f'|P|^2 + |Q|^2 = {weight}'
            raise ValueError(msg)
        if threshold is not None and abs(spinor.q) <= threshold:
            continue
        area_ground = 2.0 * np.arccos(np.clip(abs(spinor.p), 0.0, 1.0))
        area_target = np.pi if abs(spinor.q) > 0.0 else 0.0
        reference = np.angle(spinor.p) if abs(spinor.p) > 0.0 else 0.0
        phase_target = float(np.angle(spinor.q * np.exp(-1j * reference))
                             + np.pi)
        steps.append(PulseStep(n1, n2, LEG_GROUND, float(area_ground), 0.0,
                               float(area_ground / rabi)))
        steps.append(PulseStep(n1, n2, LEG_TARGET, float(area_target),
                               phase_target, float(area_target / rabi)))
        global_phases[(n1, n2)] = float(reference)
    return PulsePlan(rabi, steps, global_phases)


def pulse_unitary(leg, area, phase):
    ''' exact Rabi rotation on (g1, e, g2) for one leg '''
    if leg not in VALID_LEGS:
        raise ValueError(f'unknown pulse leg: {leg}, valid: {VALID_LEGS}')
    lower, upper = (GROUND, BUS) if leg == LEG_GROUND else (BUS, TARGET)
    unitary = np.eye(3, dtype=complex)
    unitary[lower, lower] = np.cos(area / 2.0)
    unitary[upper, upper] = np.cos(area / 2.0)
    unitary[upper, lower] = -1j * np.sin(area / 2.0) * np.exp(1j * phase)
    unitary[lower, upper] = -1j * np.sin(area / 2.0) * np.exp(-1j * phase)
    return unitary


def simulate_pulses(plan, spec, scale):
    """
    Apply the plan to every momentum of the zone starting from g1.  Points
    not addressed stay (1, 0).  Raises RuntimeError if the bus keeps more
    than BUS_TOLERANCE population after a pulse pair.
    """
    n1_grid, n2_grid = spec.index_grid()
    position = {(n1, n2): index for index, (n1, n2)
                in enumerate(zip(n1_grid.tolist(), n2_grid.tolist()))}
    amplitudes = np.zeros((n1_grid.size, 3), dtype=complex)
    amplitudes[:, GROUND] = 1.0
    for step in plan.steps:
        spec.check_index(step.n1, step.n2)
        index = position[(step.n1, step.n2)]
        amplitudes[index] = pulse_unitary(step.leg, step.area, step.phase) \
            @ amplitudes[index]
        if step.leg == LEG_TARGET:
            residual = abs(amplitudes[index, BUS])**2
            if residual > BUS_TOLERANCE:
                msg = f'bus population {residual} left at ({step.n1}, ' \
                    f'{step.n2})'
                print(msg)
                raise RuntimeError(msg)
    kx, ky = spec.momentum(n1_grid, n2_grid)
    return FlowStateGrid(scale, kx, ky, amplitudes[:, GROUND],
                         amplitudes[:, TARGET])


def grid_targets(spec, scale, params):
    ''' analytic spinors at scale on every zone momentum, zone order '''
    n1_grid, n2_grid = spec.index_grid()
    kx, ky = spec.momentum(n1_grid, n2_grid)
    p_amp, q_amp = analytic_amplitudes(scale.u, kx, ky, params.m)
    return [
        ((n1, n2), core_model.Spinor(complex(p_val), complex(q_val)))
        for n1, n2, p_val, q_val in zip(n1_grid.tolist(), n2_grid.tolist(),
                                        p_amp, q_amp)
    ]


def inner_indices(spec, count):
    ''' the count momenta closest to the origin, ties broken by (n1, n2) '''
    n1_grid, n2_grid = spec.index_grid()
    order = sorted(zip(n1_grid.tolist(), n2_grid.tolist()),
                   key=lambda pair: (pair[0]**2 + pair[1]**2, pair))
    return order[:count]


PreparedState = namedtuple(
    'PreparedState',
    [
        'plan',
        'prepared',
        'evolved',
        'addressed',
        'fidelity'
    ],
)


def prepare_near_ir_state(spec, params, scale, rabi,
                          threshold=DEFAULT_THRESHOLD, flow_config=None):
    """
    Plan and simulate the analytic state at scale on every momentum with
    |Q| > threshold, flow the prepared grid to u = 0 and compare with the
    ground state on the addressed points.
    """
    plan = pulse_plan(grid_targets(spec, scale, params), rabi, threshold)
    prepared = simulate_pulses(plan, spec, scale)
    evolved = integrate_flow(prepared, FlowScale(0.0), params, flow_config)
    p_ground, q_ground = core_model.ground_amplitudes(evolved.kx, evolved.ky,
                                                      params.m)
    truth = FlowStateGrid(evolved.scale, evolved.kx, evolved.ky, p_ground,
                          q_ground)
    addressed = np.zeros(evolved.kx.size, dtype=bool)
    n1_grid, n2_grid = spec.index_grid()
    targets = set(plan.targets())
    for index, pair in enumerate(zip(n1_grid.tolist(), n2_grid.tolist())):
        addressed[index] = pair in targets
    fidelity = grid_fidelity(evolved, truth)
    print(f'prepared {addressed.sum()} of {addressed.size} momenta, worst '
          f'addressed fidelity: {fidelity[addressed].min(initial=1.0)}')
    return PreparedState(plan, prepared, evolved, addressed, fidelity)


def brute_force_overlaps(spec):
    ''' site-by-site overlaps for every (k, q) pair, same layout as the table '''
    index = spec.indices().tolist()
    values = [
        coupling_overlap((k1, k2), (q1, q2), spec)
        for k1 in index for k2 in index for q1 in index for q2 in index
    ]
    return np.array(values)


IRPREP_DEFAULTS = {
    'n_sites': 32,
    'u_start': -4.0,
    'threshold': DEFAULT_THRESHOLD,
    'rabi': 1.0,
    'max_enumeration': 8,
    'brute_force_sites': 4,
    'inner_points': 4,
    'du': DEFAULT_DU
}


@dataclass
class IrPrepRequest:
    """
    Check the momentum selection rule on small lattices, then plan and
    simulate the pulses that prepare the analytic state at u_start and flow
    the result to the IR.
    """
    config_dict: dict
    run_config: RunConfig = field(default=None, init=False)
    settings: dict = field(default_factory=dict, init=False)
    spec: LatticeSpec = field(default=None, init=False)
    scale: FlowScale = field(default=None, init=False)
    flow_config: FlowConfig = field(default=None, init=False)

    def __post_init__(self):
        self.run_config = RunConfig(self.config_dict)
        self.settings = self.run_config.section('irprep', IRPREP_DEFAULTS)
        settings = self.settings
        for key in ['n_sites', 'max_enumeration', 'brute_force_sites',
                    'inner_points']:
            positive_int('irprep', key, settings[key])
        for key in ['threshold', 'rabi', 'du']:
            settings[key] = positive_number('irprep', key, settings[key])
        for key in ['n_sites', 'max_enumeration', 'brute_force_sites']:
            if settings[key] < 2:
                msg = f'irprep.{key} must be >= 2, actually: {settings[key]}'
                raise ConfigFieldError(f'irprep.{key}', msg)
        if settings['inner_points'] > settings['n_sites']**2:
            msg = f'irprep.inner_points exceeds the {settings["n_sites"]}^2 ' \
                f'zone momenta, actually: {settings["inner_points"]}'
            raise ConfigFieldError('irprep.inner_points', msg)
        try:
            self.spec = LatticeSpec(settings['n_sites'])
            self.flow_config = FlowConfig(du=settings['du'])
            self.scale = FlowScale(settings['u_start'],
                                   self.flow_config.u_min)
        except (TypeError, ValueError) as err:
            if isinstance(err, ConfigFieldError):
                raise
            raise ConfigFieldError('irprep', str(err)) from err

    def selection_rule_checks(self):
        ''' (tables, worst factorized residual, worst brute-force residual) '''
        tables = [
            selection_rule_table(LatticeSpec(n_sites))
            for n_sites in range(2, self.settings['max_enumeration'] + 1)
        ]
        residual = max(selection_rule_residual(table) for table in tables)

        small = LatticeSpec(self.settings['brute_force_sites'])
        table = selection_rule_table(small)
        direct = brute_force_overlaps(small)
        factorized = table['overlap_re'].to_numpy() \
            + 1j * table['overlap_im'].to_numpy()
        brute = float(np.max(np.abs(direct - factorized))) / small.n_sites**2
        print(f'selection rule residual: {residual}, brute-force '
              f'mismatch: {brute}')
        return tables, residual, brute

    def inner_point_check(self):
        ''' worst fidelity deficit of the innermost momenta, no threshold '''
        params = self.run_config.params
        wanted = set(inner_indices(self.spec, self.settings['inner_points']))
        targets = [
            (pair, spinor)
            for pair, spinor in grid_targets(self.spec, self.scale, params)
            if pair in wanted
        ]
        plan = pulse_plan(targets, self.settings['rabi'])
        simulated = simulate_pulses(plan, self.spec, self.scale)
        n1_grid, n2_grid = self.spec.index_grid()
        deficit = 0.0
        for index, pair in enumerate(zip(n1_grid.tolist(), n2_grid.tolist())):
            if pair not in wanted:
                continue
            spinor = dict(targets)[pair]
            overlap = abs(np.conj(spinor.p) * simulated.p[index]
                          + np.conj(spinor.q) * simulated.q[index])
            deficit = max(deficit, 1.0 - overlap)
        return deficit

    def evaluate(self):
        ''' run the preparation checks, write artifacts, return (criteria, paths) '''
        settings = self.settings
        out_dir = self.run_config.output_dir
        tol = self.run_config.tolerance

        tables, residual, brute = self.selection_rule_checks()
        inner = self.inner_point_check()
        prepared = prepare_near_ir_state(
            self.spec, self.run_config.params, self.scale, settings['rabi'],
            settings['threshold'], self.flow_config)
        addressed = prepared.fidelity[prepared.addressed]
        skipped = prepared.fidelity[~prepared.addressed]
        criteria = [
            at_most('selection_rule_residual', residual, tol('overlap')),
            at_most('brute_force_overlap_mismatch', brute, tol('overlap')),
            at_most('inner_preparation_deficit', inner,
                    tol('inner_preparation')),
            at_most('preparation_fidelity_deficit',
                    1.0 - addressed.min(initial=1.0), tol('preparation')),
            at_most('unaddressed_fidelity_deficit',
                    1.0 - skipped.min(initial=1.0),
                    settings['threshold']**2 + tol('preparation'))
        ]

        grid = prepared.prepared.to_dataframe()
        n1_grid, n2_grid = self.spec.index_grid()
        grid.insert(0, 'n1', n1_grid)
        grid.insert(1, 'n2', n2_grid)
        grid['addressed'] = prepared.addressed
        grid['ir_fidelity'] = prepared.fidelity
        artifacts = [
            file_utils.write_csv(concat(tables), out_dir,
                                 'selection_rule.csv'),
            file_utils.write_json(prepared.plan.to_dict(), out_dir,
                                  'pulse_plan.json'),
            file_utils.write_csv(grid, out_dir, 'prepared_grid.csv')
        ]
        return criteria, artifacts

    def submit(self):
        error_msg = None
        criteria = []
        artifacts = []
        try:
            criteria, artifacts = self.evaluate()
        except (RuntimeError, ValueError) as err:
            error_msg = f'Problems encountered preparing the near-IR state ' \
                f'- {err}'
            print(error_msg)
        response = build_response(self.config_dict, criteria, artifacts,
                                  error_msg)
        print(f'response: {response.message}')
        return response
