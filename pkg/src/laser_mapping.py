"""
Copyright 2022 NOAA
All rights reserved.

Laser parameters for the effective disentangler.  Evaluates the seven
validity margins of the atomic scheme, maps a pair of laser sets onto
-eta H(e^{-u} k) e^{-i theta}, builds the AC Stark counterterms and
compares exact dynamics of the dressed five-level model against the
effective two-level model.

"""
from collections import namedtuple
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from pandas import DataFrame, concat
from scipy import linalg, optimize, stats

import atomic_scheme
from atomic_scheme import adiabatic_eliminate, drive_from_laser_set
from atomic_scheme import LaserSet, RamanDrive
from atomic_scheme import schur_reduce, static_dressed_hamiltonian
from cmera_action_response import at_least, at_most, build_response
from core_model import Momentum
import file_utils
from flow_engine import FlowScale, disentangler_profile, lambda_roots
from flow_engine import partial_fraction_residues, require_quasi_local
from run_config import ConfigFieldError, RunConfig
from run_config import positive_int, positive_number, positive_window
from run_config import scale_list

DEFAULT_K_WINDOW = (0.05, 1.0)
DEFAULT_N_K = 64
DEFAULT_THRESHOLD = 10.0
DEFAULT_HYPERFINE = 1e4
DEFAULT_LATTICE_CONSTANT = 0.01
DEFAULT_AMPLITUDE_BUDGET = 1e-3
DEFAULT_PHASE = 0.1

# starting point of the mapper search, (dressing gap, |Omega_2/Omega_1|)
INITIAL_GAP = 30.0
INITIAL_RATIO = 100.0
MAPPER_MAX_ITER = 400

MAGNUS_NODE = np.sqrt(3.0) / 6.0
MAGNUS_HEAVY = 0.25 + np.sqrt(3.0) / 6.0
MAGNUS_LIGHT = 0.25 - np.sqrt(3.0) / 6.0
STEP_FREQUENCY_FACTOR = 50.0
MAX_MAGNUS_STEPS = 2_000_000
NORM_DRIFT_LIMIT = 1e-9

ASSUMPTION_NAMES = [
    'hyperfine_over_dressing',
    'lattice_over_soc_length',
    'dressing_gap_over_soc',
    'detuning_hierarchy',
    'detuning_over_rabi',
    'coupling_over_dropped_terms',
    'set_beat_note'
]

AssumptionMargin = namedtuple(
    'AssumptionMargin',
    [
        'index',
        'name',
        'margin',
        'threshold',
        'passed'
    ],
)

MappedLasers = namedtuple(
    'MappedLasers',
    [
        'laser_sets',
        'eta',
        'report'
    ],
)

AuxiliaryBand = namedtuple(
    'AuxiliaryBand',
    [
        'amplitude',
        'offset',
        'mass'
    ],
)

EvolutionComparison = namedtuple(
    'EvolutionComparison',
    [
        'times',
        'infidelity',
        'max_infidelity',
        'epsilon'
    ],
)


@dataclass
class AssumptionInputs:
    ''' k-window and the external bounds the margins are measured against '''
    k_window: tuple = field(default=DEFAULT_K_WINDOW)
    n_k: int = field(default=DEFAULT_N_K)
    hyperfine_splitting: float = field(default=DEFAULT_HYPERFINE)
    lattice_constant: float = field(default=DEFAULT_LATTICE_CONSTANT)
    threshold: float = field(default=DEFAULT_THRESHOLD)

    def __post_init__(self):
        try:
            k_lo, k_hi = (float(val) for val in self.k_window)
        except (TypeError, ValueError) as err:
            msg = f'k_window must be a pair of numbers, actually: ' \
                f'{self.k_window}'
            raise ValueError(msg) from err
        if not 0.0 < k_lo < k_hi:
            msg = f'k_window must satisfy 0 < k_lo < k_hi, actually: ' \
                f'{self.k_window}'
            raise ValueError(msg)
        self.k_window = (k_lo, k_hi)
        if self.n_k < 2:
            raise ValueError(f'n_k must be at least 2, actually: {self.n_k}')
        for name in ['hyperfine_splitting', 'lattice_constant', 'threshold']:
            if getattr(self, name) <= 0.0:
                msg = f'{name} must be positive, actually: ' \
                    f'{getattr(self, name)}'
                raise ValueError(msg)

    def momenta(self):
        return np.linspace(*self.k_window, self.n_k)


@dataclass
class AssumptionReport:
    margins: list

    @property
    def worst(self):
        return min(row.margin for row in self.margins)

    @property
    def binding(self):
        return min(self.margins, key=lambda row: row.margin).name

    @property
    def passed(self):
        return all(row.passed for row in self.margins)

    def to_dataframe(self):
        return DataFrame([row._asdict() for row in self.margins])


def _ratio(large, small):
    ''' worst large/small; a vanishing small side never binds '''
    large = np.asarray(large, dtype=float)
    small = np.asarray(small, dtype=float)
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = np.where(small > 0.0, np.maximum(large, 0.0) / small, np.inf)
    return float(np.min(ratio))


def coupling_magnitude(k, laser_set):
    ''' |effective coupling| of one set, vectorized over k '''
    k = np.asarray(k, dtype=float)
    kinetic = k**2 / (2.0 * laser_set.mass)
    return laser_set.alpha * k * abs(laser_set.rabi_1 * laser_set.rabi_2) \
        / (laser_set.detuning_1 * (laser_set.detuning_2 + kinetic))


def _dropped_term_margin(laser_set, k):
    gap = laser_set.detuning_1 - laser_set.detuning_2
    if gap <= 0.0:
        return 0.0
    kinetic = k**2 / (2.0 * laser_set.mass)
    energy_1 = laser_set.detuning_1 + kinetic
    energy_2 = laser_set.detuning_2 + kinetic
    epsilon = laser_set.alpha * k / gap
    rabi_1 = abs(laser_set.rabi_1)
    rabi_2 = abs(laser_set.rabi_2)
    dropped = np.max([
        rabi_1**2 / energy_1 + rabi_1**2 * epsilon**2 / energy_2,
        rabi_2**2 * epsilon**2 / energy_1,
        laser_set.alpha * k * rabi_1 * rabi_2 / energy_2
        * np.abs(1.0 / energy_1 - 1.0 / laser_set.detuning_1)
    ], axis=0)
    return _ratio(coupling_magnitude(k, laser_set), dropped)


def _set_margins(laser_set, k, inputs):
    k_hi = k[-1]
    gap = laser_set.detuning_1 - laser_set.detuning_2
    largest = max(abs(laser_set.rabi_1), abs(laser_set.rabi_2))
    return [
        _ratio(inputs.hyperfine_splitting, abs(laser_set.dressing_rabi)),
        _ratio(1.0, laser_set.k_soc * inputs.lattice_constant),
        min(_ratio(gap, laser_set.alpha * k_hi),
            _ratio(laser_set.mass * gap, laser_set.k_soc**2)),
        min(_ratio(laser_set.detuning_1, laser_set.detuning_2),
            _ratio(laser_set.detuning_1, k_hi**2 / (2.0 * laser_set.mass))),
        min(_ratio(min(laser_set.detuning_1, laser_set.detuning_2), largest),
            _ratio(abs(laser_set.dressing_rabi), largest)),
        _dropped_term_margin(laser_set, k)
    ]


def _beat_note_margin(laser_sets, k):
    margin = np.inf
    for first, second in combinations(laser_sets, 2):
        strongest = max(np.max(coupling_magnitude(k, first)),
                        np.max(coupling_magnitude(k, second)))
        margin = min(margin, _ratio(
            abs(first.detuning_2 - second.detuning_2), strongest))
    return margin


def assumption_report(laser_sets, inputs=None):
    """
    The seven validity conditions of the effective model, each as a
    margin (large side)/(small side) taken at its worst over the sets and
    the k-window.  Always returns a report.
    """
    if inputs is None:
        inputs = AssumptionInputs()
    k = inputs.momenta()
    per_set = np.array([_set_margins(laser_set, k, inputs)
                        for laser_set in laser_sets])
    values = list(np.min(per_set, axis=0)) + [_beat_note_margin(laser_sets, k)]
    margins = []
    for index, (name, value) in enumerate(zip(ASSUMPTION_NAMES, values)):
        passed = bool(value >= inputs.threshold)
        if not passed:
            print(f'WARNING: assumption {index + 1} ({name}) margin {value} '
                  f'is below {inputs.threshold}')
        margins.append(AssumptionMargin(index + 1, name, float(value),
                                        inputs.threshold, passed))
    return AssumptionReport(margins)


@dataclass
class MappingInputs:
    ''' fixed hardware numbers for map_lasers_to_disentangler '''
    k_window: tuple = field(default=DEFAULT_K_WINDOW)
    n_k: int = field(default=DEFAULT_N_K)
    amplitude_budget: float = field(default=DEFAULT_AMPLITUDE_BUDGET)
    mass: float = field(default=1.0)
    k_soc: float = field(default=1.0)
    phase: float = field(default=DEFAULT_PHASE)
    hyperfine_splitting: float = field(default=DEFAULT_HYPERFINE)
    lattice_constant: float = field(default=DEFAULT_LATTICE_CONSTANT)
    threshold: float = field(default=DEFAULT_THRESHOLD)

    def __post_init__(self):
        for name in ['amplitude_budget', 'mass', 'k_soc']:
            if getattr(self, name) <= 0.0:
                msg = f'{name} must be positive, actually: ' \
                    f'{getattr(self, name)}'
                raise ValueError(msg)
        if not 0.0 < self.phase < np.pi / 2.0:
            msg = f'phase must lie in (0, pi/2), actually: {self.phase}'
            raise ValueError(msg)

    def assumption_inputs(self):
        return AssumptionInputs(self.k_window, self.n_k,
                                self.hyperfine_splitting,
                                self.lattice_constant, self.threshold)


def pole_detunings(params, scale, mass):
    ''' (Delta_2, Delta_2') = -lambda_pm e^{2u} / 2M '''
    roots = lambda_roots(params)
    factor = np.exp(2.0 * scale.u) / (2.0 * mass)
    return -roots.lambda_plus * factor, -roots.lambda_minus * factor


def _laser_pair(log_gap, log_ratio, params, scale, inputs):
    gap = float(np.exp(log_gap))
    ratio = float(np.exp(log_ratio))
    alpha = inputs.k_soc / (2.0 * inputs.mass)
    dressing = gap / (2.0 * np.sqrt(3.0) * np.sin(inputs.phase))
    residues = partial_fraction_residues(params)
    stretch = np.exp(scale.u)

    detuning_2, detuning_2_prime = pole_detunings(params, scale, inputs.mass)
    rabi_2 = min(inputs.amplitude_budget,
                 detuning_2 / (2.0 * inputs.threshold))
    rabi_1 = rabi_2 / ratio
    eta = 2.0 * inputs.mass * alpha * rabi_1 * rabi_2 \
        / ((gap + detuning_2) * residues.c_plus * stretch)

    rabi_2_prime = min(inputs.amplitude_budget,
                       detuning_2_prime / (2.0 * inputs.threshold))
    rabi_1_prime = eta * residues.c_minus * stretch \
        * (gap + detuning_2_prime) / (2.0 * inputs.mass * alpha * rabi_2_prime)

    # arg(Omega_1^* Omega_2) = pi puts the summed coupling at -eta H
    laser_sets = [
        LaserSet(rabi_1, -rabi_2, gap + detuning_2, detuning_2, dressing,
                 inputs.phase, inputs.k_soc, inputs.mass, alpha),
        LaserSet(rabi_1_prime, -rabi_2_prime, gap + detuning_2_prime,
                 detuning_2_prime, dressing, inputs.phase, inputs.k_soc,
                 inputs.mass, alpha)
    ]
    return laser_sets, eta


def _largest_rabi(laser_sets):
    return max(max(abs(laser_set.rabi_1), abs(laser_set.rabi_2))
               for laser_set in laser_sets)


def map_lasers_to_disentangler(params, scale, inputs=None):
    """
    Two laser sets whose summed effective coupling is
    -eta H(e^{-u} k) e^{-i theta} over inputs.k_window.

    The detunings Delta_2, Delta_2' sit on the two poles of H; the shared
    dressing gap Delta_1 - Delta_2 and the Rabi ratio |Omega_2/Omega_1| of
    the first set are chosen by maximizing the worst assumption margin.
    Raises RuntimeError when no choice clears the threshold.
    """
    require_quasi_local(params)
    if inputs is None:
        inputs = MappingInputs()
    checks = inputs.assumption_inputs()

    def objective(point):
        laser_sets, _ = _laser_pair(point[0], point[1], params, scale, inputs)
        worst = _worst_margin(laser_sets, checks)
        over_budget = max(0.0, np.log(_largest_rabi(laser_sets)
                                      / inputs.amplitude_budget))
        return -np.log(max(worst, 1e-300)) + 1e3 * over_budget

    result = optimize.minimize(
        objective, [np.log(INITIAL_GAP), np.log(INITIAL_RATIO)],
        method='Nelder-Mead',
        options={'xatol': 1e-4, 'fatol': 1e-6, 'maxiter': MAPPER_MAX_ITER})
    laser_sets, eta = _laser_pair(result.x[0], result.x[1], params, scale,
                                  inputs)
    report = assumption_report(laser_sets, checks)
    if not report.passed:
        msg = f'no laser parameters satisfy every assumption at u = ' \
            f'{scale.u}, binding: {report.binding} (margin {report.worst})'
        print(msg)
        raise RuntimeError(msg)
    if _largest_rabi(laser_sets) > inputs.amplitude_budget * (1.0 + 1e-12):
        msg = f'mapped Rabi {_largest_rabi(laser_sets)} exceeds the ' \
            f'amplitude budget {inputs.amplitude_budget}'
        print(msg)
        raise RuntimeError(msg)
    print(f'mapped lasers at u = {scale.u}: eta = {eta}, worst margin '
          f'{report.worst} ({report.binding})')
    return MappedLasers(laser_sets, eta, report)


def _worst_margin(laser_sets, inputs):
    k = inputs.momenta()
    per_set = [min(_set_margins(laser_set, k, inputs))
               for laser_set in laser_sets]
    return min(min(per_set), _beat_note_margin(laser_sets, k))


def mapped_coupling(momentum, laser_sets,
                    min_gap_ratio=atomic_scheme.DEFAULT_GAP_RATIO):
    ''' summed ground coupling from rotating and eliminating each set '''
    total = 0j
    for laser_set in laser_sets:
        rotated = atomic_scheme.soc_block_rotation(momentum, laser_set)
        total += adiabatic_eliminate(rotated, [0, 1],
                                     min_gap_ratio=min_gap_ratio).matrix[0, 1]
    return complex(total)


def mapping_table(mapped, params, scale, k, theta=0.0):
    ''' mapped coupling against -eta H(e^{-u} k) e^{-i theta} '''
    k = np.asarray(k, dtype=float)
    target = -mapped.eta * disentangler_profile(np.exp(-scale.u) * k, params) \
        * np.exp(-1j * theta)
    values = np.array([
        mapped_coupling(Momentum.from_polar(k_val, theta), mapped.laser_sets)
        for k_val in k
    ])
    return DataFrame({
        'u': scale.u,
        'k': k,
        'target_re': target.real,
        'target_im': target.imag,
        'mapped_re': values.real,
        'mapped_im': values.imag,
        'relative_error': np.abs(values - target) / np.abs(target)
    })


def stark_counterterm_band(laser_set):
    ''' negative-curvature band that cancels the retained g2 Stark shift '''
    return AuxiliaryBand(abs(laser_set.rabi_2), -laser_set.detuning_2,
                         -laser_set.mass)


def auxiliary_shift(k, band):
    ''' -|A|^2 / (delta + k^2/2M_aux) '''
    k = np.asarray(k, dtype=float)
    return -band.amplitude**2 / (band.offset + k**2 / (2.0 * band.mass))


def compensated_hamiltonian(momentum, laser_sets):
    h_mat = sum(atomic_scheme.effective_hamiltonian(momentum, laser_set)
                for laser_set in laser_sets)
    h_mat[1, 1] += sum(float(auxiliary_shift(momentum.k,
                                             stark_counterterm_band(laser_set)))
                       for laser_set in laser_sets)
    return h_mat


def stark_residual(laser_sets, k, theta=0.0):
    ''' worst |diagonal| / |off-diagonal| of the compensated matrix '''
    worst = 0.0
    for k_val in np.asarray(k, dtype=float):
        h_mat = compensated_hamiltonian(Momentum.from_polar(k_val, theta),
                                        laser_sets)
        diagonal = max(abs(h_mat[0, 0]), abs(h_mat[1, 1]))
        if diagonal == 0.0:
            continue
        coupling = abs(h_mat[0, 1])
        worst = max(worst, diagonal / coupling if coupling > 0.0 else np.inf)
    return worst


def perturbation_ratio(laser_sets):
    ''' epsilon = worst max|Omega_i| / min(Delta_1, Delta_2) '''
    return max(
        max(abs(laser_set.rabi_1), abs(laser_set.rabi_2))
        / min(laser_set.detuning_1, laser_set.detuning_2)
        for laser_set in laser_sets
    )


def _shared_drives(laser_sets):
    drives = [drive_from_laser_set(laser_set) for laser_set in laser_sets]
    reference = drives[0]
    for drive in drives[1:]:
        same = np.isclose(drive.rabi, reference.rabi) \
            and np.isclose(drive.plaquette_phase, reference.plaquette_phase) \
            and np.isclose(drive.k_soc, reference.k_soc) \
            and np.isclose(drive.mass, reference.mass)
        if not same:
            msg = 'laser sets evolved together must share the excited-state ' \
                'dressing (rabi, phase, k_soc, mass)'
            raise ValueError(msg)
    return drives


def _propagate_static(h_mat, state, times):
    energies, vectors = np.linalg.eigh(h_mat)
    amplitudes = vectors.conj().T @ state
    return (vectors @ (np.exp(-1j * np.outer(energies, times))
                       * amplitudes[:, None])).T


def _magnus_step(h_fn, t, dt):
    ''' fourth order commutator-free step, later time on the left '''
    early = h_fn(t + (0.5 - MAGNUS_NODE) * dt)
    late = h_fn(t + (0.5 + MAGNUS_NODE) * dt)
    return linalg.expm(-1j * dt * (MAGNUS_LIGHT * early + MAGNUS_HEAVY * late)) \
        @ linalg.expm(-1j * dt * (MAGNUS_HEAVY * early + MAGNUS_LIGHT * late))


def _propagate_driven(h_fn, max_frequency, state, times):
    interval = times[1] - times[0] if len(times) > 1 else times[0]
    substeps = max(1, int(np.ceil(interval * STEP_FREQUENCY_FACTOR
                                  * max_frequency)))
    if substeps * len(times) > MAX_MAGNUS_STEPS:
        msg = f'time evolution needs {substeps * len(times)} steps, ' \
            f'limit: {MAX_MAGNUS_STEPS}'
        raise RuntimeError(msg)
    dt = interval / substeps
    states = []
    t = 0.0
    for _ in times:
        for index in range(substeps):
            state = _magnus_step(h_fn, t + index * dt, dt) @ state
        t += interval
        states.append(state)
    drift = abs(np.linalg.norm(state) - 1.0)
    if drift > NORM_DRIFT_LIMIT:
        msg = f'norm drift {drift} exceeds {NORM_DRIFT_LIMIT}'
        raise RuntimeError(msg)
    return np.array(states)


def effective_two_level(momentum, laser_sets, statics=None):
    """
    Effective ground-state matrix of several laser sets: the off-diagonal
    is the summed effective_coupling, the diagonal carries the Stark
    shifts of the all-order reduction so both models share one phase
    convention on g1 and g2.
    """
    if statics is None:
        statics = [static_dressed_hamiltonian(momentum, drive)
                   for drive in _shared_drives(laser_sets)]
    shifts = sum(np.real(np.diag(schur_reduce(h_mat, [0, 1])))
                 for h_mat in statics)
    value = sum(atomic_scheme.effective_coupling(momentum, laser_set).value
                for laser_set in laser_sets)
    return np.array([[shifts[0], value], [np.conj(value), shifts[1]]],
                    dtype=complex)


def evolve_full_vs_effective(momentum, laser_sets, duration, n_samples=200):
    """
    Evolve |g1> under the dressed five-level model and under the effective
    two-level model of effective_two_level, and return the worst
    1 - |<psi_eff|P_g psi_full>|^2 over (0, duration].

    One set is static in its own frame and is propagated exactly.  With
    more sets the first set's frame is used; the others couple with a beat
    e^{-i nu t}, nu = Delta - Delta', and the model is stepped with a
    fourth order Magnus integrator.
    """
    if duration <= 0.0:
        raise ValueError(f'duration must be positive, actually: {duration}')
    if n_samples < 1:
        raise ValueError(f'n_samples must be positive, actually: {n_samples}')
    drives = _shared_drives(laser_sets)
    statics = [static_dressed_hamiltonian(momentum, drive) for drive in drives]
    effective = effective_two_level(momentum, laser_sets, statics)
    times = np.linspace(duration / n_samples, duration, n_samples)

    initial = np.zeros(5, dtype=complex)
    initial[0] = 1.0
    if len(drives) == 1:
        full = _propagate_static(statics[0], initial, times)
    else:
        base = statics[0]
        beats = [drive.detuning - drives[0].detuning for drive in drives[1:]]
        lower = [h_mat[2:, :2] for h_mat in statics[1:]]

        def h_fn(t):
            h_mat = np.array(base)
            for beat, block in zip(beats, lower):
                coupling = block * np.exp(-1j * beat * t)
                h_mat[2:, :2] += coupling
                h_mat[:2, 2:] += coupling.conj().T
            return h_mat

        max_frequency = max([np.max(np.abs(np.linalg.eigvalsh(base)))]
                            + [abs(beat) for beat in beats])
        full = _propagate_driven(h_fn, max_frequency, initial, times)

    reduced = _propagate_static(effective, initial[:2], times)
    overlaps = np.einsum('ti,ti->t', reduced.conj(), full[:, :2])
    infidelity = np.clip(1.0 - np.abs(overlaps)**2, 0.0, None)
    return EvolutionComparison(times, infidelity, float(np.max(infidelity)),
                               perturbation_ratio(laser_sets))


def epsilon_sweep(momentum, laser_set, factors, duration, n_samples=200):
    """
    Scale both Rabis of laser_set by each factor and return a table of
    (factor, epsilon, infidelity) plus the log-log slope of infidelity
    against epsilon.
    """
    rows = []
    for factor in factors:
        comparison = evolve_full_vs_effective(
            momentum, [laser_set.scaled(factor)], duration, n_samples)
        rows.append({
            'factor': float(factor),
            'epsilon': comparison.epsilon,
            'infidelity': comparison.max_infidelity
        })
    table = DataFrame(rows)
    if len(table) < 2 or np.any(table['infidelity'] <= 0.0):
        msg = f'epsilon sweep needs two or more positive infidelities: ' \
            f'{table.to_dict("list")}'
        raise ValueError(msg)
    fit = stats.linregress(np.log(table['epsilon']), np.log(table['infidelity']))
    return table, float(fit.slope)


# reference drive for the dynamics checks: chi = 0.005, Raman phases 0.3,
# dressing Rabi 2 and Delta_2 = 1 (Delta_2 = 1.5 for the second set)
REFERENCE_CHI = 0.005
REFERENCE_PHASE = 0.3
REFERENCE_DRESSING = 2.0
REFERENCE_DETUNING = 1.0
CROSSTALK_DETUNING = 1.5
REFERENCE_ANGLE = 0.7


def reference_drive(detuning_2, k_soc=1.0, mass=1.0, chi=REFERENCE_CHI):
    ''' constrained drive whose dressed e2 sits detuning_2 above the ground '''
    drive = RamanDrive.constrained(chi, chi * np.exp(0.4j),
                                   (REFERENCE_PHASE,) * 3, REFERENCE_DRESSING,
                                   0.0, k_soc, mass)
    drive.detuning = float(atomic_scheme.dressed_energies(0.0, drive)[1]
                           - detuning_2)
    return drive


SCHEME_DEFAULTS = {
    'n_draws': 100,
    'sweep': [1.0, 2.0, 4.0, 8.0],
    'k_window': list(DEFAULT_K_WINDOW),
    'n_k': DEFAULT_N_K,
    'u_values': [0.0, -0.5],
    'mass': 1.0,
    'k_soc': 1.0,
    'phase': DEFAULT_PHASE,
    'amplitude_budget': DEFAULT_AMPLITUDE_BUDGET,
    'lattice_constant': DEFAULT_LATTICE_CONSTANT,
    'hyperfine_splitting': DEFAULT_HYPERFINE,
    'sweep_momentum': 0.3,
    'sweep_duration': 200.0,
    'crosstalk_duration': 50.0,
    'evolution_samples': 200
}


@dataclass
class SchemeRequest:
    """
    Reproduce the matrices of the atomic scheme on random draws, map laser
    pairs onto the disentangler for each configured scale and check the
    effective model against exact dynamics.
    """
    config_dict: dict
    run_config: RunConfig = field(default=None, init=False)
    settings: dict = field(default_factory=dict, init=False)
    scales: list = field(default_factory=list, init=False)
    mapping_inputs: MappingInputs = field(default=None, init=False)

    def __post_init__(self):
        self.run_config = RunConfig(self.config_dict)
        self.settings = self.run_config.section('scheme', SCHEME_DEFAULTS)
        settings = self.settings
        for key in ['n_draws', 'n_k', 'evolution_samples']:
            positive_int('scheme', key, settings[key])
        for key in ['mass', 'k_soc', 'phase', 'amplitude_budget',
                    'lattice_constant', 'hyperfine_splitting',
                    'sweep_momentum', 'sweep_duration', 'crosstalk_duration']:
            settings[key] = positive_number('scheme', key, settings[key])
        settings['k_window'] = positive_window('scheme', 'k_window',
                                               settings['k_window'])
        sweep = settings['sweep']
        if not isinstance(sweep, (list, tuple)) or len(sweep) < 2:
            msg = f'scheme.sweep must list two or more factors, ' \
                f'actually: {sweep}'
            raise ConfigFieldError('scheme.sweep', msg)
        settings['sweep'] = [positive_number('scheme', 'sweep', factor)
                             for factor in sweep]
        try:
            self.scales = [
                FlowScale(u) for u in
                scale_list('scheme', 'u_values', settings['u_values'])
            ]
            self.mapping_inputs = MappingInputs(
                settings['k_window'], settings['n_k'],
                settings['amplitude_budget'], settings['mass'],
                settings['k_soc'], settings['phase'],
                settings['hyperfine_splitting'], settings['lattice_constant'],
                self.run_config.tolerance('assumption_margin'))
        except ValueError as err:
            if isinstance(err, ConfigFieldError):
                raise
            raise ConfigFieldError('scheme', str(err)) from err
        if not self.run_config.params.quasi_local_regime:
            msg = f'laser mapping requires 0 < m < 1/4, m: ' \
                f'{self.run_config.params.m}'
            raise ConfigFieldError('model.m', msg)

    def structure_checks(self):
        ''' worst (selection rule, display) residuals over the random draws '''
        rng = self.run_config.rng()
        selection = 0.0
        display = 0.0
        for _ in range(self.settings['n_draws']):
            drive = atomic_scheme.random_drive(rng)
            momentum = Momentum(*rng.uniform(-1.0, 1.0, size=2))
            t = rng.uniform(0.0, 10.0)
            residuals = atomic_scheme.display_residuals(momentum, drive, t)
            residuals.update(atomic_scheme.toy_residuals(
                atomic_scheme.random_toy(rng), t))
            selection = max(selection, residuals.pop('selection_rule'),
                            residuals.pop('synthetic_couplings'))
            display = max([display] + list(residuals.values()))
        print(f'structure checks: selection rule residual {selection}, '
              f'display residual {display}')
        return selection, display

    def evaluate(self):
        ''' run the scheme checks, write artifacts, return (criteria, paths) '''
        settings = self.settings
        params = self.run_config.params
        out_dir = self.run_config.output_dir
        tol = self.run_config.tolerance

        selection, display = self.structure_checks()
        criteria = [
            at_most('selection_rule_residual', selection,
                    tol('selection_rule')),
            at_most('display_mismatch', display, tol('display_match'))
        ]

        k_values = np.linspace(*settings['k_window'], settings['n_k'])
        margins = []
        tables = []
        payload = []
        for scale in self.scales:
            mapped = map_lasers_to_disentangler(params, scale,
                                                self.mapping_inputs)
            table = mapping_table(mapped, params, scale, k_values)
            tables.append(table)
            frame = mapped.report.to_dataframe()
            frame.insert(0, 'u', scale.u)
            margins.append(frame)
            payload.append({
                'u': scale.u,
                'eta': mapped.eta,
                'laser_sets': [laser_set.to_dict()
                               for laser_set in mapped.laser_sets]
            })
            label = f'[u={scale.u:g}]'
            criteria.extend([
                at_most(f'mapped_coupling_deviation{label}',
                        table['relative_error'].max(), tol('mapped_coupling')),
                at_least(f'assumption_margin_min{label}', mapped.report.worst,
                         tol('assumption_margin')),
                at_most(f'stark_residual{label}',
                        stark_residual(mapped.laser_sets, k_values),
                        tol('stark_residual'))
            ])

        drive = reference_drive(REFERENCE_DETUNING, settings['k_soc'],
                                settings['mass'])
        laser_set = atomic_scheme.laser_set_from_drive(drive)
        momentum = Momentum.from_polar(settings['sweep_momentum'],
                                       REFERENCE_ANGLE)
        expected = atomic_scheme.effective_coupling(momentum, laser_set).value
        pipeline = atomic_scheme.pipeline_coupling(momentum, drive)
        criteria.append(at_most('pipeline_coupling_deviation',
                                abs(pipeline - expected) / abs(expected),
                                tol('mapped_coupling')))

        samples = settings['evolution_samples']
        sweep, slope = epsilon_sweep(momentum, laser_set, settings['sweep'],
                                     settings['sweep_duration'], samples)
        single = evolve_full_vs_effective(momentum, [laser_set],
                                          1.0 / abs(expected), samples)
        second = atomic_scheme.laser_set_from_drive(reference_drive(
            CROSSTALK_DETUNING, settings['k_soc'], settings['mass']))
        crosstalk = evolve_full_vs_effective(momentum, [laser_set, second],
                                             settings['crosstalk_duration'],
                                             samples)
        print(f'epsilon sweep slope: {slope}, single set infidelity: '
              f'{single.max_infidelity}, two sets: {crosstalk.max_infidelity}')
        criteria.extend([
            at_most('infidelity_slope_deviation', abs(slope - 2.0),
                    tol('infidelity_slope')),
            at_most('effective_infidelity', single.max_infidelity,
                    tol('effective_infidelity')),
            at_most('crosstalk_infidelity', crosstalk.max_infidelity,
                    tol('effective_infidelity'))
        ])

        artifacts = [
            file_utils.write_csv(concat(margins), out_dir,
                                 'assumption_margins.csv'),
            file_utils.write_csv(concat(tables), out_dir,
                                 'mapped_coupling.csv'),
            file_utils.write_csv(sweep, out_dir, 'epsilon_sweep.csv'),
            file_utils.write_json(payload, out_dir, 'laser_sets.json')
        ]
        return criteria, artifacts

    def submit(self):
        error_msg = None
        criteria = []
        artifacts = []
        try:
            criteria, artifacts = self.evaluate()
        except (RuntimeError, ValueError) as err:
            error_msg = f'Problems encountered checking the atomic scheme ' \
                f'- {err}'
            print(error_msg)
        response = build_response(self.config_dict, criteria, artifacts,
                                  error_msg)
        print(f'response: {response.message}')
        return response
