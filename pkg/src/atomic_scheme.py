"""
Copyright 2022 NOAA
All rights reserved.

Cold-atom realization of the disentangler.  Covers the three-level
synthetic selection rule, the five-level Raman-dressed model with its
dressing unitaries, the reduction to four levels, the spin-orbit block
rotation, adiabatic elimination down to the effective two-level coupling
and the matrices displayed along that chain.

Level ordering: (g, s1, s2) for the three-level model and
(g1, g2, e1, e2, e3) for the five-level model.  Detunings follow the
red-detuned convention Delta_1, Delta_2 > 0.

"""
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from core_model import Momentum

DEFAULT_SEPARATION_RATIO = 20.0
DEFAULT_GAP_RATIO = 10.0
DEFAULT_MAX_EXPANSION = 0.1
FORBIDDEN_TOLERANCE = 1e-9
OMEGA_BAR = np.exp(-2j * np.pi / 3.0)
SQRT3 = np.sqrt(3.0)

# (row, column) pairs nulled by the synthetic selection rule
FORBIDDEN_ENTRIES = [(0, 3), (0, 4), (1, 2), (1, 4)]

SyntheticCouplings = namedtuple(
    'SyntheticCouplings',
    [
        'to_d1',
        'to_d2',
        'energy_d1',
        'energy_d2'
    ],
)

Elimination = namedtuple(
    'Elimination',
    [
        'matrix',
        'gap_ratio'
    ],
)

EffectiveCoupling = namedtuple(
    'EffectiveCoupling',
    [
        'momentum',
        'value'
    ],
)


def _hermitian_error(matrix):
    return float(np.max(np.abs(matrix - matrix.conj().T)))


@dataclass
class PhaseFrame:
    """
    Diagonal rotating frame U(t) = diag(exp(-i (rates t + offsets))).  A
    Hamiltonian h(t) becomes U^dag h U - i U^dag dU/dt.
    """
    rates: np.ndarray
    offsets: np.ndarray = field(default=None)

    def __post_init__(self):
        self.rates = np.asarray(self.rates, dtype=float)
        if self.offsets is None:
            self.offsets = np.zeros_like(self.rates)
        self.offsets = np.asarray(self.offsets, dtype=float)
        if self.rates.shape != self.offsets.shape or self.rates.ndim != 1:
            msg = f'rates and offsets must be equal length vectors, ' \
                f'rates: {self.rates.shape}, offsets: {self.offsets.shape}'
            raise ValueError(msg)

    def unitary(self, t):
        return np.diag(np.exp(-1j * (self.rates * t + self.offsets)))

    def compose(self, other):
        ''' frame of U_self U_other '''
        return PhaseFrame(self.rates + other.rates,
                          self.offsets + other.offsets)

    def transform(self, h_fn):
        def transformed(t):
            phases = self.unitary(t)
            return phases.conj().T @ h_fn(t) @ phases - np.diag(self.rates)
        return transformed


def toy_frame_transform(h_fn, frame):
    ''' apply a PhaseFrame to a time-dependent Hamiltonian function '''
    return frame.transform(h_fn)


@dataclass
class ToyParams:
    ''' three-level selection-rule model, ordering (g, s1, s2) '''
    omega_1: float
    omega_2: float
    rabi: float
    chi_1: complex
    chi_2: complex
    delta: float = field(default=0.0)
    separation_ratio: float = field(default=DEFAULT_SEPARATION_RATIO)
    far_detuned: bool = field(default=True, init=False)

    def __post_init__(self):
        self.chi_1 = complex(self.chi_1)
        self.chi_2 = complex(self.chi_2)
        self.far_detuned = abs(self.omega_1 - self.omega_2) >= \
            self.separation_ratio * abs(self.rabi)
        if not self.far_detuned:
            print(f'WARNING: |omega_1 - omega_2| = '
                  f'{abs(self.omega_1 - self.omega_2)} is below '
                  f'{self.separation_ratio} x rabi')


def toy_hamiltonian(params, t):
    ''' three-level driving Hamiltonian under the rotating wave approximation '''
    rate_1 = params.omega_1 - params.rabi + params.delta
    rate_2 = params.omega_2 - params.rabi + params.delta
    beat = params.omega_1 - params.omega_2
    chi_1, chi_2 = params.chi_1, params.chi_2
    return np.array([
        [0.0, np.conj(chi_1) * np.exp(1j * rate_1 * t),
         np.conj(chi_2) * np.exp(1j * rate_2 * t)],
        [chi_1 * np.exp(-1j * rate_1 * t), params.omega_1,
         params.rabi * np.exp(-1j * beat * t)],
        [chi_2 * np.exp(-1j * rate_2 * t), params.rabi * np.exp(1j * beat * t),
         params.omega_2]
    ], dtype=complex)


def toy_frame(params):
    ''' the frame that removes the beat between s1 and s2 '''
    return PhaseFrame([0.0, params.omega_1 - params.omega_2, 0.0])


def toy_rotating_display(params, t):
    ''' the three-level Hamiltonian after toy_frame, as displayed '''
    rate = params.omega_2 - params.rabi + params.delta
    chi_1, chi_2 = params.chi_1, params.chi_2
    return np.array([
        [0.0, np.conj(chi_1) * np.exp(1j * rate * t),
         np.conj(chi_2) * np.exp(1j * rate * t)],
        [chi_1 * np.exp(-1j * rate * t), params.omega_2, params.rabi],
        [chi_2 * np.exp(-1j * rate * t), params.rabi, params.omega_2]
    ], dtype=complex)


def _positive_first_component(vectors):
    # column phases fixed so the first component is real and positive
    first = vectors[0, :]
    phases = np.ones_like(first)
    nonzero = np.abs(first) > 0.0
    phases[nonzero] = np.conj(first[nonzero]) / np.abs(first[nonzero])
    return vectors * phases


def synthetic_rule_check(params):
    """
    Diagonalize the dressed (s1, s2) block and return the couplings from g
    to the dressed states d1 (energy omega_2 + rabi) and d2 (omega_2 - rabi).
    """
    h_frame = toy_frame_transform(
        lambda t: toy_hamiltonian(params, t), toy_frame(params))(0.0)
    energies, vectors = np.linalg.eigh(h_frame[1:, 1:])
    vectors = _positive_first_component(vectors)
    order = np.argsort(energies)[::-1]
    couplings = vectors[:, order].conj().T @ h_frame[1:, 0]
    return SyntheticCouplings(couplings[0], couplings[1], energies[order[0]],
                              energies[order[1]])


def constrained_rabis(chi_11, chi_22, phases, printed_signs=False):
    """
    Rabi frequencies chi_{i,j} (rows g1, g2; columns bare e1..e3) that null
    the forbidden dressed couplings.  The 2 pi/3 phases carry the sign that
    reproduces the dressed Hamiltonian; printed_signs=True flips it for
    comparison.
    """
    phi_12, phi_23, phi_31 = phases
    sign = 1.0 if printed_signs else -1.0
    turn = np.exp(sign * 2j * np.pi / 3.0)
    chi_11 = complex(chi_11)
    chi_22 = complex(chi_22)
    return np.array([
        [
            chi_11,
            turn * np.exp(-1j * (2 * phi_12 - phi_23 - phi_31) / 3) * chi_11,
            np.conj(turn) * np.exp(-1j * (phi_12 + phi_23 - 2 * phi_31) / 3)
            * chi_11
        ],
        [
            turn * np.exp(1j * (2 * phi_12 - phi_23 - phi_31) / 3) * chi_22,
            chi_22,
            np.conj(turn) * np.exp(1j * (phi_12 - 2 * phi_23 + phi_31) / 3)
            * chi_22
        ]
    ], dtype=complex)


@dataclass
class RamanDrive:
    """
    Bare five-level drive: ground-to-bare Rabis chi (2 x 3), Raman phases
    (phi_12, phi_23, phi_31), dressing Rabi, common detuning, spin-orbit
    momentum and excited-state mass.
    """
    chi: np.ndarray
    phases: tuple
    rabi: float
    detuning: float
    k_soc: float
    mass: float

    def __post_init__(self):
        self.chi = np.asarray(self.chi, dtype=complex)
        if self.chi.shape != (2, 3):
            msg = f'chi must have shape (2, 3), actually: {self.chi.shape}'
            raise ValueError(msg)
        self.phases = tuple(float(val) for val in self.phases)
        if len(self.phases) != 3:
            raise ValueError(f'three Raman phases required: {self.phases}')
        if self.mass <= 0.0 or self.k_soc <= 0.0:
            msg = f'mass and k_soc must be positive, mass: {self.mass}, ' \
                f'k_soc: {self.k_soc}'
            raise ValueError(msg)

    @classmethod
    def constrained(cls, chi_11, chi_22, phases, rabi, detuning, k_soc, mass):
        return cls(constrained_rabis(chi_11, chi_22, phases), phases, rabi,
                   detuning, k_soc, mass)

    @property
    def plaquette_phase(self):
        return sum(self.phases) / 3.0


def soc_momenta(k_soc):
    ''' k_j = k_soc (cos 2 pi j/3, sin 2 pi j/3), j = 1, 2, 3 '''
    angles = 2.0 * np.pi * np.arange(1, 4) / 3.0
    return k_soc * np.stack([np.cos(angles), np.sin(angles)], axis=1)


def five_level_hamiltonian(momentum, drive, t):
    ''' bare five-level Hamiltonian in the rotating frame of the basis '''
    h_mat = np.zeros((5, 5), dtype=complex)
    k_vec = np.array([momentum.kx, momentum.ky])
    kicks = soc_momenta(drive.k_soc)
    phi_12, phi_23, phi_31 = drive.phases
    for ground in range(2):
        for bare in range(3):
            h_mat[ground, 2 + bare] = np.conj(drive.chi[ground, bare]) \
                * np.exp(1j * drive.detuning * t)
            h_mat[2 + bare, ground] = drive.chi[ground, bare] \
                * np.exp(-1j * drive.detuning * t)
    for bare in range(3):
        h_mat[2 + bare, 2 + bare] = np.sum((k_vec + kicks[bare])**2) \
            / (2.0 * drive.mass)
    h_mat[2, 3] = drive.rabi * np.exp(1j * phi_12)
    h_mat[3, 2] = drive.rabi * np.exp(-1j * phi_12)
    h_mat[2, 4] = drive.rabi * np.exp(-1j * phi_31)
    h_mat[4, 2] = drive.rabi * np.exp(1j * phi_31)
    h_mat[3, 4] = drive.rabi * np.exp(1j * phi_23)
    h_mat[4, 3] = drive.rabi * np.exp(-1j * phi_23)
    return h_mat


def dft_unitary():
    """
    Identity on (g1, g2); on the excited block U[j, n] = e^{-2 pi i n j/3}/sqrt(3)
    with bare index j and dressed index n.  The last row is (1, 1, 1)/sqrt(3).
    """
    unitary = np.eye(5, dtype=complex)
    index = np.arange(1, 4)
    unitary[2:, 2:] = OMEGA_BAR**np.outer(index, index) / SQRT3
    return unitary


def phase_unitary(phases):
    phi_12, phi_23, phi_31 = phases
    mean = (phi_12 + phi_23 + phi_31) / 3.0
    return np.diag([
        1.0,
        1.0,
        np.exp(1j * mean),
        np.exp(1j * (-phi_12 + 2.0 * phi_23 + 2.0 * phi_31) / 3.0),
        np.exp(1j * phi_31)
    ]).astype(complex)


def dressing_unitary(phases):
    ''' V = U' U, mapping dressed to bare amplitudes '''
    return phase_unitary(phases) @ dft_unitary()


def dressed_hamiltonian(momentum, drive, t=0.0, check=True):
    """
    V^dag h V.  With check=True a coupling left on a forbidden entry raises
    a ValueError naming the entry (1-based, ordering g1, g2, e1, e2, e3).
    """
    unitary = dressing_unitary(drive.phases)
    dressed = unitary.conj().T @ five_level_hamiltonian(momentum, drive, t) \
        @ unitary
    if check:
        scale = max(1.0, float(np.max(np.abs(drive.chi))))
        for row, col in FORBIDDEN_ENTRIES:
            if abs(dressed[row, col]) > FORBIDDEN_TOLERANCE * scale:
                msg = f'selection rule violated at entry ({row + 1}, ' \
                    f'{col + 1}): {dressed[row, col]}'
                print(msg)
                raise ValueError(msg)
    return dressed


def dressed_rabis(drive):
    ''' effective Rabis (Omega_1, Omega_2) of the dressed couplings '''
    phi_12, phi_23, phi_31 = drive.phases
    prefactor = -SQRT3 * np.exp(-1j * np.pi / 3.0)
    rabi_1 = prefactor * np.exp(-1j * (phi_12 + phi_23 + phi_31) / 3.0) \
        * drive.chi[0, 0]
    rabi_2 = prefactor * np.exp(1j * (phi_12 - 2.0 * phi_23 - 2.0 * phi_31)
                                / 3.0) * drive.chi[1, 1]
    return complex(rabi_1), complex(rabi_2)


def dressed_energies(k, drive):
    ''' (k^2 + k_soc^2)/2M + 2 rabi cos(2 pi n/3 - phi), n = 1, 2, 3 '''
    index = np.arange(1, 4)
    return (k**2 + drive.k_soc**2) / (2.0 * drive.mass) + 2.0 * drive.rabi \
        * np.cos(2.0 * np.pi * index / 3.0 - drive.plaquette_phase)


def dressed_display(momentum, drive, t=0.0, soc_coefficient=None):
    """
    The dressed five-level matrix in closed form.  The spin-orbit entries
    are soc_coefficient (k_x -/+ i k_y); conjugation gives k_soc/(2M).
    """
    if soc_coefficient is None:
        soc_coefficient = drive.k_soc / (2.0 * drive.mass)
    rabi_1, rabi_2 = dressed_rabis(drive)
    k_minus = soc_coefficient * (momentum.kx - 1j * momentum.ky)
    k_plus = soc_coefficient * (momentum.kx + 1j * momentum.ky)
    ahead = np.exp(1j * drive.detuning * t)
    h_mat = np.zeros((5, 5), dtype=complex)
    h_mat[0, 2] = np.conj(rabi_1) * ahead
    h_mat[1, 3] = np.conj(rabi_2) * ahead
    h_mat[2, 0] = rabi_1 * np.conj(ahead)
    h_mat[3, 1] = rabi_2 * np.conj(ahead)
    h_mat[2:, 2:] = np.array([
        [0.0, k_minus, k_plus],
        [k_plus, 0.0, k_minus],
        [k_minus, k_plus, 0.0]
    ])
    h_mat[2:, 2:] += np.diag(dressed_energies(momentum.k, drive))
    return h_mat


def static_frame(drive):
    ''' excited states rotating at the common detuning '''
    return PhaseFrame([0.0, 0.0, drive.detuning, drive.detuning,
                       drive.detuning])


def static_dressed_hamiltonian(momentum, drive, t=0.0):
    ''' dressed Hamiltonian in the static frame; independent of t '''
    return toy_frame_transform(
        lambda time: dressed_hamiltonian(momentum, drive, time),
        static_frame(drive))(t)


def reduce_to_four_level(h_five, drive=None, linearize_phi=False,
                         include_correction=False):
    """
    Drop e3 from a static dressed five-level Hamiltonian.

    Parameters
    ----------
    h_five: ndarray - static dressed Hamiltonian (g1, g2, e1, e2, e3)
    drive: RamanDrive - required when linearize_phi is set
    linearize_phi: bool - replace the e1, e2 energies by their first
        order expansion in the plaquette phase
    include_correction: bool - fold the second order shift from e3 into
        the (e1, e2) block, referenced to the mean e1, e2 energy
    """
    h_five = np.asarray(h_five, dtype=complex)
    if h_five.shape != (5, 5):
        msg = f'expected a 5 x 5 Hamiltonian, actually: {h_five.shape}'
        raise ValueError(msg)
    if include_correction:
        reference = float(np.real(h_five[2, 2] + h_five[3, 3])) / 2.0
        h_four = np.array(h_five[:4, :4])
        h_four[2:, 2:] = adiabatic_eliminate(
            h_five[2:, 2:], [0, 1], reference_energy=reference,
            min_gap_ratio=0.0).matrix
    else:
        h_four = np.array(h_five[:4, :4])
    if linearize_phi:
        if drive is None:
            raise ValueError('linearize_phi requires the RamanDrive')
        # keep the momentum dependence, swap the k = 0 energies
        exact = dressed_energies(0.0, drive)[:2] - drive.detuning
        shifts = np.array(linearized_detunings(drive)) - exact
        h_four[2, 2] += shifts[0]
        h_four[3, 3] += shifts[1]
    return h_four


def soc_energy(drive):
    ''' E_SOC = k_soc^2/2M - rabi '''
    return drive.k_soc**2 / (2.0 * drive.mass) - drive.rabi


def linearized_detunings(drive):
    ''' (Delta_1, Delta_2) to first order in the plaquette phase '''
    shift = SQRT3 * drive.rabi * drive.plaquette_phase
    base = soc_energy(drive) - drive.detuning
    return base + shift, base - shift


@dataclass
class LaserSet:
    """
    One Raman laser set after dressing: effective Rabis, red detunings of
    the dressed states e1, e2, the dressing Rabi and plaquette phase that
    produced them, the spin-orbit momentum, excited-state mass and the
    spin-orbit coefficient alpha (k_soc/M unless given).
    """
    rabi_1: complex
    rabi_2: complex
    detuning_1: float
    detuning_2: float
    dressing_rabi: float
    phase: float
    k_soc: float = field(default=1.0)
    mass: float = field(default=1.0)
    soc_coefficient: float = field(default=None)

    def __post_init__(self):
        self.rabi_1 = complex(self.rabi_1)
        self.rabi_2 = complex(self.rabi_2)
        for name in ['detuning_1', 'detuning_2', 'mass', 'k_soc']:
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0.0:
                msg = f'{name} must be positive, actually: {value}'
                raise ValueError(msg)
        if self.soc_coefficient is None:
            self.soc_coefficient = self.k_soc / self.mass
        self.soc_coefficient = float(self.soc_coefficient)

    @property
    def alpha(self):
        return self.soc_coefficient

    def scaled(self, factor):
        ''' copy with both effective Rabis multiplied by factor '''
        return LaserSet(self.rabi_1 * factor, self.rabi_2 * factor,
                        self.detuning_1, self.detuning_2, self.dressing_rabi,
                        self.phase, self.k_soc, self.mass,
                        self.soc_coefficient)

    def to_dict(self):
        return {
            'rabi_1': [self.rabi_1.real, self.rabi_1.imag],
            'rabi_2': [self.rabi_2.real, self.rabi_2.imag],
            'detuning_1': self.detuning_1,
            'detuning_2': self.detuning_2,
            'dressing_rabi': self.dressing_rabi,
            'phase': self.phase,
            'k_soc': self.k_soc,
            'mass': self.mass,
            'soc_coefficient': self.soc_coefficient
        }

    @classmethod
    def from_dict(cls, values):
        try:
            rabi_1 = complex(*values['rabi_1'])
            rabi_2 = complex(*values['rabi_2'])
            return cls(rabi_1, rabi_2, float(values['detuning_1']),
                       float(values['detuning_2']),
                       float(values['dressing_rabi']), float(values['phase']),
                       float(values['k_soc']), float(values['mass']),
                       values.get('soc_coefficient'))
        except (KeyError, TypeError) as err:
            msg = f'invalid laser set: {values}, error: {err}'
            raise ValueError(msg) from err


def laser_set_from_drive(drive, linearize_phi=False):
    ''' LaserSet seen by the dressed e1, e2 pair of a RamanDrive '''
    rabi_1, rabi_2 = dressed_rabis(drive)
    if linearize_phi:
        detuning_1, detuning_2 = linearized_detunings(drive)
    else:
        energies = dressed_energies(0.0, drive) - drive.detuning
        detuning_1, detuning_2 = energies[0], energies[1]
    return LaserSet(rabi_1, rabi_2, float(detuning_1), float(detuning_2),
                    drive.rabi, drive.plaquette_phase, drive.k_soc,
                    drive.mass, drive.k_soc / (2.0 * drive.mass))


def drive_from_laser_set(laser_set, tolerance=1e-9):
    """
    RamanDrive with all three Raman phases equal to laser_set.phase that
    reproduces laser_set.  The set must come from a dressing: detuning_1 -
    detuning_2 = 2 sqrt(3) rabi sin(phase) and alpha = k_soc/(2M).
    """
    phase = laser_set.phase
    splitting = 2.0 * SQRT3 * laser_set.dressing_rabi * np.sin(phase)
    gap = laser_set.detuning_1 - laser_set.detuning_2
    if abs(gap - splitting) > tolerance * max(1.0, abs(gap)):
        msg = f'laser set is not a dressing: detuning gap {gap} != ' \
            f'2 sqrt(3) rabi sin(phase) = {splitting}'
        raise ValueError(msg)
    alpha = laser_set.k_soc / (2.0 * laser_set.mass)
    if abs(laser_set.alpha - alpha) > tolerance * alpha:
        msg = f'soc_coefficient {laser_set.alpha} differs from the dressed ' \
            f'value k_soc/2M = {alpha}'
        raise ValueError(msg)

    prefactor = -SQRT3 * np.exp(-1j * np.pi / 3.0) * np.exp(-1j * phase)
    chi_11 = laser_set.rabi_1 / prefactor
    chi_22 = laser_set.rabi_2 / prefactor
    detuning = laser_set.k_soc**2 / (2.0 * laser_set.mass) + 2.0 \
        * laser_set.dressing_rabi * np.cos(4.0 * np.pi / 3.0 - phase) \
        - laser_set.detuning_2
    phases = (phase, phase, phase)
    return RamanDrive.constrained(chi_11, chi_22, phases,
                                  laser_set.dressing_rabi, detuning,
                                  laser_set.k_soc, laser_set.mass)


def four_level_hamiltonian(momentum, laser_set):
    ''' static four-level model (g1, g2, e1, e2) of one laser set '''
    kinetic = momentum.k**2 / (2.0 * laser_set.mass)
    soc = laser_set.alpha * momentum.k * np.exp(-1j * momentum.theta)
    rabi_1, rabi_2 = laser_set.rabi_1, laser_set.rabi_2
    return np.array([
        [0.0, 0.0, np.conj(rabi_1), 0.0],
        [0.0, 0.0, 0.0, np.conj(rabi_2)],
        [rabi_1, 0.0, laser_set.detuning_1 + kinetic, soc],
        [0.0, rabi_2, np.conj(soc), laser_set.detuning_2 + kinetic]
    ], dtype=complex)


def expansion_parameter(momentum, laser_set):
    ''' epsilon = alpha k / (Delta_1 - Delta_2) '''
    gap = laser_set.detuning_1 - laser_set.detuning_2
    if gap == 0.0:
        raise ValueError('degenerate detunings: Delta_1 == Delta_2')
    return laser_set.alpha * momentum.k / gap


def soc_rotation_unitary(momentum, laser_set,
                         max_expansion=DEFAULT_MAX_EXPANSION):
    ''' second order rotation of the (e1, e2) block '''
    epsilon = expansion_parameter(momentum, laser_set)
    if abs(epsilon) > max_expansion:
        msg = f'spin-orbit expansion parameter {epsilon} exceeds ' \
            f'{max_expansion} at k = {momentum.k}'
        raise ValueError(msg)
    phase = np.exp(1j * momentum.theta)
    rotation = np.eye(4, dtype=complex)
    rotation[2:, 2:] = [
        [1.0 - epsilon**2 / 2.0, -epsilon * np.conj(phase)],
        [epsilon * phase, 1.0 - epsilon**2 / 2.0]
    ]
    return rotation


def soc_block_rotation(momentum, laser_set,
                       max_expansion=DEFAULT_MAX_EXPANSION):
    ''' W^dag H W for the four-level Hamiltonian of one laser set '''
    rotation = soc_rotation_unitary(momentum, laser_set, max_expansion)
    return rotation.conj().T @ four_level_hamiltonian(momentum, laser_set) \
        @ rotation


def rotated_display(momentum, laser_set):
    ''' rotated four-level matrix to second order in epsilon '''
    epsilon = expansion_parameter(momentum, laser_set)
    kinetic = momentum.k**2 / (2.0 * laser_set.mass)
    gap = laser_set.detuning_1 - laser_set.detuning_2
    shift = (laser_set.alpha * momentum.k)**2 / gap
    phase = np.exp(1j * momentum.theta)
    rabi_1, rabi_2 = laser_set.rabi_1, laser_set.rabi_2
    keep = 1.0 - epsilon**2 / 2.0
    return np.array([
        [0.0, 0.0, np.conj(rabi_1) * keep,
         -np.conj(rabi_1) * epsilon * np.conj(phase)],
        [0.0, 0.0, np.conj(rabi_2) * epsilon * phase, np.conj(rabi_2) * keep],
        [rabi_1 * keep, rabi_2 * epsilon * np.conj(phase),
         laser_set.detuning_1 + shift + kinetic, 0.0],
        [-rabi_1 * epsilon * phase, rabi_2 * keep, 0.0,
         laser_set.detuning_2 - shift + kinetic]
    ], dtype=complex)


def truncated_rotated(momentum, laser_set):
    ''' rotated matrix keeping first order couplings and bare detunings '''
    epsilon = expansion_parameter(momentum, laser_set)
    kinetic = momentum.k**2 / (2.0 * laser_set.mass)
    phase = np.exp(1j * momentum.theta)
    rabi_1, rabi_2 = laser_set.rabi_1, laser_set.rabi_2
    return np.array([
        [0.0, 0.0, np.conj(rabi_1), -np.conj(rabi_1) * epsilon * np.conj(phase)],
        [0.0, 0.0, np.conj(rabi_2) * epsilon * phase, np.conj(rabi_2)],
        [rabi_1, rabi_2 * epsilon * np.conj(phase),
         laser_set.detuning_1 + kinetic, 0.0],
        [-rabi_1 * epsilon * phase, rabi_2, 0.0,
         laser_set.detuning_2 + kinetic]
    ], dtype=complex)


def _split_indices(size, keep):
    keep = [int(index) for index in keep]
    if len(set(keep)) != len(keep) or any(
            index < 0 or index >= size for index in keep):
        msg = f'keep indices must be distinct and within [0, {size}), ' \
            f'actually: {keep}'
        raise ValueError(msg)
    drop = [index for index in range(size) if index not in keep]
    return keep, drop


def adiabatic_eliminate(h_mat, keep, reference_energy=0.0,
                        min_gap_ratio=DEFAULT_GAP_RATIO):
    """
    Second order elimination of the states not in keep:
    H_eff[a, b] = H[a, b] - sum_c H[a, c] H[c, b] / (H[c, c] - E_ref).

    The gap ratio is the worst |H[c, c] - E_ref| / max_a |H[a, c]| over the
    eliminated states; below min_gap_ratio a ValueError is raised.
    """
    h_mat = np.asarray(h_mat, dtype=complex)
    keep, drop = _split_indices(h_mat.shape[0], keep)
    gap_ratio = np.inf
    for state in drop:
        coupling = np.max(np.abs(h_mat[keep, state])) if keep else 0.0
        gap = abs(h_mat[state, state] - reference_energy)
        if coupling > 0.0:
            gap_ratio = min(gap_ratio, gap / coupling)
    if gap_ratio < min_gap_ratio:
        msg = f'adiabatic elimination gap ratio {gap_ratio} is below ' \
            f'{min_gap_ratio}'
        print(msg)
        raise ValueError(msg)

    effective = np.array(h_mat[np.ix_(keep, keep)])
    for state in drop:
        denominator = h_mat[state, state] - reference_energy
        if denominator == 0.0:
            if np.any(h_mat[keep, state] != 0.0):
                msg = f'state {state} is resonant with the reference energy'
                raise ValueError(msg)
            continue
        effective -= np.outer(h_mat[keep, state], h_mat[state, keep]) \
            / denominator
    return Elimination(effective, gap_ratio)


def schur_reduce(h_mat, keep, energy=0.0):
    ''' all orders reduction H_kk - H_kd (H_dd - E)^-1 H_dk '''
    h_mat = np.asarray(h_mat, dtype=complex)
    keep, drop = _split_indices(h_mat.shape[0], keep)
    if not drop:
        return np.array(h_mat[np.ix_(keep, keep)])
    block = h_mat[np.ix_(drop, drop)] - energy * np.eye(len(drop))
    return h_mat[np.ix_(keep, keep)] - h_mat[np.ix_(keep, drop)] \
        @ np.linalg.solve(block, h_mat[np.ix_(drop, keep)])


def eliminated_display(momentum, laser_set):
    ''' ground-state matrix from eliminating e1, e2 out of truncated_rotated '''
    epsilon = expansion_parameter(momentum, laser_set)
    kinetic = momentum.k**2 / (2.0 * laser_set.mass)
    energy_1 = laser_set.detuning_1 + kinetic
    energy_2 = laser_set.detuning_2 + kinetic
    rabi_1, rabi_2 = laser_set.rabi_1, laser_set.rabi_2
    gap = laser_set.detuning_1 - laser_set.detuning_2
    off = laser_set.alpha * momentum.k * np.exp(-1j * momentum.theta) \
        * np.conj(rabi_1) * rabi_2 / gap * (1.0 / energy_2 - 1.0 / energy_1)
    return np.array([
        [-abs(rabi_1)**2 / energy_1 - abs(rabi_1)**2 * epsilon**2 / energy_2,
         off],
        [np.conj(off),
         -abs(rabi_2)**2 / energy_2 - abs(rabi_2)**2 * epsilon**2 / energy_1]
    ], dtype=complex)


def effective_coupling(momentum, laser_set):
    """
    Effective ground-state coupling of one laser set:
    alpha k e^{-i theta} Omega_1^* Omega_2 / (Delta_1 (Delta_2 + k^2/2M)).
    The overall sign is the one produced by the elimination.
    """
    kinetic = momentum.k**2 / (2.0 * laser_set.mass)
    value = laser_set.alpha * momentum.k * np.exp(-1j * momentum.theta) \
        * np.conj(laser_set.rabi_1) * laser_set.rabi_2 \
        / (laser_set.detuning_1 * (laser_set.detuning_2 + kinetic))
    return EffectiveCoupling(momentum, complex(value))


def retained_stark_shift(momentum, laser_set):
    ''' -|Omega_2|^2 / (Delta_2 + k^2/2M) on g2 '''
    kinetic = momentum.k**2 / (2.0 * laser_set.mass)
    return -abs(laser_set.rabi_2)**2 / (laser_set.detuning_2 + kinetic)


def effective_hamiltonian(momentum, laser_set):
    ''' effective two-level matrix with the retained g2 Stark shift '''
    value = effective_coupling(momentum, laser_set).value
    return np.array([
        [0.0, value],
        [np.conj(value), retained_stark_shift(momentum, laser_set)]
    ], dtype=complex)


def combined_hamiltonian(momentum, laser_sets):
    ''' sum of the effective couplings of several sets, Stark shifts removed '''
    if len(laser_sets) == 0:
        raise ValueError('at least one laser set is required')
    value = sum(effective_coupling(momentum, laser_set).value
                for laser_set in laser_sets)
    return np.array([[0.0, value], [np.conj(value), 0.0]], dtype=complex)


def pipeline_coupling(momentum, drive, linearize_phi=False,
                      min_gap_ratio=DEFAULT_GAP_RATIO):
    """
    Ground-state coupling obtained numerically along the whole chain:
    dressing, static frame, e3 removal, spin-orbit rotation and second
    order elimination.
    """
    h_five = static_dressed_hamiltonian(momentum, drive)
    h_four = reduce_to_four_level(h_five, drive, linearize_phi)
    laser_set = laser_set_from_drive(drive, linearize_phi)
    rotation = soc_rotation_unitary(momentum, laser_set)
    rotated = rotation.conj().T @ h_four @ rotation
    elimination = adiabatic_eliminate(rotated, [0, 1],
                                      min_gap_ratio=min_gap_ratio)
    return complex(elimination.matrix[0, 1])


def momentum_grid(k_window, n_k, theta=0.0):
    ''' Momentum list spanning k_window at fixed angle '''
    k_lo, k_hi = k_window
    return [Momentum.from_polar(k, theta)
            for k in np.linspace(k_lo, k_hi, n_k)]


def _scaled_error(computed, expected):
    return float(np.max(np.abs(computed - expected))
                 / max(1.0, np.max(np.abs(expected))))


def display_residuals(momentum, drive, t=0.0):
    """
    Deviation of each computed matrix in the chain from its closed form,
    entrywise and relative to max(1, largest entry).  The spin-orbit
    rotation is truncated and is checked separately.
    """
    bare = five_level_hamiltonian(momentum, drive, t)
    dressed = dressed_hamiltonian(momentum, drive, t, check=False)
    static = static_dressed_hamiltonian(momentum, drive, t)
    static_expected = dressed_display(momentum, drive) \
        - np.diag([0.0, 0.0] + [drive.detuning] * 3)
    linear_set = laser_set_from_drive(drive, linearize_phi=True)
    four = reduce_to_four_level(static, drive, linearize_phi=True)
    eliminated = adiabatic_eliminate(truncated_rotated(momentum, linear_set),
                                     [0, 1], min_gap_ratio=0.0).matrix
    return {
        'bare_hermiticity': _hermitian_error(bare),
        'selection_rule': max(abs(dressed[row, col])
                              for row, col in FORBIDDEN_ENTRIES),
        'dressed': _scaled_error(dressed, dressed_display(momentum, drive, t)),
        'static_frame': _scaled_error(static, static_expected),
        'four_level': _scaled_error(
            four, four_level_hamiltonian(momentum, linear_set)),
        'eliminated': _scaled_error(
            eliminated, eliminated_display(momentum, linear_set))
    }


def toy_residuals(params, t=0.0):
    ''' frame and dressed-coupling checks of the three-level model '''
    transformed = toy_frame_transform(
        lambda time: toy_hamiltonian(params, time), toy_frame(params))(t)
    couplings = synthetic_rule_check(params)
    expected = np.array([params.chi_1 + params.chi_2,
                         params.chi_1 - params.chi_2]) / np.sqrt(2.0)
    return {
        'toy_frame': _scaled_error(transformed,
                                   toy_rotating_display(params, t)),
        'synthetic_couplings': float(np.max(np.abs(
            np.array([couplings.to_d1, couplings.to_d2]) - expected)))
    }


def random_drive(rng):
    """
    Constrained RamanDrive with red-detuned dressed states: Raman phases
    in [0.1, 0.5], dressing Rabi in [0.5, 2] and detuning in [-10, -6].
    """
    chi_11, chi_22 = rng.normal(size=2) + 1j * rng.normal(size=2)
    phases = tuple(rng.uniform(0.1, 0.5, size=3))
    return RamanDrive.constrained(
        chi_11, chi_22, phases, rng.uniform(0.5, 2.0),
        rng.uniform(-10.0, -6.0), rng.uniform(0.5, 1.5),
        rng.uniform(0.5, 2.0))


def random_toy(rng):
    chi_1, chi_2 = rng.normal(size=2) + 1j * rng.normal(size=2)
    return ToyParams(rng.uniform(50.0, 100.0), rng.uniform(0.0, 10.0),
                     rng.uniform(0.5, 2.0), chi_1, chi_2,
                     rng.uniform(-1.0, 1.0))
