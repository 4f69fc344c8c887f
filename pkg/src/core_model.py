"""
Copyright 2022 NOAA
All rights reserved.

Continuum two-band Chern insulator.  The Bloch vector is
R(k) = (kx, ky, m - k^2) and the Bloch Hamiltonian is R(k).sigma written in
the (psi_1, psi_2) band basis.  The filled lower band is described by the
spinor (P, Q) where the many-body state is P psi_2^dag - Q psi_1^dag |vac>,
i.e. the column vector (-Q, P) in the (psi_1, psi_2) basis.

All functions accept scalars or numpy arrays of equal shape for kx and ky.

"""
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

NORM_TOLERANCE = 1e-12
QUASI_LOCAL_UPPER_M = 0.25

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

BlochVector = namedtuple(
    'BlochVector',
    [
        'rx',
        'ry',
        'rz',
        'norm'
    ],
)


def validate_mass(m):
    ''' mass must be a positive real number '''
    if isinstance(m, bool) or not isinstance(m, (int, float)):
        msg = f'm must be a real number, actually: {type(m)}'
        print(msg)
        raise TypeError(msg)
    if not np.isfinite(m) or m <= 0.0:
        msg = f'm must be positive and finite, m: {m}'
        print(msg)
        raise ValueError(msg)


@dataclass
class ModelParams:
    ''' mass parameter of the continuum Chern insulator '''
    m: float
    quasi_local_regime: bool = field(default=False, init=False)

    def __post_init__(self):
        validate_mass(self.m)
        self.m = float(self.m)
        self.quasi_local_regime = 0.0 < self.m < QUASI_LOCAL_UPPER_M


@dataclass
class Momentum:
    ''' 2D wavevector with polar decomposition (k, theta) '''
    kx: float
    ky: float

    def __post_init__(self):
        self.kx = float(self.kx)
        self.ky = float(self.ky)

    @property
    def k(self):
        return float(np.hypot(self.kx, self.ky))

    @property
    def theta(self):
        # atan2(0, 0) is 0, which is the convention at the origin
        return float(np.arctan2(self.ky, self.kx))

    @classmethod
    def from_polar(cls, k, theta):
        return cls(k * np.cos(theta), k * np.sin(theta))


@dataclass
class Spinor:
    """
    Amplitudes (P, Q) of one momentum mode.

    Normalization is not enforced: flow and preparation outputs carry
    rounding drift, so consumers that need |P|^2 + |Q|^2 = 1 call
    is_normalized (pulse_plan rejects anything else).  Amplitudes must be
    finite.
    """
    p: complex
    q: complex

    def __post_init__(self):
        self.p = complex(self.p)
        self.q = complex(self.q)
        if not (np.isfinite(self.p) and np.isfinite(self.q)):
            msg = f'spinor amplitudes must be finite, actually: ' \
                f'({self.p}, {self.q})'
            print(msg)
            raise ValueError(msg)

    def norm(self):
        return float(np.sqrt(abs(self.p)**2 + abs(self.q)**2))

    def band_vector(self):
        ''' column vector in the (psi_1, psi_2) basis '''
        return np.array([-self.q, self.p], dtype=complex)

    def is_normalized(self, tol=NORM_TOLERANCE):
        return abs(self.norm() - 1.0) <= tol


def bloch_vector(kx, ky, m):
    ''' R(k) = (kx, ky, m - k^2) with its norm '''
    kx = np.asarray(kx, dtype=float)
    ky = np.asarray(ky, dtype=float)
    k_sq = kx**2 + ky**2
    rz = m - k_sq
    norm = np.hypot(np.sqrt(k_sq), rz)
    return BlochVector(kx, ky, rz, norm)


def bloch_hamiltonian(kx, ky, m):
    ''' 2x2 Hermitian matrix R.sigma for a single momentum '''
    r_vec = bloch_vector(kx, ky, m)
    return (float(r_vec.rx) * PAULI_X + float(r_vec.ry) * PAULI_Y
            + float(r_vec.rz) * PAULI_Z)


def _upper_amplitude(k_sq, rz, norm):
    # rz + |R| without cancellation when rz < 0
    positive = rz >= 0.0
    safe_denominator = np.where(positive, 1.0, norm - rz)
    return np.where(positive, rz + norm, k_sq / safe_denominator)


def ground_amplitudes(kx, ky, m):
    """
    Lower-band amplitudes (u_k, v_k) with u_k real and non-negative.

    u_k = (Rz + |R|)/sqrt(N_k), v_k = k e^{-i theta}/sqrt(N_k) and
    N_k = (Rz + |R|)^2 + k^2.  Arrays are returned for array input.
    """
    kx = np.asarray(kx, dtype=float)
    ky = np.asarray(ky, dtype=float)
    r_vec = bloch_vector(kx, ky, m)
    k_sq = kx**2 + ky**2
    upper = _upper_amplitude(k_sq, r_vec.rz, r_vec.norm)
    normalizer = np.hypot(upper, np.sqrt(k_sq))
    u_k = upper / normalizer
    v_k = (kx - 1j * ky) / normalizer
    return u_k, v_k


def ground_spinor(momentum, params):
    ''' lower-band spinor (P, Q) = (u_k, v_k) '''
    u_k, v_k = ground_amplitudes(momentum.kx, momentum.ky, params.m)
    return Spinor(complex(u_k), complex(v_k))


def unit_n(kx, ky, m):
    ''' unit vector n = R/|R|; raises when |R| vanishes '''
    r_vec = bloch_vector(kx, ky, m)
    if np.any(r_vec.norm <= 0.0):
        msg = f'degenerate Bloch vector |R| = 0 at kx: {kx}, ky: {ky}, m: {m}'
        print(msg)
        raise ValueError(msg)
    return np.stack([r_vec.rx, r_vec.ry, r_vec.rz]) / r_vec.norm


def spinor_n_field(p, q):
    """
    Unit vector carried by the spinor amplitudes (P, Q):
    n = (2 Re P Q*, 2 Im P Q*, |P|^2 - |Q|^2).  For the lower-band spinor this
    equals R/|R|.
    """
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    cross = p * np.conj(q)
    return np.stack([
        2.0 * cross.real,
        2.0 * cross.imag,
        np.abs(p)**2 - np.abs(q)**2
    ])


def berry_curvature_closed_form(k, m):
    ''' F(k) = (m + k^2)/(2 |R|^3) for the lower band at scale zero '''
    k = np.asarray(k, dtype=float)
    norm = np.hypot(k, m - k**2)
    return (m + k**2) / (2.0 * norm**3)
