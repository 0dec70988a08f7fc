"""Truncated Fock-space operators shared by the emulation and tomography
modules.

Quadrature convention: x = (a^dag + a)/sqrt(2), p = i(a^dag - a)/sqrt(2),
so a coherent state |alpha> sits at (x, p) = sqrt(2)*(Re alpha, Im alpha).
"""

from math import sqrt

import numpy as np
from scipy.linalg import expm


def destroy(dim):
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def create(dim):
    return destroy(dim).conj().T


def number_op(dim):
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def x_quadrature(dim):
    a = destroy(dim)
    return (a.conj().T + a) / sqrt(2.0)


def p_quadrature(dim):
    a = destroy(dim)
    return 1.0j * (a.conj().T - a) / sqrt(2.0)


def displacement(gamma, dim):
    """D(gamma) = exp(gamma a^dag - gamma^* a) on the truncated space.

    Exactly unitary (the truncated generator is anti-Hermitian), but only
    approximates the infinite-dimensional operator where the displaced
    states fit inside the truncation; callers control accuracy through
    `dim`.
    """
    a = destroy(dim)
    return expm(gamma * a.conj().T - np.conj(gamma) * a)


def coherent_state(alpha, dim):
    """Coherent state amplitudes c_n = e^{-|a|^2/2} a^n/sqrt(n!)."""
    n = np.arange(dim)
    with np.errstate(divide="ignore"):
        log_fact = np.cumsum(np.log(np.maximum(n, 1)))
    amps = np.exp(-0.5 * abs(alpha) ** 2) * np.power(complex(alpha), n) / np.exp(
        0.5 * log_fact
    )
    return amps.astype(complex)


def fock_state(n, dim):
    v = np.zeros(dim, dtype=complex)
    v[n] = 1.0
    return v


def parity_signs(dim):
    """(-1)^n over the Fock ladder."""
    return (-1.0) ** np.arange(dim)


def hermite_functions(p, n_levels):
    """Orthonormal harmonic-oscillator eigenfunctions h_n(p), n < n_levels.

    Evaluated by the stable three-term recurrence
    h_{n+1} = (sqrt(2) p h_n - sqrt(n) h_{n-1}) / sqrt(n+1).
    Returns an array of shape (n_levels, len(p)).
    """
    p = np.asarray(p, dtype=float)
    h = np.zeros((n_levels, p.size))
    h[0] = np.pi ** (-0.25) * np.exp(-0.5 * p**2)
    if n_levels > 1:
        h[1] = sqrt(2.0) * p * h[0]
    for n in range(1, n_levels - 1):
        h[n + 1] = (sqrt(2.0) * p * h[n] - sqrt(n) * h[n - 1]) / sqrt(n + 1.0)
    return h


def fock_to_momentum(field_amps, p):
    """Momentum-representation wavefunction of a Fock-basis field vector.

    Uses <p|n> = (-i)^n h_n(p), the Fourier phase of the oscillator
    eigenfunctions under the quadrature convention of this module.
    """
    field_amps = np.asarray(field_amps, dtype=complex)
    h = hermite_functions(p, field_amps.size)
    phases = (-1.0j) ** np.arange(field_amps.size)
    return (field_amps * phases) @ h
