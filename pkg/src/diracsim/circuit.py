"""Driven, parametrically modulated qubit-resonator emulation of the Dirac
Hamiltonian on a truncated Fock space.

Angular frequencies are in rad/ns and times in ns throughout.  The joint
state is ordered (qubit level, photon number) with qubit component 0 the
excited level |e>, matching the pseudospin convention of `dirac`.

The periodic qubit-frequency modulation produces sideband couplings with
Bessel-function weights: with mu = eps_1/nu_1, the second upper sideband
couples the qubit and resonator at eta = lambda*J2(mu)/2 while the
transverse drive is renormalized to the carrier strength K = Omega*J0(mu).
For theta = pi/2 the resulting static model is c* sigma_y p + m* c*^2
sigma_z with c* = sqrt(2)*eta and m*c*^2 = eps_2/4, optionally plus a
linear potential sqrt(2)*eps*x from a resonant resonator drive.
"""

import warnings
from dataclasses import dataclass, field, replace
from math import inf, pi, sqrt

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm
from scipy.special import jv

from . import fock
from .errors import StepFailure, TruncationError, TruncationWarning

RAD_PER_NS_PER_MHZ = 2.0 * pi * 1e-3


def mhz(f):
    """Convert a frequency in MHz to an angular frequency in rad/ns."""
    return RAD_PER_NS_PER_MHZ * f


@dataclass(frozen=True)
class CircuitParams:
    """Drive and modulation parameters of the emulation Hamiltonian.

    All frequencies and amplitudes are angular, in rad/ns; phases in rad.
    eps_drive and drive_detuning describe the resonator drive used for
    the linear-potential (Klein) scenario.
    """

    omega_0: float
    omega_r: float
    lam: float
    eps_1: float
    nu_1: float
    eps_2: float
    nu_2: float
    omega_drive: float
    theta: float = pi / 2
    phi_1: float = 0.0
    phi_2: float = 0.0
    delta: float = 0.0
    eps_drive: float = 0.0
    drive_detuning: float = 0.0

    def __post_init__(self):
        if not self.nu_1 > 0:
            raise ValueError("nu_1 must be positive")
        if not np.isfinite(self.eps_1 / self.nu_1):
            raise ValueError("mu = eps_1/nu_1 must be finite")

    @property
    def mu(self):
        return self.eps_1 / self.nu_1

    @property
    def sideband_mismatch(self):
        """omega_r - omega_0 - 2*nu_1; zero under the resonance condition."""
        return self.omega_r - self.omega_0 - 2.0 * self.nu_1


def paper_params(eps_2_mhz=8.8, eps_drive_mhz=0.0):
    """Device parameters of the experiment, in rad/ns."""
    return CircuitParams(
        omega_0=mhz(5260.0),
        omega_r=mhz(5580.0),
        lam=mhz(19.91),
        eps_1=mhz(130.0),
        nu_1=mhz(160.0),
        eps_2=mhz(eps_2_mhz),
        nu_2=mhz(33.4),
        omega_drive=mhz(20.03),
        theta=pi / 2,
        eps_drive=mhz(eps_drive_mhz),
        drive_detuning=mhz(0.75) if eps_drive_mhz else 0.0,
    )


@dataclass(frozen=True)
class ValidityRatios:
    """Perturbative-regime diagnostics; all should be well below 1."""

    coupling_over_nu1: float
    carrier_over_nu1: float
    sideband_over_2k: float


@dataclass(frozen=True)
class EffectiveParams:
    mu: float
    carrier: float
    eta: float
    omega: float
    c_star: float
    m_star: float
    validity: ValidityRatios

    @property
    def mass_scale(self):
        """m* c*, the momentum at which dynamic and static terms balance."""
        return self.m_star * self.c_star


def effective_params(p):
    """Derived sideband constants of the static model, with diagnostics."""
    mu = p.mu
    eta = p.lam * jv(2, mu) / 2.0
    carrier = p.omega_drive * jv(0, mu)
    omega = p.eps_2 / 4.0
    c_star = sqrt(2.0) * eta
    if c_star > 0.0:
        m_star = omega / c_star**2
    else:
        m_star = inf if omega > 0.0 else 0.0
    two_k = 2.0 * abs(carrier)
    validity = ValidityRatios(
        coupling_over_nu1=abs(p.lam) / p.nu_1,
        carrier_over_nu1=abs(carrier) / p.nu_1,
        sideband_over_2k=max(abs(eta), abs(p.eps_2) / 2.0) / two_k
        if two_k > 0.0 else inf,
    )
    return EffectiveParams(mu, carrier, eta, omega, c_star, m_star, validity)


@dataclass
class QubitResonatorState:
    """Joint qubit-resonator vector, amplitudes.reshape(2, n_max+1)."""

    amplitudes: np.ndarray
    n_max: int

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2 * (self.n_max + 1),):
            raise ValueError("amplitude length must be 2*(n_max+1)")

    def blocks(self):
        """(2, n_max+1) view: row 0 the |e> block, row 1 the |g> block."""
        return self.amplitudes.reshape(2, self.n_max + 1)

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self):
        return QubitResonatorState(self.amplitudes / self.norm(), self.n_max)

    def qubit_populations(self):
        b = self.blocks()
        return (
            float(np.sum(np.abs(b[0]) ** 2)),
            float(np.sum(np.abs(b[1]) ** 2)),
        )

    def reduced_qubit(self):
        b = self.blocks()
        return b @ b.conj().T

    def conditional_field(self, outcome):
        """(normalized field vector, population) for outcome 'e' or 'g'."""
        idx = {"e": 0, "g": 1}[outcome]
        block = self.blocks()[idx]
        population = float(np.sum(np.abs(block) ** 2))
        if population < 1e-12:
            return block.copy(), population
        return block / sqrt(population), population

    def tail_population(self):
        b = self.blocks()
        return float(np.abs(b[0, -1]) ** 2 + np.abs(b[1, -1]) ** 2)

    def expectation(self, op):
        return complex(np.vdot(self.amplitudes, op @ self.amplitudes))

    def mean_x(self):
        field_x = fock.x_quadrature(self.n_max + 1)
        b = self.blocks()
        val = sum(np.vdot(b[k], field_x @ b[k]) for k in range(2))
        return float(val.real)

    def mean_p(self):
        field_p = fock.p_quadrature(self.n_max + 1)
        b = self.blocks()
        val = sum(np.vdot(b[k], field_p @ b[k]) for k in range(2))
        return float(val.real)


def _qubit_op(m):
    return np.asarray(m, dtype=complex)


_EE = _qubit_op([[1.0, 0.0], [0.0, 0.0]])       # |e><e|
_GE = _qubit_op([[0.0, 0.0], [1.0, 0.0]])       # |g><e|


class InteractionHamiltonian:
    """Interaction-picture Hamiltonian of the full driven model.

    H(t) = (eps_2 cos(nu_2 t + phi_2) + delta)|e><e|
         + e^{-i mu sin(nu_1 t + phi_1)} (-lam e^{2 i nu_1 t} a^dag
                                          + Omega e^{i theta}) |g><e| + h.c.
         [+ eps_drive (a e^{i Delta t} + h.c.) for the linear potential]
    """

    def __init__(self, params, n_max):
        self.params = params
        self.n_max = n_max
        dim = n_max + 1
        eye = np.eye(dim, dtype=complex)
        a = fock.destroy(dim)
        self._proj_ee = np.kron(_EE, eye)
        self._lower_adag = np.kron(_GE, a.conj().T)
        self._lower_id = np.kron(_GE, eye)
        self._a_full = np.kron(np.eye(2, dtype=complex), a)

    def __call__(self, t):
        p = self.params
        diag = p.eps_2 * np.cos(p.nu_2 * t + p.phi_2) + p.delta
        mod = np.exp(-1.0j * p.mu * np.sin(p.nu_1 * t + p.phi_1))
        lower = mod * (
            -p.lam * np.exp(2.0j * p.nu_1 * t) * self._lower_adag
            + p.omega_drive * np.exp(1.0j * p.theta) * self._lower_id
        )
        h = diag * self._proj_ee + lower + lower.conj().T
        if p.eps_drive != 0.0:
            drive = p.eps_drive * np.exp(1.0j * p.drive_detuning * t) * self._a_full
            h = h + drive + drive.conj().T
        return h


def interaction_hamiltonian(t, params, n_max):
    """The full interaction-picture Hamiltonian matrix at time t."""
    return InteractionHamiltonian(params, n_max)(t)


def effective_hamiltonian(ep, theta, eps_drive, n_max):
    """Static sideband model -eta e^{-i theta} a^dag sigma_theta + h.c.
    + omega sigma_z, plus the optional linear potential sqrt(2)*eps*x.

    At theta = pi/2 this is the Dirac Hamiltonian on the quadratures.
    """
    dim = n_max + 1
    eye = np.eye(dim, dtype=complex)
    a = fock.destroy(dim)
    sigma_theta = _qubit_op(
        [[0.0, np.exp(-1.0j * theta)], [np.exp(1.0j * theta), 0.0]]
    )
    sigma_z = _qubit_op([[1.0, 0.0], [0.0, -1.0]])
    h = -ep.eta * np.exp(-1.0j * theta) * np.kron(sigma_theta, a.conj().T)
    h = h + h.conj().T
    h += ep.omega * np.kron(sigma_z, eye)
    if eps_drive != 0.0:
        h += eps_drive * np.kron(np.eye(2, dtype=complex), a + a.conj().T)
    return h


def prepare_initial(p0_displacement, qubit_rotation, n_max):
    """Initial joint state: rotated ground qubit, field displaced along p.

    qubit_rotation is None for the bare ground state or (axis, angle)
    with axis in {'x', 'y', 'z'} or a 3-vector.  The rotation is
    exp(+i*(angle/2)*(n.sigma)), so ('y', pi/2) maps |g> to the +x
    superposition used by the experiment.
    """
    if p0_displacement**2 >= (n_max + 1) / 4.0:
        raise TruncationError(
            f"displacement^2 = {p0_displacement**2:g} too large for "
            f"n_max = {n_max}"
        )
    from .dirac import SIGMA_X, SIGMA_Y, SIGMA_Z

    if qubit_rotation is None:
        qubit = np.array([0.0, 1.0], dtype=complex)
    else:
        axis, angle = qubit_rotation
        if isinstance(axis, str):
            n_vec = {"x": (1, 0, 0), "y": (0, 1, 0), "z": (0, 0, 1)}[axis]
        else:
            n_vec = np.asarray(axis, dtype=float)
            n_vec = n_vec / np.linalg.norm(n_vec)
        n_sigma = n_vec[0] * SIGMA_X + n_vec[1] * SIGMA_Y + n_vec[2] * SIGMA_Z
        u = np.cos(angle / 2.0) * np.eye(2) + 1.0j * np.sin(angle / 2.0) * n_sigma
        qubit = u @ np.array([0.0, 1.0], dtype=complex)

    alpha = 1.0j * p0_displacement / sqrt(2.0)
    field_amps = fock.coherent_state(alpha, n_max + 1)
    tail = abs(field_amps[-1]) ** 2
    if tail > 1e-4:
        raise TruncationError(f"coherent tail population {tail:.3e} > 1e-4")
    return QubitResonatorState(np.kron(qubit, field_amps), n_max)


def integrate(state0, hamiltonian, t_span, sample_times, rel_tol=1e-9):
    """Propagate i d|psi>/dt = H(t)|psi> with an adaptive Runge-Kutta.

    hamiltonian may be a constant matrix or a callable of t.  Returns one
    QubitResonatorState per requested sample time.  Raises StepFailure if
    the controller cannot hold the tolerance or if the norm drifts by
    more than 10*rel_tol; warns if the Fock-cutoff population exceeds
    1e-4 at any sample.
    """
    if not 1e-12 <= rel_tol <= 1e-4:
        raise ValueError("rel_tol must lie in [1e-12, 1e-4]")
    sample_times = np.asarray(sample_times, dtype=float)
    if np.any(np.diff(sample_times) < 0):
        raise ValueError("sample_times must be sorted")
    if sample_times.size and (
        sample_times[0] < t_span[0] - 1e-12 or sample_times[-1] > t_span[1] + 1e-12
    ):
        raise ValueError("sample_times must lie inside t_span")

    if callable(hamiltonian):
        h_fn = hamiltonian
    else:
        h_static = np.asarray(hamiltonian, dtype=complex)
        h_fn = lambda t: h_static

    def rhs(t, y):
        return -1.0j * (h_fn(t) @ y)

    sol = solve_ivp(
        rhs,
        t_span,
        state0.amplitudes,
        method="DOP853",
        t_eval=sample_times,
        rtol=rel_tol,
        atol=rel_tol * 1e-3,
        dense_output=False,
    )
    if not sol.success:
        raise StepFailure(f"integrator failed: {sol.message}")

    states = [QubitResonatorState(sol.y[:, k], state0.n_max)
              for k in range(sol.y.shape[1])]
    norm0 = state0.norm()
    worst_drift = max((abs(s.norm() - norm0) for s in states), default=0.0)
    if worst_drift > 10.0 * rel_tol:
        raise StepFailure(
            f"norm drift {worst_drift:.3e} exceeds 10*rel_tol; "
            "tighten rel_tol or enlarge n_max"
        )
    worst_tail = max((s.tail_population() for s in states), default=0.0)
    if worst_tail > 1e-4:
        warnings.warn(
            f"Fock-cutoff population reached {worst_tail:.3e}",
            TruncationWarning,
            stacklevel=2,
        )
    return states


def to_interaction_frame(state, ep, theta, t):
    """Undo the carrier rotation exp(i*K*sigma_theta*t) of the effective
    model, mapping its state back to the interaction picture where qubit
    populations are measured."""
    k = ep.carrier
    sigma_theta = _qubit_op(
        [[0.0, np.exp(-1.0j * theta)], [np.exp(1.0j * theta), 0.0]]
    )
    u = np.cos(k * t) * np.eye(2) - 1.0j * np.sin(k * t) * sigma_theta
    full = np.kron(u, np.eye(state.n_max + 1, dtype=complex))
    return QubitResonatorState(full @ state.amplitudes, state.n_max)


def frame_correction(rho_k, theta_k0, theta_k, t, t_f):
    """Phase-space rotation exp[-i(theta_k0 + theta_k t/t_f) a^dag a]
    applied to a conditioned field density matrix."""
    if t_f <= 0:
        raise ValueError("t_f must be positive")
    rho_k = np.asarray(rho_k, dtype=complex)
    n = np.arange(rho_k.shape[0])
    phases = np.exp(-1.0j * (theta_k0 + theta_k * t / t_f) * n)
    return phases[:, None] * rho_k * np.conj(phases)[None, :]


def frame_correction_vector(field_amps, theta_k0, theta_k, t, t_f):
    """Same rotation applied to a pure field vector."""
    if t_f <= 0:
        raise ValueError("t_f must be positive")
    n = np.arange(len(field_amps))
    return np.exp(-1.0j * (theta_k0 + theta_k * t / t_f) * n) * np.asarray(
        field_amps, dtype=complex
    )


@dataclass(frozen=True)
class OptimizedPhases:
    phi_1: float
    phi_2: float
    delta: float
    residual: float


def excited_population_trace(params, n_max, initial, times, rel_tol=1e-8):
    """P_e(t) of the full model at the given sample times."""
    h = InteractionHamiltonian(params, n_max)
    states = integrate(initial, h, (float(times[0]), float(times[-1])),
                       times, rel_tol=rel_tol)
    return np.array([s.qubit_populations()[0] for s in states])


def optimize_phases(params, reference_times, reference_pe, phi1_values,
                    phi2_values, delta_values, initial, n_max, rel_tol=1e-8):
    """Exhaustive grid search aligning the full model with a reference
    P_e(t) trace by the 2-norm.

    Ties break to the lexicographically smallest (phi_1, phi_2, delta).
    """
    reference_pe = np.asarray(reference_pe, dtype=float)
    best = None
    for phi1 in phi1_values:
        for phi2 in phi2_values:
            for delta in delta_values:
                candidate = replace(params, phi_1=phi1, phi_2=phi2, delta=delta)
                pe = excited_population_trace(
                    candidate, n_max, initial, reference_times, rel_tol=rel_tol
                )
                residual = float(np.linalg.norm(pe - reference_pe))
                if best is None or residual < best.residual:
                    best = OptimizedPhases(float(phi1), float(phi2),
                                           float(delta), residual)
    return best
