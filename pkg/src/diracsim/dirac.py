"""Exact momentum-space dynamics of a 1+1 dimensional Dirac particle.

The Hamiltonian is H(p) = c*sigma_y*p + m*c^2*sigma_z acting on a
two-component pseudospin, with hbar = 1 throughout.  Component 0 of the
spinor is the excited pseudospin level |e>, component 1 is |g>, so that
sigma_z|e> = +|e>.  Because H commutes with momentum, evolution is an
independent 2x2 rotation at every point of a uniform momentum grid, and
all observables are quadratures over that grid.
"""

from dataclasses import dataclass, field
from math import erfc, sqrt, pi
import warnings

import numpy as np

from .errors import EdgeLeakage, GridTooNarrow, NotProductState

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

KET_E = np.array([1.0, 0.0], dtype=complex)
KET_G = np.array([0.0, 1.0], dtype=complex)
KET_PLUS_X = np.array([1.0, 1.0], dtype=complex) / sqrt(2.0)
KET_MINUS_X = np.array([1.0, -1.0], dtype=complex) / sqrt(2.0)


@dataclass(frozen=True)
class DiracParams:
    """Effective light speed and rest mass, in natural units (hbar = 1).

    m = 0 is the legal massless case.
    """

    c: float = 1.0
    m: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.c) and self.c > 0):
            raise ValueError(f"c must be finite and positive, got {self.c}")
        if not (np.isfinite(self.m) and self.m >= 0):
            raise ValueError(f"m must be finite and nonnegative, got {self.m}")

    @property
    def mc(self):
        """Mass-momentum scale m*c."""
        return self.m * self.c

    @property
    def mc2(self):
        """Rest energy m*c^2."""
        return self.m * self.c * self.c


@dataclass(frozen=True)
class MomentumGrid:
    """Uniform momentum grid with values[k] = p_min + k*dp."""

    p_min: float
    p_max: float
    n_points: int
    values: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.p_min < self.p_max:
            raise ValueError("p_min must be below p_max")
        if self.n_points < 2:
            raise ValueError("n_points must be at least 2")
        object.__setattr__(
            self, "values", np.linspace(self.p_min, self.p_max, self.n_points)
        )

    @property
    def dp(self):
        return (self.p_max - self.p_min) / (self.n_points - 1)

    @classmethod
    def for_packet(cls, p0, delta_p, n_points=4096, n_sigma=8.0,
                   min_span=(-10.0, 10.0)):
        """Grid holding a Gaussian packet at p0 with spread delta_p.

        Spans p0 +- n_sigma*delta_p, widened to at least `min_span` so
        that the grid always covers the phase-space window of interest.
        """
        lo = min(p0 - n_sigma * delta_p, min_span[0])
        hi = max(p0 + n_sigma * delta_p, min_span[1])
        return cls(lo, hi, n_points)


@dataclass
class SpinorMomentumState:
    """Two-component wavefunction sampled on a momentum grid.

    amp_up is the |e> component, amp_down the |g> component.  The norm
    convention is sum_k (|up|^2 + |down|^2) * dp = 1.
    """

    grid: MomentumGrid
    amp_up: np.ndarray
    amp_down: np.ndarray

    def __post_init__(self):
        self.amp_up = np.asarray(self.amp_up, dtype=complex)
        self.amp_down = np.asarray(self.amp_down, dtype=complex)
        n = self.grid.n_points
        if self.amp_up.shape != (n,) or self.amp_down.shape != (n,):
            raise ValueError("amplitude arrays must match the grid length")

    def norm_squared(self):
        return float(
            np.sum(np.abs(self.amp_up) ** 2 + np.abs(self.amp_down) ** 2)
            * self.grid.dp
        )

    def normalized(self):
        n = sqrt(self.norm_squared())
        return SpinorMomentumState(self.grid, self.amp_up / n, self.amp_down / n)

    def spinors(self):
        """(n_points, 2) array of the per-momentum spinor components."""
        return np.stack([self.amp_up, self.amp_down], axis=1)


def gaussian_momentum_amplitude(p, p0, delta_p, x0=0.0):
    """Gaussian momentum wavefunction, |xi|^2 normal with std delta_p.

    The linear phase exp(-i*p*x0) places the packet at position x0.
    """
    xi = (delta_p * sqrt(2.0 * pi)) ** (-0.5) * np.exp(
        -((p - p0) ** 2) / (4.0 * delta_p**2)
    )
    return xi * np.exp(-1.0j * p * x0)


def gaussian_product_state(grid, p0, delta_p, x0=0.0, spinor=None):
    """Product state xi_p (x) |spinor| on the grid, renormalized.

    Defaults to the +x pseudospin superposition.
    """
    if spinor is None:
        spinor = KET_PLUS_X
    spinor = np.asarray(spinor, dtype=complex)
    spinor = spinor / np.linalg.norm(spinor)
    xi = gaussian_momentum_amplitude(grid.values, p0, delta_p, x0)
    state = SpinorMomentumState(grid, xi * spinor[0], xi * spinor[1])
    return state.normalized()


def _phase_angle(p, params):
    """Half the pseudospin rotation angle of the eigenbasis at momentum p.

    Continuous through p = 0 for m > 0; equals sign(p)*pi/4 for m = 0.
    """
    return 0.5 * np.arctan2(p, params.mc)


def dirac_matrix(p, params):
    """The 2x2 Hamiltonian at momentum p."""
    return params.c * SIGMA_Y * p + params.mc2 * SIGMA_Z


def eigensystem(p, params):
    """Eigensystem of the 2x2 Hamiltonian at momentum p.

    Returns
    -------
    (E_p, phi_p, v_plus, v_minus)
        Positive eigenvalue, mixing angle, and the +E/-E unit
        eigenvectors (cos phi, i sin phi) and (i sin phi, cos phi).
    """
    E = sqrt((p * params.c) ** 2 + params.mc2**2)
    phi = float(_phase_angle(p, params))
    c, s = np.cos(phi), np.sin(phi)
    v_plus = np.array([c, 1.0j * s], dtype=complex)
    v_minus = np.array([1.0j * s, c], dtype=complex)
    return E, phi, v_plus, v_minus


def evolve(state, t, params):
    """Propagate a spinor state for time t (negative t runs backward).

    Applies the exact per-momentum unitary
    U(p, t) = cos(E_p t) I - i sin(E_p t) H(p)/E_p,
    with the removable E_p = 0 point taken in the sinc limit.
    """
    p = state.grid.values
    E = np.sqrt((p * params.c) ** 2 + params.mc2**2)
    cos_t = np.cos(E * t)
    # sin(E t)/E -> t as E -> 0 (only at p = 0 for a massless particle)
    sin_over_E = np.where(E > 0.0, np.sin(E * t) / np.where(E > 0.0, E, 1.0), t)
    up, down = state.amp_up, state.amp_down
    h_up = params.mc2 * up - 1.0j * params.c * p * down
    h_down = 1.0j * params.c * p * up - params.mc2 * down
    return SpinorMomentumState(
        state.grid,
        cos_t * up - 1.0j * sin_over_E * h_up,
        cos_t * down - 1.0j * sin_over_E * h_down,
    )


def positive_branch_state(p0, delta_p, theta_p, grid, params):
    """Gaussian wavepacket built entirely from +E eigenstates.

    theta_p is the momentum phase profile: a callable of p, an array on
    the grid, or a scalar.  With theta_p = -E_p*t this is the
    time-evolved positive-branch state.
    """
    if delta_p <= 0:
        raise ValueError("delta_p must be positive")
    z_hi = (grid.p_max - p0) / (sqrt(2.0) * delta_p)
    z_lo = (p0 - grid.p_min) / (sqrt(2.0) * delta_p)
    mass_outside = 0.5 * erfc(z_hi) + 0.5 * erfc(z_lo)
    if mass_outside > 1e-6:
        raise GridTooNarrow(
            f"Gaussian mass outside the grid is {mass_outside:.3e} (> 1e-6)"
        )
    p = grid.values
    if callable(theta_p):
        theta = np.asarray(theta_p(p), dtype=float)
    else:
        theta = np.broadcast_to(np.asarray(theta_p, dtype=float), p.shape)
    xi = gaussian_momentum_amplitude(p, p0, delta_p)
    phi = _phase_angle(p, params)
    amp = np.exp(1.0j * theta) * xi
    state = SpinorMomentumState(grid, amp * np.cos(phi), amp * 1.0j * np.sin(phi))
    return state.normalized()


def _check_edges(state, bound=1e-6):
    edge = max(
        abs(state.amp_up[0]), abs(state.amp_up[-1]),
        abs(state.amp_down[0]), abs(state.amp_down[-1]),
    )
    if edge > bound:
        raise EdgeLeakage(
            f"boundary amplitude {edge:.3e} exceeds {bound:.1e}; "
            "widen the momentum grid"
        )


def mean_position_numeric(state):
    """<x> from the position operator x = i d/dp, by central differences.

    Serves as the independent oracle for the closed-form mean position.
    The imaginary residue of the quadrature is a numerical diagnostic
    and is warned about above 1e-6.
    """
    _check_edges(state)
    p = state.grid.values
    val = 0.0j
    for amp in (state.amp_up, state.amp_down):
        damp = np.gradient(amp, state.grid.dp)
        val += np.trapezoid(np.conj(amp) * 1.0j * damp, p)
    if abs(val.imag) > 1e-6:
        warnings.warn(
            f"imaginary residue {val.imag:.3e} in <x> quadrature",
            stacklevel=2,
        )
    return float(val.real)


def _extract_product_form(state, tol=1e-10):
    """Split a product state into (xi_k, spinor); raise if entangled."""
    rho = reduced_pseudospin(state)
    evals, evecs = np.linalg.eigh(rho)
    if evals[0] > tol:
        raise NotProductState(
            f"pseudospin varies with momentum (impurity {evals[0]:.3e})"
        )
    spinor = evecs[:, 1]
    xi = np.conj(spinor[0]) * state.amp_up + np.conj(spinor[1]) * state.amp_down
    return xi, spinor


def mean_position_analytic(initial, t, params):
    """Closed-form <x(t)> for an initial product state xi_p (x) |+x>.

    The trembling-motion term integrates |xi|^2 * x_p * (1 - cos 2E_p t)
    with x_p = (mc/2)/((mc)^2 + p^2); it vanishes identically for a
    massless particle.  The drift term uses the initial pseudospin
    velocity c*<sigma_y>, which is zero for the +x spinor (the positive
    and negative branches carry opposite group velocities with equal
    weight, so the packet centroid does not drift).
    """
    xi, spinor = _extract_product_form(initial, tol=1e-10)
    # The closed form below assumes the +x pseudospin; anything else is
    # outside its domain even if it is a legitimate product state.
    overlap = abs(np.vdot(KET_MINUS_X, spinor))
    if overlap > 1e-8:
        raise NotProductState(
            f"initial pseudospin deviates from |+x> (|<-x|s>| = {overlap:.3e})"
        )
    p = initial.grid.values
    dxi = np.gradient(xi, initial.grid.dp)
    x0 = float(np.real(np.trapezoid(np.conj(xi) * 1.0j * dxi, p)))
    v0 = params.c * float(np.real(np.conj(spinor) @ (SIGMA_Y @ spinor)))
    weight = np.abs(xi) ** 2
    if params.m == 0:
        zb = 0.0
    else:
        mc = params.mc
        x_p = (mc / 2.0) / (mc**2 + p**2)
        E = np.sqrt((p * params.c) ** 2 + params.mc2**2)
        zb = float(np.trapezoid(weight * x_p * (1.0 - np.cos(2.0 * E * t)), p))
    return x0 + v0 * t + zb


def reduced_pseudospin(state):
    """Reduced 2x2 pseudospin density matrix, rho_ij = sum_k a_i a_j^* dp."""
    dp = state.grid.dp
    up, down = state.amp_up, state.amp_down
    rho = np.array(
        [
            [np.sum(np.abs(up) ** 2), np.sum(up * np.conj(down))],
            [np.sum(down * np.conj(up)), np.sum(np.abs(down) ** 2)],
        ],
        dtype=complex,
    ) * dp
    return rho


def validate_density(rho, herm_tol=1e-12, trace_tol=1e-12, eig_tol=1e-10):
    """Check Hermiticity, unit trace and eigenvalue bounds of a 2x2 density."""
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > trace_tol or abs(np.trace(rho).imag) > trace_tol:
        raise ValueError("density matrix trace is not 1")
    evals = np.linalg.eigvalsh(rho)
    if evals.min() < -eig_tol or evals.max() > 1.0 + eig_tol:
        raise ValueError(f"eigenvalues {evals} out of [0, 1]")


def entanglement_entropy(rho):
    """Von Neumann entropy -tr(rho log2 rho), in bits."""
    evals = np.clip(np.linalg.eigvalsh(rho).real, 0.0, 1.0)
    nonzero = evals[evals > 0.0]
    return float(-np.sum(nonzero * np.log2(nonzero)))


def mean_energy(state, params):
    """<H> on the grid; conserved under `evolve`."""
    p = state.grid.values
    up, down = state.amp_up, state.amp_down
    h_up = params.mc2 * up - 1.0j * params.c * p * down
    h_down = 1.0j * params.c * p * up - params.mc2 * down
    val = np.sum(np.conj(up) * h_up + np.conj(down) * h_down) * state.grid.dp
    return float(val.real)
