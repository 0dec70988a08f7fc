"""Wigner quasiprobability computation from both state representations.

Two routes produce the same phase-space picture: a quadrature over the
momentum-space spinor (for continuum states) and a displaced-parity sum
over a truncated Fock density (for resonator states).  Both use the
convention W(x, p) with x = sqrt(2) Re(gamma), p = sqrt(2) Im(gamma), so
|W| <= 1/pi for a normalized state.
"""

import json
from dataclasses import dataclass, field
from math import pi

import numpy as np
from scipy.linalg import expm

from . import fock
from .errors import (
    EdgeLeakage,
    GridMismatch,
    NormalizationError,
    PadInsufficient,
    TruncationError,
    ZeroWeight,
)

WIGNER_BOUND = 1.0 / pi + 1e-6


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """Rectangular sampling lattice in (x, p)."""

    x_min: float
    x_max: float
    n_x: int
    p_min: float
    p_max: float
    n_p: int
    x_values: np.ndarray = field(init=False, repr=False, compare=False)
    p_values: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_x < 2 or self.n_p < 2:
            raise ValueError("grid needs at least 2 points per axis")
        if not (self.x_min < self.x_max and self.p_min < self.p_max):
            raise ValueError("grid axes must be strictly increasing")
        object.__setattr__(self, "x_values", np.linspace(self.x_min, self.x_max, self.n_x))
        object.__setattr__(self, "p_values", np.linspace(self.p_min, self.p_max, self.n_p))

    @property
    def dx(self):
        return (self.x_max - self.x_min) / (self.n_x - 1)

    @property
    def dp(self):
        return (self.p_max - self.p_min) / (self.n_p - 1)

    @property
    def cell_area(self):
        return self.dx * self.dp

    @classmethod
    def symmetric(cls, extent=4.5, n=121):
        """Square grid [-extent, extent]^2, n points per axis."""
        return cls(-extent, extent, n, -extent, extent, n)


@dataclass
class WignerGrid:
    """Sampled Wigner function with its integration weight.

    weight is the qubit-population weight of a conditional function and
    1 for an unconditional one.
    """

    grid: PhaseSpaceGrid
    values: np.ndarray
    weight: float = 1.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_x, self.grid.n_p):
            raise ValueError("values must have shape (n_x, n_p)")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("Wigner values must be finite")
        if np.max(np.abs(self.values)) > WIGNER_BOUND:
            raise ValueError(
                f"|W| = {np.max(np.abs(self.values)):.6f} exceeds the "
                f"Wigner bound 1/pi"
            )
        if not 0.0 <= self.weight <= 1.0 + 1e-9:
            raise ValueError(f"weight {self.weight} outside [0, 1]")

    def integral(self):
        return float(np.sum(self.values) * self.grid.cell_area)

    def check_normalization(self, tol=5e-3):
        err = abs(self.integral() - self.weight)
        if err > tol:
            raise NormalizationError(
                f"integral deviates from weight by {err:.3e} (> {tol:.1e}); "
                "the phase-space window may be clipping the state"
            )
        return err


@dataclass(frozen=True)
class ProjectionBasis:
    """Orthonormal pseudospin basis used for conditional Wigner functions."""

    b_plus: np.ndarray
    b_minus: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.b_plus, dtype=complex)
        bm = np.asarray(self.b_minus, dtype=complex)
        object.__setattr__(self, "b_plus", bp)
        object.__setattr__(self, "b_minus", bm)
        if bp.shape != (2,) or bm.shape != (2,):
            raise ValueError("basis vectors must be complex 2-vectors")
        if (
            abs(np.linalg.norm(bp) - 1.0) > 1e-12
            or abs(np.linalg.norm(bm) - 1.0) > 1e-12
            or abs(np.vdot(bp, bm)) > 1e-12
        ):
            raise ValueError("basis must be orthonormal to 1e-12")

    @classmethod
    def energy(cls):
        """The {|e>, |g>} basis used in the experiment."""
        return cls(np.array([1.0, 0.0]), np.array([0.0, 1.0]))

    @classmethod
    def transverse(cls):
        """The {|+x>, |-x>} basis."""
        s = 1.0 / np.sqrt(2.0)
        return cls(np.array([s, s]), np.array([s, -s]))


def _projected_wavefunction(state, b):
    b = np.asarray(b, dtype=complex)
    if abs(np.linalg.norm(b) - 1.0) > 1e-9:
        raise ValueError("projection vector must be unit norm")
    return np.conj(b[0]) * state.amp_up + np.conj(b[1]) * state.amp_down


def conditional_wigner(state, b, grid):
    """Wigner function of the wavepacket correlated with pseudospin |b>.

    Evaluates W_b(x, p) = (1/pi) int dv phi*(p+v) phi(p-v) e^{-2ivx} with
    phi = <b|state>, by a trapezoid quadrature in v over the momentum
    grid re-centered at zero.  phi is linearly interpolated at p +- v and
    taken as zero outside the grid.  The returned weight is the
    projection probability int dp |phi|^2.
    """
    phi = _projected_wavefunction(state, b)
    mg = state.grid
    edge = max(abs(phi[0]), abs(phi[-1]))
    total = np.max(np.abs(phi))
    if total > 0 and edge > 1e-6 * max(1.0, total):
        raise EdgeLeakage(
            f"projected wavefunction edge amplitude {edge:.3e}; "
            "widen the momentum grid"
        )
    weight = float(np.trapezoid(np.abs(phi) ** 2, mg.values))

    v = mg.values - 0.5 * (mg.p_min + mg.p_max)
    quad_w = np.full(v.size, mg.dp)
    quad_w[0] *= 0.5
    quad_w[-1] *= 0.5

    def interp(points):
        re = np.interp(points, mg.values, phi.real, left=0.0, right=0.0)
        im = np.interp(points, mg.values, phi.imag, left=0.0, right=0.0)
        return re + 1.0j * im

    p_grid = grid.p_values[:, None]
    corr = np.conj(interp(p_grid + v[None, :])) * interp(p_grid - v[None, :])
    corr *= quad_w[None, :]
    kernel = np.exp(-2.0j * np.outer(grid.x_values, v)) / pi
    values = np.real(kernel @ corr.T)
    return WignerGrid(grid, values, weight=min(weight, 1.0))


def unconditional_wigner(state, basis, grid):
    """Wigner function irrespective of the pseudospin (partial trace)."""
    w_plus = conditional_wigner(state, basis.b_plus, grid)
    w_minus = conditional_wigner(state, basis.b_minus, grid)
    return WignerGrid(grid, w_plus.values + w_minus.values, weight=1.0)


def _axis_factored_parity(rho_vectors, rho_weights, grid, dim):
    """Displaced-parity sums over a grid via per-axis displacement factors.

    D((x0 + i p0)/sqrt(2)) = phase * exp(i p0 x_op) exp(-i x0 p_op); the
    phase drops out of |.|^2.  Returns sum_k w_k sum_n (-1)^n
    |(D^dag v_k)_n|^2 for every grid point, shape (n_x, n_p).
    """
    x_op = fock.x_quadrature(dim)
    p_op = fock.p_quadrature(dim)
    signs = fock.parity_signs(dim)
    r = rho_vectors.shape[1]

    # s[p0] = exp(-i p0 x_op) V for every p-axis value
    s_blocks = np.empty((grid.n_p, dim, r), dtype=complex)
    for j, p0 in enumerate(grid.p_values):
        s_blocks[j] = expm(-1.0j * p0 * x_op) @ rho_vectors
    # rows of exp(+i x0 p_op) for every x-axis value
    a_blocks = np.empty((grid.n_x, dim, dim), dtype=complex)
    for i, x0 in enumerate(grid.x_values):
        a_blocks[i] = expm(1.0j * x0 * p_op)

    # v[i, j] = a_blocks[i] @ s_blocks[j]; contract as one big matmul
    left = a_blocks.reshape(grid.n_x * dim, dim)
    right = np.transpose(s_blocks, (1, 0, 2)).reshape(dim, grid.n_p * r)
    v = (left @ right).reshape(grid.n_x, dim, grid.n_p, r)
    probs = np.abs(v) ** 2
    return np.einsum("n,xnpk,k->xp", signs, probs, rho_weights)


def _direct_parity_value(rho_vectors, rho_weights, gamma, dim):
    """Single-point displaced-parity sum via the full matrix exponential."""
    d = fock.displacement(gamma, dim)
    v = d.conj().T @ rho_vectors
    probs = np.abs(v) ** 2
    return float(fock.parity_signs(dim) @ probs @ rho_weights)


def wigner_from_fock_density(rho_field, grid, pad=8, check_pad=True):
    """Wigner function of a truncated Fock-space density matrix.

    W(x, p) = (1/pi) sum_n (-1)^n <n|D(-gamma) rho D(gamma)|n> with
    gamma = (x + ip)/sqrt(2).  The displacement is realized by truncated
    matrix exponentials padded `pad` levels above the density dimension.
    """
    rho_field = np.asarray(rho_field, dtype=complex)
    n_levels = rho_field.shape[0]
    if rho_field.shape != (n_levels, n_levels):
        raise ValueError("rho_field must be square")
    if np.max(np.abs(rho_field - rho_field.conj().T)) > 1e-10:
        raise ValueError("rho_field must be Hermitian")
    tail = float(rho_field[-1, -1].real)
    if tail >= 1e-4:
        raise TruncationError(
            f"tail population {tail:.3e} at the Fock cutoff exceeds 1e-4"
        )

    evals, evecs = np.linalg.eigh(rho_field)
    keep = np.abs(evals) > 1e-14
    weights = evals[keep]
    vectors = evecs[:, keep]

    dim = n_levels + pad
    padded = np.zeros((dim, vectors.shape[1]), dtype=complex)
    padded[:n_levels] = vectors
    values = _axis_factored_parity(padded, weights, grid, dim) / pi

    if check_pad:
        xs = [grid.x_min, 0.5 * (grid.x_min + grid.x_max), grid.x_max]
        ps = [grid.p_min, 0.5 * (grid.p_min + grid.p_max), grid.p_max]
        bigger = np.zeros((dim + 8, vectors.shape[1]), dtype=complex)
        bigger[:n_levels] = vectors
        for x0 in xs:
            for p0 in ps:
                gamma = (x0 + 1.0j * p0) / np.sqrt(2.0)
                ref = _direct_parity_value(bigger, weights, gamma, dim + 8) / pi
                ix = int(np.argmin(np.abs(grid.x_values - x0)))
                ip = int(np.argmin(np.abs(grid.p_values - p0)))
                if abs(values[ix, ip] - ref) > 1e-6:
                    raise PadInsufficient(
                        f"value at (x={x0:g}, p={p0:g}) moves by "
                        f"{abs(values[ix, ip] - ref):.3e} when the pad grows "
                        f"by 8; increase pad (currently {pad})"
                    )

    weight = float(np.trace(rho_field).real)
    values = np.clip(values, -WIGNER_BOUND, WIGNER_BOUND)
    return WignerGrid(grid, values, weight=min(weight, 1.0))


def marginal_x(w):
    """Position probability density P(x) = int W(x, p) dp."""
    return np.sum(w.values, axis=1) * w.grid.dp


@dataclass(frozen=True)
class WignerMoments:
    mean_x: float
    mean_p: float
    min_value: float
    negative_volume: float


def moments(w):
    """Weight-normalized first moments plus negativity measures."""
    if w.weight < 1e-12:
        raise ZeroWeight("cannot normalize moments of a zero-weight grid")
    area = w.grid.cell_area
    mean_x = float(np.sum(w.grid.x_values[:, None] * w.values) * area / w.weight)
    mean_p = float(np.sum(w.grid.p_values[None, :] * w.values) * area / w.weight)
    min_value = float(np.min(w.values))
    negative_volume = float(np.sum(np.abs(np.minimum(w.values, 0.0))) * area)
    return WignerMoments(mean_x, mean_p, min_value, negative_volume)


@dataclass(frozen=True)
class HalfPlaneStats:
    mean_x: float
    mean_p: float
    weight: float
    distinct: bool


@dataclass(frozen=True)
class WavepacketSplit:
    pos: HalfPlaneStats
    neg: HalfPlaneStats


def discriminate_wavepackets(w, min_weight=0.05):
    """Per-half-plane moments using x = 0 as the packet boundary.

    Sides whose integrated weight falls below `min_weight` are flagged
    indistinct (overlapping packets cannot be separated); their moments
    are still reported when the weight is numerically nonzero.
    """
    area = w.grid.cell_area
    x = w.grid.x_values

    def side(mask):
        vals = w.values[mask, :]
        weight = float(np.sum(vals) * area)
        if abs(weight) < 1e-12:
            return HalfPlaneStats(float("nan"), float("nan"), weight, False)
        mean_x = float(np.sum(x[mask][:, None] * vals) * area / weight)
        mean_p = float(np.sum(w.grid.p_values[None, :] * vals) * area / weight)
        return HalfPlaneStats(mean_x, mean_p, weight, weight > min_weight)

    return WavepacketSplit(pos=side(x > 0.0), neg=side(x < 0.0))


def combine_conditional(w_e, w_g, p_e, p_g):
    """Population-weighted sum of two normalized conditional functions."""
    if w_e.grid != w_g.grid:
        raise GridMismatch("conditional functions live on different grids")
    if abs(p_e + p_g - 1.0) > 1e-6:
        raise ValueError(f"populations sum to {p_e + p_g}, not 1")
    return WignerGrid(w_e.grid, p_e * w_e.values + p_g * w_g.values, weight=1.0)


# ---------------------------------------------------------------------------
# serialization


def _fmt(x):
    return repr(float(x))


def write_csv(w, path, provenance=None):
    """CSV layout: header row carries the p axis, first column the x axis.

    Provenance and the weight ride in leading comment lines so the file
    round-trips through `read_csv`.
    """
    lines = []
    for key, val in sorted((provenance or {}).items()):
        lines.append(f"# {key}={val}")
    lines.append(f"# weight={_fmt(w.weight)}")
    lines.append("x\\p," + ",".join(_fmt(p) for p in w.grid.p_values))
    for i, x in enumerate(w.grid.x_values):
        lines.append(_fmt(x) + "," + ",".join(_fmt(v) for v in w.values[i]))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path):
    weight = 1.0
    rows = []
    p_values = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("weight="):
                    weight = float(body.split("=", 1)[1])
                continue
            cells = line.split(",")
            if p_values is None:
                p_values = np.array([float(c) for c in cells[1:]])
            else:
                rows.append([float(c) for c in cells])
    data = np.array(rows)
    x_values = data[:, 0]
    grid = PhaseSpaceGrid(
        x_values[0], x_values[-1], x_values.size,
        p_values[0], p_values[-1], p_values.size,
    )
    return WignerGrid(grid, data[:, 1:], weight=weight)


def write_json(w, path, provenance=None):
    doc = {
        "grid": {
            "x_min": w.grid.x_min, "x_max": w.grid.x_max, "n_x": w.grid.n_x,
            "p_min": w.grid.p_min, "p_max": w.grid.p_max, "n_p": w.grid.n_p,
        },
        "weight": w.weight,
        "values": [[float(v) for v in row] for row in w.values],
        "provenance": dict(provenance or {}),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        doc = json.load(fh)
    g = doc["grid"]
    grid = PhaseSpaceGrid(g["x_min"], g["x_max"], g["n_x"],
                          g["p_min"], g["p_max"], g["n_p"])
    return WignerGrid(grid, np.array(doc["values"]), weight=doc["weight"])
