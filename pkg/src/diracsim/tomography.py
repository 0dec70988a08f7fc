"""Measurement emulation and inversion: probe-qubit Rabi signals, photon
distribution fits, displaced-parity Wigner values, readout calibration,
conditional distributions and density-matrix reconstruction.
"""

import json
import warnings
from dataclasses import dataclass, field
from math import pi, sqrt

import numpy as np
from scipy.optimize import minimize_scalar, nnls

from . import fock
from .errors import (
    IllConditioned,
    NotConvergedWarning,
    PadInsufficient,
    ZeroPopulation,
)


@dataclass
class PhotonDistribution:
    """Photon-number populations P_n; nonnegative and summing to <= 1."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if np.min(probs) < -1e-9:
            raise ValueError(f"negative population {np.min(probs):.3e}")
        self.probs = np.clip(probs, 0.0, None)
        if self.probs.sum() > 1.0 + 1e-6:
            raise ValueError(f"populations sum to {self.probs.sum():.8f} > 1")

    @property
    def n_max(self):
        return self.probs.size - 1

    def mean(self):
        return float(np.arange(self.probs.size) @ self.probs)

    @classmethod
    def vacuum(cls, n_max):
        probs = np.zeros(n_max + 1)
        probs[0] = 1.0
        return cls(probs)

    @classmethod
    def coherent(cls, alpha, n_max):
        return cls(np.abs(fock.coherent_state(alpha, n_max + 1)) ** 2)

    def write_csv(self, path, provenance=None):
        lines = [f"# {k}={v}" for k, v in sorted((provenance or {}).items())]
        lines.append("n,prob")
        lines += [f"{n},{repr(float(p))}" for n, p in enumerate(self.probs)]
        with open(path, "w", newline="") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def read_csv(cls, path):
        probs = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#") or line.startswith("n,"):
                    continue
                probs.append(float(line.split(",")[1]))
        return cls(np.array(probs))


@dataclass
class RabiTrace:
    """Probe-qubit excited population versus interaction time.

    The empirical n-photon decay rate is kappa_n = n^l / T1_p.
    """

    taus: np.ndarray
    values: np.ndarray
    lambda_2: float
    T1_p: float
    l: int = 1
    P_g0: float = 1.0

    def __post_init__(self):
        self.taus = np.asarray(self.taus, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if np.any(np.diff(self.taus) <= 0):
            raise ValueError("taus must be strictly increasing")
        if self.values.min() < 0.0 or self.values.max() > 1.0:
            raise ValueError("trace values must lie in [0, 1]")

    def write_csv(self, path, provenance=None):
        lines = [f"# {k}={v}" for k, v in sorted((provenance or {}).items())]
        lines.append("tau_ns,value")
        lines += [
            f"{repr(float(t))},{repr(float(v))}"
            for t, v in zip(self.taus, self.values)
        ]
        with open(path, "w", newline="") as fh:
            fh.write("\n".join(lines) + "\n")


def _rabi_basis(taus, n_max, lambda_2, T1_p, l):
    """Basis functions f_n(tau) = e^{-kappa_n tau} cos(2 sqrt(n) lambda_2 tau)."""
    n = np.arange(n_max + 1, dtype=float)
    kappa = np.zeros_like(n) if np.isinf(T1_p) else n**l / T1_p
    taus = np.asarray(taus, dtype=float)
    return np.exp(-np.outer(taus, kappa)) * np.cos(
        2.0 * np.sqrt(n)[None, :] * lambda_2 * taus[:, None]
    )


def simulate_rabi(dist, lambda_2, T1_p, l, P_g0, taus):
    """Probe Rabi signal generated by a photon distribution.

    P_e(tau) = (1/2) [1 - P_g0 sum_n P_n e^{-kappa_n tau} cos(2 sqrt(n)
    lambda_2 tau)].
    """
    basis = _rabi_basis(taus, dist.n_max, lambda_2, T1_p, l)
    values = 0.5 * (1.0 - P_g0 * (basis @ dist.probs))
    return RabiTrace(np.asarray(taus, dtype=float), values, lambda_2, T1_p, l, P_g0)


def add_trace_noise(trace, sigma, rng):
    """Test fixture: additive Gaussian noise, clipped back into [0, 1]."""
    noisy = np.clip(trace.values + rng.normal(0.0, sigma, trace.values.size),
                    0.0, 1.0)
    return RabiTrace(trace.taus, noisy, trace.lambda_2, trace.T1_p,
                     trace.l, trace.P_g0)


_SLACK_WEIGHT = 1e6


def _nnls_with_budget(basis, target):
    """Nonnegative least squares with sum(P) <= 1, via a slack variable
    tied into a strongly weighted budget row."""
    rows, cols = basis.shape
    a = np.zeros((rows + 1, cols + 1))
    a[:rows, :cols] = basis
    a[rows, :] = _SLACK_WEIGHT
    b = np.concatenate([target, [_SLACK_WEIGHT]])
    solution, _ = nnls(a, b)
    probs = solution[:cols]
    residual = float(np.linalg.norm(basis @ probs - target))
    return probs, residual


def fit_photon_distribution(trace, n_max, fit_ground_offset=False,
                            return_residual=False):
    """Recover the photon distribution behind a Rabi trace.

    Inverts the cosine-decay model by nonnegative least squares with the
    total population constrained to at most 1.  lambda_2, T1_p and l are
    taken from the trace (fixed by independent characterization, never
    fitted).  With fit_ground_offset the initial probe ground population
    is optimized over [0.95, 1] instead of being trusted.
    """
    if trace.taus.size < 2 * (n_max + 1):
        raise ValueError(
            f"need at least {2 * (n_max + 1)} samples to fit n_max={n_max}"
        )
    basis = _rabi_basis(trace.taus, n_max, trace.lambda_2, trace.T1_p, trace.l)
    gram_cond = np.linalg.cond(basis.T @ basis)
    if gram_cond > 1e12:
        raise IllConditioned(
            f"basis Gram condition number {gram_cond:.3e} at n_max={n_max}",
            n_max=n_max, condition_number=gram_cond,
        )

    def solve(p_g0):
        target = (1.0 - 2.0 * trace.values) / p_g0
        return _nnls_with_budget(basis, target)

    if fit_ground_offset:
        result = minimize_scalar(
            lambda p: solve(p)[1], bounds=(0.95, 1.0), method="bounded",
            options={"xatol": 1e-6},
        )
        probs, residual = solve(float(result.x))
    else:
        probs, residual = solve(trace.P_g0)

    dist = PhotonDistribution(probs)
    if return_residual:
        return dist, residual
    return dist


def wigner_point(dist):
    """Wigner value (1/pi) sum_n (-1)^n P_n of a displaced distribution."""
    return float(fock.parity_signs(dist.probs.size) @ dist.probs) / pi


@dataclass(frozen=True)
class ReadoutCalibration:
    """Tensor-product readout confusion model for the two measured qubits.

    Each single-qubit matrix [[F_g, 1-F_e], [1-F_g, F_e]] maps true to
    measured populations in the (g, e) ordering; the joint vector is
    ordered (gg, ge, eg, ee).
    """

    q1: tuple
    q2: tuple

    def __post_init__(self):
        for name, (fg, fe) in (("q1", self.q1), ("q2", self.q2)):
            if not (0.5 < fg <= 1.0 and 0.5 < fe <= 1.0):
                raise ValueError(f"{name} fidelities must lie in (0.5, 1]")

    @staticmethod
    def _single(fg, fe):
        return np.array([[fg, 1.0 - fe], [1.0 - fg, fe]])

    @property
    def matrix(self):
        return np.kron(self._single(*self.q1), self._single(*self.q2))


@dataclass(frozen=True)
class CalibrationResult:
    raw: np.ndarray
    corrected: np.ndarray


def apply_calibration(measured, cal):
    """Invert the readout confusion matrix on a measured 4-vector.

    The raw inversion may carry small negative entries; the corrected
    vector clamps them to zero and renormalizes.  Both are returned.
    """
    measured = np.asarray(measured, dtype=float)
    if measured.shape != (4,):
        raise ValueError("measured must be a probability 4-vector")
    if measured.min() < 0.0 or abs(measured.sum() - 1.0) > 1e-6:
        raise ValueError("measured entries must be nonnegative and sum to 1")
    raw = np.linalg.solve(cal.matrix, measured)
    clamped = np.clip(raw, 0.0, None)
    corrected = clamped / clamped.sum()
    return CalibrationResult(raw=raw, corrected=corrected)


def conditional_distribution(joint, outcome, gamma, pad=8):
    """Displaced photon distribution conditioned on a test-qubit outcome.

    P_n^k(gamma) = <n, k|D(-gamma) rho D(gamma)|k, n> / P_k for a joint
    pure state or density matrix.  Returns (distribution, population);
    the distribution covers the padded Fock range so that it sums to 1.
    """
    if hasattr(joint, "conditional_field"):
        vec, population = joint.conditional_field(outcome)
        if population < 1e-12:
            raise ZeroPopulation(f"outcome {outcome!r} has no population")
        dim = vec.size + pad
        d = fock.displacement(gamma, dim)
        padded = np.zeros(dim, dtype=complex)
        padded[: vec.size] = vec
        probs = np.abs(d.conj().T @ padded) ** 2
    else:
        rho = np.asarray(joint, dtype=complex)
        n_levels = rho.shape[0] // 2
        idx = {"e": 0, "g": 1}[outcome]
        block = rho[idx * n_levels:(idx + 1) * n_levels,
                    idx * n_levels:(idx + 1) * n_levels]
        population = float(np.trace(block).real)
        if population < 1e-12:
            raise ZeroPopulation(f"outcome {outcome!r} has no population")
        dim = n_levels + pad
        padded = np.zeros((dim, dim), dtype=complex)
        padded[:n_levels, :n_levels] = block / population
        d = fock.displacement(gamma, dim)
        probs = np.real(np.diag(d.conj().T @ padded @ d))

    total = probs.sum()
    if abs(total - 1.0) > 1e-8:
        raise PadInsufficient(
            f"displaced distribution sums to {total:.10f}; increase pad "
            f"(currently {pad})"
        )
    return PhotonDistribution(np.clip(probs, 0.0, None)), population


@dataclass(frozen=True)
class DisplacedSample:
    gamma: complex
    distribution: PhotonDistribution
    populations: tuple  # (P_e, P_g)


@dataclass
class DisplacedSampleSet:
    """Displacement-indexed photon statistics feeding reconstruction."""

    samples: list

    def __post_init__(self):
        for s in self.samples:
            pe, pg = s.populations
            if abs(pe + pg - 1.0) > 1e-6:
                raise ValueError("qubit populations must sum to 1")

    def write_json(self, path, provenance=None):
        doc = {
            "provenance": dict(provenance or {}),
            "samples": [
                {
                    "gamma": {"re": s.gamma.real, "im": s.gamma.imag},
                    "probs": [float(p) for p in s.distribution.probs],
                    "populations": {"e": s.populations[0], "g": s.populations[1]},
                }
                for s in self.samples
            ],
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def read_json(cls, path):
        with open(path) as fh:
            doc = json.load(fh)
        samples = [
            DisplacedSample(
                gamma=complex(s["gamma"]["re"], s["gamma"]["im"]),
                distribution=PhotonDistribution(np.array(s["probs"])),
                populations=(s["populations"]["e"], s["populations"]["g"]),
            )
            for s in doc["samples"]
        ]
        return cls(samples)


def _project_density(rho):
    """Nearest density matrix: clamp eigenvalues, renormalize the trace."""
    rho = 0.5 * (rho + rho.conj().T)
    evals, evecs = np.linalg.eigh(rho)
    evals = np.clip(evals, 0.0, None)
    total = evals.sum()
    if total <= 0.0:
        dim = rho.shape[0]
        return np.eye(dim, dtype=complex) / dim
    return (evecs * (evals / total)) @ evecs.conj().T


@dataclass(frozen=True)
class ReconstructionInfo:
    converged: bool
    iterations: int
    objective: float
    step_norm: float


def reconstruct_density(samples, n_max, pad=8, max_iters=5000, grad_tol=1e-8,
                        return_info=False):
    """Constrained least-squares density matrix from displaced photon
    statistics.

    Minimizes sum_j sum_n (<n|D(-gamma_j) rho D(gamma_j)|n> - P_n^(j))^2
    over rho >= 0 with tr(rho) = 1, by projected gradient descent with a
    Lipschitz step (projection: eigenvalue clamping plus trace
    renormalization).  Warns and returns the best iterate if the
    iteration cap is reached.
    """
    dim = n_max + 1
    point_count = sum(s.distribution.probs.size for s in samples.samples)
    if point_count < dim * dim:
        raise ValueError(
            f"{point_count} data points cannot determine a {dim}x{dim} "
            "density matrix"
        )

    # d-blocks: rows limited to the reconstruction space, columns over the
    # measured photon numbers
    blocks = []
    targets = []
    for s in samples.samples:
        n_meas = s.distribution.probs.size
        d = fock.displacement(s.gamma, max(dim, n_meas) + pad)
        blocks.append(d[:dim, :n_meas])
        targets.append(s.distribution.probs)

    def predict(rho):
        return [np.einsum("mn,mk,kn->n", np.conj(b), rho, b).real
                for b in blocks]

    def gradient(rho):
        g = np.zeros((dim, dim), dtype=complex)
        obj = 0.0
        for b, target, pred in zip(blocks, targets, predict(rho)):
            r = pred - target
            obj += float(r @ r)
            g += 2.0 * (b * r[None, :]) @ b.conj().T
        return g, obj

    # Lipschitz constant of the gradient via power iteration on the
    # normal operator X -> sum tr(M X) M
    x = np.eye(dim, dtype=complex) / dim
    lam = 1.0
    for _ in range(30):
        y = np.zeros((dim, dim), dtype=complex)
        for b in blocks:
            coeff = np.einsum("mn,mk,kn->n", np.conj(b), x, b)
            y += (b * coeff[None, :]) @ b.conj().T
        lam = float(np.linalg.norm(y))
        if lam == 0.0:
            lam = 1.0
            break
        x = y / lam
    step = 1.0 / (2.0 * lam)

    rho = np.eye(dim, dtype=complex) / dim
    info = ReconstructionInfo(False, max_iters, np.inf, np.inf)
    for it in range(max_iters):
        g, obj = gradient(rho)
        nxt = _project_density(rho - step * g)
        step_norm = float(np.linalg.norm(nxt - rho))
        rho = nxt
        if step_norm / step <= grad_tol:
            info = ReconstructionInfo(True, it + 1, obj, step_norm)
            break
    else:
        g, obj = gradient(rho)
        info = ReconstructionInfo(False, max_iters, obj, step_norm)
        warnings.warn(
            f"projected gradient hit {max_iters} iterations "
            f"(objective {obj:.3e})",
            NotConvergedWarning,
            stacklevel=2,
        )
    if return_info:
        return rho, info
    return rho


def fidelity(rho, sigma):
    """Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2."""
    evals, evecs = np.linalg.eigh(np.asarray(rho, dtype=complex))
    sqrt_rho = (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.conj().T
    inner = sqrt_rho @ np.asarray(sigma, dtype=complex) @ sqrt_rho
    inner_evals = np.linalg.eigvalsh(inner)
    return float(np.sum(np.sqrt(np.clip(inner_evals, 0.0, None))) ** 2)
