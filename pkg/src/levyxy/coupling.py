"""Spin-spin coupling matrices for the long-range XY chain.

Two constructions are provided: the ideal power law ``J / |i - j|**alpha``
and the trapped-ion formula in which the couplings are mediated by the
transverse normal modes of a linear Coulomb crystal,

    J_ij = (Omega_i Omega_j / 2) * sum_m eta_im eta_jm / Delta_m .

All angular quantities are in rad/s, trap frequencies in Hz.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * np.pi
DEFAULT_RESONANCE_FLOOR = TWO_PI * 1.0e3  # rad/s


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""


class ResonanceError(ValueError):
    """The drive is too close to a motional mode for the perturbative formula."""


@dataclass(frozen=True)
class CouplingMatrix:
    """Symmetric coupling matrix ``J_ij`` (rad/s) with zero diagonal."""

    entries: np.ndarray
    nominal_J: float | None = None
    nominal_alpha: float | None = None

    def __post_init__(self):
        J = np.array(self.entries, dtype=float)
        if J.ndim != 2 or J.shape[0] != J.shape[1]:
            raise ValueError(f"coupling matrix must be square, got shape {J.shape}")
        if J.shape[0] < 2:
            raise ValueError("coupling matrix needs at least two sites")
        if not np.all(np.isfinite(J)):
            raise ValueError("coupling matrix has non-finite entries")
        if not np.array_equal(J, J.T):
            raise ValueError("coupling matrix is not symmetric")
        if np.any(np.diag(J) != 0.0):
            raise ValueError("coupling matrix must have zero diagonal")
        J.setflags(write=False)
        object.__setattr__(self, "entries", J)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def build_power_law(L: int, J: float, alpha: float) -> CouplingMatrix:
    """Ideal power-law couplings ``J / |i - j|**alpha``."""
    if int(L) != L or L < 2:
        raise ValueError(f"L must be an integer >= 2, got {L}")
    if not J > 0 or not alpha > 0:
        raise ValueError(f"J and alpha must be positive, got J={J}, alpha={alpha}")
    d = np.abs(np.subtract.outer(np.arange(L), np.arange(L))).astype(float)
    off = d > 0
    entries = np.zeros((L, L))
    entries[off] = J / d[off] ** alpha
    return CouplingMatrix(entries, nominal_J=float(J), nominal_alpha=float(alpha))


@dataclass(frozen=True)
class IonChainSpec:
    """Trap and drive parameters of an ion chain.

    ``radial_frequencies`` are the two transverse trap frequencies in Hz; the
    bichromatic drive is detuned by ``beatnote_detuning_from_com`` (Hz) from
    the highest transverse centre-of-mass mode. ``rabi_frequencies`` is one
    value per ion in rad/s (a scalar is broadcast). ``lamb_dicke_scale`` is
    the Lamb-Dicke factor of the centre-of-mass mode; other modes are scaled
    by ``sqrt(omega_com / omega_m)``.
    """

    ion_count: int
    axial_frequency: float
    radial_frequencies: tuple[float, float]
    rabi_frequencies: np.ndarray | float
    beatnote_detuning_from_com: float
    lamb_dicke_scale: float = 0.05
    resonance_floor: float = DEFAULT_RESONANCE_FLOOR

    def __post_init__(self):
        if int(self.ion_count) != self.ion_count or self.ion_count < 2:
            raise ValueError(f"ion_count must be an integer >= 2, got {self.ion_count}")
        freqs = (self.axial_frequency, *self.radial_frequencies)
        if len(self.radial_frequencies) != 2 or min(freqs) <= 0:
            raise ValueError("trap frequencies must be positive, two radial values")
        omega = np.broadcast_to(np.asarray(self.rabi_frequencies, dtype=float),
                                (self.ion_count,)).copy()
        object.__setattr__(self, "rabi_frequencies", omega)
        if self.lamb_dicke_scale <= 0:
            raise ValueError("lamb_dicke_scale must be positive")


def _coulomb_gradient_hessian(u):
    d = np.subtract.outer(u, u)
    np.fill_diagonal(d, 1.0)
    inv2 = np.sign(d) / d**2
    inv3 = 1.0 / np.abs(d) ** 3
    np.fill_diagonal(inv2, 0.0)
    np.fill_diagonal(inv3, 0.0)
    grad = u - inv2.sum(axis=1)
    hess = -2.0 * inv3
    np.fill_diagonal(hess, 1.0 + 2.0 * inv3.sum(axis=1))
    return grad, hess


def compute_equilibrium_positions(spec: IonChainSpec | int, tol: float = 1e-12,
                                  max_iter: int = 200) -> np.ndarray:
    """Equilibrium positions in units of ``(e^2 / 4 pi eps0 m omega_z^2)^(1/3)``.

    Minimises ``sum u_i^2 / 2 + sum_{i<j} 1 / |u_i - u_j|`` by damped Newton
    iteration starting from an evenly spaced chain.
    """
    n = spec if isinstance(spec, (int, np.integer)) else spec.ion_count
    if n < 2:
        raise ValueError("need at least two ions")
    # roughly the right extent so the first Newton steps are small
    half = 1.0 * n ** (1 / 3) * np.log(n + 1) ** (1 / 3)
    u = np.linspace(-half, half, n)

    def energy(x):
        d = np.abs(np.subtract.outer(x, x))[np.triu_indices(n, 1)]
        if np.any(d == 0):
            return np.inf
        return 0.5 * x @ x + np.sum(1.0 / d)

    for _ in range(max_iter):
        grad, hess = _coulomb_gradient_hessian(u)
        gnorm = np.linalg.norm(grad)
        if gnorm < tol:
            return np.sort(u)
        step = np.linalg.solve(hess, grad)
        e0, s = energy(u), 1.0
        while s > 1e-12:
            trial = u - s * step
            if np.all(np.diff(trial) > 0) and energy(trial) <= e0 + 1e-14 * abs(e0):
                break
            s *= 0.5
        u = trial
    grad, _ = _coulomb_gradient_hessian(u)
    if np.linalg.norm(grad) < tol:
        return np.sort(u)
    raise ConvergenceError(
        f"equilibrium search stalled at gradient norm {np.linalg.norm(grad):.3e}")


def compute_transverse_modes(spec: IonChainSpec, positions=None):
    """Transverse normal modes of the chain.

    Returns
    -------
    mode_frequencies : ndarray, shape (2N,)
        Mode frequencies in Hz, first the N modes of the first radial
        direction, then the N of the second; each block sorted descending so
        the centre-of-mass mode comes first.
    mode_vectors : ndarray, shape (N, 2N)
        Column ``m`` is the orthonormal participation vector of mode ``m``.
    """
    if positions is None:
        positions = compute_equilibrium_positions(spec)
    u = np.asarray(positions, dtype=float)
    n = u.size
    d = np.abs(np.subtract.outer(u, u))
    np.fill_diagonal(d, np.inf)
    inv3 = 1.0 / d**3
    freqs, vecs = [], []
    for w_r in spec.radial_frequencies:
        # Hessian in units of m * omega_z^2
        k = inv3.copy()
        np.fill_diagonal(k, (w_r / spec.axial_frequency) ** 2 - inv3.sum(axis=1))
        ev, vv = np.linalg.eigh(k)
        if ev[0] <= 0:
            raise ValueError(
                f"transverse Hessian not positive definite (min eigenvalue {ev[0]:.3e}); "
                "radial confinement too weak, chain is past the zigzag transition")
        order = np.argsort(ev)[::-1]
        ev, vv = ev[order], vv[:, order]
        # fix the sign convention: largest component positive
        signs = np.sign(vv[np.argmax(np.abs(vv), axis=0), np.arange(n)])
        freqs.append(spec.axial_frequency * np.sqrt(ev))
        vecs.append(vv * signs)
    return np.concatenate(freqs), np.hstack(vecs)


def build_ion_chain_matrix(spec: IonChainSpec) -> CouplingMatrix:
    """Mode-mediated couplings ``(Omega_i Omega_j / 2) sum_m eta_im eta_jm / Delta_m``."""
    positions = compute_equilibrium_positions(spec)
    freqs, vecs = compute_transverse_modes(spec, positions)
    n = spec.ion_count
    com = max(spec.radial_frequencies)
    drive = com + spec.beatnote_detuning_from_com
    delta = TWO_PI * (drive - freqs)
    if np.any(np.abs(delta) < spec.resonance_floor):
        m = int(np.argmin(np.abs(delta)))
        raise ResonanceError(
            f"mode {m} at {freqs[m]:.1f} Hz is detuned by only "
            f"{delta[m] / TWO_PI:.1f} Hz (floor {spec.resonance_floor / TWO_PI:.1f} Hz)")
    # Lamb-Dicke factors, each direction referenced to its own COM frequency
    com_of_mode = np.repeat(np.asarray(spec.radial_frequencies, dtype=float), n)
    eta = vecs * (spec.lamb_dicke_scale / np.sqrt(freqs / com_of_mode))
    omega = spec.rabi_frequencies
    J = 0.5 * np.outer(omega, omega) * ((eta / delta) @ eta.T)
    np.fill_diagonal(J, 0.0)
    J = 0.5 * (J + J.T)
    return CouplingMatrix(J)


@dataclass(frozen=True)
class PowerLawFit:
    J: float
    alpha: float
    rms_log_residual: float

    def __iter__(self):
        return iter((self.J, self.alpha, self.rms_log_residual))


def fit_power_law(matrix: CouplingMatrix | np.ndarray) -> PowerLawFit:
    """Least-squares fit of ``log J_ij = log J - alpha log|i-j|`` over i < j."""
    J = np.asarray(matrix, dtype=float)
    i, j = np.triu_indices(J.shape[0], 1)
    vals = J[i, j]
    if np.any(vals <= 0):
        raise ValueError("power-law fit needs strictly positive off-diagonal couplings")
    x = np.log(np.abs(i - j).astype(float))
    y = np.log(vals)
    A = np.column_stack([np.ones_like(x), -x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return PowerLawFit(float(np.exp(coef[0])), float(coef[1]),
                       float(np.sqrt(np.mean(resid**2))))


def save_matrix_csv(matrix: CouplingMatrix, path) -> None:
    J = np.asarray(matrix)
    lines = [f"# L={J.shape[0]}"]
    lines += [",".join(repr(float(v)) for v in row) for row in J]
    Path(path).write_text("\n".join(lines) + "\n")


def load_matrix_csv(path, tol: float = 1e-9) -> CouplingMatrix:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("# L="):
        raise ValueError(f"{path}: missing '# L=<n>' header")
    L = int(text[0][4:].strip())
    rows = [line for line in text[1:] if line.strip()]
    J = np.array([[float(v) for v in row.split(",")] for row in rows])
    if J.shape != (L, L):
        raise ValueError(f"{path}: header says L={L} but found shape {J.shape}")
    if np.max(np.abs(J - J.T)) > tol:
        raise ValueError(f"{path}: matrix not symmetric within {tol}")
    J = 0.5 * (J + J.T)
    np.fill_diagonal(J, 0.0)
    return CouplingMatrix(J)
