"""Time evolution ``exp(-i H t) |psi>`` inside a magnetisation sector."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from ..coupling import CouplingMatrix
from .basis import SectorBasis
from .hamiltonian import SectorHamiltonian

METHODS = ("dense-eigen", "krylov")
DEFAULT_DENSE_CAP = 20_000


class KrylovConvergenceError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (achieved residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class EvolutionEngine:
    """Propagation settings.

    ``step_tolerance`` bounds the vector-norm error of one :func:`evolve`
    call; the Krylov integrator spreads it over its substeps in proportion to
    their length.
    """

    method: str = "krylov"
    krylov_dim: int = 30
    step_tolerance: float = 1e-10
    dense_cap: int = DEFAULT_DENSE_CAP

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}, expected one of {METHODS}")
        if self.krylov_dim < 2:
            raise ValueError("krylov_dim must be at least 2")
        if not self.step_tolerance > 0:
            raise ValueError("step_tolerance must be positive")

    def allows(self, dim: int) -> bool:
        return self.method != "dense-eigen" or dim <= self.dense_cap


@dataclass
class QuantumState:
    basis: SectorBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.basis.dim,):
            raise ValueError("amplitudes do not match the basis dimension")

    @classmethod
    def product(cls, basis: SectorBasis, config: int) -> QuantumState:
        return cls(basis, basis.basis_vector(config))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)


class Propagator:
    """Reusable propagator for one sector Hamiltonian."""

    def __init__(self, engine: EvolutionEngine, hamiltonian: SectorHamiltonian):
        self.engine = engine
        self.hamiltonian = hamiltonian
        if not engine.allows(hamiltonian.dim):
            raise ValueError(
                f"sector dimension {hamiltonian.dim} exceeds the dense-eigen cap "
                f"{engine.dense_cap}; use the krylov method")
        self._eig = None

    @property
    def eigensystem(self):
        if self._eig is None:
            self._eig = np.linalg.eigh(self.hamiltonian.dense())
        return self._eig

    def trajectory(self, psi, times) -> np.ndarray:
        """States at each of ``times`` (any order), shape ``(len(times), dim)``."""
        times = np.asarray(times, dtype=float)
        if np.any(times < 0):
            raise ValueError("times must be non-negative")
        psi = np.asarray(psi, dtype=complex)
        out = np.empty((times.size, psi.size), dtype=complex)
        if self.engine.method == "dense-eigen":
            E, V = self.eigensystem
            coef = V.T @ psi
            for n, t in enumerate(times):
                out[n] = psi if t == 0 else V @ (np.exp(-1j * E * t) * coef)
            return out
        order = np.argsort(times, kind="stable")
        horizon = times[order[-1]] if times.size else 0.0
        cur, t_cur = psi, 0.0
        for n in order:
            t = times[n]
            if t > t_cur:
                cur = self._krylov(cur, t - t_cur, horizon)
                t_cur = t
            out[n] = cur
        return out

    def evolve(self, psi, t: float) -> np.ndarray:
        return self.trajectory(psi, [t])[0]

    def sigma_z_block(self, psis, times) -> np.ndarray:
        """``<sz_j(t)>`` for a block of initial states, shape ``(k, T, L)``."""
        psis = np.atleast_2d(np.asarray(psis, dtype=complex))
        times = np.atleast_1d(np.asarray(times, dtype=float))
        spins = self.hamiltonian.basis.spins.astype(float)
        out = np.empty((psis.shape[0], times.size, spins.shape[1]))
        if self.engine.method == "dense-eigen":
            E, V = self.eigensystem
            coef = psis @ V
            for n, t in enumerate(times):
                amps = psis if t == 0 else (coef * np.exp(-1j * E * t)) @ V.T
                out[:, n] = (amps.real**2 + amps.imag**2) @ spins
            return out
        for k, psi in enumerate(psis):
            amps = self.trajectory(psi, times)
            out[k] = (amps.real**2 + amps.imag**2) @ spins
        return out

    def _krylov(self, psi, span, horizon):
        m_max = min(self.engine.krylov_dim, self.hamiltonian.dim)
        tol = self.engine.step_tolerance
        done = 0.0
        while done < span:
            remaining = span - done
            lz = _Lanczos(self.hamiltonian.matvec, psi, m_max)
            # grow the subspace until the whole remaining interval is accurate
            for _ in lz:
                c, err = lz.propagate(remaining)
                if err <= tol * remaining / horizon:
                    break
            dt = remaining
            while err > tol * dt / horizon:
                dt *= 0.5
                if dt < 1e-15 * max(horizon, 1.0):
                    raise KrylovConvergenceError(
                        f"Krylov step size underflow at t={done:.6g}", err)
                c, err = lz.propagate(dt)
            psi = lz.beta0 * (c @ lz.V[: c.size])
            done += dt
        return psi


class _Lanczos:
    """Lanczos recursion with full reorthogonalisation, grown on demand.

    Iterating extends the subspace and yields its dimension (every second
    vector, and at the end).
    """

    def __init__(self, matvec, psi, m_max):
        self.matvec = matvec
        self.m_max = m_max
        self.beta0 = np.linalg.norm(psi)
        self.V = np.empty((m_max + 1, psi.size), dtype=complex)
        self.V[0] = psi / self.beta0
        self.a, self.b = [], []

    def __iter__(self):
        V = self.V
        for k in range(self.m_max):
            w = self.matvec(V[k])
            a = np.vdot(V[k], w).real
            w = w - a * V[k]
            if k > 0:
                w -= self.b[k - 1] * V[k - 1]
            w -= V[: k + 1].T @ (V[: k + 1].conj() @ w)
            b = np.linalg.norm(w)
            self.a.append(a)
            # invariant subspace reached: the projected exponential is exact
            if b < 1e-12 * max(1.0, abs(a)):
                self.b.append(0.0)
                yield k + 1
                return
            self.b.append(b)
            V[k + 1] = w / b
            if (k + 1) % 2 == 0 or k + 1 == self.m_max:
                yield k + 1

    def propagate(self, dt):
        """Projected ``exp(-i T dt) e1`` and its a-posteriori error estimate."""
        m = len(self.a)
        a = np.asarray(self.a)
        if m > 1:
            theta, Q = eigh_tridiagonal(a, np.asarray(self.b[: m - 1]))
        else:
            theta, Q = a, np.ones((1, 1))
        c = Q @ (np.exp(-1j * theta * dt) * Q[0])
        err = self.beta0 * self.b[m - 1] * abs(c[-1])
        return c, err


def evolve(engine: EvolutionEngine, matrix: CouplingMatrix, basis: SectorBasis,
           state, t: float) -> QuantumState:
    """``exp(-i H t) |state>`` for a single time ``t >= 0``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    psi = np.asarray(state, dtype=complex)
    prop = Propagator(engine, SectorHamiltonian(matrix, basis))
    return QuantumState(basis, prop.evolve(psi, t))
