"""Observables and infinite-temperature correlation functions.

``C_j(t) = 2^-L Tr[sz_j(t) sz_c]`` is evaluated either by brute force over all
``2^L`` product states or by quantum typicality with Haar-random states.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import eigh

from ..coupling import CouplingMatrix
from ..fields import CorrelationField
from .basis import SectorBasis
from .evolution import EvolutionEngine, Propagator, QuantumState
from .hamiltonian import SectorHamiltonian

BRUTE_FORCE_MAX_L = 14


def measure_sigma_z(state: QuantumState, basis: SectorBasis | None = None) -> np.ndarray:
    """Per-site ``<sz_j>`` of a sector state."""
    if basis is None:
        basis, amps = state.basis, state.amplitudes
    else:
        amps = np.asarray(state)
    p = np.abs(amps) ** 2
    return p @ basis.spins


def single_excitation_profile(matrix: CouplingMatrix, source: int, times) -> np.ndarray:
    """``P_j(t) = |exp(-i J t)_{j, source}|^2``, shape ``(len(times), L)``.

    In the one-magnon sector the Hamiltonian is the coupling matrix itself.
    """
    J = np.asarray(matrix, dtype=float)
    if not 0 <= source < J.shape[0]:
        raise ValueError(f"source site {source} outside the chain")
    E, V = eigh(J)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    amps = (V * np.exp(-1j * np.outer(times, E))[:, None, :]) @ V[source]
    return np.abs(amps) ** 2


def _center(L, center):
    c = L // 2 if center is None else int(center)
    if not 0 <= c < L:
        raise ValueError(f"center {c} outside the chain of length {L}")
    return c


def full_trace_correlation(matrix: CouplingMatrix, L: int, times, center: int | None = None,
                           max_L: int = BRUTE_FORCE_MAX_L) -> CorrelationField:
    """Exact ``C_j(t)`` summed over all ``2^L`` product states.

    Each magnetisation sector is diagonalised once; for a product state
    ``|c>`` the weight of ``|b>`` at time ``t`` is ``|<b|U(t)|c>|^2``.
    """
    J = np.asarray(matrix, dtype=float)
    if J.shape[0] != L:
        raise ValueError(f"matrix size {J.shape[0]} != L={L}")
    if L > max_L:
        raise ValueError(f"brute-force trace limited to L <= {max_L}, got L={L}")
    c = _center(L, center)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    C = np.zeros((times.size, L))
    for n_up in range(L + 1):
        basis = SectorBasis(L, n_up)
        S = basis.spins.astype(float)
        sc = S[:, c]
        if basis.dim == 1:
            C += S[0] * sc[0]
            continue
        E, V = eigh(SectorHamiltonian(J, basis).dense())
        for n, t in enumerate(times):
            if t == 0:
                C[n] += sc @ S
                continue
            re = (V * np.cos(E * t)) @ V.T
            im = (V * np.sin(E * t)) @ V.T
            P = re**2 + im**2
            C[n] += (P @ sc) @ S
    return CorrelationField(times, np.arange(L), C / 2.0**L, center=c)


def typicality_trace(matrix: CouplingMatrix, L: int, times, center: int | None = None,
                     R: int = 10, seed: int = 0,
                     engine: EvolutionEngine | None = None) -> CorrelationField:
    """Typicality estimate of ``C_j(t)`` from ``R`` Haar-random global states.

    For each random ``|psi>`` the estimator is
    ``Re <psi(t)| sz_j |phi(t)>`` with ``|phi> = sz_c |psi>``. The reported
    sigmas are the standard error over the ``R`` states.
    """
    J = np.asarray(matrix, dtype=float)
    if J.shape[0] != L:
        raise ValueError(f"matrix size {J.shape[0]} != L={L}")
    if R < 1:
        raise ValueError("R must be at least 1")
    engine = engine or EvolutionEngine()
    c = _center(L, center)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    sectors = []
    for n_up in range(L + 1):
        basis = SectorBasis(L, n_up)
        sectors.append((basis, Propagator(engine, SectorHamiltonian(J, basis))))
    samples = np.zeros((R, times.size, L))
    for r in range(R):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, r])))
        parts = [rng.standard_normal(b.dim) + 1j * rng.standard_normal(b.dim)
                 for b, _ in sectors]
        norm = np.sqrt(sum(np.vdot(z, z).real for z in parts))
        for (basis, prop), z in zip(sectors, parts):
            psi = z / norm
            S = basis.spins.astype(float)
            phi = psi * S[:, c]
            a = prop.trajectory(psi, times)
            b = prop.trajectory(phi, times)
            samples[r] += (a.conj() * b).real @ S
    mean = samples.mean(axis=0)
    sigma = samples.std(axis=0, ddof=1) / np.sqrt(R) if R > 1 else np.zeros_like(mean)
    return CorrelationField(times, np.arange(L), mean, sigma, center=c)
