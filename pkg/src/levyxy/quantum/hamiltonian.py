"""Action of ``H = sum_{i<j} J_ij (s+_i s-_j + s-_i s+_j)`` inside a sector."""
from __future__ import annotations

from math import comb

import numpy as np
import scipy.sparse as sp

from ..coupling import CouplingMatrix
from .basis import SectorBasis

# exchange lists are cached as a sparse matrix below this many stored entries
DEFAULT_CACHE_BUDGET = 20_000_000


def _pairs(J: np.ndarray):
    L = J.shape[0]
    for i in range(L):
        for j in range(i + 1, L):
            if J[i, j] != 0.0:
                yield i, j, J[i, j]


def _exchanges(basis: SectorBasis, i: int, j: int):
    """Source and destination indices of all states with opposite spins on i, j."""
    s = basis.states
    src = np.flatnonzero(((s >> i) ^ (s >> j)) & 1)
    dst = basis.index(s[src] ^ ((1 << i) | (1 << j)))
    return src, dst


def _check(matrix, basis, state=None):
    J = np.asarray(matrix, dtype=float)
    if J.shape != (basis.length, basis.length):
        raise ValueError(f"coupling matrix of size {J.shape[0]} does not match L={basis.length}")
    if state is not None and np.shape(state) != (basis.dim,):
        raise ValueError(f"state of length {np.shape(state)} does not match sector dim {basis.dim}")
    return J


def apply_hamiltonian(matrix: CouplingMatrix, basis: SectorBasis, state) -> np.ndarray:
    """Matrix-free ``H |psi>``.

    Every exchangeable pair ``(i, j)`` maps the states with opposite spins on
    ``i`` and ``j`` one-to-one onto each other, so each pair contributes one
    scatter without index collisions. Pairs are visited in a fixed order, which
    makes the result bit-reproducible.
    """
    J = _check(matrix, basis, state)
    psi = np.asarray(state)
    out = np.zeros(basis.dim, dtype=np.result_type(psi.dtype, float))
    if basis.n_up in (0, basis.length):
        return out
    for i, j, Jij in _pairs(J):
        src, dst = _exchanges(basis, i, j)
        out[dst] += Jij * psi[src]
    return out


class SectorHamiltonian:
    """Hamiltonian restricted to one sector, with an optional cached pattern.

    Below ``cache_budget`` nonzeros the exchange lists are assembled once into
    a CSR matrix; above it every product falls back to :func:`apply_hamiltonian`.
    """

    def __init__(self, matrix: CouplingMatrix, basis: SectorBasis,
                 cache_budget: int = DEFAULT_CACHE_BUDGET):
        self.J = _check(matrix, basis)
        self.basis = basis
        self.dim = basis.dim
        k = basis.n_up
        n_pairs = sum(1 for _ in _pairs(self.J))
        # each pair touches 2 C(L-2, k-1) states
        per_pair = 2 * comb(basis.length - 2, k - 1) if 0 < k < basis.length else 0
        self.nnz_estimate = n_pairs * per_pair
        self._csr = None
        if self.nnz_estimate <= cache_budget:
            self._csr = self._assemble()

    def _assemble(self) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        if 0 < self.basis.n_up < self.basis.length:
            for i, j, Jij in _pairs(self.J):
                src, dst = _exchanges(self.basis, i, j)
                rows.append(dst)
                cols.append(src)
                vals.append(np.full(src.size, Jij))
        if rows:
            rows, cols, vals = map(np.concatenate, (rows, cols, vals))
        else:
            rows = cols = np.zeros(0, dtype=np.int64)
            vals = np.zeros(0)
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.dim, self.dim))

    @property
    def cached(self) -> bool:
        return self._csr is not None

    def matvec(self, psi: np.ndarray) -> np.ndarray:
        if self._csr is not None:
            return self._csr @ psi
        return apply_hamiltonian(self.J, self.basis, psi)

    __call__ = matvec

    def dense(self) -> np.ndarray:
        if self._csr is not None:
            return self._csr.toarray()
        return self._assemble().toarray()
