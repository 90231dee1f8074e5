"""Fixed-magnetisation sector bases.

Bit ``i`` of a configuration word is the spin on site ``i`` (1 = up). Within a
sector the configurations are listed in ascending numeric order, which for a
fixed number of set bits is the colexicographic order; the position of a word
is therefore its combinadic rank ``sum_k C(p_k, k)`` over its set-bit
positions ``p_1 < p_2 < ...``. Ranks are evaluated with two lookup tables
split at the middle bit so that indexing stays vectorised.
"""
from __future__ import annotations

from functools import cached_property
from math import comb

import numpy as np

MAX_SITES = 34


def _sector_states(L: int, n_up: int) -> np.ndarray:
    # rows[k] holds the sorted words of the current prefix length with k bits set
    rows = {0: np.zeros(1, dtype=np.int64)}
    for l in range(1, L + 1):
        lo, hi = max(0, n_up - (L - l)), min(l, n_up)
        new = {}
        for k in range(lo, hi + 1):
            parts = []
            if k in rows:
                parts.append(rows[k])
            if k - 1 in rows:
                parts.append(rows[k - 1] | np.int64(1 << (l - 1)))
            new[k] = np.concatenate(parts) if len(parts) > 1 else parts[0]
        rows = new
    return rows[n_up]


class SectorBasis:
    """All ``L``-site configurations with exactly ``n_up`` up spins."""

    def __init__(self, L: int, n_up: int):
        if not (1 <= L <= MAX_SITES):
            raise ValueError(f"L must be in [1, {MAX_SITES}], got {L}")
        if not (0 <= n_up <= L):
            raise ValueError(f"n_up must be in [0, L], got {n_up}")
        self.length = int(L)
        self.n_up = int(n_up)
        self.states = _sector_states(self.length, self.n_up)
        self.states.setflags(write=False)
        self._build_rank_tables()

    def __len__(self):
        return self.states.size

    @property
    def dim(self) -> int:
        return self.states.size

    @property
    def magnetization(self) -> int:
        return 2 * self.n_up - self.length

    def _build_rank_tables(self):
        L = self.length
        h = L // 2
        self._h = h
        # binom[p, k] = C(p, k)
        binom = np.array([[comb(p, k) for k in range(L + 2)] for p in range(L + 1)],
                         dtype=np.int64)
        lo_words = np.arange(1 << h, dtype=np.int64)
        lo_rank = np.zeros(lo_words.size, dtype=np.int64)
        lo_count = np.zeros(lo_words.size, dtype=np.int64)
        for p in range(h):
            bit = (lo_words >> p) & 1
            lo_count += bit
            lo_rank += bit * binom[p, lo_count]
        hi_words = np.arange(1 << (L - h), dtype=np.int64)
        hi_rank = np.zeros((hi_words.size, h + 1), dtype=np.int64)
        for m in range(h + 1):
            count = np.full(hi_words.size, m, dtype=np.int64)
            for q in range(L - h):
                bit = (hi_words >> q) & 1
                count += bit
                hi_rank[:, m] += bit * binom[q + h, np.minimum(count, L + 1)]
        self._lo_rank, self._lo_count, self._hi_rank = lo_rank, lo_count, hi_rank

    def index(self, configs) -> np.ndarray:
        """Positions of ``configs`` in :attr:`states` (configs must be in the sector)."""
        c = np.asarray(configs, dtype=np.int64)
        lo = c & ((1 << self._h) - 1)
        return self._lo_rank[lo] + self._hi_rank[c >> self._h, self._lo_count[lo]]

    def contains(self, configs) -> np.ndarray:
        c = np.asarray(configs, dtype=np.int64)
        ok = (c >= 0) & (c < (1 << self.length))
        counts = np.zeros(c.shape, dtype=np.int64)
        for i in range(self.length):
            counts += (c >> i) & 1
        return ok & (counts == self.n_up)

    @cached_property
    def spins(self) -> np.ndarray:
        """``(dim, L)`` int8 table of spin values +-1."""
        bits = (self.states[:, None] >> np.arange(self.length)) & 1
        return (2 * bits - 1).astype(np.int8)

    def basis_vector(self, config: int) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.index(config)] = 1.0
        return v


def build_sector_basis(L: int, n_up: int) -> SectorBasis:
    return SectorBasis(L, n_up)


def sector_dimension(L: int, n_up: int) -> int:
    return comb(L, n_up)


def config_from_spins(spins) -> int:
    """Configuration word from a sequence of +-1 (or bool, True = up) per site."""
    word = 0
    for i, s in enumerate(spins):
        if s > 0:
            word |= 1 << i
    return word


def spins_from_config(config: int, L: int) -> np.ndarray:
    return np.array([1 if (config >> i) & 1 else -1 for i in range(L)], dtype=np.int8)
