"""Product-state sampling of the infinite-temperature correlator.

Random product states with the central spin fixed up are drawn in conjugate
pairs (all spins flipped except the centre), evolved, and combined into
``C_j(t) = (1/M) sum_u sigma_c^(u) <sz_j(t)>_u``. Finite measurement
statistics are emulated with binomial shots.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .coupling import CouplingMatrix
from .fields import CorrelationField
from .quantum import EvolutionEngine, Propagator, SectorBasis, SectorHamiltonian

PREP_FIDELITY = 0.99


def member_rng(seed: int, index: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for one ensemble member, independent of schedule."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream, index])))


def popcount(word: int) -> int:
    return bin(word).count("1")


@dataclass(frozen=True)
class InitialStateEnsemble:
    """Conjugate-paired product configurations (bit i = site i, 1 = up)."""

    length: int
    members: tuple[int, ...]
    center: int
    seed: int

    def __post_init__(self):
        if len(self.members) % 2:
            raise ValueError("ensemble must contain complete conjugate pairs")
        mask = ((1 << self.length) - 1) ^ (1 << self.center)
        for a, b in zip(self.members[::2], self.members[1::2]):
            if b != a ^ mask:
                raise ValueError("members are not conjugate pairs")

    def __len__(self):
        return len(self.members)

    def center_signs(self) -> np.ndarray:
        return np.array([1 if (m >> self.center) & 1 else -1 for m in self.members])

    def magnetizations(self) -> np.ndarray:
        return np.array([2 * popcount(m) - self.length for m in self.members])

    def spins(self) -> np.ndarray:
        """``(M, L)`` array of +-1."""
        m = np.array(self.members, dtype=np.int64)
        return (2 * ((m[:, None] >> np.arange(self.length)) & 1) - 1).astype(np.int8)

    def flipped(self) -> InitialStateEnsemble:
        """All spins flipped, centre included (the centre-down set)."""
        full = (1 << self.length) - 1
        return InitialStateEnsemble(self.length, tuple(m ^ full for m in self.members),
                                    self.center, self.seed)


@dataclass(frozen=True)
class MeasurementPlan:
    """``N_m`` shots per state and time; ``None`` means exact expectation values."""

    N_u: int
    N_m: int | None = 100
    seed: int = 0

    def __post_init__(self):
        if self.N_u < 2 or self.N_u % 2:
            raise ValueError("N_u must be even (conjugate pairs)")
        if self.N_m is not None and self.N_m < 1:
            raise ValueError("N_m must be at least 1")


def _remainder_ups(L: int, remainder_magnetization):
    rest = L - 1
    if remainder_magnetization == "any":
        return None
    if remainder_magnetization is None:
        if rest % 2 == 0:
            return [rest // 2]
        return [(rest - 1) // 2, (rest + 1) // 2]
    r = int(remainder_magnetization)
    if (rest + r) % 2 or abs(r) > rest:
        raise ValueError(
            f"remainder magnetization {r} is infeasible for {rest} non-central sites")
    return [(rest + r) // 2]


def draw_ensemble(L: int, M: int, center: int | None = None, seed: int = 0,
                  remainder_magnetization: int | str | None = None) -> InitialStateEnsemble:
    """``M/2`` random configurations, each followed by its conjugate.

    The central spin is up. The other ``L-1`` spins are drawn uniformly with
    magnetisation ``remainder_magnetization``; the default picks the balanced
    value 0 when ``L-1`` is even and +-1 with equal probability otherwise.
    ``"any"`` draws every non-central spin independently, which samples the
    unrestricted infinite-temperature trace instead of one sector.
    """
    if M < 2 or M % 2:
        raise ValueError("M must be a positive even number")
    if L < 2:
        raise ValueError("L must be at least 2")
    c = L // 2 if center is None else int(center)
    if not 0 <= c < L:
        raise ValueError(f"center {c} outside the chain")
    choices = _remainder_ups(L, remainder_magnetization)
    others = np.array([i for i in range(L) if i != c])
    mask = ((1 << L) - 1) ^ (1 << c)
    members = []
    for p in range(M // 2):
        rng = member_rng(seed, p)
        if choices is None:
            ups = others[rng.random(others.size) < 0.5]
        else:
            k = choices[rng.integers(len(choices))] if len(choices) > 1 else choices[0]
            ups = rng.choice(others, size=k, replace=False)
        word = (1 << c) | sum(1 << int(i) for i in ups)
        members += [word, word ^ mask]
    return InitialStateEnsemble(L, tuple(members), c, seed)


def apply_preparation_errors(ensemble: InitialStateEnsemble, flip_probability: float,
                             seed: int) -> list[int]:
    """Actually prepared configurations: each site independently flipped."""
    out = []
    for u, word in enumerate(ensemble.members):
        rng = member_rng(seed, u, stream=1)
        flips = rng.random(ensemble.length) < flip_probability
        out.append(word ^ sum(1 << i for i in np.flatnonzero(flips)))
    return out


def shot_noise_sigma(p, N_m: int):
    """Projection-noise standard deviation ``sqrt(p (1 - p) / N_m)``."""
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise ValueError("p must lie in [0, 1]")
    if N_m < 1:
        raise ValueError("N_m must be at least 1")
    out = np.sqrt(p * (1.0 - p) / N_m)
    return float(out) if out.ndim == 0 else out


def correlation_sigma(per_state_sigmas, N_u: int | None = None):
    """``2 sqrt(sum_u sigma_u^2) / N_u`` over the first axis."""
    s = np.asarray(per_state_sigmas, dtype=float)
    n = s.shape[0] if N_u is None else N_u
    if n < 1 or s.shape[0] != n:
        raise ValueError("N_u must equal the number of per-state sigmas")
    out = 2.0 * np.sqrt(np.sum(s**2, axis=0)) / n
    return float(out) if np.ndim(out) == 0 else out


class _SectorCache:
    def __init__(self, matrix, engine):
        self.J = np.asarray(matrix, dtype=float)
        self.engine = engine
        self._props = {}

    def get(self, n_up):
        if n_up not in self._props:
            basis = SectorBasis(self.J.shape[0], n_up)
            prop = Propagator(self.engine, SectorHamiltonian(self.J, basis))
            if self.engine.method == "dense-eigen":
                prop.eigensystem  # noqa: B018 - diagonalise before threads share it
            self._props[n_up] = prop
        return self._props[n_up]


def member_expectations(configs, engine: EvolutionEngine, matrix: CouplingMatrix,
                        times, workers: int = 1) -> np.ndarray:
    """``<sz_j(t)>`` for each product configuration, shape ``(M, T, L)``."""
    cache = _SectorCache(matrix, engine)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    configs = [int(w) for w in configs]
    groups = {}
    for u, w in enumerate(configs):
        groups.setdefault(popcount(w), []).append(u)
    L = np.asarray(matrix).shape[0]
    out = np.empty((len(configs), times.size, L))

    def run(n_up, members):
        prop = cache.get(n_up)
        basis = prop.hamiltonian.basis
        psis = np.zeros((len(members), basis.dim), dtype=complex)
        psis[np.arange(len(members)), basis.index([configs[u] for u in members])] = 1.0
        out[members] = prop.sigma_z_block(psis, times)

    jobs = []
    for n_up in sorted(groups):
        cache.get(n_up)
        members = groups[n_up]
        if engine.method == "krylov":
            jobs += [(n_up, [u]) for u in members]
        else:
            jobs.append((n_up, members))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(lambda job: run(*job), jobs))
    else:
        for job in jobs:
            run(*job)
    return out


def estimate_correlation(ensemble: InitialStateEnsemble, engine: EvolutionEngine,
                         matrix: CouplingMatrix, times, plan: MeasurementPlan | None = None,
                         bias_cancel: bool = False, prep_error: float = 0.0,
                         workers: int = 1) -> CorrelationField:
    """Sampled ``C_j(t)`` with uncertainties.

    With exact expectations (``plan.N_m is None``) the sigmas are the standard
    error over conjugate-pair averages. With finite shots every
    ``<sz_j(t)>_u`` is replaced by a binomial sample mean and the sigmas follow
    the projection-noise propagation of :func:`correlation_sigma`.
    """
    L = ensemble.length
    if np.asarray(matrix).shape[0] != L:
        raise ValueError("coupling matrix does not match the ensemble length")
    plan = plan or MeasurementPlan(N_u=len(ensemble), N_m=None)
    if plan.N_u != len(ensemble):
        raise ValueError(f"plan.N_u={plan.N_u} but the ensemble has {len(ensemble)} members")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    sets = [ensemble] + ([ensemble.flipped()] if bias_cancel else [])
    fields = []
    for s_idx, ens in enumerate(sets):
        configs = list(ens.members)
        if prep_error > 0:
            configs = apply_preparation_errors(ens, prep_error, seed=plan.seed + 7919 * s_idx)
        signs = ens.center_signs().astype(float)
        expect = member_expectations(configs, engine, matrix, times, workers)
        fields.append(_reduce(expect, signs, plan, stream=2 + s_idx))
    values = np.mean([f[0] for f in fields], axis=0)
    sigmas = np.sqrt(np.sum([f[1] ** 2 for f in fields], axis=0)) / len(fields)
    return CorrelationField(times, np.arange(L), values, sigmas, center=ensemble.center)


def _reduce(expect, signs, plan, stream):
    M = expect.shape[0]
    if plan.N_m is None:
        weighted = signs[:, None, None] * expect
        values = weighted.mean(axis=0)
        pairs = 0.5 * (weighted[0::2] + weighted[1::2])
        n_pairs = pairs.shape[0]
        sigmas = (pairs.std(axis=0, ddof=1) / np.sqrt(n_pairs) if n_pairs > 1
                  else np.zeros_like(values))
        return values, sigmas
    p_up = np.clip((1.0 + expect) / 2.0, 0.0, 1.0)
    measured = np.empty_like(p_up)
    for u in range(M):
        rng = member_rng(plan.seed, u, stream=stream)
        measured[u] = rng.binomial(plan.N_m, p_up[u]) / plan.N_m
    values = np.mean(signs[:, None, None] * (2.0 * measured - 1.0), axis=0)
    sigmas = correlation_sigma(shot_noise_sigma(measured, plan.N_m), M)
    return values, sigmas


def save_ensemble(ensemble: InitialStateEnsemble, path) -> None:
    lines = [f"# L={ensemble.length} center={ensemble.center} seed={ensemble.seed}"]
    for m in ensemble.members:
        lines.append("".join("u" if (m >> i) & 1 else "d" for i in range(ensemble.length)))
    Path(path).write_text("\n".join(lines) + "\n")


def load_ensemble(path) -> InitialStateEnsemble:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise ValueError(f"{path}: missing header line")
    try:
        meta = dict(tok.split("=", 1) for tok in lines[0][1:].split())
        L, center, seed = int(meta["L"]), int(meta["center"]), int(meta["seed"])
    except (KeyError, ValueError) as exc:
        raise ValueError(f"{path}: malformed header {lines[0]!r}") from exc
    members = []
    for n, line in enumerate(lines[1:], start=2):
        if len(line) != L or set(line) - {"u", "d"}:
            raise ValueError(f"{path}:{n}: expected {L} characters of 'u'/'d'")
        members.append(sum(1 << i for i, ch in enumerate(line) if ch == "u"))
    return InitialStateEnsemble(L, tuple(members), center, seed)
