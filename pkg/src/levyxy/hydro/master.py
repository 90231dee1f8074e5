"""Classical jump process: golden-rule rates and the lattice master equation."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import solve_ivp

# h * spectral radius limit for the default DOP853 (its real-axis interval is ~6)
STABLE_STEP = 4.0


class StiffnessError(RuntimeError):
    def __init__(self, message, step):
        super().__init__(f"{message} (last accepted step {step:.3e})")
        self.step = step


@dataclass(frozen=True)
class LevyParams:
    """Jump exponent ``alpha`` (rates fall off as ``r^(-2 alpha)``) and rate scale ``lam``."""

    alpha: float
    lam: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be positive, got {self.lam}")


class RegimeClass(enum.Enum):
    MEAN_FIELD = "mean-field"
    MEAN_FIELD_EDGE = "boundary alpha=0.5"
    SUPERDIFFUSIVE = "superdiffusive"
    DIFFUSIVE_EDGE = "boundary alpha=1.5"
    DIFFUSIVE = "diffusive"

    @property
    def transporting(self) -> bool:
        return self in (RegimeClass.SUPERDIFFUSIVE, RegimeClass.DIFFUSIVE_EDGE,
                        RegimeClass.DIFFUSIVE)


def classify_regime(alpha: float) -> RegimeClass:
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if alpha < 0.5:
        return RegimeClass.MEAN_FIELD
    if alpha == 0.5:
        return RegimeClass.MEAN_FIELD_EDGE
    if alpha < 1.5:
        return RegimeClass.SUPERDIFFUSIVE
    if alpha == 1.5:
        return RegimeClass.DIFFUSIVE_EDGE
    return RegimeClass.DIFFUSIVE


class ScalingPrediction(NamedTuple):
    beta: float
    D: float | None


def predicted_scaling(params: LevyParams) -> ScalingPrediction:
    """Scaling exponent and analytic transport coefficient.

    ``beta = 1/(2 alpha - 1)`` up to ``alpha = 1.5`` and 1/2 beyond.
    ``D = lam c_alpha`` in the superdiffusive window and ``lam / (2 alpha - 3)``
    in the diffusive one; at exactly 1.5 both expressions diverge and ``D`` is
    None.
    """
    from .fourier import c_alpha

    regime = classify_regime(params.alpha)
    if not regime.transporting:
        raise ValueError(f"alpha={params.alpha} is in the {regime.value} regime; no scaling form")
    a = params.alpha
    if regime is RegimeClass.SUPERDIFFUSIVE:
        return ScalingPrediction(1.0 / (2 * a - 1), params.lam * c_alpha(a))
    if regime is RegimeClass.DIFFUSIVE_EDGE:
        return ScalingPrediction(0.5, None)
    return ScalingPrediction(0.5, params.lam / (2 * a - 3))


def golden_rule_rates(params: LevyParams, L: int) -> np.ndarray:
    """``W_ij = lam / |i - j|^(2 alpha)`` with zero diagonal."""
    if L < 2:
        raise ValueError("L must be at least 2")
    r = np.abs(np.subtract.outer(np.arange(L), np.arange(L))).astype(float)
    W = np.zeros((L, L))
    off = r > 0
    W[off] = params.lam * r[off] ** (-2.0 * params.alpha)
    return W


def master_generator(W) -> np.ndarray:
    """Generator ``G`` with ``df/dt = G f``; every column sums to zero."""
    W = np.asarray(W, dtype=float)
    G = W.copy()
    np.fill_diagonal(G, 0.0)
    G[np.diag_indices_from(G)] = -G.sum(axis=0)
    return G


def evolve_master_equation(W, f0, times, rtol: float = 1e-10, atol: float = 1e-14,
                           method: str = "DOP853") -> np.ndarray:
    """Integrate ``df_i/dt = sum_j W_ij (f_j - f_i)``; returns ``(len(times), L)``.

    Uses an explicit adaptive Runge-Kutta scheme. The chain is open: no jumps
    wrap around the ends. Steps are capped so that ``h`` times the Gershgorin
    bound on the spectral radius stays inside the scheme's stability interval;
    near that edge rounding noise in the fast modes grows to ~1e-12.
    """
    W = np.array(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("W must be square")
    if not np.allclose(W, W.T, rtol=0, atol=1e-14 * max(np.abs(W).max(), 1.0)):
        raise ValueError("W must be symmetric")
    np.fill_diagonal(W, 0.0)
    f0 = np.asarray(f0, dtype=float)
    if f0.shape != (W.shape[0],):
        raise ValueError("f0 does not match the rate matrix")
    if np.any(f0 < 0) or abs(f0.sum() - 1.0) > 1e-12:
        raise ValueError("f0 must be a probability vector")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0):
        raise ValueError("times must be non-negative")
    escape = W.sum(axis=1)
    rhs = lambda _t, f: W @ f - escape * f  # noqa: E731
    uniform = np.full(W.shape[0], 1.0 / W.shape[0])
    drift = np.max(np.abs(rhs(0.0, uniform)))
    if drift > 1e-12 * max(escape.max(), 1.0) / W.shape[0]:
        raise ValueError(f"uniform state is not stationary (drift {drift:.2e})")
    order = np.argsort(times)
    t_end = times[order[-1]]
    if t_end == 0:
        return np.tile(f0, (times.size, 1))
    rho = 2.0 * escape.max()
    max_step = STABLE_STEP / rho if rho > 0 else np.inf
    sol = solve_ivp(rhs, (0.0, t_end), f0, method=method, t_eval=times[order],
                    rtol=rtol, atol=atol, max_step=max_step)
    if sol.status != 0:
        step = float(np.diff(sol.t[-2:])[0]) if sol.t.size > 1 else 0.0
        raise StiffnessError(f"master equation integration failed: {sol.message}", step)
    out = np.empty((times.size, W.shape[0]))
    out[order] = sol.y.T
    return out
