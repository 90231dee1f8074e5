"""Momentum-space solution of the Levy-flight master equation.

An excitation started at the origin spreads as
``f_j(t) = (1/2pi) int dk exp(i k j + W_k t)``. Three dispersions ``W_k`` are
available:

``lattice``
    The exact Fourier transform of the golden-rule rates on the infinite
    lattice, ``2 lam sum_r r^(-2 alpha) (cos kr - 1)``, integrated over the
    Brillouin zone. Matches the lattice master equation.
``continuum``
    The small-``k`` form ``lam (-c_alpha |k|^(2 alpha - 1) + k^2 / (3 - 2 alpha))``
    from replacing the lattice sum by an integral. Beyond ``alpha = 1.5`` only
    the leading diffusive term ``-lam k^2 / (2 alpha - 3)`` is kept, since the
    subleading power turns the rate positive inside the zone.
``scaling``
    The pure scaling form ``-D |k|^(2 alpha - 1)`` (``-D k^2`` for
    ``alpha >= 1.5``) integrated over the real line.
"""
from __future__ import annotations

import math

import mpmath
import numpy as np
from scipy.special import gamma, zeta

from .master import LevyParams, RegimeClass, classify_regime, predicted_scaling
from .quadrature import QuadratureError, cosine_transform

DISPERSIONS = ("lattice", "continuum", "scaling")
CUTOFF_EXPONENT = math.log(1e14)
SERIES_TERMS = 60


def _power_coefficient(alpha):
    # -pi / (cos(alpha pi) Gamma(2 alpha)); finite except at half-integers
    return -math.pi / (math.cos(alpha * math.pi) * math.gamma(2 * alpha))


def c_alpha(alpha: float) -> float:
    """Coefficient of ``|k|^(2 alpha - 1)`` in the rates, ``-2 Gamma(1-2a) sin(a pi)``.

    Evaluated through the reflection formula, which is regular at ``alpha = 1``.
    """
    if not 0.5 < alpha < 1.5:
        raise ValueError(f"c_alpha is defined for 0.5 < alpha < 1.5, got {alpha}")
    return _power_coefficient(alpha)


def _is_half_integer(alpha):
    return abs(2 * alpha - round(2 * alpha)) < 1e-12 and round(2 * alpha) % 2 == 1


def fourier_rate(alpha: float, lam: float, k) -> np.ndarray:
    """Continuum rate ``lam (-c_alpha |k|^(2a-1) + k^2 / (3 - 2a))``."""
    if not alpha > 0.5:
        raise ValueError("the rate expansion needs alpha > 0.5")
    if _is_half_integer(alpha):
        raise ValueError(f"the k^2 coefficient has a pole at alpha={alpha}; "
                         "use the diffusive or scaling dispersion")
    k = np.abs(np.asarray(k, dtype=float))
    return lam * (-_power_coefficient(alpha) * k ** (2 * alpha - 1) + k**2 / (3 - 2 * alpha))


def lattice_rate(alpha: float, lam: float, k) -> np.ndarray:
    """Exact lattice rate ``2 lam sum_{r>=1} r^(-2a) (cos kr - 1)`` for ``|k| <= pi``.

    Uses the expansion of the polylogarithm about ``k = 0``, which converges
    for ``|k| < 2 pi``; at half-integer ``alpha`` the expansion has a
    logarithmic term and the polylogarithm is evaluated directly.
    """
    if not alpha > 0.5:
        raise ValueError("the lattice rate sum converges only for alpha > 0.5")
    k = np.abs(np.asarray(k, dtype=float))
    if np.any(k > np.pi + 1e-12):
        raise ValueError("k must lie in the Brillouin zone")
    s = 2 * alpha
    if _is_half_integer(alpha):
        zs = float(mpmath.zeta(s))
        flat = np.array([float(mpmath.polylog(s, mpmath.expj(kk)).real) for kk in k.ravel()])
        return 2 * lam * (flat.reshape(k.shape) - zs)
    m = np.arange(1, SERIES_TERMS + 1)
    coef = 2.0 * zeta(s - 2 * m) * (-1.0) ** m / gamma(2 * m + 1)
    coef = np.where(np.isfinite(coef), coef, 0.0)
    # Horner in k^2
    k2 = k**2
    poly = np.zeros_like(k)
    for c in coef[::-1]:
        poly = (poly + c) * k2
    return lam * (-_power_coefficient(alpha) * k ** (s - 1) + poly)


def _rate_function(params: LevyParams, dispersion: str, D):
    a, lam = params.alpha, params.lam
    if dispersion == "lattice":
        return (lambda k: lattice_rate(a, lam, k)), math.pi
    if dispersion == "continuum":
        if a > 1.5:
            return (lambda k: -lam * k**2 / (2 * a - 3)), math.pi
        return (lambda k: fourier_rate(a, lam, k)), math.pi
    if D is None:
        D = predicted_scaling(params).D
        if D is None:
            raise ValueError("alpha=1.5 has no analytic D; pass D explicitly")
    gam = min(2 * a - 1, 2.0)
    return (lambda k: -D * np.abs(k) ** gam), math.inf


def _cutoff(rate, t, k_max):
    """First ``k`` where ``exp(W_k t)`` drops below 1e-14, or ``k_max``."""
    if np.isfinite(k_max):
        grid = np.linspace(0.0, k_max, 4097)[1:]
    else:
        grid = np.geomspace(1e-8, 1e8, 4097)
    w = rate(grid) * t
    below = np.flatnonzero(w < -CUTOFF_EXPONENT)
    kc = grid[below[0]] if below.size else k_max
    if not np.isfinite(kc):
        raise QuadratureError("rate does not decay fast enough for a finite cutoff")
    inside = grid <= kc
    if np.any(w[inside] > 0):
        raise ValueError("W_k > 0 inside the integration range; the dispersion is not "
                         "a valid decay rate here")
    scale = grid[np.flatnonzero(w < -1.0)[0]] if np.any(w < -1.0) else kc
    return kc, scale


def fourier_solution(params: LevyParams, j, t, dispersion: str = "lattice",
                     D: float | None = None, tol: float = 1e-8) -> np.ndarray:
    """``f_j(t)`` for an excitation started at the origin.

    ``j`` may be an array of site offsets. A scalar ``t`` gives an array shaped
    like ``j``; an array of times gives shape ``(len(t), len(j))``.
    """
    if dispersion not in DISPERSIONS:
        raise ValueError(f"unknown dispersion {dispersion!r}, expected one of {DISPERSIONS}")
    regime = classify_regime(params.alpha)
    if not regime.transporting:
        raise ValueError(f"alpha={params.alpha} is not in a transporting regime")
    rate, k_max = _rate_function(params, dispersion, D)
    j_arr = np.asarray(j, dtype=float)
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts <= 0):
        raise ValueError("t must be positive")
    out = np.empty((ts.size, j_arr.size))
    for n, tt in enumerate(ts):
        kc, scale = _cutoff(rate, tt, k_max)
        out[n] = cosine_transform(lambda k, tt=tt: np.exp(rate(k) * tt), j_arr.ravel(),
                                  kc, k_scale=scale, tol=tol)
    if np.ndim(t) == 0:
        return out[0].reshape(j_arr.shape)
    return out


__all__ = ["DISPERSIONS", "c_alpha", "fourier_rate", "lattice_rate", "fourier_solution",
           "RegimeClass"]
