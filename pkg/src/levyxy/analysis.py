"""Fitting pipeline: scaling collapse, profile shapes, power laws and spin-flip decay."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares, minimize

from .coupling import CouplingMatrix
from .fields import CorrelationField
from .hydro import cached_stable, classify_regime

# measured D/J of the experiment, kept for reference only (not reproduced here)
EXPERIMENTAL_D_OVER_J = {0.9: 0.5, 1.1: 0.8, 1.5: 2.6}


class FitError(RuntimeError):
    pass


def short_time_expansion(matrix: CouplingMatrix, center: int, times) -> CorrelationField:
    """Second-order correlator: ``1 - t^2 sum_k J_ck^2`` at the centre, ``t^2 J_jc^2`` elsewhere."""
    J = np.asarray(matrix, dtype=float)
    L = J.shape[0]
    if not 0 <= center < L:
        raise ValueError(f"center {center} outside the chain")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    row = J[center] ** 2
    C = np.outer(times**2, row)
    C[:, center] = 1.0 - times**2 * row.sum()
    return CorrelationField(times, np.arange(L), C, center=center)


@dataclass(frozen=True)
class FitWindow:
    """Points used by :func:`collapse_fit`.

    ``t_min``/``t_max`` bound the time axis (in the field's units);
    ``edge_exclude`` drops that many sites at each end of the chain.
    """

    t_min: float = 0.0
    t_max: float = math.inf
    edge_exclude: int = 2

    @classmethod
    def late_times(cls, J: float, threshold: float = 5.0, edge_exclude: int = 2) -> FitWindow:
        """Window ``J t > threshold``."""
        return cls(t_min=threshold / J, edge_exclude=edge_exclude)

    def mask(self, field: CorrelationField) -> np.ndarray:
        t = field.times[:, None]
        sel = (t > self.t_min) & (t <= self.t_max)
        s = field.sites
        keep = (s >= s.min() + self.edge_exclude) & (s <= s.max() - self.edge_exclude)
        return sel & keep[None, :]


@dataclass
class ScalingFit:
    alpha: float
    D: float
    beta: float
    beta_fixed: bool
    covariance: np.ndarray
    chi2_reduced: float
    window: FitWindow
    n_points: int
    J: float | None = None
    D_alpha_spread: float = 0.0

    def __post_init__(self):
        if not self.D > 0:
            raise FitError(f"fitted D must be positive, got {self.D}")

    @property
    def D_over_J(self) -> float | None:
        return None if self.J is None else self.D / self.J

    @property
    def D_sigma(self) -> float:
        """Curvature standard error on D, combined with any alpha-induced spread."""
        return math.hypot(math.sqrt(max(self.covariance[0, 0], 0.0)), self.D_alpha_spread)

    def report(self) -> dict:
        w = asdict(self.window)
        if math.isinf(w["t_max"]):
            w["t_max"] = None
        return {
            "alpha": self.alpha,
            "D": self.D,
            "D_over_J": self.D_over_J,
            "beta": self.beta,
            "beta_fixed": self.beta_fixed,
            "chi2_reduced": self.chi2_reduced,
            "window": w,
            "covariance": np.asarray(self.covariance).ravel().tolist(),
            "n_points": self.n_points,
        }


def write_fit_report(fit: ScalingFit, path) -> None:
    Path(path).write_text(json.dumps(fit.report(), indent=2, sort_keys=True) + "\n")


def _shape_alpha(alpha):
    regime = classify_regime(alpha)
    if not regime.transporting:
        raise ValueError(f"alpha={alpha} is in the {regime.value} regime; no scaling collapse")
    return min(alpha, 1.5)


def _weights(sigmas):
    if np.all(sigmas > 0):
        return 1.0 / sigmas, True
    return np.ones_like(sigmas), False


def collapse_fit(field: CorrelationField, alpha: float, window: FitWindow | None = None,
                 beta_fixed: bool = True, J: float | None = None,
                 alpha_sigma: float | None = None) -> ScalingFit:
    """Fit ``C_j(t) = (D t)^-beta F_alpha(|j| / (D t)^beta)`` to a correlation field.

    Beyond ``alpha = 1.5`` the Gaussian shape with ``beta = 1/2`` is used. The
    default window is ``J t > 5`` (``t > 5`` when ``J`` is not given) without
    the two outermost sites at each end. Residuals are weighted by the sigmas
    when all of them are positive. The minimum is located with Nelder-Mead and
    refined by Gauss-Newton; the covariance is the inverse curvature of the
    weighted residual sum, scaled by the reduced chi^2 when unit weights are
    used. With ``alpha_sigma`` the fit is repeated at ``alpha +- alpha_sigma``
    and half the spread of D is stored as ``D_alpha_spread``.
    """
    if window is None:
        window = FitWindow.late_times(J if J else 1.0)
    mask = window.mask(field)
    n = int(mask.sum())
    n_par = 1 if beta_fixed else 2
    if n <= n_par:
        raise FitError(f"fit window holds {n} points, need more than {n_par}")
    ti, si = np.nonzero(mask)
    t = field.times[ti]
    x = np.abs(field.offsets[si]).astype(float)
    y = field.values[ti, si]
    w, weighted = _weights(field.sigmas[ti, si])
    a_shape = _shape_alpha(alpha)
    F = cached_stable(float(a_shape))
    beta0 = 1.0 / (2 * a_shape - 1)

    def model(D, beta):
        s = (D * t) ** beta
        return F(x / s) / s

    def resid(p):
        D, beta = p[0], (p[1] if not beta_fixed else beta0)
        return (model(D, beta) - y) * w

    # start from the autocorrelation, C_0 ~ F(0) / (D t)^beta
    at0 = (x == 0) & (y > 0)
    if np.any(at0):
        D_start = float(np.median((F(0.0) / y[at0]) ** (1.0 / beta0) / t[at0]))
    else:
        D_start = 1.0
    p_start = [math.log(D_start)] + ([] if beta_fixed else [beta0])

    def cost(q):
        p = [math.exp(q[0])] + list(q[1:])
        if not beta_fixed and not 0.05 < p[1] < 5:
            return np.inf
        r = resid(p)
        return float(r @ r)

    nm = minimize(cost, p_start, method="Nelder-Mead",
                  options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
    p0 = np.array([math.exp(nm.x[0])] + list(nm.x[1:]))
    lower = [0.0] + ([] if beta_fixed else [0.0])
    ls = least_squares(resid, p0, bounds=(lower, np.inf), diff_step=1e-5, x_scale="jac",
                       xtol=1e-10, ftol=1e-12, gtol=1e-12)
    if not ls.success:
        raise FitError(f"collapse fit did not converge: {ls.message}")
    dof = max(n - n_par, 1)
    chi2 = float(ls.fun @ ls.fun) / dof
    jac = ls.jac
    try:
        cov = np.linalg.inv(jac.T @ jac)
    except np.linalg.LinAlgError as exc:
        raise FitError("degenerate fit: singular curvature matrix") from exc
    if not weighted:
        cov = cov * chi2
    D = float(ls.x[0])
    beta = beta0 if beta_fixed else float(ls.x[1])
    spread = 0.0
    if alpha_sigma:
        Ds = [collapse_fit(field, alpha + s, window, beta_fixed, J).D
              for s in (-alpha_sigma, alpha_sigma)]
        spread = 0.5 * abs(Ds[1] - Ds[0])
    return ScalingFit(alpha=float(alpha), D=D, beta=beta, beta_fixed=beta_fixed,
                      covariance=cov, chi2_reduced=chi2, window=window, n_points=n,
                      J=J, D_alpha_spread=spread)


def lorentzian_profile(x, amplitude, width):
    return amplitude * width / (np.pi * (width**2 + x**2))


def gaussian_profile(x, amplitude, width):
    return amplitude * np.exp(-(x**2) / (2 * width**2)) / (width * np.sqrt(2 * np.pi))


def _profile_fit(shape, x, y, w):
    amp = max(float(np.sum(y)), 1e-12)
    peak = max(float(y[np.argmin(np.abs(x))]), 1e-12)
    width = amp / (np.pi * peak) if shape is lorentzian_profile else amp / (np.sqrt(2 * np.pi) * peak)
    res = least_squares(lambda p: (shape(x, *p) - y) * w, [amp, width],
                        bounds=([0.0, 1e-9], np.inf), xtol=1e-12, ftol=1e-12)
    return res.x, float(res.fun @ res.fun)


def shape_chi2(offsets, values, sigmas=None, central_sites: int | None = None):
    """Reduced chi^2 of normalised Lorentzian and Gaussian fits to one profile.

    ``offsets`` are site positions relative to the excitation origin. Both
    shapes have a free amplitude and width. ``central_sites`` restricts the
    fit to that many sites nearest the origin.
    """
    x = np.asarray(offsets, dtype=float)
    y = np.asarray(values, dtype=float)
    s = np.ones_like(y) if sigmas is None else np.asarray(sigmas, dtype=float)
    if central_sites is not None:
        keep = np.argsort(np.abs(x), kind="stable")[:central_sites]
        keep.sort()
        x, y, s = x[keep], y[keep], s[keep]
    if x.size <= 2:
        raise FitError("need more than two points for a two-parameter shape fit")
    w, _ = _weights(s)
    dof = x.size - 2
    _, chi_l = _profile_fit(lorentzian_profile, x, y, w)
    _, chi_g = _profile_fit(gaussian_profile, x, y, w)
    return chi_l / dof, chi_g / dof


def autocorr_powerlaw_fit(times, C0, window=None) -> float:
    """Decay exponent from a least-squares line through ``log C0`` vs ``log t``."""
    t = np.asarray(times, dtype=float)
    c = np.asarray(C0, dtype=float)
    sel = np.ones(t.shape, bool) if window is None else (t >= window[0]) & (t <= window[1])
    t, c = t[sel], c[sel]
    if t.size < 2:
        raise FitError("power-law fit needs at least two points")
    if np.any(c <= 0) or np.any(t <= 0):
        raise ValueError("times and autocorrelation must be positive inside the window")
    slope = np.polyfit(np.log(t), np.log(c), 1)[0]
    return float(-slope)


@dataclass(frozen=True)
class FlipRates:
    """Spontaneous decay ``Gamma`` (up to down) and symmetric flip rate ``gamma_flip``, in 1/s."""

    Gamma: float
    gamma_flip: float
    residual: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if self.Gamma < 0 or self.gamma_flip < 0:
            raise ValueError("flip rates must be non-negative")

    @property
    def p_infinity(self) -> float:
        total = self.Gamma + 2 * self.gamma_flip
        return 0.5 if total == 0 else self.gamma_flip / total


def up_probability(rates: FlipRates, p0, t):
    """Closed form of ``dp/dt = -(Gamma + 2 gamma) p + gamma``."""
    if np.any(np.asarray(p0) < 0) or np.any(np.asarray(p0) > 1):
        raise ValueError("p0 must lie in [0, 1]")
    t = np.asarray(t, dtype=float)
    total = rates.Gamma + 2 * rates.gamma_flip
    if total == 0:
        return np.broadcast_to(np.asarray(p0, dtype=float), np.broadcast(p0, t).shape).copy()
    p_inf = rates.gamma_flip / total
    return p_inf + (np.asarray(p0) - p_inf) * np.exp(-total * t)


def magnetization_decay(rates: FlipRates, p0, t):
    """Per-spin magnetization ``2 p(t) - 1``."""
    return 2.0 * up_probability(rates, p0, t) - 1.0


def fit_flip_rates(times, magnetizations, initial_up=None) -> FlipRates:
    """Least-squares ``(Gamma, gamma_flip)`` from magnetization series.

    ``magnetizations`` has one row per initial state. ``initial_up`` gives each
    state's initial up-probability; when omitted it is read off the first
    column, which then has to be at ``t = 0``.
    """
    t = np.asarray(times, dtype=float)
    m = np.atleast_2d(np.asarray(magnetizations, dtype=float))
    if m.shape[1] != t.size:
        raise ValueError("magnetizations must have one column per time")
    if np.unique(t).size < 2:
        raise FitError("need at least two distinct times")
    if initial_up is None:
        if t[0] != 0:
            raise ValueError("initial_up is required when the series does not start at t=0")
        p0 = (1.0 + m[:, 0]) / 2.0
    else:
        p0 = np.atleast_1d(np.asarray(initial_up, dtype=float))
    p_obs = (1.0 + m) / 2.0

    def resid(q):
        rates = FlipRates(*np.maximum(q, 0.0))
        return (up_probability(rates, p0[:, None], t[None, :]) - p_obs).ravel()

    # closed-form start from the mean initial slope and the late-time level
    total0 = max(-np.mean(np.gradient(p_obs, t, axis=1)[:, 0] / np.where(
        np.abs(p0 - p_obs[:, -1]) > 1e-9, p0 - p_obs[:, -1], 1.0)), 1e-3 / max(t.max(), 1e-12))
    p_inf0 = float(np.clip(np.mean(p_obs[:, -1]), 0.0, 0.5))
    start = [total0 * (1 - 2 * p_inf0), total0 * p_inf0]
    best = None
    for guess in (start, [1.0 / t.max(), 1.0 / t.max()], [0.1 / t.max(), 0.1 / t.max()]):
        res = least_squares(resid, np.maximum(guess, 1e-9), bounds=(0.0, np.inf),
                            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=5000)
        if best is None or res.cost < best.cost:
            best = res
    if not best.success:
        raise FitError(f"flip-rate fit did not converge: {best.message}")
    sv = np.linalg.svd(best.jac, compute_uv=False)
    if sv.size < 2 or sv[-1] <= 1e-6 * max(sv[0], 1e-300):
        raise FitError("flip rates are not identifiable from these data")
    Gamma, gamma = best.x
    return FlipRates(float(Gamma), float(gamma), residual=float(np.sqrt(np.mean(best.fun**2))))


__all__ = [
    "EXPERIMENTAL_D_OVER_J", "FitError", "FitWindow", "FlipRates", "ScalingFit",
    "autocorr_powerlaw_fit", "collapse_fit", "fit_flip_rates", "gaussian_profile",
    "lorentzian_profile", "magnetization_decay", "shape_chi2", "short_time_expansion",
    "up_probability", "write_fit_report",
]
