"""
Levy flights on a lattice
=========================

Classical picture of the same transport: an excitation hops j -> j +- r at
rate lambda / r^(2 alpha). We integrate the master equation on 2001 sites,
compare with the lattice Fourier solution, and read off the scaling.
"""
import numpy as np

from levyxy.analysis import FitWindow, autocorr_powerlaw_fit, collapse_fit
from levyxy.fields import CorrelationField
from levyxy.hydro import (LevyParams, classify_regime, evolve_master_equation, fourier_solution,
                          golden_rule_rates, predicted_scaling)

p = LevyParams(alpha=1.1, lam=1.0)
L = 2001
c = L // 2
t = np.array([1.0, 5.0, 20.0, 50.0])
f0 = np.zeros(L)
f0[c] = 1.0
master = evolve_master_equation(golden_rule_rates(p, L), f0, t)
j = np.arange(-50, 51)
fourier = fourier_solution(p, j, t)
print("max |master - Fourier| on the central 101 sites:",
      f"{np.abs(master[:, c - 50:c + 51] - fourier).max():.1e}")

# the return probability decays as t^(-beta) with beta = 1/(2 alpha - 1)
for alpha in (0.9, 1.1, 1.3):
    q = LevyParams(alpha)
    tt = np.geomspace(10, 1000, 21)
    beta = autocorr_powerlaw_fit(tt, fourier_solution(q, [0], tt)[:, 0])
    print(f"alpha={alpha} ({classify_regime(alpha).value}): beta = {beta:.4f}, "
          f"predicted {predicted_scaling(q).beta:.4f}")

# collapse the profiles onto one stable density and compare D with lambda c_alpha
ts = np.linspace(6, 50, 12)
jj = np.arange(-100, 101)
field = CorrelationField(ts, jj + 100, fourier_solution(p, jj, ts), center=100)
fit = collapse_fit(field, p.alpha, FitWindow(t_min=5))
free = collapse_fit(field, p.alpha, FitWindow(t_min=5), beta_fixed=False)
print(f"D = {fit.D:.3f} (predicted {predicted_scaling(p).D:.3f}); "
      f"with beta free: D = {free.D:.3f}, beta = {free.beta:.3f}")
