"""
Couplings of a trapped-ion chain
================================

Start from the trap: find where 25 ions sit, get the transverse normal
modes, and build the spin-spin coupling matrix that a detuned bichromatic
drive produces. Then see how well a single power law J / r^alpha describes it.
"""
import numpy as np

from levyxy.coupling import (IonChainSpec, build_ion_chain_matrix, compute_equilibrium_positions,
                             compute_transverse_modes, fit_power_law)

# ions are not evenly spaced: the chain is denser in the middle
x = compute_equilibrium_positions(25)
gaps = np.diff(x)
print(f"spacing at the centre / at the edge: {gaps[12] / gaps[0]:.3f}")

# the drive sits above the highest transverse COM mode; larger detuning
# couples to all modes more evenly, so the range gets shorter
for detuning in (10e3, 40e3, 160e3):
    spec = IonChainSpec(ion_count=25, axial_frequency=126.3e3,
                        radial_frequencies=(2.93e6, 2.898e6),
                        rabi_frequencies=2 * np.pi * 100e3,
                        beatnote_detuning_from_com=detuning)
    J = build_ion_chain_matrix(spec)
    fit = fit_power_law(J)
    print(f"detuning {detuning / 1e3:6.0f} kHz: J = {fit.J:8.2f} rad/s, alpha = {fit.alpha:.3f}, "
          f"rms log residual = {fit.rms_log_residual:.3f}")

freqs, _ = compute_transverse_modes(spec)
print(f"transverse band: {freqs.min() / 1e6:.4f} .. {freqs.max() / 1e6:.4f} MHz")
