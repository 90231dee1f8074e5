import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import zeta
from scipy.stats import levy_stable

from levyxy.hydro import (LevyParams, RegimeClass, StableDistribution, c_alpha,
                          classify_regime, evolve_master_equation, fourier_rate,
                          fourier_solution, golden_rule_rates, lattice_rate, master_generator,
                          predicted_scaling, stable_density)


def test_params_validation():
    with pytest.raises(ValueError):
        LevyParams(0.0, 1.0)
    with pytest.raises(ValueError):
        LevyParams(1.0, -1.0)


def test_rates():
    W = golden_rule_rates(LevyParams(1.0, 1.0), 5)
    assert W[0, 2] == 0.25
    assert np.array_equal(W, W.T) and np.all(np.diag(W) == 0)
    assert np.array_equal(golden_rule_rates(LevyParams(1.3, 2.0), 6),
                          2 * golden_rule_rates(LevyParams(1.3, 1.0), 6))


def test_generator_columns_vanish():
    G = master_generator(golden_rule_rates(LevyParams(1.1), 50))
    assert np.max(np.abs(G.sum(axis=0))) < 1e-14


def test_two_state_master_equation():
    W = golden_rule_rates(LevyParams(1.0, 0.7), 2)
    t = np.linspace(0, 3, 7)
    f = evolve_master_equation(W, [0.9, 0.1], t)
    assert np.allclose(f[:, 0], 0.5 + 0.4 * np.exp(-2 * 0.7 * t), atol=1e-10)


def test_master_equation_conservation_and_fixed_point():
    L = 301
    W = golden_rule_rates(LevyParams(1.1), L)
    f0 = np.zeros(L)
    f0[L // 2] = 1
    f = evolve_master_equation(W, f0, [1.0, 10.0, 40.0])
    assert np.max(np.abs(f.sum(axis=1) - 1)) < 1e-12
    assert f.min() > -1e-12
    u = np.full(L, 1 / L)
    assert np.max(np.abs(evolve_master_equation(W, u, [5.0, 50.0]) - u)) < 1e-12


def test_master_equation_rejects_bad_input():
    W = golden_rule_rates(LevyParams(1.1), 4)
    with pytest.raises(ValueError):
        evolve_master_equation(W, [0.5, 0.5, 0.5, 0.5], [1.0])
    with pytest.raises(ValueError):
        evolve_master_equation(W, [1, 0, 0, 0], [-1.0])


def test_c_alpha_values():
    assert abs(c_alpha(1.0) - math.pi) < 1e-10
    assert c_alpha(1.1) == pytest.approx(2.998, abs=2e-3)
    assert c_alpha(0.9) == pytest.approx(3.547, abs=2e-3)
    # literal product form away from its removable singularity
    for a in (0.7, 0.9, 1.2, 1.4):
        assert c_alpha(a) == pytest.approx(-2 * math.gamma(1 - 2 * a) * math.sin(a * math.pi))
    for a in (0.5, 1.5, 2.0):
        with pytest.raises(ValueError):
            c_alpha(a)


def test_fourier_rate():
    assert fourier_rate(1.1, 1.0, 0.0) == 0
    k = 1e-4
    assert fourier_rate(1.1, 1.0, k) == pytest.approx(-c_alpha(1.1) * k**1.2, rel=1e-3)
    assert fourier_rate(2.0, 1.0, k) == pytest.approx(-k**2, rel=1e-3)
    with pytest.raises(ValueError):
        fourier_rate(1.5, 1.0, 0.1)


@pytest.mark.parametrize("alpha", [0.8, 1.0, 1.1, 1.5, 2.0, 2.3])
def test_lattice_rate_matches_direct_sum(alpha):
    assert lattice_rate(alpha, 1.0, 0.0) == 0
    k = np.linspace(0, np.pi, 9)[1:]
    r = np.arange(1, 400_001)
    direct = np.array([2 * np.sum(r ** (-2 * alpha) * (np.cos(kk * r) - 1)) for kk in k])
    # the oscillating tail is negligible; the constant tail is not
    direct -= 2 * zeta(2 * alpha, r[-1] + 1)
    tol = 5e-5 if alpha < 1 else 1e-8
    assert np.allclose(lattice_rate(alpha, 1.0, k), direct, atol=tol)


def test_regimes():
    assert classify_regime(0.9) is RegimeClass.SUPERDIFFUSIVE
    assert classify_regime(1.1) is RegimeClass.SUPERDIFFUSIVE
    assert classify_regime(1.5) is RegimeClass.DIFFUSIVE_EDGE
    assert classify_regime(0.5) is RegimeClass.MEAN_FIELD_EDGE
    assert classify_regime(0.3) is RegimeClass.MEAN_FIELD
    assert classify_regime(2.5) is RegimeClass.DIFFUSIVE


@settings(max_examples=50)
@given(st.floats(1e-6, 10.0))
def test_classification_is_total(alpha):
    assert isinstance(classify_regime(alpha), RegimeClass)


def test_predicted_scaling():
    assert predicted_scaling(LevyParams(1.1)).beta == pytest.approx(1 / 1.2)
    assert predicted_scaling(LevyParams(1.5)).beta == 0.5
    assert predicted_scaling(LevyParams(2.0)).D == 1.0
    assert predicted_scaling(LevyParams(1.1, 2.0)).D == pytest.approx(2 * c_alpha(1.1))
    with pytest.raises(ValueError):
        predicted_scaling(LevyParams(0.3))


def test_fourier_symmetry_and_lorentzian_limit():
    p = LevyParams(1.1)
    j = np.arange(1, 30)
    t = 7.0
    assert np.allclose(fourier_solution(p, j, t), fourier_solution(p, -j, t), atol=1e-10)
    # late-time alpha=1 profile approaches a Lorentzian of half-width lam c_1 t
    p1 = LevyParams(1.0)
    t = 200.0
    jj = np.arange(-300, 301)
    w = math.pi * t
    f = fourier_solution(p1, jj, t)
    lor = w / (math.pi * (w**2 + jj**2))
    assert np.max(np.abs(f - lor)) / lor.max() < 5e-3


def test_fourier_normalization():
    p = LevyParams(1.1)
    N = 5000
    f = fourier_solution(p, np.arange(-N, N + 1), 0.5)
    # sites beyond N hold ~ lam t / j^(2 alpha) each
    assert abs(f.sum() + 2 * 0.5 * zeta(2.2, N + 1) - 1) < 1e-6
    f2 = fourier_solution(LevyParams(2.0), np.arange(-2000, 2001), 10.0)
    assert abs(f2.sum() - 1) < 1e-6


def test_fourier_rejects_mean_field():
    with pytest.raises(ValueError):
        fourier_solution(LevyParams(0.4), [0], 1.0)


def test_continuum_rate_turns_positive():
    with pytest.raises(ValueError, match="W_k > 0"):
        fourier_solution(LevyParams(1.1), [0], 1.0, dispersion="continuum")


def test_scaling_dispersion_closed_forms():
    j = np.arange(-20, 21)
    t = 3.0
    f = fourier_solution(LevyParams(1.0), j, t, dispersion="scaling")
    s = math.pi * t
    assert np.allclose(f, s / (math.pi * (s**2 + j**2)), atol=1e-8)
    g = fourier_solution(LevyParams(1.5), j, t, dispersion="scaling", D=0.7)
    assert np.allclose(g, np.exp(-(j**2) / (4 * 0.7 * t)) / np.sqrt(4 * math.pi * 0.7 * t),
                       atol=1e-8)
    with pytest.raises(ValueError, match="D explicitly"):
        fourier_solution(LevyParams(1.5), j, t, dispersion="scaling")


def test_stable_density_closed_forms():
    y = np.linspace(-10, 10, 401)
    assert np.array_equal(stable_density(1.0, y), 1 / (np.pi * (1 + y**2)))
    assert stable_density(1.0, 0.0) == pytest.approx(0.31831, abs=1e-5)
    assert stable_density(1.5, 0.0) == pytest.approx(0.28209, abs=1e-5)
    with pytest.raises(ValueError):
        stable_density(0.5, 1.0)


@pytest.mark.parametrize("alpha", [0.8, 1.1, 1.3])
def test_stable_density_against_scipy(alpha):
    y = np.array([0.0, 0.3, 1.0, 2.5, 7.0, 20.0, 49.0, 80.0])
    ref = levy_stable.pdf(y, 2 * alpha - 1, 0.0)
    assert np.allclose(stable_density(alpha, y), ref, rtol=1e-6, atol=1e-10)


def test_stable_distribution_cache():
    S = StableDistribution(1.1)
    y = np.linspace(0, 60, 301)
    assert np.allclose(S(y), stable_density(1.1, y), atol=1e-10)
    assert np.allclose(S(-y), S(y))
    assert abs(S.total_mass() - 1) < 1e-6
    assert np.all(S(y) > 0)
