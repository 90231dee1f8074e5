import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levyxy.coupling import build_power_law
from levyxy.quantum import EvolutionEngine, SectorBasis, full_trace_correlation
from levyxy.sampling import (InitialStateEnsemble, MeasurementPlan, correlation_sigma,
                             draw_ensemble, estimate_correlation, load_ensemble,
                             member_expectations, save_ensemble, shot_noise_sigma)

DENSE = EvolutionEngine("dense-eigen")


def test_shot_noise_values():
    assert shot_noise_sigma(0.5, 100) == pytest.approx(0.05)
    assert shot_noise_sigma(0.0, 7) == 0 and shot_noise_sigma(1.0, 7) == 0
    assert shot_noise_sigma(0.2, 50) == pytest.approx(np.sqrt(0.16 / 50))
    with pytest.raises(ValueError):
        shot_noise_sigma(1.2, 10)


def test_correlation_sigma_values():
    assert correlation_sigma([0.05]) == pytest.approx(0.1)
    assert correlation_sigma(np.full(60, 0.05)) == pytest.approx(2 * 0.05 / np.sqrt(60))
    assert correlation_sigma([shot_noise_sigma(0.5, 100)] * 60, 60) == pytest.approx(0.01291,
                                                                                      abs=1e-5)


@settings(max_examples=30, deadline=None)
@given(L=st.integers(3, 16), pairs=st.integers(1, 20), seed=st.integers(0, 2**32))
def test_ensemble_invariants(L, pairs, seed):
    ens = draw_ensemble(L, 2 * pairs, seed=seed)
    c = L // 2
    assert all((m >> c) & 1 for m in ens.members)
    mags = ens.magnetizations()
    if L % 2:
        assert np.all(mags == 1)
    else:
        # L - 1 odd: the pair straddles the two sectors next to balance
        assert set(mags[::2] + mags[1::2]) == {2}


def test_ensemble_pair_identity_at_t0():
    ens = draw_ensemble(11, 40, seed=3)
    s = ens.spins().astype(float)
    for a, b in zip(s[::2], s[1::2]):
        assert np.array_equal(0.5 * (a + b), np.eye(11)[5])


def test_three_site_enumeration():
    seen = {m for seed in range(200) for m in draw_ensemble(3, 2, center=1, seed=seed).members}
    assert seen == {0b011, 0b110}


def test_determinism():
    a = draw_ensemble(13, 20, seed=5)
    assert a == draw_ensemble(13, 20, seed=5)
    assert a.members != draw_ensemble(13, 20, seed=6).members


def test_infeasible_sector():
    with pytest.raises(ValueError, match="infeasible"):
        draw_ensemble(12, 4, remainder_magnetization=0)
    with pytest.raises(ValueError):
        draw_ensemble(9, 3)


def test_unrestricted_sampling_covers_sectors():
    ens = draw_ensemble(9, 400, seed=0, remainder_magnetization="any")
    assert len(set(ens.magnetizations())) > 3


def test_pairing_validated():
    with pytest.raises(ValueError):
        InitialStateEnsemble(5, (0b00100, 0b00100), 2, 0)


def test_ensemble_file_roundtrip(tmp_path):
    ens = draw_ensemble(9, 10, seed=2)
    save_ensemble(ens, tmp_path / "e.txt")
    lines = (tmp_path / "e.txt").read_text().splitlines()
    assert lines[0] == "# L=9 center=4 seed=2" and set(lines[1]) <= {"u", "d"}
    assert load_ensemble(tmp_path / "e.txt") == ens


def test_estimate_identities_exact_expectations():
    L = 9
    J = build_power_law(L, 1.0, 1.0)
    ens = draw_ensemble(L, 30, seed=1)
    t = np.linspace(0, 3, 7)
    f = estimate_correlation(ens, DENSE, J, t)
    assert np.array_equal(f.values[0], np.eye(L)[L // 2])
    assert np.allclose(f.values.sum(axis=1), f.values[0].sum(), atol=1e-12)


def test_balanced_sector_matches_its_own_exact_average():
    # the sampled sector average converges to the exhaustive sector average
    L = 9
    J = build_power_law(L, 1.0, 1.0)
    c = L // 2
    t = np.linspace(0, 4, 9)
    others = [i for i in range(L) if i != c]
    configs = [(1 << c) | sum(1 << i for i in ups) for ups in itertools.combinations(others, 4)]
    exact = member_expectations(configs, DENSE, J, t).mean(axis=0)
    f = estimate_correlation(draw_ensemble(L, 240, seed=0), DENSE, J, t)
    z = np.abs(f.values - exact)[1:] / f.sigmas[1:]
    assert z.max() < 4.5


def test_unrestricted_sampling_is_unbiased_for_trace():
    L = 9
    J = build_power_law(L, 1.0, 1.0)
    t = np.linspace(0, 4, 9)
    c = L // 2
    ups = [w for w in range(1 << L) if (w >> c) & 1]
    exact = member_expectations(ups, DENSE, J, t).mean(axis=0)
    full = full_trace_correlation(J, L, t)
    assert np.allclose(exact, full.values, atol=1e-12)


def test_finite_shots_noise_level():
    L = 7
    J = build_power_law(L, 1.0, 1.0)
    ens = draw_ensemble(L, 60, seed=0)
    t = np.array([0.0, 1.0, 2.0])
    runs = [estimate_correlation(ens, DENSE, J, t, MeasurementPlan(60, 100, seed=s))
            for s in range(80)]
    emp = np.std([r.values for r in runs], axis=0, ddof=1)[1:]
    pred = np.mean([r.sigmas for r in runs], axis=0)[1:]
    assert np.all(np.abs(emp / pred - 1) < 0.35)


def test_plan_validation():
    with pytest.raises(ValueError):
        MeasurementPlan(3)
    with pytest.raises(ValueError):
        MeasurementPlan(4, N_m=0)
    ens = draw_ensemble(5, 4)
    with pytest.raises(ValueError, match="N_u"):
        estimate_correlation(ens, DENSE, build_power_law(5, 1, 1), [0.0], MeasurementPlan(6))


def test_bias_cancel_and_preparation_errors_run():
    L = 7
    J = build_power_law(L, 1.0, 1.0)
    ens = draw_ensemble(L, 20, seed=0)
    t = [0.0, 1.0]
    plain = estimate_correlation(ens, DENSE, J, t)
    both = estimate_correlation(ens, DENSE, J, t, bias_cancel=True)
    # without any decay the centre-down set mirrors the centre-up set
    assert np.allclose(plain.values, both.values, atol=1e-12)
    noisy = estimate_correlation(ens, DENSE, J, t, prep_error=0.2)
    assert not np.allclose(noisy.values[0], plain.values[0])


def test_workers_do_not_change_results():
    L = 9
    J = build_power_law(L, 1.0, 1.2)
    ens = draw_ensemble(L, 12, seed=4)
    t = [0.5, 1.5]
    for engine in (DENSE, EvolutionEngine("krylov")):
        one = estimate_correlation(ens, engine, J, t, workers=1)
        two = estimate_correlation(ens, engine, J, t, workers=2)
        assert np.max(np.abs(one.values - two.values)) <= 1e-12


def test_even_length_sectors():
    ens = draw_ensemble(8, 6, seed=0)
    assert all(SectorBasis(8, bin(m).count("1")).contains([m])[0] for m in ens.members)
