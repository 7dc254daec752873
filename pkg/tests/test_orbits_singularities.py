import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lorenz_psi.orbits import PeriodicOrbit, SymbolSequence, find_periodic_orbit, itinerary
from lorenz_psi.series import SeriesFamily
from lorenz_psi.singularities import (
    ATTRACTOR_IM_BOUND,
    FitError,
    SingularityEstimate,
    annulus_samples,
    check_divergence_bound,
    fit_psi_parameters,
    nearest_singularity_estimate,
    synthetic_samples,
)
from lorenz_psi.taylor import State, TaylorJet

AB_PERIOD = 1.5586522107  # frozen from our own Newton solve (closure below 1e-12)


# --- symbol sequences -------------------------------------------------------


def test_symbol_sequence_basics():
    s = SymbolSequence("aab")
    assert str(s) == "AAB" and len(s) == 3
    assert s.rotations() == ["AAB", "ABA", "BAA"]
    assert s.equivalent("BAA") and not s.equivalent("ABB")
    assert SymbolSequence("BAA").canonical() == SymbolSequence("ABA").canonical()


@pytest.mark.parametrize("bad", ["", "ABC", "A1"])
def test_symbol_sequence_rejects_bad_letters(bad):
    with pytest.raises(ValueError):
        SymbolSequence(bad)


@pytest.mark.parametrize("word", ["A", "AA", "BBB"])
def test_orbit_words_need_both_letters(word):
    with pytest.raises(ValueError):
        find_periodic_orbit(word)


@given(st.text("AB", min_size=1, max_size=8), st.integers(0, 7))
def test_rotation_is_an_equivalence(word, k):
    k %= len(word)
    assert SymbolSequence(word).equivalent(word[k:] + word[:k])


# --- the AB orbit and its singularity ---------------------------------------


def test_ab_orbit(ab_locate):
    r, _ = ab_locate
    orbit = r.orbit
    assert orbit.period == pytest.approx(AB_PERIOD, abs=1e-9)
    assert orbit.closure_residual < 1e-10
    assert SymbolSequence("AB").equivalent(itinerary(orbit.initial_state, orbit.period))
    assert PeriodicOrbit.from_json(orbit.to_json()) == orbit


def test_conjugate_pair(ab_locate):
    r, _ = ab_locate
    assert r.refined.t0.imag > 0 > r.conjugate.t0.imag
    assert abs(r.refined.t0.imag) == pytest.approx(abs(r.conjugate.t0.imag), abs=1e-10)
    assert r.refined.t0.real == pytest.approx(r.conjugate.t0.real, abs=1e-10)


def test_stages_agree_within_three_sigma(ab_locate):
    r, _ = ab_locate
    assert r.asymptotic.sigma > 0
    assert abs(r.asymptotic.t0 - r.refined.t0) <= 3 * r.asymptotic.sigma


def test_singularity_is_off_the_strip(ab_locate):
    r, _ = ab_locate
    assert abs(r.refined.t0.imag) > ATTRACTOR_IM_BOUND


def test_divergence_bound_on_approach(ab_locate):
    r, _ = ab_locate
    assert r.divergence.holds and r.divergence.d_min <= 1e-3
    # |h|^2 (|y| + |z|) tends to 2/5 near the pole
    closest = r.divergence.quadratic_products[0]
    assert closest[1] == pytest.approx(0.4, rel=0.05)


def test_divergence_check_needs_a_close_trace():
    with pytest.raises(ValueError):
        check_divergence_bound([(0j, 1, 1, 1)], 0.5j)
    with pytest.raises(ValueError):
        check_divergence_bound([], 0.5j)


# --- the asymptotic estimator on a known function ---------------------------


@settings(max_examples=20, deadline=None)
@given(st.floats(-0.5, 0.5), st.floats(0.1, 0.4))
def test_estimator_recovers_a_double_pole_pair(re, im):
    # z(t) = 1/(t - p)^2 + 1/(t - conj p)^2 is real on the axis
    p = complex(re, im)
    n = np.arange(61)
    a = 2 * np.real((n + 1) * p ** (-n - 2.0))
    coeffs = np.zeros((61, 3))
    coeffs[:, 2] = a
    jet = TaylorJet(State(0.0, 0.0, 0.0, a[0]), 60, coeffs)
    est = nearest_singularity_estimate(jet)
    assert est.t0 == pytest.approx(complex(re, abs(im)), abs=1e-8 * abs(p))
    assert est.sigma < 1e-8


def test_estimator_rejects_complex_jets():
    coeffs = np.ones((61, 3), dtype=complex)
    jet = TaylorJet(State(0.1j, 1, 1, 1), 60, coeffs)
    with pytest.raises(ValueError):
        nearest_singularity_estimate(jet)


def test_estimate_validation():
    with pytest.raises(ValueError):
        SingularityEstimate(0.0, 0.1, 0.0, 0.1j, "guess")
    with pytest.raises(ValueError):
        SingularityEstimate(0.0, 0.0, 0.0, 0j, "refined")


# --- psi-series fit ---------------------------------------------------------


def test_fit_round_trip(fit_series):
    t0 = 0.0646 + 0.1715j
    C, D = 1 + 0.5j, 0.3 - 0.2j
    ts, vals = synthetic_samples(fit_series[SeriesFamily.PLUS], t0, 1j, C, D, 20, (0.025, 0.05))
    fit = fit_psi_parameters(ts, vals, fit_series, 20, t0 + 1e-4, (0.025, 0.05), C_guesses=(0j,))
    assert fit.family is SeriesFamily.PLUS
    assert abs(fit.t0 - t0) < 1e-10
    assert abs(fit.C - C) < 1e-6 and abs(fit.D - D) < 1e-6
    assert fit.rms_residual < 1e-10


def test_fit_rejects_bad_input(fit_series):
    t = np.linspace(0.1, 0.2, 4) + 0.1j
    with pytest.raises(ValueError):
        fit_psi_parameters(t, np.ones((4, 3)), fit_series, 20, 0.1j, (0.01, 0.02))
    with pytest.raises(ValueError):
        fit_psi_parameters(t, np.ones((4, 3)), fit_series, 5, 0.1j, (0.01, 0.02))


def test_fit_residual_falls_with_order(ab_locate, fit_series):
    r, _ = ab_locate
    window = (0.025, 0.05)
    ts, vals = annulus_samples(r.refined, window)
    rms = [fit_psi_parameters(ts, vals, fit_series, N, r.refined.t0, window, threshold=1).rms_residual
           for N in (10, 15, 20, 25)]
    assert all(a > b for a, b in zip(rms, rms[1:])), rms


def test_conjugate_singularity_fits_the_other_family(ab_locate, fit_series):
    r, _ = ab_locate
    window = (0.01, 0.02)
    fits = []
    for est in (r.refined, r.conjugate):
        ts, vals = annulus_samples(est, window)
        fits.append(fit_psi_parameters(ts, vals, fit_series, 25, est.t0, window))
    up, down = fits
    assert up.family is SeriesFamily.PLUS and down.family is SeriesFamily.MINUS
    assert down.t0 == pytest.approx(up.t0.conjugate(), abs=1e-8)
    assert down.C == pytest.approx(up.C.conjugate(), rel=1e-6)
    assert down.D == pytest.approx(up.D.conjugate(), rel=1e-6)
    assert up.holdout_rms <= 3 * up.rms_residual
