"""Acceptance suite: one group of tests per criterion.

Run with ``pytest tests/test_acceptance.py``; the terminal summary ends
with one PASS/FAIL line per criterion.  Three checks are expected to fail
and are kept at their stated tolerances on purpose:

* criterion 3 (literal form): the whole zero-mode component of F_2 is not
  zero, only its top u-coefficient is;
* criterion 7 (branch scaling): the 10% band is reached only for much
  larger |m| than 5;
* criterion 9 (AABB): our refined value differs from the reference by 6e-3.
"""

import cmath
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from lorenz_psi.bounds import (
    MAJORANT_SEED,
    check_F_bound,
    check_X_bound,
    convergence_estimate,
    eigenvector_condition,
    k2_discriminant,
    k2_root_test,
    majorant_sequence,
    norm_sequence,
    radius_estimate,
    radius_inequalities,
)
from lorenz_psi.evaluate import BranchSpec, eval_t, residual_norm
from lorenz_psi.exact import GaussianRational as G, I
from lorenz_psi.series import (
    DMode,
    SeriesFamily,
    build_F,
    generate,
    recursion_residual,
    zero_mode_load,
)
from lorenz_psi.singularities import (
    ATTRACTOR_IM_BOUND,
    annulus_samples,
    fit_psi_parameters,
    locate,
)
from lorenz_psi.table1 import TABLE1, verify_table1
from lorenz_psi.taylor import flow, growth_check, growth_rate

TABLE2 = {
    "AB": 0.1714501006,
    "AAB": 0.1617621257,
    "AAAB": 0.1563426260,
    "AABB": 0.1636066901,
}


def criterion(n, title):
    return pytest.mark.criterion(n, title)


# --- 1 ------------------------------------------------------------------------


@criterion(1, "Table 1 reproduced exactly, both families, under 1 s")
def test_table1_exact(note):
    start = time.perf_counter()
    results = {f: verify_table1(f) for f in SeriesFamily}
    elapsed = time.perf_counter() - start
    note(f"{len(TABLE1)} cells x 2 families in {elapsed:.3f} s")
    for f, rows in results.items():
        assert all(r.matches for r in rows), (f, [r.name for r in rows if not r.matches])
    assert elapsed < 1.0


# --- 2 ------------------------------------------------------------------------


@criterion(2, "degree law to m = 200 (D = 0), generation under 2 min")
def test_degree_law(numeric200_d0, note):
    rows = numeric200_d0.degree_report()
    assert [r["m"] for r in rows] == list(range(0, 201))
    assert all(r["u_degree"] <= r["bound"] for r in rows)
    rate = sum(r["attained"] for r in rows) / len(rows)
    seconds = numeric200_d0._cache["generation_seconds"]
    note(f"equality rate {rate:.3f}, generation {seconds:.1f} s")
    assert seconds < 120


# --- 3 ------------------------------------------------------------------------


@criterion(3, "m = 2 cancellation along the zero eigenvector")
def test_m2_zero_mode_component_vanishes(plus12, note):
    load = zero_mode_load(plus12.truncated(1))
    note(f"zero-mode load = {load}")
    assert load.is_zero()


@criterion(3, "m = 2 cancellation along the zero eigenvector")
def test_m2_zero_mode_top_coefficient_vanishes(plus12):
    hist = plus12.truncated(1)
    F = build_F(2, hist)
    top = max(p.u_degree for p in F)
    assert zero_mode_load(hist).top_u_coefficient(top).is_zero()


# --- 4 ------------------------------------------------------------------------


@criterion(4, "exact recursion residual for m <= 60, symbolic D")
def test_exact_recursion_residual(symbolic60, note):
    for m in range(0, 61):
        res = recursion_residual(symbolic60.triple(m), symbolic60.forcing_at(m))
        assert not any(res), m
    assert symbolic60.triple(60).d_degree >= 1
    note(f"generated with verification in {symbolic60._cache['generation_seconds']:.1f} s")


# --- 5 ------------------------------------------------------------------------


@criterion(5, "F and X lemma sweeps to m = 200 for D in {0, 1, i}; condition number 16")
@pytest.mark.parametrize("which", ["numeric200_d0", "numeric200_d1", "numeric200_di"])
def test_lemma_sweeps(which, request):
    series = request.getfixturevalue(which)
    norms = norm_sequence(series)
    bad_F = [m for m in range(3, 201) if not check_F_bound(series, m, norms=norms)[2]]
    bad_X = [m for m in range(8, 201) if not check_X_bound(series, m, norms=norms)[2]]
    assert bad_F == [] and bad_X == []


@criterion(5, "F and X lemma sweeps to m = 200 for D in {0, 1, i}; condition number 16")
def test_eigenvector_condition_exact():
    assert eigenvector_condition() == 16
    assert isinstance(eigenvector_condition(), (int, Fraction))


# --- 6 ------------------------------------------------------------------------


@criterion(6, "majorant dominance and K2 agreement at M = 2000, under 1 min")
@pytest.mark.parametrize("which", ["numeric200_d0", "numeric200_d1", "numeric200_di"])
def test_majorant_and_k2(which, request, note):
    norms = norm_sequence(request.getfixturevalue(which))
    start = time.perf_counter()
    maj = majorant_sequence(norms.values[:MAJORANT_SEED], 2000)
    fit, _ = k2_root_test(maj)
    disc, _ = k2_discriminant(maj.seed)
    elapsed = time.perf_counter() - start
    # x_m passes 1e308 near m = 100, so compare logarithms
    for m in range(norms.M + 1):
        assert math.log(norms[m]) <= maj.log_values[m] + 1e-12, m
    gap = abs(fit - disc) / disc
    note(f"{which[-2:]}: K2 {fit:.4f} vs {disc:.4f}, gap {gap:.1e}, {elapsed:.2f} s")
    assert gap < 1e-4
    assert elapsed < 60


# --- 7 ------------------------------------------------------------------------


@pytest.fixture(scope="module")
def K2(numeric200_d0):
    return convergence_estimate(norm_sequence(numeric200_d0), 0).K2


@criterion(7, "radius inequalities; branch radii ~ 1/(2 pi |m| K2) within 10% for |m| >= 5")
@pytest.mark.parametrize("C", [0, 2j * math.pi, 10])
def test_radius_inequalities(K2, C):
    r = radius_estimate(K2, C)
    assert all(radius_inequalities(r, K2, C))


@criterion(7, "radius inequalities; branch radii ~ 1/(2 pi |m| K2) within 10% for |m| >= 5")
def test_branch_radius_scaling(K2, note):
    ratios = {}
    for m in [5, 6, 8, 10, 20, 50, 100, -5, -10]:
        r = radius_estimate(K2, 2j * math.pi * m)
        ratios[m] = r * 2 * math.pi * abs(m) * K2
    note("ratios " + ", ".join(f"{m}: {v:.3f}" for m, v in ratios.items()))
    assert all(abs(v - 1) <= 0.1 for v in ratios.values())


@criterion(7, "radius inequalities; branch radii ~ 1/(2 pi |m| K2) within 10% for |m| >= 5")
def test_branch_radius_scaling_is_asymptotic(K2):
    # the log factor makes the approach slow but monotone
    ms = [5, 10, 50, 100, 1000, 10000]
    ratios = [radius_estimate(K2, 2j * math.pi * m) * 2 * math.pi * m * K2 for m in ms]
    assert all(a < b < 1 for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] > 0.98


# --- 8 ------------------------------------------------------------------------


@criterion(8, "ODE residual at r/2 decays (ratio <= 0.8 per 5 orders), below 1e-8 at N = 40")
@pytest.mark.parametrize("C,D", [(0, G(0)), (1, I)])
def test_series_satisfies_ode(C, D, note):
    series = generate(40, SeriesFamily.PLUS, DMode.numeric(D), verify=False)
    est = convergence_estimate(norm_sequence(series), C)
    spec = BranchSpec(0.2j, 1j, complex(C), complex(D))
    # off the cut, a quarter turn away from it
    t = spec.t0 + 0.5 * est.r * cmath.exp(-0.5j * math.pi) / spec.b
    orders = list(range(5, 41, 5))
    res = [residual_norm(series, spec, t, N, dps=240) for N in orders]
    note(f"C={C}, D={complex(D)}: N=40 residual {res[-1]:.1e}")
    for a, b in zip(res, res[1:]):
        assert b <= 0.8 * a
    assert res[-1] < 1e-8


# --- 9, 10, 11 ----------------------------------------------------------------


@pytest.fixture(scope="module")
def table2():
    out = {}
    start = time.perf_counter()
    for word in TABLE2:
        out[word] = locate(word)
    return out, time.perf_counter() - start


@criterion(9, "Table 2 |Im t0| within 1e-4 relative, order >= 60, under 10 min total")
@pytest.mark.parametrize("word", list(TABLE2))
def test_table2(table2, word, note):
    results, seconds = table2
    got = abs(results[word].refined.t0.imag)
    rel = abs(got - TABLE2[word]) / TABLE2[word]
    note(f"{word} {got:.10f} (rel {rel:.1e})")
    assert seconds < 600
    assert rel <= 1e-4


@criterion(10, "|t - t0|(|x|+|y|+|z|) >= 1/8 over the final approach decade")
@pytest.mark.parametrize("word", list(TABLE2))
def test_divergence_bound(table2, word, note):
    rep = table2[0][word].divergence
    note(f"{word} min {rep.min_product:.0f}")
    assert rep.d_min <= 1e-3 and rep.samples >= 2
    assert rep.holds and rep.min_product >= 0.125


@criterion(11, "growth inequality on 1e6 random states and on orbits; |Im t0| > 0.037")
def test_growth_inequality_random_states():
    rng = np.random.default_rng(20240501)
    pts = rng.standard_normal((10 ** 6, 3)) * 10.0 ** rng.uniform(-3, 3, (10 ** 6, 1))
    x, y, z = pts.T
    Q = x * x + y * y + z * z
    assert np.all(np.abs(growth_rate(x, y, z)) <= 58 * Q * (1 + 1e-12))


@criterion(11, "growth inequality on 1e6 random states and on orbits; |Im t0| > 0.037")
@pytest.mark.parametrize("word", list(TABLE2))
def test_growth_inequality_on_orbits_and_strip(table2, word):
    r = table2[0][word]
    orbit = flow(r.orbit.initial_state, r.orbit.period, keep_trace=True)
    assert len(orbit.trace) > 10
    assert growth_check(orbit.trace)
    assert abs(r.refined.t0.imag) > ATTRACTOR_IM_BOUND
    assert abs(r.conjugate.t0.imag) > ATTRACTOR_IM_BOUND


# --- 12 -----------------------------------------------------------------------


@criterion(12, "fit recovers synthetic (C, D) to 1e-6; AB held-out rms within 3x training")
def test_fit_round_trip_from_eval_t(fit_series, note):
    t0 = 0.05 + 0.17j
    C, D = 0.7 - 0.4j, G(Fraction(3, 10), Fraction(-1, 5))
    N = 20
    series = generate(N, SeriesFamily.PLUS, DMode.numeric(D), verify=False)
    spec = BranchSpec(t0, 1j, C, complex(D))
    rng = np.random.default_rng(7)
    rad = rng.uniform(0.025, 0.05, 40)
    ang = rng.uniform(-math.pi + 0.3, math.pi - 0.3, 40)
    ts = t0 + rad * np.exp(1j * ang) / spec.b
    vals = np.array([eval_t(series, spec, t, N) for t in ts])
    fit = fit_psi_parameters(ts, vals, fit_series, N, t0 + 2e-4, (0.025, 0.05))
    note(f"|dC| {abs(fit.C - C):.1e}, |dD| {abs(fit.D - complex(D)):.1e}")
    assert fit.family is SeriesFamily.PLUS
    assert abs(fit.C - C) <= 1e-6
    assert abs(fit.D - complex(D)) <= 1e-6


@criterion(12, "fit recovers synthetic (C, D) to 1e-6; AB held-out rms within 3x training")
def test_fit_holdout_on_ab(table2, fit_series, note):
    est = table2[0]["AB"].refined
    window = (0.01, 0.02)
    ts, vals = annulus_samples(est, window)
    fit = fit_psi_parameters(ts, vals, fit_series, 25, est.t0, window)
    note(f"AB rms {fit.rms_residual:.1e}, holdout {fit.holdout_rms:.1e}")
    assert fit.holdout_rms <= 3 * fit.rms_residual
