import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lorenz_psi.bounds import (
    BoundsError,
    MAJORANT_SEED,
    bounds_rows,
    check_F_bound,
    check_X_bound,
    convergence_estimate,
    eigenvector_condition,
    eta_domain,
    k1_estimate,
    k2_discriminant,
    k2_root_test,
    lemma42_bound_check,
    majorant_direct,
    majorant_sequence,
    norm_sequence,
    radius_estimate,
    radius_inequalities,
)
from lorenz_psi.exact import GaussianRational as G, PsiPoly, coeff_norm
from lorenz_psi.series import DMode, SeriesFamily, generate

# frozen self-regression value of K2 (root test at M = 2000, D = 0)
K2_PINNED = 969.2588


@pytest.fixture(scope="module")
def d0_40():
    return generate(40, SeriesFamily.PLUS, DMode.numeric(0), verify=False)


def test_exact_low_order_norms(plus12):
    assert coeff_norm(plus12.triple(-1).P, mode="rational") == Fraction(71, 9)
    x = norm_sequence(plus12, 0)
    assert x.minus_one == pytest.approx(71 / 9)
    assert x[0] == pytest.approx(9880 / 81)  # |P_1| dominates X_0


def test_symbolic_series_needs_a_d_value(plus12):
    with pytest.raises(BoundsError):
        norm_sequence(plus12)


def test_lemma_checks_small_m(d0_40):
    x = norm_sequence(d0_40)
    for m in range(3, 41):
        assert check_F_bound(d0_40, m, norms=x)[2]
    for m in range(8, 41):
        assert check_X_bound(d0_40, m, norms=x)[2]
    with pytest.raises(BoundsError):
        check_F_bound(d0_40, 2)
    with pytest.raises(BoundsError):
        check_X_bound(d0_40, 7)


def test_eigenvector_condition_is_sixteen():
    assert eigenvector_condition() == 16
    assert eigenvector_condition("minus") == 16


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 4), st.integers(6, 30),
       st.lists(st.integers(-20, 20), min_size=1, max_size=5))
def test_lemma42_property(extra, alpha, coeffs):
    f = PsiPoly({(k, 0): G(c, k - c) for k, c in enumerate(coeffs)})
    n = max(f.u_degree, 0)
    a = 1.5
    alpha = max(alpha, math.ceil(a * (n + 0.5)) + extra)
    assert lemma42_bound_check(alpha, f, a)
    assert lemma42_bound_check(-alpha, f, a)


def test_lemma42_hypothesis_enforced():
    with pytest.raises(BoundsError):
        lemma42_bound_check(1, PsiPoly.u() ** 3, 2.0)


def test_majorant_log_domain_matches_direct():
    seed = [1.0 + k for k in range(MAJORANT_SEED)]
    direct = majorant_direct(seed, 60)
    maj = majorant_sequence(seed, 60)
    for m in range(61):
        assert maj.value(m) == pytest.approx(direct[m], rel=1e-12)


def test_majorant_validation():
    with pytest.raises(BoundsError):
        majorant_sequence([1.0] * 5, 100)
    with pytest.raises(BoundsError):
        majorant_sequence([1.0] * 7 + [0.0], 100)


@settings(max_examples=10, deadline=None)
@given(st.lists(st.floats(0.5, 2.0), min_size=MAJORANT_SEED, max_size=MAJORANT_SEED))
def test_k2_methods_agree_on_perturbed_seeds(factors):
    base = norm_sequence(generate(7, SeriesFamily.PLUS, DMode.numeric(0), verify=False)).values
    seed = [b * f for b, f in zip(base, factors)]
    maj = majorant_sequence(seed, 2000)
    fit, _ = k2_root_test(maj)
    disc, _ = k2_discriminant(seed)
    assert fit == pytest.approx(disc, rel=1e-4)


def test_k2_pinned(d0_40):
    est = convergence_estimate(norm_sequence(d0_40), 0, 2000)
    assert est.K2 == pytest.approx(K2_PINNED, rel=1e-6)
    assert est.diagnostics["relative_gap"] < 1e-4
    maj = majorant_sequence(norm_sequence(d0_40).values[:MAJORANT_SEED], 2000)
    assert est.K1 == pytest.approx(k1_estimate(maj, est.K2))
    assert est.K1 >= norm_sequence(d0_40)[0]


def test_radius_monotone_in_C():
    K2 = K2_PINNED
    r0 = radius_estimate(K2, 0)
    r1 = radius_estimate(K2, 2j * math.pi)
    r2 = radius_estimate(K2, 10)
    assert r0 > r1 > r2 > 0
    for C, r in ((0, r0), (2j * math.pi, r1), (10, r2)):
        assert all(radius_inequalities(r, K2, C))
        assert not all(radius_inequalities(r / 0.99 * 1.01, K2, C))


def test_eta_domain_sheets():
    dom = eta_domain(K2_PINNED, 0, range(-2, 3))
    assert [d["branch"] for d in dom] == [-2, -1, 0, 1, 2]
    rs = {d["branch"]: d["r"] for d in dom}
    assert rs[0] > rs[1] == pytest.approx(rs[-1])
    assert dom[2]["im_lo"] == pytest.approx(-math.pi)


def test_bounds_rows_shape(d0_40):
    rows = bounds_rows(d0_40)
    assert len(rows) == 41
    assert rows[2]["F_lhs"] == "" and rows[8]["X_margin"] > 0
