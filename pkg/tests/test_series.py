from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from lorenz_psi.exact import GaussianRational as G, Mat3, PsiPoly
from lorenz_psi.series import (
    CoeffTriple,
    ConsistencyError,
    DMode,
    EIGENVALUE_SHIFTS,
    SeriesFamily,
    build_A,
    build_F,
    closed_form_step,
    degree_bound,
    eigenvector_matrix,
    generate,
    leading_coefficients,
    poly_to_latex,
    recursion_residual,
    series_from_json,
    series_to_json,
    series_to_latex,
    solve_scalar_poly_ode,
    step_m2,
    zero_mode_load,
)
from lorenz_psi.table1 import TABLE1, table1_fixture, verify_table1


def test_leading_terms():
    # a triple holds (P_{m+1}, Q_m, R_m)
    x2, x1 = leading_coefficients()
    assert x2.P == PsiPoly.constant(G(0, 2))
    assert x2.Q == PsiPoly.constant(G(0, Fraction(-1, 5)))
    assert x2.R == PsiPoly.constant(Fraction(-1, 5))
    assert x1.P == PsiPoly.constant(G(0, Fraction(71, 9)))
    assert x1.Q == PsiPoly.constant(G(0, 2))
    assert x1.R == PsiPoly.constant(Fraction(17, 9))


def test_degree_bound_values():
    assert [degree_bound(m) for m in range(6)] == [1, 1, 2, 2, 3, 3]


@pytest.mark.parametrize("family", list(SeriesFamily))
def test_table1_all_cells(family):
    results = verify_table1(family)
    assert len(results) == len(TABLE1) == 18
    assert all(r.matches for r in results), [r.name for r in results if not r.matches]


def test_table1_harness_flags_a_perturbed_cell():
    raw = {k: dict(v) for k, v in TABLE1.items()}
    raw["R_1"][(1, 0)] = ("167961/729", "0")  # numerator off by one
    bad = [r.name for r in verify_table1(fixture=table1_fixture(raw=raw)) if not r.matches]
    assert bad == ["R_1"]


def test_eigen_data():
    V, Vi = eigenvector_matrix()
    assert V @ Vi == Mat3.identity()
    A0 = build_A(0)
    D = Vi @ A0 @ V
    assert D == Mat3.diag(EIGENVALUE_SHIFTS)
    for m in (-1, 1, 5):
        assert Vi @ build_A(m) @ V == Mat3.diag([s - m for s in EIGENVALUE_SHIFTS])


def test_minus_family_is_the_symmetric_image(plus12, minus12):
    for a, b in zip(plus12.coeffs, minus12.coeffs):
        assert b == a.flipped()


def test_exact_residual_and_literal_oracle(plus12):
    for m in range(-1, 13):
        X = plus12.triple(m)
        F = plus12.forcing_at(m) if m >= 0 else build_F(-1, plus12.truncated(-2))
        assert not any(recursion_residual(X, F))
        if m not in (0, 2):
            # eigenbasis solve against the literal inverse-power sum
            assert closed_form_step(m, F) == X


def test_d_enters_at_m2_only(plus12):
    assert all(plus12.triple(m).d_degree <= 0 for m in range(-2, 2))
    assert plus12.triple(2).d_degree == 1
    assert plus12.R(2).coefficient(0, 1) == G(Fraction(-1, 5))


def test_coefficients_alternate_real_and_imaginary(plus12):
    for c in plus12.coeffs:
        assert c.P.all_imaginary() and c.Q.all_imaginary() and c.R.all_real()


def test_degree_bound_attained(plus12):
    for row in plus12.degree_report():
        assert row["u_degree"] <= row["bound"]


def test_m2_zero_mode_top_coefficient_vanishes(plus12):
    load = zero_mode_load(plus12.truncated(1))
    F = build_F(2, plus12.truncated(1))
    top = max(p.u_degree for p in F)
    assert load.top_u_coefficient(top).is_zero()


def test_m2_step_rejects_a_bad_load(plus12):
    hist = plus12.truncated(1)
    V, _ = eigenvector_matrix()
    # add 7 u^2 along the zero-mode eigenvector of A_2
    extra = V.apply((PsiPoly.u() ** 2 * 7, PsiPoly.zero(), PsiPoly.zero()))
    F = [a + b for a, b in zip(build_F(2, hist), extra)]
    with pytest.raises(ConsistencyError):
        step_m2(hist, tuple(F))


def test_numeric_d_equals_substituted_symbolic(plus12):
    num = generate(12, SeriesFamily.PLUS, DMode.numeric(G(1, -2)))
    assert num.coeffs == plus12.substitute_d(G(1, -2)).coeffs


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([5, -3, Fraction(-7, 2), Fraction(1, 2), G(Fraction(1, 2), 2), G(0, -3)]),
       st.lists(st.tuples(st.integers(-50, 50), st.integers(1, 9), st.integers(-50, 50)),
                min_size=1, max_size=5))
def test_scalar_ode_solver(alpha, coeffs):
    f = PsiPoly({(k, 0): G(Fraction(a, b), c) for k, (a, b, c) in enumerate(coeffs)})
    xi = solve_scalar_poly_ode(alpha, f)
    assert xi.diff_u() == xi.scale(alpha) + f
    assert xi.u_degree <= f.u_degree


def test_scalar_ode_zero_alpha_needs_permission():
    with pytest.raises(Exception):
        solve_scalar_poly_ode(0, PsiPoly.u())
    xi = solve_scalar_poly_ode(0, PsiPoly.u(), allow_zero=True)
    assert xi.diff_u() == PsiPoly.u()


def test_family_and_dmode_parsing():
    assert SeriesFamily.parse("minus") is SeriesFamily.MINUS
    assert DMode.parse("symbolic").is_symbolic
    assert DMode.parse("numeric:1/2,-3").value == G(Fraction(1, 2), -3)
    with pytest.raises(ValueError):
        DMode.parse("numeric")
    with pytest.raises(ValueError):
        generate(-3)


def test_minimal_generation():
    s = generate(-2)
    assert len(s) == 1 and s.max_m == -2


def test_json_round_trip(plus12):
    back = series_from_json(series_to_json(plus12))
    assert back.coeffs == plus12.coeffs
    triple = plus12.triple(3)
    assert CoeffTriple.from_json(triple.to_json()) == triple


def test_latex_layout(plus12):
    tex = series_to_latex(plus12.truncated(3))
    assert r"\frac{1385}{54}" in tex and r"\frac{988}{81}" in tex
    assert poly_to_latex(PsiPoly.zero()) == "0"


def test_symbolic_generation_warns_past_cap():
    with pytest.warns(RuntimeWarning):
        generate(3, d_mode=DMode.symbolic(), symbolic_cap=2)
