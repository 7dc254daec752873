import cmath
import math

import pytest
from hypothesis import given, settings, strategies as st

from lorenz_psi.bounds import convergence_estimate, norm_sequence
from lorenz_psi.evaluate import (
    BranchSpec,
    DomainError,
    eval_eta,
    eval_point,
    eval_t,
    eval_with_derivative,
    ode_residual,
    residual_norm,
    tail_bound,
)
from lorenz_psi.series import DMode, SeriesFamily, generate


@pytest.fixture(scope="module")
def d0_30():
    return generate(30, SeriesFamily.PLUS, DMode.numeric(0), verify=False)


@pytest.fixture(scope="module")
def est(d0_30):
    return convergence_estimate(norm_sequence(d0_30), 0)


SPEC = BranchSpec(0.3j, 1j)


def test_branch_spec_validation():
    with pytest.raises(ValueError):
        BranchSpec(0j, 2)
    assert BranchSpec.default_b(0.1 - 0.2j) == -1j
    assert BranchSpec.for_singularity(0.2j).b == 1j
    assert SPEC.cut_direction() == 1j  # the cut points away from the real axis


def test_points_on_cut_and_at_t0_are_rejected(d0_30):
    with pytest.raises(DomainError):
        eval_t(d0_30, SPEC, 0.3j, 10)
    # on the cut ray t0 + i s
    with pytest.raises(DomainError):
        eval_t(d0_30, SPEC, 0.3j + 0.01j, 10)
    assert not eval_point(SPEC, 0.3j + 0.01j).in_domain
    assert eval_point(SPEC, 0.3j - 0.01j).in_domain


def test_spec_must_match_series(d0_30):
    with pytest.raises(ValueError):
        eval_t(d0_30, BranchSpec(0j, 1, family=SeriesFamily.MINUS), 0.01, 5)
    with pytest.raises(ValueError):
        eval_t(d0_30, BranchSpec(0j, 1, D=1), 0.01, 5)
    with pytest.raises(ValueError):
        eval_t(d0_30, SPEC, 0.31, 31)


def test_leading_behaviour(d0_30):
    h = 1e-4 * cmath.exp(-0.7j)
    x, y, z = eval_t(d0_30, SPEC, SPEC.t0 + h, 10)
    # leading terms 2i/h, -i/(5h^2), -1/(5h^2); b only enters through the logarithm
    assert z * h * h == pytest.approx(-0.2, rel=1e-2)
    assert y * h * h == pytest.approx(-0.2j, rel=1e-2)
    assert x * h == pytest.approx(2j, rel=1e-2)


def test_eta_and_t_agree(d0_30):
    t = SPEC.t0 + 2e-4 * cmath.exp(-1.2j)
    eta = cmath.log(SPEC.b * (t - SPEC.t0))
    a = eval_t(d0_30, SPEC, t, 20)
    b = eval_eta(d0_30, SPEC, eta, 20)
    for u, v in zip(a, b):
        assert u == pytest.approx(v, rel=1e-12)


def test_derivative_matches_finite_difference(d0_30):
    t = SPEC.t0 + 3e-3 * cmath.exp(-0.4j)
    (vals, ders) = eval_with_derivative(d0_30, SPEC, t, 25)
    eps = 1e-7
    plus = eval_t(d0_30, SPEC, t + eps, 25)
    minus = eval_t(d0_30, SPEC, t - eps, 25)
    for p, m, d in zip(plus, minus, ders):
        assert (p - m) / (2 * eps) == pytest.approx(d, rel=1e-6)


def test_residual_is_small_inside_radius(d0_30, est):
    t = SPEC.t0 + 0.5 * est.r * cmath.exp(-0.5j)
    assert residual_norm(d0_30, SPEC, t, 20) < 1e-12
    r = ode_residual(d0_30, SPEC, t, 20)
    assert len(r) == 3


def test_extended_precision_residual_decays(d0_30, est):
    t = SPEC.t0 + 0.5 * est.r * cmath.exp(-0.5j)
    r10 = residual_norm(d0_30, SPEC, t, 10, dps=60)
    r20 = residual_norm(d0_30, SPEC, t, 20, dps=60)
    assert r20 < 1e-10 * r10


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(-2.8, 2.8))
def test_tail_bound_dominates_truncation(d0_30, est, frac, angle):
    t = SPEC.t0 + frac * est.r * cmath.exp(1j * angle) / SPEC.b
    full = eval_t(d0_30, SPEC, t, 30)
    for N in (5, 10):
        part = eval_t(d0_30, SPEC, t, N)
        diff = max(abs(a - b) for a, b in zip(full, part))
        assert diff <= tail_bound(est, SPEC, t, N) * (1 + 1e-9) + 1e-12 * max(abs(v) for v in full)


def test_tail_bound_domain(est):
    with pytest.raises(DomainError):
        tail_bound(est, SPEC, SPEC.t0 + 2 * est.r, 5)


def test_conjugate_symmetry(d0_30):
    # with real C and D, conjugating the plus solution about t0 gives the minus
    # family at conj(t0) with the conjugate orientation
    minus = generate(30, SeriesFamily.MINUS, DMode.numeric(0), verify=False)
    spec_m = BranchSpec(-0.3j, -1j, family=SeriesFamily.MINUS)
    t = SPEC.t0 + 1e-3 * cmath.exp(-1.0j)
    a = eval_t(d0_30, SPEC, t, 20)
    b = eval_t(minus, spec_m, t.conjugate(), 20)
    for u, v in zip(a, b):
        assert u.conjugate() == pytest.approx(v, rel=1e-12)
