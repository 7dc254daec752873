"""Norms, majorants and convergence radii for the psi series.

The norm of a polynomial is the sum of the magnitudes of its
coefficients, and ``|X_m|`` is the largest norm among ``P_{m+1}``,
``Q_m`` and ``R_m``.  Two finite-m inequalities are checked here:

* ``|F_m| <= 30|X_{m-1}| + 28|X_{m-2}| + sum_{j=1}^{m-1} |X_{m-j-1}||X_{j-1}|``
* ``|X_m| <= 192 |F_m| / (m - 2)`` for ``m >= 8``

They combine into the majorant recurrence

    x_m = 960 x_{m-1} + 896 x_{m-2} + 32 sum_{j=1}^{m-1} x_{m-j-1} x_{j-1}

seeded with ``x_m = |X_m|`` for ``m < 8``.  Its growth rate ``K2`` is
estimated two ways: a root-test fit on ``log x_m`` and the radius of
convergence of the generating function, which solves a quadratic whose
discriminant vanishes at the singularity.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from .exact import GaussianRational, PsiPoly, coeff_norm
from .series import PsiSeries, eigenvector_matrix, solve_scalar_poly_ode

__all__ = [
    "BoundsError",
    "NormSequence",
    "MajorantSequence",
    "ConvergenceEstimate",
    "triple_norm",
    "norm_sequence",
    "check_F_bound",
    "check_X_bound",
    "eigenvector_condition",
    "lemma42_bound_check",
    "majorant_sequence",
    "majorant_direct",
    "k2_root_test",
    "k2_discriminant",
    "k2_estimate",
    "k1_estimate",
    "radius_estimate",
    "radius_inequalities",
    "eta_domain",
    "convergence_estimate",
    "bounds_rows",
]

MAJORANT_SEED = 8


class BoundsError(RuntimeError):
    """A precondition or numerical fit failed; ``diagnostics`` holds details."""

    def __init__(self, message: str, diagnostics: Optional[dict] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


def _d_arg(series: PsiSeries, d_value):
    """Choose the value handed to ``coeff_norm`` (exact when possible)."""
    if not series.d_mode.is_symbolic:
        return None
    if d_value is None:
        raise BoundsError("series has symbolic D; pass a numeric d_value")
    if isinstance(d_value, complex):
        if d_value.real.is_integer() and d_value.imag.is_integer():
            return GaussianRational(int(d_value.real), int(d_value.imag))
        return d_value
    if isinstance(d_value, float):
        return GaussianRational(int(d_value)) if d_value.is_integer() else complex(d_value)
    return GaussianRational.coerce(d_value)


def _poly_norm(p: PsiPoly, d_arg) -> float:
    return float(coeff_norm(p, d_arg)) if p.has_d() else float(coeff_norm(p))


def triple_norm(polys: Sequence[PsiPoly], d_arg=None) -> float:
    """``max`` of the component norms; used for both ``X_m`` and ``F_m``."""
    return max(_poly_norm(p, d_arg) for p in polys)


def _effective_d(series: PsiSeries, d_value) -> complex:
    if not series.d_mode.is_symbolic:
        return complex(series.d_mode.value)
    return complex(d_value)


@dataclass(frozen=True)
class NormSequence:
    """``|X_m|`` for ``m = 0..M`` with ``D`` fixed; ``minus_one`` is ``|X_{-1}|``."""

    d_value: complex
    values: Tuple[float, ...]
    minus_one: float

    @property
    def M(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, m: int) -> float:
        if m == -1:
            return self.minus_one
        if m < 0:
            raise IndexError(m)
        return self.values[m]


def norm_sequence(series: PsiSeries, d_value=None) -> NormSequence:
    d_arg = _d_arg(series, d_value)
    values = tuple(triple_norm(series.triple(m).components(), d_arg)
                   for m in range(0, series.max_m + 1))
    minus_one = triple_norm(series.triple(-1).components(), d_arg)
    return NormSequence(_effective_d(series, d_value or 0), values, minus_one)


def _check(lhs: float, rhs: float) -> Tuple[float, float, bool]:
    return lhs, rhs, bool(lhs <= rhs * (1 + 1e-12))


def check_F_bound(series: PsiSeries, m: int, d_value=None,
                  norms: Optional[NormSequence] = None) -> Tuple[float, float, bool]:
    """``(|F_m|, 30|X_{m-1}| + 28|X_{m-2}| + sum, holds)`` in binary64."""
    if m < 3:
        raise BoundsError("the forcing bound is stated for m >= 3")
    if m > series.max_m:
        raise BoundsError(f"series stops at m={series.max_m}")
    d_arg = _d_arg(series, d_value)
    x = norms if norms is not None else norm_sequence(series.truncated(m), d_value)
    lhs = triple_norm(series.forcing_at(m), d_arg)
    conv = math.fsum(x[m - j - 1] * x[j - 1] for j in range(1, m))
    rhs = 30 * x[m - 1] + 28 * x[m - 2] + conv
    return _check(lhs, rhs)


def check_X_bound(series: PsiSeries, m: int, d_value=None,
                  norms: Optional[NormSequence] = None) -> Tuple[float, float, bool]:
    """``(|X_m|, 192|F_m|/(m-2), holds)``; needs ``m >= 8``."""
    if m < 8:
        raise BoundsError("the solution bound |X_m| <= 192|F_m|/(m-2) needs m >= 8")
    if m > series.max_m:
        raise BoundsError(f"series stops at m={series.max_m}")
    d_arg = _d_arg(series, d_value)
    lhs = norms[m] if norms is not None else triple_norm(series.triple(m).components(), d_arg)
    rhs = 192 * triple_norm(series.forcing_at(m), d_arg) / (m - 2)
    return _check(lhs, rhs)


def eigenvector_condition(family="plus") -> Fraction:
    """Exact ``||V||_inf * ||V^{-1}||_inf`` (equals 16)."""
    V, Vi = eigenvector_matrix(family)
    a, b = V.inf_norm(), Vi.inf_norm()
    if not isinstance(a, Fraction) or not isinstance(b, Fraction):
        raise BoundsError("eigenvector matrix entries have irrational moduli")
    return a * b


def lemma42_bound_check(alpha, f: PsiPoly, a: float, d_value=None) -> bool:
    """Solve ``xi' = alpha xi + f`` and test ``|xi| <= (1/|alpha|) a/(a-1) |f|``.

    The hypothesis ``|alpha| >= a (n + 1/2)`` with ``n = deg f`` and
    ``a > 1`` is enforced.
    """
    alpha = GaussianRational.coerce(alpha)
    n = max(f.u_degree, 0)
    if a <= 1:
        raise BoundsError("need a > 1")
    if abs(alpha) < a * (n + 0.5):
        raise BoundsError(f"|alpha| = {abs(alpha)} < a (n + 1/2) = {a * (n + 0.5)}")
    xi = solve_scalar_poly_ode(alpha, f)
    d_arg = d_value
    lhs = _poly_norm(xi, d_arg)
    rhs = _poly_norm(f, d_arg) * a / ((a - 1) * abs(alpha))
    return lhs <= rhs * (1 + 1e-12)


# ---------------------------------------------------------------------------
# majorant
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MajorantSequence:
    log_values: np.ndarray
    seed: Tuple[float, ...]

    @property
    def M(self) -> int:
        return len(self.log_values) - 1

    def value(self, m: int) -> float:
        return math.exp(self.log_values[m])


def majorant_sequence(seed: Sequence[float], M: int) -> MajorantSequence:
    """Evaluate the majorant recurrence for ``m <= M`` in the log domain."""
    seed = tuple(float(s) for s in seed[:MAJORANT_SEED])
    if len(seed) < MAJORANT_SEED:
        raise BoundsError(f"need {MAJORANT_SEED} seed values x_0..x_7")
    if M < MAJORANT_SEED:
        raise BoundsError("M must be at least 8")
    if min(seed) <= 0:
        raise BoundsError("seed values must be positive")
    L = np.empty(M + 1)
    L[:MAJORANT_SEED] = np.log(seed)
    log960, log896, log32 = math.log(960), math.log(896), math.log(32)
    for m in range(MAJORANT_SEED, M + 1):
        k = m - 2  # sum_{j=1}^{m-1} x_{m-j-1} x_{j-1} = sum_{a+b=m-2} x_a x_b
        conv = logsumexp(L[: k + 1] + L[k::-1])
        L[m] = logsumexp([log960 + L[m - 1], log896 + L[m - 2], log32 + conv])
    return MajorantSequence(L, seed)


def majorant_direct(seed: Sequence[float], M: int) -> List[float]:
    """Plain floating evaluation (overflows for large M); an oracle for small M."""
    x = [float(s) for s in seed[:MAJORANT_SEED]]
    for m in range(MAJORANT_SEED, M + 1):
        conv = math.fsum(x[m - j - 1] * x[j - 1] for j in range(1, m))
        x.append(960 * x[m - 1] + 896 * x[m - 2] + 32 * conv)
    return x


def k2_root_test(maj: MajorantSequence, lo: Optional[int] = None, hi: Optional[int] = None,
                 corrections: int = 3) -> Tuple[float, dict]:
    """Fit ``log x_m = m log K2 + s log m + c + sum_k a_k / m^k`` on ``[lo, hi]``."""
    hi = maj.M if hi is None else hi
    lo = max(MAJORANT_SEED, hi // 2) if lo is None else lo
    m = np.arange(lo, hi + 1, dtype=float)
    cols = [m, np.log(m), np.ones_like(m)] + [m ** (-k) for k in range(1, corrections + 1)]
    A = np.column_stack(cols)
    y = maj.log_values[lo: hi + 1]
    # column scaling keeps the normal equations well conditioned
    scale = np.abs(A).max(axis=0)
    coef, *_ = np.linalg.lstsq(A / scale, y, rcond=None)
    coef = coef / scale
    resid = y - A @ coef
    return math.exp(coef[0]), {"window": (lo, hi), "log_K2": coef[0], "s": coef[1],
                               "max_abs_residual": float(np.max(np.abs(resid)))}


def _seed_polynomial(seed: Sequence[float]) -> np.ndarray:
    """Coefficients ``c_0..c_7`` of the generating-function equation."""
    x = [float(s) for s in seed[:MAJORANT_SEED]]
    c = []
    for k in range(MAJORANT_SEED):
        rhs = 0.0
        if k >= 1:
            rhs += 960 * x[k - 1]
        if k >= 2:
            rhs += 896 * x[k - 2] + 32 * math.fsum(x[a] * x[k - 2 - a] for a in range(k - 1))
        c.append(x[k] - rhs)
    return np.array(c)


def k2_discriminant(seed: Sequence[float]) -> Tuple[float, dict]:
    """``1/rho`` where ``rho`` is the smallest positive root of the discriminant.

    The generating function ``f(Z) = sum x_m Z^m`` obeys
    ``32 Z^2 f^2 - (1 - 960Z - 896Z^2) f + c(Z) = 0`` with ``c`` of degree
    at most seven, so ``f`` branches where
    ``(1 - 960Z - 896Z^2)^2 - 128 Z^2 c(Z)`` vanishes.
    """
    c = _seed_polynomial(seed)
    lin = np.polynomial.Polynomial([1.0, -960.0, -896.0])
    disc = lin ** 2 - np.polynomial.Polynomial([0.0, 0.0, 128.0]) * np.polynomial.Polynomial(c)
    # rescale Z = w / 1000 so coefficients are of comparable size
    w_scale = 1e-3
    scaled = np.polynomial.Polynomial(disc.coef * w_scale ** np.arange(len(disc.coef)))
    roots = scaled.roots() * w_scale
    positive = sorted(r.real for r in roots if abs(r.imag) <= 1e-8 * abs(r) and r.real > 0)
    if not positive:
        raise BoundsError("discriminant has no positive real root", {"roots": roots.tolist()})
    rho = positive[0]
    dd = disc.deriv()
    for _ in range(8):  # Newton polish
        step = disc(rho) / dd(rho)
        rho -= step
        if abs(step) <= 1e-17 * rho:
            break
    smallest = min(roots, key=abs)
    return 1.0 / rho, {"rho": rho, "smallest_modulus_root": complex(smallest),
                       "c": c.tolist()}


def k2_estimate(maj: MajorantSequence, rtol: float = 1e-6) -> float:
    """Root-test estimate of ``K2``, cross-checked against the discriminant.

    Raises :class:`BoundsError` when fits over two tail windows disagree
    by more than ``rtol`` or when the two methods disagree by more than
    ``100 * rtol``.
    """
    if maj.M < 100:
        raise BoundsError("need at least 100 majorant terms for a stable fit")
    k_full, info_full = k2_root_test(maj)
    k_late, info_late = k2_root_test(maj, lo=(3 * maj.M) // 4)
    k_disc, info_disc = k2_discriminant(maj.seed)
    diag = {"full": info_full, "late": info_late, "discriminant": info_disc,
            "K2_fit": k_full, "K2_late": k_late, "K2_disc": k_disc}
    if abs(k_full - k_late) > rtol * k_full:
        raise BoundsError("root-test fit is not stable across tail windows", diag)
    if abs(k_full - k_disc) > 100 * rtol * k_disc:
        raise BoundsError("root-test and discriminant estimates disagree", diag)
    return k_full


def k1_estimate(maj: MajorantSequence, K2: float) -> float:
    """Smallest ``K1`` with ``x_m <= K1 K2^m`` over the computed range."""
    m = np.arange(maj.M + 1)
    return float(np.exp(np.max(maj.log_values - m * math.log(K2))))


# ---------------------------------------------------------------------------
# radius and domain
# ---------------------------------------------------------------------------


def radius_inequalities(r: float, K2: float, C: complex) -> Tuple[bool, bool]:
    """The two sufficient conditions ``r < 1/K2`` and ``r(|log r| + pi + |C|) < 1/K2``."""
    return (r < 1 / K2, r * (abs(math.log(r)) + math.pi + abs(C)) < 1 / K2)


def radius_estimate(K2: float, C: complex = 0, safety: float = 0.99) -> float:
    """Largest admissible radius, found by bisection and shrunk by ``safety``.

    ``g(r) = r(|log r| + pi + |C|)`` is increasing on ``(0, inf)``, and
    ``g(r) > r`` there, so the boundary ``g(r) = 1/K2`` also satisfies the
    first condition.
    """
    if K2 <= 0:
        raise BoundsError("K2 must be positive")
    target = 1.0 / K2
    extra = math.pi + abs(C)

    def g(r):
        return r * (abs(math.log(r)) + extra)

    lo, hi = 0.0, target
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if g(mid) < target:
            lo = mid
        else:
            hi = mid
    r = lo * safety
    ok = radius_inequalities(r, K2, C)
    if not all(ok):  # pragma: no cover - guaranteed by construction
        raise BoundsError("radius bisection failed", {"r": r})
    return r


def eta_domain(K2: float, C: complex = 0, branch_range: Sequence[int] = range(-3, 4)) -> List[dict]:
    """Half-strips ``Re(eta) <= log r_k``, ``-pi + 2 pi k < Im(eta) <= pi + 2 pi k``.

    On sheet ``k`` the log term is shifted by ``2 pi i k``, which acts as
    replacing ``C`` by ``C + 2 pi i k`` in the radius condition.
    """
    out = []
    for k in branch_range:
        r = radius_estimate(K2, complex(C) + 2j * math.pi * k)
        out.append({"branch": int(k), "r": r, "re_max": math.log(r),
                    "im_lo": -math.pi + 2 * math.pi * k, "im_hi": math.pi + 2 * math.pi * k})
    return out


@dataclass(frozen=True)
class ConvergenceEstimate:
    K2: float
    K1: float
    r: float
    C_used: complex
    D_used: complex
    method: str
    diagnostics: dict = field(default_factory=dict, compare=False)

    def to_json(self) -> dict:
        def cx(z):
            return [float(z.real), float(z.imag)]

        return {"K2": self.K2, "K1": self.K1, "r": self.r, "C_used": cx(complex(self.C_used)),
                "D_used": cx(complex(self.D_used)), "method": self.method}


def convergence_estimate(norms: NormSequence, C: complex = 0, M: int = 2000,
                         method: str = "root_test") -> ConvergenceEstimate:
    """Majorant, ``K2``, ``K1`` and radius from the first eight norms."""
    if norms.M < MAJORANT_SEED - 1:
        raise BoundsError("need |X_0| .. |X_7|")
    maj = majorant_sequence(norms.values[:MAJORANT_SEED], M)
    if method == "root_test":
        K2 = k2_estimate(maj)
    elif method == "discriminant":
        K2, _ = k2_discriminant(maj.seed)
    else:
        raise ValueError(f"unknown method {method!r}")
    K1 = k1_estimate(maj, K2)
    r = radius_estimate(K2, C)
    fit, info = k2_root_test(maj)
    disc, _ = k2_discriminant(maj.seed)
    return ConvergenceEstimate(K2, K1, r, complex(C), norms.d_value, method,
                               {"K2_root_test": fit, "K2_discriminant": disc,
                                "relative_gap": abs(fit - disc) / disc, "M": M})


def bounds_rows(series: PsiSeries, d_value=None, norms: Optional[NormSequence] = None,
                maj: Optional[MajorantSequence] = None) -> List[dict]:
    """One row per ``m``: norm, majorant and both finite-m inequalities."""
    x = norms if norms is not None else norm_sequence(series, d_value)
    if maj is None and x.M >= MAJORANT_SEED - 1:
        maj = majorant_sequence(x.values[:MAJORANT_SEED], max(x.M, MAJORANT_SEED))
    rows = []
    for m in range(0, series.max_m + 1):
        row = {"m": m, "norm_X": x[m],
               "majorant": maj.value(m) if maj is not None else float("nan")}
        row.update(F_lhs="", F_rhs="", F_margin="", X_lhs="", X_rhs="", X_margin="")
        if m >= 3:
            lhs, rhs, _ = check_F_bound(series, m, d_value, x)
            row.update(F_lhs=lhs, F_rhs=rhs, F_margin=rhs - lhs)
        if m >= 8:
            lhs, rhs, _ = check_X_bound(series, m, d_value, x)
            row.update(X_lhs=lhs, X_rhs=rhs, X_margin=rhs - lhs)
        rows.append(row)
    return rows
