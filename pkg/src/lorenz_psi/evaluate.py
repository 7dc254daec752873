"""Evaluation of truncated psi series and their Lorenz residuals.

A :class:`BranchSpec` fixes the singularity ``t0``, the unit complex
number ``b`` that orients the branch cut, the free constants ``C`` and
``D`` and the family.  Points are mapped to ``eta = Log(b (t - t0))``
with the principal logarithm, so the cut is the ray
``{t0 - conj(b) p : p >= 0}``.

Truncation order ``N`` keeps every power ``(t - t0)^n`` with ``n <= N``
in each of ``x``, ``y`` and ``z``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import mpmath
import numpy as np

from .bounds import ConvergenceEstimate
from .exact import GaussianRational
from .series import PsiSeries, SeriesFamily

__all__ = [
    "DomainError",
    "BranchSpec",
    "EvalPoint",
    "eval_point",
    "eval_t",
    "eval_eta",
    "eval_with_derivative",
    "ode_residual",
    "residual_norm",
    "tail_bound",
    "DEFAULT_SLEEVE",
]

DEFAULT_SLEEVE = 1e-3


class DomainError(ValueError):
    """Evaluation requested at ``t0`` or inside the cut sleeve."""


@dataclass(frozen=True)
class BranchSpec:
    t0: complex
    b: complex
    C: complex = 0j
    D: complex = 0j
    family: SeriesFamily = SeriesFamily.PLUS

    def __post_init__(self):
        if abs(abs(self.b) - 1) > 1e-14:
            raise ValueError(f"|b| must be 1, got {abs(self.b)!r}")
        object.__setattr__(self, "family", SeriesFamily.parse(self.family))

    @staticmethod
    def default_b(t0: complex) -> complex:
        """``-i`` below the real axis, ``+i`` above, so the cut avoids it."""
        return -1j if complex(t0).imag < 0 else 1j

    @classmethod
    def for_singularity(cls, t0: complex, C=0j, D=0j, family=SeriesFamily.PLUS) -> "BranchSpec":
        return cls(complex(t0), cls.default_b(t0), complex(C), complex(D), family)

    def cut_direction(self) -> complex:
        return -self.b.conjugate()


@dataclass(frozen=True)
class EvalPoint:
    t: complex
    eta: complex
    in_domain: bool


def eval_point(spec: BranchSpec, t: complex, sleeve: float = DEFAULT_SLEEVE) -> EvalPoint:
    w = spec.b * (complex(t) - spec.t0)
    if w == 0:
        return EvalPoint(complex(t), complex("nan"), False)
    eta = cmath.log(w)
    return EvalPoint(complex(t), eta, abs(eta.imag) < math.pi - sleeve)


def _check_point(spec: BranchSpec, t: complex, sleeve: float) -> complex:
    pt = eval_point(spec, t, sleeve)
    if not pt.in_domain:
        raise DomainError(f"t = {t} is at t0 or within {sleeve} rad of the branch cut")
    return pt.eta


# ---------------------------------------------------------------------------
# numeric coefficient tables
# ---------------------------------------------------------------------------


def _check_spec(series: PsiSeries, spec: BranchSpec):
    if series.family is not spec.family:
        raise ValueError("series family and branch family differ")
    if not series.d_mode.is_symbolic:
        dv = complex(series.d_mode.value)
        if abs(dv - complex(spec.D)) > 1e-12 * max(1.0, abs(dv)):
            raise ValueError(f"series was generated with D = {dv}, spec asks for {spec.D}")


class _Table:
    """Per-power coefficient arrays (ascending in u) for one value of D."""

    def __init__(self, series: PsiSeries, D: complex, dps: Optional[int]):
        self.dps = dps
        self.P: Dict[int, list] = {}
        self.Q: Dict[int, list] = {}
        self.R: Dict[int, list] = {}
        for c in series.coeffs:
            self.P[c.m + 1] = self._coeffs(c.P, D)
            self.Q[c.m] = self._coeffs(c.Q, D)
            self.R[c.m] = self._coeffs(c.R, D)
        self.max_power = series.max_m

    def _coeffs(self, poly, D):
        if self.dps is None:
            return np.array(poly.u_coefficients(D), dtype=complex)
        # exact rationals converted at the working precision
        n = poly.u_degree + 1
        out = [mpmath.mpc(0)] * max(n, 0)
        Dm = mpmath.mpc(D)
        for (up, dp), c in poly.iter_terms():
            coef = mpmath.mpc(mpmath.mpf(c.re.numerator) / c.re.denominator,
                              mpmath.mpf(c.im.numerator) / c.im.denominator)
            out[up] += coef * Dm ** dp
        return out


def _table(series: PsiSeries, D: complex, dps: Optional[int]) -> _Table:
    key = ("table", complex(D), dps)
    tab = series._cache.get(key)
    if tab is None:
        with mpmath.workdps(dps or 15):
            tab = _Table(series, complex(D), dps)
        series._cache[key] = tab
    return tab


def _horner(coeffs, u):
    acc = 0
    for c in reversed(coeffs):
        acc = acc * u + c
    return acc


def _dhorner(coeffs, u):
    """Value and u-derivative of a polynomial."""
    val = 0
    der = 0
    for c in reversed(coeffs):
        der = der * u + val
        val = val * u + c
    return val, der


def _sums(series, spec, h, u, N, dps, derivative):
    tab = _table(series, spec.D, dps)
    if N > series.max_m:
        raise ValueError(f"N = {N} exceeds the generated order {series.max_m}")
    out_val = []
    out_der = []
    for store, start in ((tab.P, -1), (tab.Q, -2), (tab.R, -2)):
        val = 0
        der = 0
        for n in range(N, start - 1, -1):  # Horner in h from the top power down
            p, dp = _dhorner(store[n], u)
            val = val * h + p
            if derivative:
                # d/dt [p(u) h^n] = (p'(u) + n p(u)) h^(n-1)
                der = der * h + (dp + n * p)
        val = val * h ** start
        der = der * h ** (start - 1)
        out_val.append(val)
        out_der.append(der)
    return out_val, out_der


def _prepare(spec: BranchSpec, t, dps):
    if dps is None:
        h = complex(t) - spec.t0
        u = cmath.log(spec.b * h) + spec.C
        return h, u
    h = mpmath.mpc(t) - mpmath.mpc(spec.t0)
    u = mpmath.log(mpmath.mpc(spec.b) * h) + mpmath.mpc(spec.C)
    return h, u


def eval_t(series: PsiSeries, spec: BranchSpec, t: complex, N: int = 30,
           dps: Optional[int] = None, sleeve: float = DEFAULT_SLEEVE) -> Tuple:
    """Partial sums ``(x, y, z)`` through power ``N`` at ``t``.

    ``dps`` switches to mpmath with that many decimal digits; ``t`` may
    then be an mpmath number.
    """
    _check_spec(series, spec)
    _check_point(spec, complex(t), sleeve)
    with mpmath.workdps(dps or 15):
        h, u = _prepare(spec, t, dps)
        vals, _ = _sums(series, spec, h, u, N, dps, derivative=False)
    return tuple(vals)


def eval_with_derivative(series: PsiSeries, spec: BranchSpec, t, N: int = 30,
                         dps: Optional[int] = None, sleeve: float = DEFAULT_SLEEVE):
    """``((x, y, z), (x', y', z'))`` with term-wise exact differentiation."""
    _check_spec(series, spec)
    _check_point(spec, complex(t), sleeve)
    with mpmath.workdps(dps or 15):
        h, u = _prepare(spec, t, dps)
        vals, ders = _sums(series, spec, h, u, N, dps, derivative=True)
    return tuple(vals), tuple(ders)


def eval_eta(series: PsiSeries, spec: BranchSpec, eta: complex, N: int = 30) -> Tuple:
    """Evaluate in the ``eta`` plane: ``(t - t0) = e^eta / b`` and ``u = eta + C``.

    ``eta`` is not reduced modulo ``2 pi i``; moving to another sheet is
    the same as shifting ``C`` by a multiple of ``2 pi i``.  With
    ``b = -i`` this is ``x = sum i^m P_m(eta + C) e^(m eta)``.
    """
    _check_spec(series, spec)
    if N > series.max_m:
        raise ValueError(f"N = {N} exceeds the generated order {series.max_m}")
    eta = complex(eta)
    h = cmath.exp(eta) / spec.b
    u = eta + spec.C
    vals, _ = _sums(series, spec, h, u, N, None, derivative=False)
    return tuple(vals)


def ode_residual(series: PsiSeries, spec: BranchSpec, t, N: int = 30,
                 dps: Optional[int] = None, sleeve: float = DEFAULT_SLEEVE) -> Tuple:
    """Residuals of the three Lorenz equations for the truncated series."""
    (x, y, z), (dx, dy, dz) = eval_with_derivative(series, spec, t, N, dps, sleeve)
    with mpmath.workdps(dps or 15):
        r1 = dx - 10 * (y - x)
        r2 = dy - (28 * x - y - x * z)
        r3 = dz - (-(8 * z) / 3 + x * y)
    return r1, r2, r3


def residual_norm(series: PsiSeries, spec: BranchSpec, t, N: int = 30,
                  dps: Optional[int] = None, relative: bool = True,
                  sleeve: float = DEFAULT_SLEEVE) -> float:
    """Euclidean norm of the residual, divided by that of ``(x', y', z')`` if relative."""
    (x, y, z), (dx, dy, dz) = eval_with_derivative(series, spec, t, N, dps, sleeve)
    with mpmath.workdps(dps or 15):
        res = (dx - 10 * (y - x), dy - (28 * x - y - x * z), dz - (-(8 * z) / 3 + x * y))
        num = math.sqrt(sum(float(abs(r)) ** 2 for r in res))
        if not relative:
            return num
        den = math.sqrt(sum(float(abs(d)) ** 2 for d in (dx, dy, dz)))
    return num / den


def tail_bound(est: ConvergenceEstimate, spec: BranchSpec, t: complex, N: int) -> float:
    """Bound on what the terms beyond power ``N`` can contribute to any component.

    Uses ``|X_m| <= K1 K2^m`` and ``|p(u)| <= |p| max(1, |u|)^deg``:
    the ``y`` and ``z`` tails are at most ``sum_{m > N} K1 K2^m L^{floor((m+2)/2)} |h|^m``
    with ``L = max(1, |log b(t - t0) + C|)``; the ``x`` tail starts one
    triple earlier and carries an extra factor ``|h|``.  Pairs of terms
    ``(2k, 2k+1)`` share the same power of ``L``, which gives a
    geometric series in ``L (K2|h|)^2``.
    """
    h = complex(t) - spec.t0
    ah = abs(h)
    if ah >= est.r:
        raise DomainError(f"|t - t0| = {ah} is not inside the radius {est.r}")
    if ah == 0:
        raise DomainError("t = t0")
    L = max(1.0, abs(cmath.log(spec.b * h) + spec.C))
    q = est.K2 * ah
    rho = L * q * q
    if rho >= 1:
        raise DomainError("majorant series does not converge at this point")

    def from_index(m0: int) -> float:
        # sum_{m >= m0} q^m L^{floor((m+2)/2)}
        total = 0.0
        if m0 % 2:
            total += q ** m0 * L ** ((m0 + 2) // 2)
            m0 += 1
        k0 = m0 // 2
        return total + L * (1 + q) * rho ** k0 / (1 - rho)

    yz = est.K1 * from_index(N + 1)
    x = est.K1 * ah * from_index(N)
    return max(yz, x)
