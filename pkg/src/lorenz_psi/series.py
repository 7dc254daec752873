"""Psi-series coefficients of the Lorenz system.

The singular solutions have the form

    x = sum_{m >= -1} P_m(u) (t - t0)^m
    y = sum_{m >= -2} Q_m(u) (t - t0)^m
    z = sum_{m >= -2} R_m(u) (t - t0)^m

with ``u = log(b (t - t0)) + C``.  Coefficients are grouped into
triples ``X_m = (P_{m+1}, Q_m, R_m)`` which satisfy the linear system

    X_m' = A_m X_m + F_m,    A_m = A_0 - m I,

where the prime is d/du and ``F_m`` depends only on earlier triples.

Because ``A_m`` is a shift of ``A_0`` its eigenvector matrix ``V`` does
not depend on ``m``.  In the eigenbasis the system decouples into three
scalar equations ``xi' = alpha xi + f``, each with a unique polynomial
solution unless ``alpha = 0``.  That happens for ``m = 0`` (the free
constant ``C``) and ``m = 2`` (the free constant ``D``).

Normalisation of the free constants follows the published table: the
constant term of ``P_1`` is zero, and ``P_3`` has constant term
``i*D`` for the plus family.
"""

from __future__ import annotations

import enum
import logging
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .exact import (
    ExactArithmeticError,
    GaussianRational,
    I,
    Mat3,
    PsiPoly,
    format_rational,
)

__all__ = [
    "ConsistencyError",
    "SeriesFamily",
    "DMode",
    "CoeffTriple",
    "PsiSeries",
    "leading_coefficients",
    "build_A",
    "eigenvector_matrix",
    "build_F",
    "solve_scalar_poly_ode",
    "zero_mode_load",
    "step_m0",
    "step_m2",
    "step_general",
    "closed_form_step",
    "recursion_residual",
    "generate",
    "degree_bound",
    "series_to_json",
    "series_from_json",
    "series_to_latex",
]

log = logging.getLogger(__name__)

SYMBOLIC_D_CAP = 60


class ConsistencyError(ExactArithmeticError):
    """An identity that must hold exactly was violated."""


class SeriesFamily(enum.Enum):
    PLUS = "plus"
    MINUS = "minus"

    @property
    def sign(self) -> int:
        return 1 if self is SeriesFamily.PLUS else -1

    @classmethod
    def parse(cls, value) -> "SeriesFamily":
        if isinstance(value, SeriesFamily):
            return value
        text = str(value).strip().lower()
        for fam in cls:
            if text in (fam.value, "+" if fam is cls.PLUS else "-"):
                return fam
        raise ValueError(f"unknown series family {value!r}")


@dataclass(frozen=True)
class DMode:
    """Either a formal indeterminate ``D`` (``value is None``) or an exact number."""

    value: Optional[GaussianRational] = None

    @classmethod
    def symbolic(cls) -> "DMode":
        return cls(None)

    @classmethod
    def numeric(cls, value) -> "DMode":
        return cls(GaussianRational.coerce(value))

    @property
    def is_symbolic(self) -> bool:
        return self.value is None

    def as_poly(self) -> PsiPoly:
        return PsiPoly.d() if self.value is None else PsiPoly.constant(self.value)

    @classmethod
    def parse(cls, text: str) -> "DMode":
        """Parse ``symbolic`` or ``numeric:<re>,<im>`` (parts may be fractions)."""
        text = text.strip()
        if text == "symbolic":
            return cls.symbolic()
        if text.startswith("numeric:"):
            body = text[len("numeric:"):]
            re_s, _, im_s = body.partition(",")
            return cls.numeric(GaussianRational(Fraction(re_s.strip()), Fraction(im_s.strip() or "0")))
        raise ValueError(f"D mode must be 'symbolic' or 'numeric:<re>,<im>', got {text!r}")

    def __str__(self):
        if self.value is None:
            return "symbolic"
        return f"numeric:{format_rational(self.value.re)},{format_rational(self.value.im)}"


@dataclass(frozen=True, eq=True)
class CoeffTriple:
    """One rung ``X_m = (P_{m+1}, Q_m, R_m)`` of the recursion."""

    m: int
    P: PsiPoly
    Q: PsiPoly
    R: PsiPoly

    def components(self) -> Tuple[PsiPoly, PsiPoly, PsiPoly]:
        return (self.P, self.Q, self.R)

    @property
    def u_degree(self) -> int:
        return max(p.u_degree for p in self.components())

    @property
    def d_degree(self) -> int:
        return max(p.d_degree for p in self.components())

    def flipped(self) -> "CoeffTriple":
        """Image under ``(x, y, z) -> (-x, -y, z)``."""
        return CoeffTriple(self.m, -self.P, -self.Q, self.R)

    def substitute_d(self, value) -> "CoeffTriple":
        return CoeffTriple(self.m, *(p.substitute_d(value) for p in self.components()))

    def to_json(self) -> dict:
        return {"m": self.m, "P": self.P.to_json(), "Q": self.Q.to_json(), "R": self.R.to_json()}

    @classmethod
    def from_json(cls, obj) -> "CoeffTriple":
        return cls(int(obj["m"]), PsiPoly.from_json(obj["P"]), PsiPoly.from_json(obj["Q"]),
                   PsiPoly.from_json(obj["R"]))


def degree_bound(m: int) -> int:
    """Upper bound ``floor((m+2)/2)`` on the u-degree of ``X_m``."""
    return (m + 2) // 2


# ---------------------------------------------------------------------------
# the linear algebra of one step
# ---------------------------------------------------------------------------


def leading_coefficients(family=SeriesFamily.PLUS) -> Tuple[CoeffTriple, CoeffTriple]:
    """Return ``(X_{-2}, X_{-1})``.

    ``X_{-2}`` balances the most singular terms: ``-P = 10Q``,
    ``-2Q = -P R`` and ``-2R = P Q`` force ``R = -1/5`` and ``P^2 = -4``;
    the family picks the root ``P = +-2i``.  ``X_{-1}`` then solves the
    general step equation at ``m = -1``, where ``A_{-1}`` is invertible.
    """
    family = SeriesFamily.parse(family)
    p = I * (2 * family.sign)
    x_m2 = CoeffTriple(-2, PsiPoly.constant(p), PsiPoly.constant(-p / 10),
                       PsiPoly.constant(Fraction(-1, 5)))
    partial = PsiSeries(family, -2, (x_m2,), DMode.symbolic())
    forcing = build_F(-1, partial)
    x_m1 = step_general(-1, partial, forcing=forcing)
    return x_m2, x_m1


def build_A(m: int, family=SeriesFamily.PLUS) -> Mat3:
    """The matrix ``A_m``; entries involve the leading coefficients of the family."""
    s = SeriesFamily.parse(family).sign
    return Mat3([
        [-m - 1, 10, 0],
        [Fraction(1, 5), -m, -2 * s * I],
        [-s * I / 5, 2 * s * I, -m],
    ])


EIGENVALUE_SHIFTS = (2, 0, -3)  # eigenvalues of A_m are shift - m


def _null_vector(M: Mat3) -> Tuple[GaussianRational, ...]:
    """A nonzero vector in the kernel of a rank-2 matrix, last entry scaled to 1."""
    rows = M.rows
    for a, b in ((0, 1), (0, 2), (1, 2)):
        r, s = rows[a], rows[b]
        v = (r[1] * s[2] - r[2] * s[1], r[2] * s[0] - r[0] * s[2], r[0] * s[1] - r[1] * s[0])
        if any(v):
            if v[2]:
                v = tuple(c / v[2] for c in v)
            return v
    raise ConsistencyError("matrix has rank below 2")


_EIGEN_CACHE: Dict[SeriesFamily, Tuple[Mat3, Mat3]] = {}


def eigenvector_matrix(family=SeriesFamily.PLUS) -> Tuple[Mat3, Mat3]:
    """Return ``(V, V^{-1})`` with ``V^{-1} A_m V = diag(2-m, -m, -3-m)``.

    Columns are kernel vectors of ``A_0 - lambda I`` scaled so that the
    ``R`` entry is one.  For the plus family this gives
    ``V = [[-5i, 10i, -5i], [-3i/2, i, i], [1, 1, 1]]``.
    """
    family = SeriesFamily.parse(family)
    if family not in _EIGEN_CACHE:
        A0 = build_A(0, family)
        cols = [_null_vector(A0 - Mat3.identity().scale(lam)) for lam in EIGENVALUE_SHIFTS]
        V = Mat3([[cols[j][i] for j in range(3)] for i in range(3)])
        _EIGEN_CACHE[family] = (V, V.inverse())
    return _EIGEN_CACHE[family]


def build_F(m: int, history: "PsiSeries") -> Tuple[PsiPoly, PsiPoly, PsiPoly]:
    """Forcing ``F_m`` from the triples ``X_k`` with ``k < m``.

    ``P_j`` means the coefficient of ``(t-t0)^j`` in ``x``; it is stored
    in triple ``X_{j-1}``.  The convolution sums run over ``j = 0..m``.
    """
    if history.max_m < m - 1:
        raise ValueError(f"history ends at m={history.max_m}, F_{m} needs X_{m - 1}")
    P, Q, R = history.P, history.Q, history.R
    terms_pr = []
    terms_pq = []
    for j in range(0, m + 1):
        pj = P(j)
        if not pj:
            continue
        terms_pr.append(pj * R(m - j - 1))
        terms_pq.append(pj * Q(m - j - 1))
    conv_pr = _tree_sum(terms_pr)
    conv_pq = _tree_sum(terms_pq)
    f1 = P(m).scale(-10)
    f2 = P(m - 1).scale(28) - Q(m - 1) - conv_pr
    f3 = R(m - 1).scale(Fraction(-8, 3)) + conv_pq
    return f1, f2, f3


def _tree_sum(items: List[PsiPoly]) -> PsiPoly:
    """Pairwise summation; keeps common denominators small while accumulating."""
    if not items:
        return PsiPoly.zero()
    while len(items) > 1:
        nxt = [items[i] + items[i + 1] for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            nxt.append(items[-1])
        items = nxt
    return items[0]


def solve_scalar_poly_ode(alpha, f: PsiPoly, allow_zero: bool = False) -> PsiPoly:
    """Polynomial solution ``xi`` of ``xi' = alpha*xi + f`` (prime is d/du).

    For ``alpha != 0`` the solution is unique with ``deg xi = deg f`` and
    equals ``-sum_j f^(j) / alpha^(j+1)``; it is computed by the backward
    recurrence ``xi_k = ((k+1) xi_{k+1} - f_k) / alpha``.

    For ``alpha == 0`` the caller must opt in with ``allow_zero``; the
    antiderivative with zero constant term is returned and the caller
    fills the free constant.  ``D`` is carried along untouched.
    """
    alpha = GaussianRational.coerce(alpha)
    if not alpha:
        if not allow_zero:
            raise ExactArithmeticError("alpha = 0 needs allow_zero=True (free constant)")
        return f.integrate_u()
    if not f:
        return PsiPoly.zero()
    if alpha.is_real():
        a = alpha.re
        return PsiPoly.from_parts({dp: (_backsolve_real(re, a), _backsolve_real(im, a))
                                   for dp, (re, im) in f.parts.items()})
    # complex alpha mixes the real and imaginary parts
    out = PsiPoly.zero()
    term = f.scale(-1 / alpha)
    while term:
        out = out + term
        term = term.diff_u().scale(1 / alpha)
    return out


def _backsolve_real(p, alpha: Fraction):
    """Backward recurrence for real ``alpha``, carried out on integers.

    With ``alpha = a/q``, ``f = N/d`` and ``y_k = xi_k d a^(n-k+1)`` the
    recurrence ``xi_k = -(f_k - (k+1) xi_{k+1}) q/a`` turns into the
    integer recurrence ``y_k = q (k+1) y_{k+1} - q a^(n-k) N_k``.  The
    result ``xi_k = y_k a^k / (d a^(n+1))`` is normalised once by FLINT.
    """
    from flint import fmpz_poly, fmpq_poly

    n = p.degree()
    if n < 0:
        return p
    a, q = alpha.numerator, alpha.denominator
    N = [int(c) for c in p.numer().coeffs()]
    powers = [1] * (n + 2)
    for j in range(1, n + 2):
        powers[j] = powers[j - 1] * a
    y = [0] * (n + 1)
    nxt = 0
    for k in range(n, -1, -1):
        nxt = q * ((k + 1) * nxt - powers[n - k] * N[k])
        y[k] = nxt
    den = int(p.denom()) * powers[n + 1]
    num = [y[k] * powers[k] for k in range(n + 1)]
    if den < 0:
        den = -den
        num = [-v for v in num]
    return fmpq_poly(fmpz_poly(num), den)


def _eigen_forcing(F, family) -> Tuple[PsiPoly, PsiPoly, PsiPoly]:
    _, Vi = eigenvector_matrix(family)
    return Vi.apply(F)


def zero_mode_load(history: "PsiSeries", forcing=None) -> PsiPoly:
    """Component of ``F_2`` along the eigenvector of ``A_2`` with eigenvalue 0."""
    F = forcing if forcing is not None else build_F(2, history)
    return _eigen_forcing(F, history.family)[0]


def _assemble(m: int, xi, family) -> CoeffTriple:
    V, _ = eigenvector_matrix(family)
    P, Q, R = V.apply(xi)
    return CoeffTriple(m, P, Q, R)


def step_m0(history: "PsiSeries", forcing=None) -> CoeffTriple:
    """Triple ``X_0``; the zero mode carries the free constant ``C``.

    ``F_0`` is constant, so the zero-mode coordinate is linear in ``u``.
    Its integration constant is fixed so that ``P_1`` has no constant
    term, which is the normalisation that defines ``C``.
    """
    family = history.family
    F = forcing if forcing is not None else build_F(0, history)
    f = _eigen_forcing(F, family)
    xi1 = solve_scalar_poly_ode(2, f[0])
    xi2 = solve_scalar_poly_ode(0, f[1], allow_zero=True)
    xi3 = solve_scalar_poly_ode(-3, f[2])
    V, _ = eigenvector_matrix(family)
    rest = (xi1.constant_term().scale(V[0, 0]) + xi2.constant_term().scale(V[0, 1])
            + xi3.constant_term().scale(V[0, 2]))
    xi2 = xi2 - rest.scale(GaussianRational(1) / V[0, 1])
    return _assemble(0, (xi1, xi2, xi3), family)


def step_m2(history: "PsiSeries", forcing=None) -> CoeffTriple:
    """Triple ``X_2``; the zero mode carries the free constant ``D``.

    The zero-mode load must not contain the top power of ``u`` present in
    ``F_2``; otherwise its antiderivative would raise the degree of
    ``X_2`` above the bound ``floor((m+2)/2) = 2``.  A violation raises
    :class:`ConsistencyError`.

    The zero-mode coordinate is ``int f du - D/5 + kappa`` with ``kappa``
    fixed so that the ``D``-free constant term of ``P_3`` vanishes.
    """
    family = history.family
    F = forcing if forcing is not None else build_F(2, history)
    f = _eigen_forcing(F, family)
    top = max(c.u_degree for c in F)
    if f[0].top_u_coefficient(top):
        raise ConsistencyError(
            f"zero-mode load of F_2 has a u^{top} term: {f[0].top_u_coefficient(top)}")
    xi1 = solve_scalar_poly_ode(0, f[0], allow_zero=True)
    xi2 = solve_scalar_poly_ode(-2, f[1])
    xi3 = solve_scalar_poly_ode(-5, f[2])
    V, _ = eigenvector_matrix(family)
    rest = (xi1.constant_term().scale(V[0, 0]) + xi2.constant_term().scale(V[0, 1])
            + xi3.constant_term().scale(V[0, 2]))
    kappa = rest.scale(GaussianRational(-1) / V[0, 0])
    # the published table has D entering R_2 as -D/5 and P_3 as +-iD
    d_term = history.d_mode.as_poly().scale(Fraction(-1, 5))
    xi1 = xi1 + kappa + d_term
    return _assemble(2, (xi1, xi2, xi3), family)


def step_general(m: int, history: "PsiSeries", forcing=None) -> CoeffTriple:
    """Triple ``X_m`` for any ``m`` whose ``A_m`` is invertible.

    Evaluates ``X_m = -sum_j A_m^{-j-1} F_m^{(j)}`` in the eigenbasis,
    where every power of ``A_m^{-1}`` is diagonal and each coordinate
    reduces to :func:`solve_scalar_poly_ode`.
    """
    if m in (0, 2):
        raise ExactArithmeticError(f"A_{m} is singular; use the dedicated step")
    family = history.family
    F = forcing if forcing is not None else build_F(m, history)
    f = _eigen_forcing(F, family)
    xi = tuple(solve_scalar_poly_ode(shift - m, fk) for shift, fk in zip(EIGENVALUE_SHIFTS, f))
    return _assemble(m, xi, family)


def closed_form_step(m: int, forcing, family=SeriesFamily.PLUS) -> CoeffTriple:
    """Literal ``X_m = -sum_{j=0}^{n} A_m^{-j-1} d^j F_m / du^j`` with explicit inverses.

    Slow but independent of the eigenbasis; used as a cross-check.
    """
    A_inv = build_A(m, family).inverse()
    n = max(c.u_degree for c in forcing)
    power = A_inv
    deriv = tuple(forcing)
    acc = (PsiPoly.zero(),) * 3
    for _ in range(max(n, 0) + 1):
        term = power.apply(deriv)
        acc = tuple(a - t for a, t in zip(acc, term))
        power = power @ A_inv
        deriv = tuple(p.diff_u() for p in deriv)
    return CoeffTriple(m, *acc)


def recursion_residual(triple: CoeffTriple, forcing, family=SeriesFamily.PLUS):
    """``X_m' - A_m X_m - F_m``; all three entries are zero for a valid step."""
    A = build_A(triple.m, family)
    X = triple.components()
    AX = A.apply(X)
    return tuple(x.diff_u() - ax - f for x, ax, f in zip(X, AX, forcing))


# ---------------------------------------------------------------------------
# series container and generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PsiSeries:
    """Coefficient triples ``X_{-2} .. X_{max_m}`` of one psi series."""

    family: SeriesFamily
    max_m: int
    coeffs: Tuple[CoeffTriple, ...]
    d_mode: DMode = field(default_factory=DMode.symbolic)
    forcing: Tuple[Tuple[PsiPoly, PsiPoly, PsiPoly], ...] = field(default=(), compare=False, repr=False)
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if len(self.coeffs) != self.max_m + 3:
            raise ValueError("coefficient list must cover m = -2 .. max_m")
        for k, c in enumerate(self.coeffs):
            if c.m != k - 2:
                raise ValueError(f"triple {k} has index {c.m}, expected {k - 2}")

    def triple(self, m: int) -> CoeffTriple:
        if m < -2 or m > self.max_m:
            raise IndexError(f"X_{m} is outside -2..{self.max_m}")
        return self.coeffs[m + 2]

    def __len__(self):
        return len(self.coeffs)

    def __iter__(self):
        return iter(self.coeffs)

    # coefficient accessors by power of (t - t0); zero outside the stored range
    def P(self, n: int) -> PsiPoly:
        return self.coeffs[n + 1].P if -1 <= n <= self.max_m + 1 else PsiPoly.zero()

    def Q(self, n: int) -> PsiPoly:
        return self.coeffs[n + 2].Q if -2 <= n <= self.max_m else PsiPoly.zero()

    def R(self, n: int) -> PsiPoly:
        return self.coeffs[n + 2].R if -2 <= n <= self.max_m else PsiPoly.zero()

    def forcing_at(self, m: int):
        """Stored ``F_m`` (available when generated with ``keep_forcing``)."""
        if self.forcing and 0 <= m <= self.max_m and m + 1 < len(self.forcing):
            return self.forcing[m + 1]
        return build_F(m, self.truncated(m - 1))

    def truncated(self, max_m: int) -> "PsiSeries":
        max_m = min(max_m, self.max_m)
        return PsiSeries(self.family, max_m, self.coeffs[: max_m + 3], self.d_mode,
                         self.forcing[: max_m + 2])

    def substitute_d(self, value) -> "PsiSeries":
        """Numeric-D copy of a symbolic series."""
        value = GaussianRational.coerce(value)
        coeffs = tuple(c.substitute_d(value) for c in self.coeffs)
        forcing = tuple(tuple(p.substitute_d(value) for p in F) for F in self.forcing)
        return PsiSeries(self.family, self.max_m, coeffs, DMode.numeric(value), forcing)

    def degree_report(self) -> List[dict]:
        """Observed u- and D-degrees per ``m >= 0`` against the bound."""
        rows = []
        for c in self.coeffs[2:]:
            rows.append({
                "m": c.m,
                "u_degree": c.u_degree,
                "bound": degree_bound(c.m),
                "d_degree": max(c.d_degree, 0),
                "attained": c.u_degree == degree_bound(c.m),
            })
        return rows


def _extend(series: PsiSeries, triple: CoeffTriple, forcing) -> PsiSeries:
    return PsiSeries(series.family, triple.m, series.coeffs + (triple,), series.d_mode,
                     series.forcing + (forcing,))


def generate(max_m: int, family=SeriesFamily.PLUS, d_mode: DMode | str | None = None,
             verify: bool = True, symbolic_cap: int = SYMBOLIC_D_CAP,
             progress: Optional[Callable[[int], None]] = None) -> PsiSeries:
    """Generate ``X_{-2} .. X_{max_m}``.

    With ``verify`` (default) every step is checked by exact substitution:
    ``X_m' - A_m X_m - F_m`` must vanish identically, otherwise
    :class:`ConsistencyError` is raised.  The forcing terms are kept on
    the returned series for the norm checks.
    """
    if max_m < -2:
        raise ValueError("max_m must be >= -2")
    family = SeriesFamily.parse(family)
    if d_mode is None:
        d_mode = DMode.symbolic()
    elif isinstance(d_mode, str):
        d_mode = DMode.parse(d_mode)
    if d_mode.is_symbolic and max_m > symbolic_cap:
        warnings.warn(f"symbolic D beyond m={symbolic_cap} is memory heavy; "
                      "numeric D is recommended", RuntimeWarning, stacklevel=2)
    x_m2, x_m1 = leading_coefficients(family)
    series = PsiSeries(family, -2, (x_m2,), d_mode, ())
    if max_m >= -1:
        F = build_F(-1, series)
        series = _extend(series, x_m1, F)
    for m in range(0, max_m + 1):
        F = build_F(m, series)
        if m == 0:
            X = step_m0(series, F)
        elif m == 2:
            X = step_m2(series, F)
        else:
            X = step_general(m, series, F)
        if verify:
            res = recursion_residual(X, F, family)
            if any(res):
                raise ConsistencyError(f"nonzero recursion residual at m={m}")
            if X.u_degree > degree_bound(m):
                raise ConsistencyError(f"degree {X.u_degree} exceeds bound at m={m}")
        series = _extend(series, X, F)
        if progress is not None:
            progress(m)
    return series


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------


def series_to_json(series: PsiSeries) -> list:
    """Array of ``{"m", "P", "Q", "R"}`` objects in the exact term format."""
    return [c.to_json() for c in series.coeffs]


def series_from_json(items: Sequence[dict], family=SeriesFamily.PLUS,
                     d_mode: DMode | None = None) -> PsiSeries:
    coeffs = tuple(CoeffTriple.from_json(it) for it in items)
    if d_mode is None:
        d_mode = DMode.symbolic() if any(c.d_degree > 0 for c in coeffs) else DMode.numeric(0)
    return PsiSeries(SeriesFamily.parse(family), coeffs[-1].m, coeffs, d_mode)


def _latex_rational(q: Fraction) -> str:
    if q.denominator == 1:
        return str(abs(q.numerator))
    return r"\frac{%d}{%d}" % (abs(q.numerator), q.denominator)


def poly_to_latex(p: PsiPoly) -> str:
    """LaTeX for a polynomial in ``(\\eta+C)`` and ``D``, ordered as in the table."""
    if not p:
        return "0"
    pieces = []
    # D terms first, then ascending powers of (eta + C)
    items = sorted(p.terms.items(), key=lambda kv: (-kv[0][1], kv[0][0]))
    for (up, dp), c in items:
        mono = ""
        if dp:
            mono += " D" if dp == 1 else f" D^{{{dp}}}"
        if up:
            mono += r" (\eta+C)" if up == 1 else r" {(\eta+C)}^{%d}" % up
        for value, unit in ((c.re, ""), (c.im, r"\,i")):
            if not value:
                continue
            sign = "-" if value < 0 else "+"
            body = _latex_rational(value)
            if body == "1" and (unit or mono):
                body = ""
            pieces.append(f"{sign}{body}{unit}{mono}")
    text = "".join(pieces)
    return text[1:] if text.startswith("+") else text


def series_to_latex(series: PsiSeries) -> str:
    """A tabular laid out like the published coefficient table."""
    rows = []
    if series.max_m >= -2:
        rows.append(r"$Q_{-2}$, $R_{-2}$ & & $%s$ & $%s$" % (
            poly_to_latex(series.Q(-2)), poly_to_latex(series.R(-2))))
    for n in (-1, 0, 1):
        if n <= series.max_m:
            rows.append(r"$P_{%d}$, $Q_{%d}$, $R_{%d}$ & $%s$ & $%s$ & $%s$" % (
                n, n, n, poly_to_latex(series.P(n)), poly_to_latex(series.Q(n)),
                poly_to_latex(series.R(n))))
    for n in range(2, series.max_m + 2):
        names = [("P", series.P)] + ([("Q", series.Q), ("R", series.R)] if n <= series.max_m else [])
        for name, getter in names:
            rows.append(r"$%s_{%d}$ & \multicolumn{3}{c}{$%s$}" % (name, n, poly_to_latex(getter(n))))
    body = "\\\\\\hline\n".join(rows)
    return "\\begin{tabular}{c|c|c|c}\n" + body + "\n\\end{tabular}\n"
