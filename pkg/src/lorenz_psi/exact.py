"""Exact arithmetic for the psi-series recursion.

Three value types live here:

* :class:`GaussianRational`, an exact ``a + b*i`` with rational parts,
  backed by :class:`fractions.Fraction`.
* :class:`PsiPoly`, a sparse polynomial in ``u = eta + C`` and the free
  constant ``D`` with Gaussian-rational coefficients.
* :class:`Mat3`, an exact 3x3 matrix over the Gaussian rationals.

``PsiPoly`` stores each power of ``D`` as a pair of FLINT ``fmpq_poly``
objects (real and imaginary parts, polynomials in ``u``).  The public
face is the ``terms`` mapping of ``(u_power, d_power)`` to
``GaussianRational``; the FLINT layer only exists because the long
convolutions of the recursion are far too slow with pure-Python
fractions.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence, Tuple, Union

from flint import fmpq, fmpq_poly

__all__ = [
    "ExactArithmeticError",
    "SingularMatrixError",
    "GaussianRational",
    "PsiPoly",
    "Mat3",
    "I",
    "format_rational",
    "parse_rational",
    "poly_diff_u",
    "poly_eval",
    "mat_inverse",
    "coeff_norm",
]


class ExactArithmeticError(ArithmeticError):
    """Raised for undefined exact operations (division by zero and the like)."""


class SingularMatrixError(ExactArithmeticError):
    """Raised when inverting a matrix whose exact determinant is zero."""


# ---------------------------------------------------------------------------
# rationals
# ---------------------------------------------------------------------------

RationalLike = Union[int, Fraction, str, fmpq]


def _as_fraction(x: RationalLike) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        return Fraction(int(x))
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, fmpq):
        return Fraction(int(x.p), int(x.q))
    if isinstance(x, str):
        return parse_rational(x)
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def _to_fmpq(x: Fraction) -> fmpq:
    return fmpq(x.numerator, x.denominator)


def format_rational(x: RationalLike) -> str:
    """Render a rational as the decimal-free string ``"num/den"``."""
    x = _as_fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_rational(text: str) -> Fraction:
    """Parse ``"num/den"`` or ``"num"``; decimal points are rejected."""
    text = text.strip()
    if "." in text or "e" in text.lower():
        raise ValueError(f"rational strings must be decimal-free: {text!r}")
    if "/" in text:
        num, den = text.split("/", 1)
        if int(den) == 0:
            raise ExactArithmeticError(f"zero denominator in {text!r}")
        return Fraction(int(num), int(den))
    return Fraction(int(text))


def _fraction_str(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


# ---------------------------------------------------------------------------
# Gaussian rationals
# ---------------------------------------------------------------------------


class GaussianRational:
    """Exact Gaussian rational ``re + im*i``.

    Instances are immutable and hashable.  Arithmetic accepts plain ints
    and Fractions on either side; Python floats and complex numbers are
    rejected so that inexact data cannot leak into exact computations.
    """

    __slots__ = ("_re", "_im")

    def __init__(self, re: RationalLike = 0, im: RationalLike = 0):
        object.__setattr__(self, "_re", _as_fraction(re))
        object.__setattr__(self, "_im", _as_fraction(im))

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("GaussianRational is immutable")

    @property
    def re(self) -> Fraction:
        return self._re

    @property
    def im(self) -> Fraction:
        return self._im

    @classmethod
    def coerce(cls, value) -> "GaussianRational":
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, (int, Fraction, fmpq, str)):
            return cls(value)
        if isinstance(value, tuple) and len(value) == 2:
            return cls(value[0], value[1])
        raise TypeError(f"cannot coerce {type(value).__name__} to GaussianRational")

    # -- arithmetic ---------------------------------------------------------

    def _other(self, other):
        if isinstance(other, GaussianRational):
            return other
        if isinstance(other, (int, Fraction)):
            return GaussianRational(other)
        return None

    def __add__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self._re + o._re, self._im + o._im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self._re - o._re, self._im - o._im)

    def __rsub__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        a, b, c, d = self._re, self._im, o._re, o._im
        return GaussianRational(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        den = o._re * o._re + o._im * o._im
        if den == 0:
            raise ExactArithmeticError("division by zero Gaussian rational")
        num = self * o.conjugate()
        return GaussianRational(num._re / den, num._im / den)

    def __rtruediv__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return o / self

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return (ONE / self) ** (-n)
        result, base = ONE, self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __neg__(self):
        return GaussianRational(-self._re, -self._im)

    def __pos__(self):
        return self

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self._re, -self._im)

    # -- predicates and conversions ------------------------------------------

    def __bool__(self) -> bool:
        return bool(self._re) or bool(self._im)

    def is_zero(self) -> bool:
        return not self

    def is_real(self) -> bool:
        return self._im == 0

    def is_imaginary(self) -> bool:
        """True for purely imaginary values (zero counts as both)."""
        return self._re == 0

    def abs2(self) -> Fraction:
        """Exact squared magnitude."""
        return self._re * self._re + self._im * self._im

    def abs_l1(self) -> Fraction:
        """``|re| + |im|``, an exact overestimate of the magnitude."""
        return abs(self._re) + abs(self._im)

    def abs_exact(self):
        """Exact magnitude as a Fraction when it is rational, otherwise ``None``."""
        if self._im == 0:
            return abs(self._re)
        if self._re == 0:
            return abs(self._im)
        a2 = self.abs2()
        n, d = a2.numerator, a2.denominator
        rn, rd = math.isqrt(n), math.isqrt(d)
        if rn * rn == n and rd * rd == d:
            return Fraction(rn, rd)
        return None

    def __abs__(self) -> float:
        return math.hypot(float(self._re), float(self._im))

    def __complex__(self) -> complex:
        return complex(float(self._re), float(self._im))

    def __eq__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return self._re == o._re and self._im == o._im

    def __hash__(self):
        return hash((self._re, self._im))

    def __repr__(self):
        return f"GaussianRational({_fraction_str(self._re)!r}, {_fraction_str(self._im)!r})"

    def __str__(self):
        if self._im == 0:
            return _fraction_str(self._re)
        im = f"{_fraction_str(abs(self._im))}*i"
        if self._re == 0:
            return im if self._im > 0 else f"-{im}"
        sign = "+" if self._im > 0 else "-"
        return f"{_fraction_str(self._re)} {sign} {im}"

    def to_json(self) -> dict:
        return {"re": format_rational(self._re), "im": format_rational(self._im)}

    @classmethod
    def from_json(cls, obj: Mapping) -> "GaussianRational":
        return cls(parse_rational(obj["re"]), parse_rational(obj["im"]))


ZERO = GaussianRational(0)
ONE = GaussianRational(1)
I = GaussianRational(0, 1)


# ---------------------------------------------------------------------------
# polynomials in (u, D)
# ---------------------------------------------------------------------------

_QZERO = fmpq_poly([])
_Part = Tuple[fmpq_poly, fmpq_poly]


def _cmul(ar: fmpq_poly, ai: fmpq_poly, br: fmpq_poly, bi: fmpq_poly) -> _Part:
    """Complex product of polynomial pairs, skipping structurally zero parts."""
    if ar and ai and br and bi:
        # three real products instead of four
        rr = ar * br
        ii = ai * bi
        return rr - ii, (ar + ai) * (br + bi) - rr - ii
    re = _QZERO
    im = _QZERO
    if ar and br:
        re = ar * br
    if ai and bi:
        re = re - ai * bi
    if ar and bi:
        im = ar * bi
    if ai and br:
        im = im + ai * br
    return re, im


def _udeg(part: _Part) -> int:
    return max(part[0].degree(), part[1].degree())


class PsiPoly:
    """Sparse polynomial in ``u`` and ``D`` over the Gaussian rationals.

    Build one from a ``{(u_power, d_power): coefficient}`` mapping, or
    via :meth:`constant`, :meth:`u` and :meth:`d`.  Instances are treated
    as immutable; every operation returns a new polynomial.
    """

    __slots__ = ("_parts",)

    def __init__(self, terms: Mapping[Tuple[int, int], object] | None = None):
        parts: dict[int, list[list]] = {}
        for (up, dp), coef in (terms or {}).items():
            if up < 0 or dp < 0:
                raise ValueError("exponents must be non-negative")
            c = GaussianRational.coerce(coef)
            if not c:
                continue
            slot = parts.setdefault(dp, [{}, {}])
            slot[0][up] = c.re
            slot[1][up] = c.im
        built = {}
        for dp, (re_map, im_map) in parts.items():
            built[dp] = (_dict_to_qp(re_map), _dict_to_qp(im_map))
        self._parts = _prune(built)

    @classmethod
    def _wrap(cls, parts: Mapping[int, _Part]) -> "PsiPoly":
        obj = cls.__new__(cls)
        obj._parts = _prune(parts)
        return obj

    @classmethod
    def from_parts(cls, parts: Mapping[int, _Part]) -> "PsiPoly":
        """Build from ``{d_power: (re fmpq_poly, im fmpq_poly)}``."""
        return cls._wrap(dict(parts))

    @classmethod
    def zero(cls) -> "PsiPoly":
        return cls._wrap({})

    @classmethod
    def constant(cls, c) -> "PsiPoly":
        return cls({(0, 0): c})

    @classmethod
    def u(cls) -> "PsiPoly":
        return cls({(1, 0): 1})

    @classmethod
    def d(cls) -> "PsiPoly":
        return cls({(0, 1): 1})

    @classmethod
    def monomial(cls, u_power: int, d_power: int, c=1) -> "PsiPoly":
        return cls({(u_power, d_power): c})

    # -- structure -----------------------------------------------------------

    @property
    def parts(self) -> Mapping[int, _Part]:
        """Read-only view of the FLINT representation."""
        return dict(self._parts)

    def iter_terms(self) -> Iterator[Tuple[Tuple[int, int], GaussianRational]]:
        cells = {}
        for dp, (re, im) in self._parts.items():
            rc, ic = re.coeffs(), im.coeffs()
            for up in range(max(len(rc), len(ic))):
                a = rc[up] if up < len(rc) else 0
                b = ic[up] if up < len(ic) else 0
                if a or b:
                    cells[(up, dp)] = GaussianRational(_as_fraction(fmpq(a)), _as_fraction(fmpq(b)))
        for key in sorted(cells):
            yield key, cells[key]

    @property
    def terms(self) -> dict:
        """Canonical ``{(u_power, d_power): GaussianRational}``, sorted by key."""
        return dict(self.iter_terms())

    def coefficient(self, u_power: int, d_power: int = 0) -> GaussianRational:
        part = self._parts.get(d_power)
        if part is None:
            return ZERO
        re, im = part
        a = re[u_power] if u_power <= re.degree() else 0
        b = im[u_power] if u_power <= im.degree() else 0
        return GaussianRational(_as_fraction(fmpq(a)), _as_fraction(fmpq(b)))

    @property
    def u_degree(self) -> int:
        """Degree in ``u``; ``-1`` for the zero polynomial."""
        return max((_udeg(p) for p in self._parts.values()), default=-1)

    @property
    def d_degree(self) -> int:
        """Degree in ``D``; ``-1`` for the zero polynomial."""
        return max(self._parts, default=-1)

    def has_d(self) -> bool:
        return any(dp > 0 for dp in self._parts)

    def is_zero(self) -> bool:
        return not self._parts

    def __bool__(self) -> bool:
        return bool(self._parts)

    def __len__(self) -> int:
        return len(self.terms)

    def all_imaginary(self) -> bool:
        return all(not re for re, _ in self._parts.values())

    def all_real(self) -> bool:
        return all(not im for _, im in self._parts.values())

    # -- ring operations -----------------------------------------------------

    @staticmethod
    def _lift(other) -> "PsiPoly | None":
        if isinstance(other, PsiPoly):
            return other
        if isinstance(other, (int, Fraction, GaussianRational)):
            return PsiPoly.constant(other)
        return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        out = dict(self._parts)
        for dp, (re, im) in o._parts.items():
            if dp in out:
                r0, i0 = out[dp]
                out[dp] = (r0 + re, i0 + im)
            else:
                out[dp] = (re, im)
        return PsiPoly._wrap(out)

    __radd__ = __add__

    def __neg__(self):
        return PsiPoly._wrap({dp: (-re, -im) for dp, (re, im) in self._parts.items()})

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o - self

    def scale(self, c) -> "PsiPoly":
        """Multiply by a Gaussian-rational scalar."""
        c = GaussianRational.coerce(c)
        if not c:
            return PsiPoly.zero()
        cr, ci = _to_fmpq(c.re), _to_fmpq(c.im)
        out = {}
        for dp, (re, im) in self._parts.items():
            if ci == 0:
                out[dp] = (re * cr, im * cr)
            elif cr == 0:
                out[dp] = (-(im * ci), re * ci)
            else:
                out[dp] = (re * cr - im * ci, re * ci + im * cr)
        return PsiPoly._wrap(out)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, GaussianRational)):
            return self.scale(other)
        if not isinstance(other, PsiPoly):
            return NotImplemented
        return PsiPoly._wrap(_mul_parts(self._parts, other._parts))

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction, GaussianRational)):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            return NotImplemented
        out = PsiPoly.constant(1)
        for _ in range(n):
            out = out * self
        return out

    def diff_u(self) -> "PsiPoly":
        return PsiPoly._wrap(
            {dp: (re.derivative(), im.derivative()) for dp, (re, im) in self._parts.items()}
        )

    def integrate_u(self) -> "PsiPoly":
        """Antiderivative in ``u`` with zero constant term."""
        return PsiPoly._wrap(
            {dp: (re.integral(), im.integral()) for dp, (re, im) in self._parts.items()}
        )

    def substitute_d(self, value) -> "PsiPoly":
        """Exact substitution ``D = value``; the result is free of ``D``."""
        value = GaussianRational.coerce(value)
        acc_re, acc_im = _QZERO, _QZERO
        power = ONE
        for dp in range(self.d_degree + 1):
            part = self._parts.get(dp)
            if part is not None and power:
                re, im = part
                pr, pi = _to_fmpq(power.re), _to_fmpq(power.im)
                acc_re = acc_re + re * pr - im * pi
                acc_im = acc_im + re * pi + im * pr
            power = power * value
        return PsiPoly._wrap({0: (acc_re, acc_im)})

    def constant_term(self) -> "PsiPoly":
        """The part of degree zero in ``u`` (still a polynomial in ``D``)."""
        out = {}
        for dp, (re, im) in self._parts.items():
            out[dp] = (fmpq_poly([re[0]]) if re else _QZERO, fmpq_poly([im[0]]) if im else _QZERO)
        return PsiPoly._wrap(out)

    def top_u_coefficient(self, u_power: int) -> "PsiPoly":
        """Coefficient of ``u**u_power`` as a polynomial in ``D`` alone."""
        out = {}
        for dp, (re, im) in self._parts.items():
            a = re[u_power] if u_power <= re.degree() else 0
            b = im[u_power] if u_power <= im.degree() else 0
            out[dp] = (fmpq_poly([a]), fmpq_poly([b]))
        return PsiPoly._wrap(out)

    # -- numerics ------------------------------------------------------------

    def u_coefficients(self, d_value: complex = 0j) -> list:
        """Complex float coefficients in ``u`` (ascending) with ``D`` set numerically."""
        n = self.u_degree + 1
        out = [0j] * max(n, 0)
        for dp, (re, im) in self._parts.items():
            w = d_value ** dp if dp else 1.0
            rc, ic = re.coeffs(), im.coeffs()
            for k in range(len(rc)):
                if rc[k]:
                    out[k] += float(rc[k]) * w
            for k in range(len(ic)):
                if ic[k]:
                    out[k] += 1j * float(ic[k]) * w
        return out

    def eval(self, u_val: complex, d_val: complex = 0j) -> complex:
        """Horner evaluation in binary64; coefficients are rounded at call time."""
        acc = 0j
        for c in reversed(self.u_coefficients(d_val)):
            acc = acc * u_val + c
        return acc

    def eval_mp(self, u_val, d_val=0):
        """Evaluation with mpmath at the current ``mpmath.mp`` precision."""
        import mpmath

        total = mpmath.mpc(0)
        for (up, dp), c in self.iter_terms():
            coef = mpmath.mpc(mpmath.mpf(c.re.numerator) / c.re.denominator,
                              mpmath.mpf(c.im.numerator) / c.im.denominator)
            total += coef * mpmath.mpc(u_val) ** up * mpmath.mpc(d_val) ** dp
        return total

    # -- comparison, text, JSON ----------------------------------------------

    def __eq__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        if set(self._parts) != set(o._parts):
            return False
        return all(self._parts[k][0] == o._parts[k][0] and self._parts[k][1] == o._parts[k][1]
                   for k in self._parts)

    __hash__ = None

    def __repr__(self):
        return f"PsiPoly({self})"

    def __str__(self):
        if not self._parts:
            return "0"
        chunks = []
        for (up, dp), c in self.iter_terms():
            mono = "*".join(
                s for s in (
                    "" if up == 0 else ("u" if up == 1 else f"u^{up}"),
                    "" if dp == 0 else ("D" if dp == 1 else f"D^{dp}"),
                ) if s
            )
            coef = str(c)
            if c.re and c.im:
                coef = f"({coef})"
            chunks.append(coef if not mono else f"{coef}*{mono}")
        return " + ".join(chunks)

    def to_json(self) -> list:
        return [
            {"u": up, "d": dp, "re": format_rational(c.re), "im": format_rational(c.im)}
            for (up, dp), c in self.iter_terms()
        ]

    @classmethod
    def from_json(cls, items: Iterable[Mapping]) -> "PsiPoly":
        terms = {}
        for it in items:
            key = (int(it["u"]), int(it["d"]))
            if key in terms:
                raise ValueError(f"duplicate term {key}")
            terms[key] = GaussianRational(parse_rational(it["re"]), parse_rational(it["im"]))
        return cls(terms)


def _dict_to_qp(entries: Mapping[int, Fraction]) -> fmpq_poly:
    if not entries:
        return _QZERO
    n = max(entries) + 1
    coeffs = [fmpq(0)] * n
    for k, v in entries.items():
        coeffs[k] = _to_fmpq(v)
    return fmpq_poly(coeffs)


def _prune(parts: Mapping[int, _Part]) -> dict:
    return {dp: p for dp, p in sorted(parts.items()) if p[0] or p[1]}


def _mul_parts(a: Mapping[int, _Part], b: Mapping[int, _Part]) -> dict:
    if not a or not b:
        return {}
    if len(a) == 1 or len(b) == 1:
        out: dict[int, _Part] = {}
        for da, (ar, ai) in a.items():
            for db, (br, bi) in b.items():
                re, im = _cmul(ar, ai, br, bi)
                k = da + db
                if k in out:
                    out[k] = (out[k][0] + re, out[k][1] + im)
                else:
                    out[k] = (re, im)
        return out
    # Kronecker substitution in D: x^(u + S*d) keeps every product term
    # in its own slot as long as S exceeds the sum of the u-degrees.
    stride = max(_udeg(p) for p in a.values()) + max(_udeg(p) for p in b.values()) + 1
    ar, ai = _pack(a, stride)
    br, bi = _pack(b, stride)
    re, im = _cmul(ar, ai, br, bi)
    return _unpack(re, im, stride)


def _pack(parts: Mapping[int, _Part], stride: int) -> _Part:
    re, im = _QZERO, _QZERO
    for dp, (r, i) in parts.items():
        re = re + r.left_shift(stride * dp)
        im = im + i.left_shift(stride * dp)
    return re, im


def _unpack(re: fmpq_poly, im: fmpq_poly, stride: int) -> dict:
    rc, ic = re.coeffs(), im.coeffs()
    n = max(len(rc), len(ic))
    out = {}
    for dp in range((n + stride - 1) // stride):
        lo, hi = dp * stride, (dp + 1) * stride
        out[dp] = (fmpq_poly(rc[lo:hi]), fmpq_poly(ic[lo:hi]))
    return out


def poly_diff_u(p: PsiPoly) -> PsiPoly:
    """Formal derivative in ``u`` (which equals d/d(eta))."""
    return p.diff_u()


def poly_eval(p: PsiPoly, u_val: complex, d_val: complex = 0j) -> complex:
    return p.eval(u_val, d_val)


def coeff_norm(p: PsiPoly, d_val=None, mode: str = "float"):
    """Sum of coefficient magnitudes after substituting ``D``.

    ``mode="float"`` returns a binary64 sum of magnitudes (not rigorous).
    ``mode="rational"`` returns a :class:`Fraction` equal to the sum of
    ``|re| + |im|`` over coefficients, an exact overestimate; it needs an
    exact ``d_val`` (or none if ``p`` is free of ``D``).
    """
    if mode not in ("float", "rational"):
        raise ValueError(f"unknown norm mode {mode!r}")
    if p.has_d() and d_val is None:
        raise ExactArithmeticError("symbolic D present: a numeric D value is required")
    exact_d = isinstance(d_val, (int, Fraction, GaussianRational)) or d_val is None
    if exact_d:
        q = p.substitute_d(d_val if d_val is not None else 0) if p.has_d() else p
        part = q._parts.get(0)
        if part is None:
            return Fraction(0) if mode == "rational" else 0.0
        re, im = part
        rc, ic = re.coeffs(), im.coeffs()
        n = max(len(rc), len(ic))
        if mode == "rational":
            total = Fraction(0)
            for k in range(n):
                if k < len(rc):
                    total += abs(_as_fraction(fmpq(rc[k])))
                if k < len(ic):
                    total += abs(_as_fraction(fmpq(ic[k])))
            return total
        total = 0.0
        for k in range(n):
            a = float(rc[k]) if k < len(rc) else 0.0
            b = float(ic[k]) if k < len(ic) else 0.0
            total += math.hypot(a, b)
        return total
    if mode == "rational":
        raise ExactArithmeticError("rational norm mode needs an exact D value")
    return float(sum(abs(c) for c in p.u_coefficients(complex(d_val))))


# ---------------------------------------------------------------------------
# 3x3 matrices
# ---------------------------------------------------------------------------


class Mat3:
    """Exact 3x3 matrix over the Gaussian rationals (immutable)."""

    __slots__ = ("_rows",)

    def __init__(self, rows: Sequence[Sequence[object]]):
        if len(rows) != 3 or any(len(r) != 3 for r in rows):
            raise ValueError("Mat3 needs exactly 3 rows of 3 entries")
        self._rows = tuple(tuple(GaussianRational.coerce(v) for v in r) for r in rows)

    @classmethod
    def identity(cls) -> "Mat3":
        return cls([[1 if i == j else 0 for j in range(3)] for i in range(3)])

    @classmethod
    def diag(cls, values: Sequence[object]) -> "Mat3":
        return cls([[values[i] if i == j else 0 for j in range(3)] for i in range(3)])

    @property
    def rows(self):
        return self._rows

    def __getitem__(self, ij):
        i, j = ij
        return self._rows[i][j]

    def __eq__(self, other):
        if not isinstance(other, Mat3):
            return NotImplemented
        return self._rows == other._rows

    def __hash__(self):
        return hash(self._rows)

    def __repr__(self):
        body = "; ".join(", ".join(str(v) for v in r) for r in self._rows)
        return f"Mat3[{body}]"

    def __add__(self, other: "Mat3") -> "Mat3":
        return Mat3([[a + b for a, b in zip(r, s)] for r, s in zip(self._rows, other._rows)])

    def __sub__(self, other: "Mat3") -> "Mat3":
        return Mat3([[a - b for a, b in zip(r, s)] for r, s in zip(self._rows, other._rows)])

    def scale(self, c) -> "Mat3":
        c = GaussianRational.coerce(c)
        return Mat3([[c * v for v in r] for r in self._rows])

    def __matmul__(self, other):
        if isinstance(other, Mat3):
            cols = list(zip(*other._rows))
            return Mat3([[sum((a * b for a, b in zip(r, c)), ZERO) for c in cols] for r in self._rows])
        vec = tuple(other)
        if len(vec) != 3:
            raise ValueError("Mat3 acts on 3-vectors")
        if all(isinstance(v, PsiPoly) for v in vec):
            return self.apply(vec)
        vec = [GaussianRational.coerce(v) for v in vec]
        return tuple(sum((a * b for a, b in zip(r, vec)), ZERO) for r in self._rows)

    def apply(self, polys: Sequence[PsiPoly]) -> Tuple[PsiPoly, PsiPoly, PsiPoly]:
        """Matrix times a vector of polynomials."""
        out = []
        for r in self._rows:
            acc = PsiPoly.zero()
            for a, p in zip(r, polys):
                if a and p:
                    acc = acc + p.scale(a)
            out.append(acc)
        return tuple(out)

    def transpose(self) -> "Mat3":
        return Mat3(list(zip(*self._rows)))

    def det(self) -> GaussianRational:
        (a, b, c), (d, e, f), (g, h, k) = self._rows
        return a * (e * k - f * h) - b * (d * k - f * g) + c * (d * h - e * g)

    def adjugate(self) -> "Mat3":
        m = self._rows
        cof = [[ZERO] * 3 for _ in range(3)]
        for i in range(3):
            for j in range(3):
                r = [x for x in range(3) if x != i]
                c = [y for y in range(3) if y != j]
                minor = m[r[0]][c[0]] * m[r[1]][c[1]] - m[r[0]][c[1]] * m[r[1]][c[0]]
                cof[i][j] = minor if (i + j) % 2 == 0 else -minor
        return Mat3(cof).transpose()

    def inverse(self) -> "Mat3":
        d = self.det()
        if not d:
            raise SingularMatrixError(f"matrix is singular (determinant 0): {self!r}")
        inv_d = ONE / d
        return self.adjugate().scale(inv_d)

    def __pow__(self, n: int) -> "Mat3":
        if n < 0:
            return self.inverse() ** (-n)
        out, base = Mat3.identity(), self
        while n:
            if n & 1:
                out = out @ base
            base = base @ base
            n >>= 1
        return out

    def charpoly(self) -> Tuple[GaussianRational, GaussianRational, GaussianRational, GaussianRational]:
        """Coefficients ``(c0, c1, c2, c3)`` of ``det(lambda*I - M) = sum c_k lambda^k``."""
        tr = self[0, 0] + self[1, 1] + self[2, 2]
        m = self._rows
        minors = (m[0][0] * m[1][1] - m[0][1] * m[1][0]
                  + m[0][0] * m[2][2] - m[0][2] * m[2][0]
                  + m[1][1] * m[2][2] - m[1][2] * m[2][1])
        return (-self.det(), minors, -tr, ONE)

    def is_diagonal(self) -> bool:
        return all(not self._rows[i][j] for i in range(3) for j in range(3) if i != j)

    def inf_norm(self):
        """Maximum absolute row sum; a Fraction when every entry has rational modulus."""
        exact = True
        sums = []
        for r in self._rows:
            s_exact = Fraction(0)
            s_float = 0.0
            for v in r:
                a = v.abs_exact()
                if a is None:
                    exact = False
                else:
                    s_exact += a
                s_float += abs(v)
            sums.append((s_exact, s_float))
        if exact:
            return max(s for s, _ in sums)
        return max(f for _, f in sums)


def mat_inverse(m: Mat3) -> Mat3:
    return m.inverse()
