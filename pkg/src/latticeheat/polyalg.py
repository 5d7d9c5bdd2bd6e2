"""Exact sparse polynomials and truncated series graded by powers of t.

Coefficients are :class:`CRational` (complex numbers with exact rational
parts) whenever the inputs are exact, and plain ``complex`` otherwise.
Mixing the two degrades gracefully to ``complex``.

The graded series is the bookkeeping device behind the large-time
expansion of ``t * A(t**(-1/l) * xi)``: grade ``k`` carries the weight
``t**(-k/l)``. A layer may contain several homogeneous degrees (products
of layers do), but every degree in grade ``k`` has the form
``k + offset + m*l`` with ``m >= 0``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "CRational",
    "Poly",
    "HomoPoly",
    "GradedSeries",
    "as_coefficient",
    "homo_add",
    "homo_eval",
    "series_mul",
    "series_exp_neg",
    "series_power",
    "expansion_polynomials",
]


class CRational:
    """Complex number with exact rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    # -- conversions -------------------------------------------------------
    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __repr__(self):
        if not self.im:
            return f"CRational({self.re})"
        return f"CRational({self.re}, {self.im})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        return f"({self.re}{'+' if self.im >= 0 else '-'}{abs(self.im)}i)"

    def __hash__(self):
        if not self.im:
            return hash(self.re)
        return hash((self.re, self.im))

    def conjugate(self):
        return CRational(self.re, -self.im)

    # -- arithmetic --------------------------------------------------------
    @staticmethod
    def _lift(other):
        if isinstance(other, CRational):
            return other
        if isinstance(other, (int, Rational)):
            return CRational(other)
        return None

    def __eq__(self, other):
        o = CRational._lift(other)
        if o is not None:
            return self.re == o.re and self.im == o.im
        if isinstance(other, (float, complex)):
            return complex(self) == other
        return NotImplemented

    def __neg__(self):
        return CRational(-self.re, -self.im)

    def __pos__(self):
        return self

    def __add__(self, other):
        o = CRational._lift(other)
        if o is None:
            if isinstance(other, (float, complex, np.number)):
                return complex(self) + other
            return NotImplemented
        return CRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = CRational._lift(other)
        if o is None:
            if isinstance(other, (float, complex, np.number)):
                return complex(self) * other
            return NotImplemented
        return CRational(self.re * o.re - self.im * o.im,
                         self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = CRational._lift(other)
        if o is None:
            if isinstance(other, (float, complex, np.number)):
                return complex(self) / other
            return NotImplemented
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("division by exact zero")
        return CRational((self.re * o.re + self.im * o.im) / den,
                         (self.im * o.re - self.re * o.im) / den)

    def __rtruediv__(self, other):
        o = CRational._lift(other)
        if o is None:
            return other / complex(self)
        return o / self

    def __pow__(self, n):
        if not isinstance(n, int):
            return complex(self) ** n
        if n < 0:
            return CRational(1) / (self ** (-n))
        out = CRational(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out


I = CRational(0, 1)


def as_coefficient(c):
    """Normalise a scalar to ``CRational`` (exact) or ``complex`` (float)."""
    if isinstance(c, CRational):
        return c
    if isinstance(c, bool):
        return CRational(int(c))
    if isinstance(c, (int, Rational)):
        return CRational(c)
    if isinstance(c, (float, complex, np.floating, np.complexfloating)):
        return complex(c)
    if isinstance(c, np.integer):
        return CRational(int(c))
    raise TypeError(f"unsupported coefficient type {type(c).__name__}")


def _is_zero(c) -> bool:
    return not c


def is_exact(c) -> bool:
    return isinstance(c, CRational)


def coefficient_to_json(c) -> dict:
    if isinstance(c, CRational):
        return {"re": str(c.re), "im": str(c.im)}
    c = complex(c)
    return {"re": repr(c.real), "im": repr(c.imag)}


def coefficient_from_json(re: str, im: str):
    def parse(s):
        s = str(s)
        if any(ch in s for ch in ".eEn") and "/" not in s:
            return float(s)
        return Fraction(s)

    r, i = parse(re), parse(im)
    if isinstance(r, float) or isinstance(i, float):
        return complex(float(r), float(i))
    return CRational(r, i)


def _grlex_key(exp):
    return (sum(exp), tuple(-e for e in exp))


class Poly:
    """Sparse polynomial in ``dim`` variables.

    Parameters
    ----------
    dim : int
        Number of variables.
    terms : mapping of tuple -> coefficient
        Exponent tuples of length ``dim``. Zero coefficients are dropped.
    """

    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, terms: Mapping | None = None):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = int(dim)
        clean: dict = {}
        for exp, c in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != self.dim or min(exp, default=0) < 0:
                raise ValueError(f"bad multi-index {exp} for dim {self.dim}")
            c = as_coefficient(c)
            clean[exp] = clean[exp] + c if exp in clean else c
        self.terms = {e: c for e, c in clean.items() if not _is_zero(c)}

    # -- structure ---------------------------------------------------------
    @classmethod
    def constant(cls, dim, value=1):
        return cls(dim, {(0,) * dim: value})

    @classmethod
    def monomial(cls, exp, coeff=1):
        return cls(len(exp), {tuple(exp): coeff})

    def is_zero(self) -> bool:
        return not self.terms

    def degrees(self) -> list[int]:
        return sorted({sum(e) for e in self.terms})

    @property
    def degree(self) -> int:
        """Top total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self.terms), default=-1)

    @property
    def min_degree(self) -> int:
        return min((sum(e) for e in self.terms), default=-1)

    def is_homogeneous(self) -> bool:
        return len(self.degrees()) <= 1

    def is_exact(self) -> bool:
        return all(isinstance(c, CRational) for c in self.terms.values())

    def homogeneous_part(self, n: int) -> "HomoPoly":
        return HomoPoly(self.dim, n, {e: c for e, c in self.terms.items() if sum(e) == n})

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: _grlex_key(kv[0]))

    def coefficient(self, exp):
        return self.terms.get(tuple(exp), CRational(0))

    # -- arithmetic --------------------------------------------------------
    def _check(self, other):
        if not isinstance(other, Poly):
            return False
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return True

    def __add__(self, other):
        if not self._check(other):
            other = Poly.constant(self.dim, other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out[e] + c if e in out else c
        return Poly(self.dim, out)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.dim, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not self._check(other):
            other = as_coefficient(other)
            return Poly(self.dim, {e: c * other for e, c in self.terms.items()})
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                p = c1 * c2
                out[e] = out[e] + p if e in out else p
        return Poly(self.dim, out)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        scalar = as_coefficient(scalar)
        return Poly(self.dim, {e: c / scalar for e, c in self.terms.items()})

    def __pow__(self, n: int):
        out = Poly.constant(self.dim)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.dim == other.dim and self.terms == other.terms
        return NotImplemented

    __hash__ = None

    def __repr__(self):
        if not self.terms:
            return f"Poly(dim={self.dim}, 0)"
        parts = [f"{c}*{list(e)}" for e, c in self.sorted_terms()]
        return f"Poly(dim={self.dim}, " + " + ".join(parts) + ")"

    # -- evaluation --------------------------------------------------------
    def to_complex(self) -> "Poly":
        return Poly(self.dim, {e: complex(c) for e, c in self.terms.items()})

    def evaluate(self, xi) -> np.ndarray | complex:
        """Evaluate at points ``xi`` of shape ``(..., dim)`` (floating point).

        For ``dim == 1`` a plain array of shape ``(m,)`` is read as ``m`` points.
        """
        xi = np.asarray(xi)
        if not np.iscomplexobj(xi):
            xi = xi.astype(float)
        if self.dim == 1 and (xi.ndim == 0 or xi.shape[-1] != 1):
            xi = xi[..., None]
        if xi.shape[-1] != self.dim:
            raise ValueError(f"points have {xi.shape[-1]} coordinates, expected {self.dim}")
        out = np.zeros(xi.shape[:-1], dtype=complex)
        if self.terms:
            top = max(max(e) for e in self.terms)
            powers = [np.ones_like(xi)]
            for _ in range(top):
                powers.append(powers[-1] * xi)
            for e, c in self.terms.items():
                mono = np.ones(xi.shape[:-1], dtype=xi.dtype)
                for j, ej in enumerate(e):
                    if ej:
                        mono = mono * powers[ej][..., j]
                out = out + complex(c) * mono
        return complex(out) if out.ndim == 0 else out

    def evaluate_exact(self, point):
        """Exact evaluation at a point with rational coordinates."""
        total = CRational(0)
        for e, c in self.terms.items():
            m = CRational(1)
            for x, k in zip(point, e):
                m = m * CRational(x) ** k
            total = total + c * m
        return total

    # -- serialisation -----------------------------------------------------
    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "degree": self.degree,
            "terms": [{"exp": list(e), **coefficient_to_json(c)} for e, c in self.sorted_terms()],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "Poly":
        terms = {tuple(t["exp"]): coefficient_from_json(t["re"], t["im"]) for t in data["terms"]}
        return cls(data["dim"], terms)


class HomoPoly(Poly):
    """Homogeneous polynomial with a declared degree.

    The zero polynomial keeps its declared degree so that degree checks
    remain meaningful for vanishing layers.
    """

    __slots__ = ("_degree",)

    def __init__(self, dim: int, degree: int, terms: Mapping | None = None):
        super().__init__(dim, terms)
        if degree < 0:
            raise ValueError("degree must be non-negative")
        for e in self.terms:
            if sum(e) != degree:
                raise ValueError(f"term {e} has degree {sum(e)}, expected {degree}")
        self._degree = int(degree)

    @property
    def degree(self) -> int:
        return self._degree

    @classmethod
    def from_poly(cls, p: Poly, degree: int) -> "HomoPoly":
        return cls(p.dim, degree, p.terms)

    def __repr__(self):
        return f"HomoPoly(degree={self._degree}, {super().__repr__()})"

    def to_json(self) -> dict:
        data = super().to_json()
        data["degree"] = self._degree
        return data

    @classmethod
    def from_json(cls, data: Mapping) -> "HomoPoly":
        p = Poly.from_json(data)
        return cls(p.dim, data["degree"], p.terms)


def homo_add(p: HomoPoly, q: HomoPoly) -> HomoPoly:
    """Sum of two homogeneous polynomials of the same dimension and degree."""
    if p.dim != q.dim:
        raise ValueError(f"dimension mismatch: {p.dim} vs {q.dim}")
    if p.degree != q.degree:
        raise ValueError(f"degree mismatch: {p.degree} vs {q.degree}")
    return HomoPoly.from_poly(Poly.__add__(p, q), p.degree)


def homo_eval(p: Poly, xi):
    """Evaluate a polynomial at a point (exactly if the point is rational)."""
    pts = list(xi) if np.ndim(xi) else [xi]
    if p.is_exact() and all(isinstance(v, (int, Rational)) for v in pts):
        return p.evaluate_exact(pts)
    return p.evaluate(np.asarray(pts, dtype=float))


class GradedSeries:
    """Truncated series ``sum_k t**(-k/order) * layer_k``.

    Parameters
    ----------
    dim : int
        Number of variables.
    order : int
        Base degree ``l`` of the underlying operator.
    offset : int
        Degree offset; every term in grade ``k`` has degree
        ``k + offset + m*order`` for some ``m >= 0``.
    max_grade : int
        Truncation grade ``K``.
    layers : mapping of int -> Poly
        Missing grades are zero.
    """

    __slots__ = ("dim", "order", "offset", "max_grade", "layers")

    def __init__(self, dim: int, order: int, offset: int, max_grade: int,
                 layers: Mapping[int, Poly] | None = None):
        if order < 1:
            raise ValueError("order must be positive")
        if max_grade < 0:
            raise ValueError("max_grade must be non-negative")
        self.dim = int(dim)
        self.order = int(order)
        self.offset = int(offset)
        self.max_grade = int(max_grade)
        self.layers: dict[int, Poly] = {}
        for k, p in (layers or {}).items():
            if not 0 <= k <= max_grade:
                raise ValueError(f"grade {k} outside 0..{max_grade}")
            if p.dim != self.dim:
                raise ValueError("layer dimension mismatch")
            for n in p.degrees():
                gap = n - k - self.offset
                if gap < 0 or gap % self.order:
                    raise ValueError(
                        f"grade {k} holds degree {n}, incompatible with offset "
                        f"{self.offset} and order {self.order}")
            if not p.is_zero():
                self.layers[int(k)] = Poly(p.dim, p.terms)

    @classmethod
    def one(cls, dim, order, max_grade):
        return cls(dim, order, 0, max_grade, {0: Poly.constant(dim)})

    def layer(self, k: int) -> Poly:
        """Layer at grade ``k`` (zero polynomial when absent)."""
        return self.layers.get(k, Poly(self.dim))

    def homo_layer(self, k: int) -> HomoPoly:
        """Layer ``k`` as a homogeneous polynomial; raises if it is mixed."""
        p = self.layer(k)
        if not p.is_homogeneous():
            raise ValueError(f"grade {k} is not homogeneous: degrees {p.degrees()}")
        return HomoPoly.from_poly(p, p.degree if p.terms else k + self.offset)

    def grades(self) -> list[int]:
        return sorted(self.layers)

    def lowest_nonzero_grade(self, start: int = 1):
        for k in range(start, self.max_grade + 1):
            if k in self.layers:
                return k
        return None

    def without_grade_zero(self) -> "GradedSeries":
        return GradedSeries(self.dim, self.order, self.offset, self.max_grade,
                            {k: p for k, p in self.layers.items() if k})

    def truncate(self, K: int) -> "GradedSeries":
        return GradedSeries(self.dim, self.order, self.offset, K,
                            {k: p for k, p in self.layers.items() if k <= K})

    def with_offset(self, offset: int) -> "GradedSeries":
        """Re-label the offset downward by a multiple of ``order``."""
        gap = self.offset - offset
        if gap < 0 or gap % self.order:
            raise ValueError(f"cannot move offset {self.offset} to {offset}")
        return GradedSeries(self.dim, self.order, offset, self.max_grade, self.layers)

    def scale(self, c) -> "GradedSeries":
        return GradedSeries(self.dim, self.order, self.offset, self.max_grade,
                            {k: p * c for k, p in self.layers.items()})

    def __neg__(self):
        return self.scale(-1)

    def __add__(self, other: "GradedSeries") -> "GradedSeries":
        _check_compatible(self, other)
        off = min(self.offset, other.offset)
        a, b = self.with_offset(off), other.with_offset(off)
        K = min(a.max_grade, b.max_grade)
        layers = {}
        for k in set(a.layers) | set(b.layers):
            if k <= K:
                layers[k] = a.layer(k) + b.layer(k)
        return GradedSeries(self.dim, self.order, off, K, layers)

    def __eq__(self, other):
        if not isinstance(other, GradedSeries):
            return NotImplemented
        return (self.dim == other.dim and self.order == other.order
                and self.max_grade == other.max_grade
                and self.layers == other.layers)

    __hash__ = None

    def __repr__(self):
        return (f"GradedSeries(dim={self.dim}, order={self.order}, offset={self.offset}, "
                f"K={self.max_grade}, grades={self.grades()})")

    def evaluate(self, t: float, xi) -> complex:
        """Sum of ``t**(-k/order) * layer_k(xi)``."""
        return sum(t ** (-k / self.order) * p.evaluate(xi) for k, p in self.layers.items())

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "order": self.order,
            "offset": self.offset,
            "max_grade": self.max_grade,
            "layers": [{"grade": k, **self.layers[k].to_json()} for k in self.grades()],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "GradedSeries":
        layers = {entry["grade"]: Poly.from_json(entry) for entry in data["layers"]}
        return cls(data["dim"], data["order"], data["offset"], data["max_grade"], layers)


def _check_compatible(S: GradedSeries, T: GradedSeries):
    if S.dim != T.dim:
        raise ValueError(f"dimension mismatch: {S.dim} vs {T.dim}")
    if S.order != T.order:
        raise ValueError(f"order mismatch: {S.order} vs {T.order}")


def series_mul(S: GradedSeries, T: GradedSeries, K: int) -> GradedSeries:
    """Product of two graded series truncated at grade ``K``.

    Grades add and degree offsets add.
    """
    _check_compatible(S, T)
    out: dict[int, Poly] = {}
    for i, p in S.layers.items():
        for j, q in T.layers.items():
            if i + j > K:
                continue
            prod = p * q
            out[i + j] = out[i + j] + prod if i + j in out else prod
    return GradedSeries(S.dim, S.order, S.offset + T.offset, K, out)


def series_power(S: GradedSeries, n: int, K: int) -> GradedSeries:
    """``S**n`` truncated at grade ``K``."""
    out = GradedSeries.one(S.dim, S.order, K)
    for _ in range(n):
        out = series_mul(out, S, K)
    return out


def series_exp_neg(S: GradedSeries, K: int) -> GradedSeries:
    """``exp(-S)`` truncated at grade ``K`` for a series without grade 0.

    The result has offset 0, so ``S.offset`` must be a multiple of the
    order.
    """
    if 0 in S.layers:
        raise ValueError("series_exp_neg needs a series without a grade-0 layer")
    if S.offset % S.order:
        raise ValueError("offset must be a multiple of the order")
    total = GradedSeries.one(S.dim, S.order, K)
    lowest = S.lowest_nonzero_grade()
    if lowest is None:
        return total
    neg = -S
    term = GradedSeries.one(S.dim, S.order, K)
    for m in range(1, K // lowest + 1):
        term = series_mul(term, neg, K).scale(Fraction(1, m))
        total = total + term.with_offset(0)
    return total


def expansion_polynomials(A_layers: GradedSeries, J: int, K: int) -> GradedSeries:
    """Polynomials of the expansion of ``(-A)**J * exp(-t A)`` in grades.

    With ``A_layers`` holding ``t*A(t**(-1/l) xi) = sum_k t**(-k/l) A_k(xi)``
    the returned series satisfies::

        (-1)**J (A(t**(-1/l) xi))**J exp(-t A(t**(-1/l) xi))
            = t**(-J) exp(-A_0(xi)) * sum_k t**(-k/l) layer_k(xi) + ...

    Grade 0 is ``(-A_0)**J`` and grade ``k >= 1`` is the coefficient
    polynomial of ``t**(-k/l - J)``.
    """
    if J < 0:
        raise ValueError("J must be non-negative")
    if 0 not in A_layers.layers:
        raise ValueError("the grade-0 (principal symbol) layer is missing")
    power = series_power(-A_layers.truncate(K), J, K)
    expo = series_exp_neg(A_layers.truncate(K).without_grade_zero(), K)
    return series_mul(power, expo, K)


def multinomial_layers(dim: int, n: int) -> Iterable[tuple]:
    """All exponent tuples of total degree ``n`` in graded-lex order."""
    def rec(remaining, slots):
        if slots == 1:
            yield (remaining,)
            return
        for first in range(remaining, -1, -1):
            for rest in rec(remaining - first, slots - 1):
                yield (first,) + rest
    return rec(n, dim)


def multinomial(exp) -> int:
    out = math.factorial(sum(exp))
    for e in exp:
        out //= math.factorial(e)
    return out
