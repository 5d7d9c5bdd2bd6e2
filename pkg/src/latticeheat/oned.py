"""The one-dimensional family ``A = -Delta_N`` of order-2N central differences.

Everything here is explicit: the coefficient tables are exact rationals,
the profiles are Gaussian derivatives (``h^(m) = p_m h`` with
``p_0 = 1`` and ``p_{m+1} = p_m' - (x/2) p_m``) and their radial
antiderivatives, and the lattice constant is a single regular integral.
The module doubles as an exact oracle for the general machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .polyalg import Poly, expansion_polynomials
from .quadrature import composite_gauss, gauss_legendre
from .stencil import Stencil, laplacian_1d, laplacian_coefficients, taylor_layers

__all__ = [
    "OneDConstants",
    "OneDPolys",
    "CrossCheckReport",
    "OneDProfiles",
    "constants",
    "polys",
    "cross_check",
    "profiles",
    "gaussian_derivative_poly",
    "omega_symbol",
    "omega_1d",
    "step_integral",
    "origin_limit_terms",
    "assemble_1d",
]

ASSEMBLIES = ("first", "second", "gradient", "gradient_dt")


@dataclass(frozen=True)
class OneDConstants:
    """Exact coefficient tables of the order-``2N`` family.

    ``b[n]`` for ``N <= n <= n_max``, ``c[(n, m)]`` and ``d[(J, n)]`` for
    ``J <= J_max``.
    """

    N: int
    a: tuple
    b: dict
    c: dict
    d: dict
    n_max: int
    J_max: int

    def to_json(self) -> dict:
        return {"N": self.N, "a": [str(v) for v in self.a],
                "b": {str(n): str(v) for n, v in self.b.items()},
                "c": {f"{n},{m}": str(v) for (n, m), v in self.c.items()},
                "d": {f"{J},{n}": str(v) for (J, n), v in self.d.items()}}


def constants(N: int, n_max: int, J_max: int) -> OneDConstants:
    """Build the ``b``, ``c`` and ``d`` tables up to ``n_max`` and ``J_max``."""
    if N < 1:
        raise ValueError("N must be positive")
    a = tuple(laplacian_coefficients(N))
    b = {}
    for n in range(N, n_max + 1):
        moment = sum(av * Fraction(v) ** (2 * (n + 1)) for v, av in enumerate(a, start=1))
        b[n] = Fraction(2 * (-1) ** (n + 1), math.factorial(2 * (n + 1))) * moment
    # c[(n, m)]: sum over compositions of n into m parts >= N
    c = {}
    for n in range(N, n_max + 1):
        c[(n, 1)] = b[n]
        for m in range(2, n // N + 1):
            c[(n, m)] = sum((b[l] * c[(n - l, m - 1)] for l in range(N, n - N * (m - 1) + 1)
                             if (n - l, m - 1) in c), Fraction(0))
    d = {}
    for J in range(J_max + 1):
        for n in range(N, n_max + 1):
            d[(J, n)] = sum((Fraction((-1) ** m * math.comb(J, m)) * c[(n, m)]
                             for m in range(1, min(n // N, J) + 1)), Fraction(0))
    return OneDConstants(N, a, b, c, d, n_max, J_max)


@dataclass(frozen=True)
class OneDPolys:
    """``P_n``, ``Q_Jn`` and ``R_Jn`` as exact univariate polynomials."""

    n: int
    J: int
    P: Poly
    Q: Poly
    R: Poly


def _xi_power(k: int, coeff=1) -> Poly:
    return Poly(1, {(k,): coeff})


def _p_poly(const: OneDConstants, n: int) -> Poly:
    out = Poly(1)
    for m in range(1, n // const.N + 1):
        out = out + _xi_power(2 * (n + m), const.c[(n, m)] / math.factorial(m))
    return out


def polys(const: OneDConstants, n: int, J: int) -> OneDPolys:
    """Assemble ``P_n``, ``Q_Jn`` and ``R_Jn`` for ``n >= N``."""
    N = const.N
    if n < N or n > const.n_max or J > const.J_max:
        raise ValueError(f"(n={n}, J={J}) outside the tables")
    P = _p_poly(const, n)
    Q = Poly(1)
    if n >= 2 * N:
        for l1 in range(N, n - N + 1):
            Q = Q + _xi_power(2 * l1, const.d[(J, l1)]) * _p_poly(const, n - l1)
    inner = _xi_power(2 * n, const.d[(J, n)]) + P + Q
    R = _xi_power(2 * J, (-1) ** J) * inner
    return OneDPolys(n, J, P, Q, R)


@dataclass
class CrossCheckReport:
    """Outcome of comparing the general construction with the closed forms."""

    N: int
    K1: int
    J: int
    ok: bool
    mismatches: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"N": self.N, "K1": self.K1, "J": self.J, "ok": self.ok,
                "mismatches": self.mismatches}


def cross_check(N: int, K1: int, J: int) -> CrossCheckReport:
    """Exact equality of the general expansion polynomials with ``R_Jn``.

    Grade ``2n`` must equal ``R_Jn`` for ``N <= n <= K1``; every odd grade
    and every grade in ``1..2N-1`` must vanish; grade 0 is ``(-xi^2)^J``.
    """
    K = 2 * K1
    series = expansion_polynomials(taylor_layers(laplacian_1d(N), K), J, K)
    const = constants(N, max(K1, N), J)
    bad = []
    if series.layer(0) != _xi_power(2 * J, (-1) ** J):
        bad.append({"grade": 0, "got": repr(series.layer(0))})
    for k in range(1, K + 1):
        got = series.layer(k)
        if k % 2 or k < 2 * N:
            want = Poly(1)
        else:
            want = polys(const, k // 2, J).R
        if got != want:
            diff = got - want
            first = diff.sorted_terms()[0]
            bad.append({"grade": k, "degree": first[0][0], "difference": str(first[1])})
    return CrossCheckReport(N, K1, J, not bad, bad)


# -- Gaussian derivatives ---------------------------------------------------

@lru_cache(maxsize=None)
def gaussian_derivative_poly(m: int) -> tuple:
    """Coefficients (ascending, exact) of ``p_m`` with ``h^(m) = p_m h``."""
    if m == 0:
        return (Fraction(1),)
    prev = list(gaussian_derivative_poly(m - 1)) + [Fraction(0)]
    out = [Fraction(0)] * (len(prev))
    for k, c in enumerate(prev):
        if k:
            out[k - 1] += k * c
        if k + 1 < len(out):
            out[k + 1] -= c / 2
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return tuple(out)


def _h(y):
    return np.exp(-0.25 * np.asarray(y, dtype=float) ** 2) / (2.0 * math.sqrt(math.pi))


def h_derivative(m: int, y) -> np.ndarray:
    """``m``-th derivative of ``h(y) = exp(-y^2/4) / (2 sqrt(pi))``."""
    coef = np.array([float(c) for c in gaussian_derivative_poly(m)])
    y = np.asarray(y, dtype=float)
    return np.polynomial.polynomial.polyval(y, coef) * _h(y)


class OneDProfiles:
    """Closed-form profiles ``h``, ``h_Jn``, ``f_n``, ``g``, ``g_n``, ``g_Jn`` for one ``N``."""

    _TAIL = 40.0  # h(y + s) is below 1e-170 for s beyond this when y >= 0

    def __init__(self, N: int, n_max: int | None = None, J_max: int = 3):
        self.N = N
        self.const = constants(N, n_max or N + 6, J_max)
        self._R: dict[tuple, list] = {}

    def _r_terms(self, J: int, n: int) -> list:
        """``(m, real coefficient)`` pairs of ``R_Jn(-i d/dx)``."""
        key = (J, n)
        if key not in self._R:
            poly = _xi_power(2 * J, (-1) ** J) if n == 0 else polys(self.const, n, J).R
            terms = []
            for (m,), c in poly.sorted_terms():
                val = complex(c) * (-1j) ** m
                if abs(val.imag) > 1e-15 * max(abs(val.real), 1.0):
                    raise ValueError("odd-degree term in a 1D expansion polynomial")
                terms.append((m, val.real))
            self._R[key] = terms
        return self._R[key]

    def h(self, y) -> np.ndarray:
        return _h(y)

    def h_jn(self, J: int, n: int, y, deriv: int = 0) -> np.ndarray:
        """``d^deriv/dy^deriv`` of ``h_Jn = R_Jn(-i d/dy) h`` (``n = 0`` gives ``h^(2J)``)."""
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        for m, c in self._r_terms(J, n):
            out = out + c * h_derivative(m + deriv, y)
        return out

    def f0(self, y, deriv: int = 0) -> np.ndarray:
        """``f_0(y) = 2y int_y^inf h/rho^2`` for ``y >= 0``, and its derivatives.

        Uses ``f_0(y) = int_0^inf s h(y+s) ds`` (so ``f_0'' = h``) and
        ``f_0'(y) = -int_0^inf h(y+s) ds``.
        """
        y = np.asarray(y, dtype=float)
        if deriv >= 2:
            return h_derivative(deriv - 2, y)
        s, w = composite_gauss(np.linspace(0.0, self._TAIL, 41), 16)
        vals = _h(y[..., None] + s)
        if deriv == 1:
            return -(vals @ w)
        return vals @ (w * s)

    def g(self, y) -> np.ndarray:
        """``g = f_0'``."""
        return self.f0(y, 1)

    def f_n(self, n: int, y, deriv: int = 0) -> np.ndarray:
        """``f_n(y) = -(2/y^(2n-1)) int_0^y rho^(2n-2) h_0n(rho) drho`` and derivatives.

        Written as ``-2 int_0^1 s^(2n-2) h_0n(s y) ds`` and differentiated
        under the integral sign.
        """
        if n < self.N:
            return np.zeros_like(np.asarray(y, dtype=float))
        y = np.asarray(y, dtype=float)
        panels = max(1, int(math.ceil(float(np.max(np.abs(y)))) if y.size else 1))
        s, w = composite_gauss(np.linspace(0.0, 1.0, panels + 1), 20)
        vals = self.h_jn(0, n, y[..., None] * s, deriv)
        return -2.0 * vals @ (w * s ** (2 * n - 2 + deriv))

    def g_n(self, n: int, y) -> np.ndarray:
        """Coefficient of ``t^(-n/2)`` in the gradient of the second kernel."""
        out = self.f0(y, n + 1) / math.factorial(n + 1)
        for s in range(self.N, (n + 1) // 2 + 1):
            j = n + 1 - 2 * s
            if j >= 1:
                out = out + self.f_n(s, y, j) / math.factorial(j)
        return out

    def g_jn(self, J: int, n: int, y) -> np.ndarray:
        """Coefficient of ``t^(-J-1-n/2)`` in ``d^J/dt^J`` of the gradient of the first kernel."""
        out = self.h_jn(J, 0, y, n + 1) / math.factorial(n + 1)
        for s in range(self.N, (n + 1) // 2 + 1):
            j = n + 1 - 2 * s
            if j >= 1:
                out = out + self.h_jn(J, s, y, j) / math.factorial(j)
        return out


@lru_cache(maxsize=16)
def profiles(N: int) -> OneDProfiles:
    """Shared :class:`OneDProfiles` for ``N``."""
    return OneDProfiles(N)


# -- lattice constant -------------------------------------------------------

def _inverse_ratio_series(st: Stencil, terms: int = 4) -> list:
    """Taylor coefficients ``e_j`` of ``xi^2 / A(xi) = sum e_j xi^(2j)``."""
    layers = taylor_layers(st, 2 * terms)
    a = [complex(layers.layer(2 * j).coefficient((2 + 2 * j,))).real for j in range(terms + 1)]
    if a[0] == 0:
        raise ValueError("principal symbol vanishes")
    e = [1.0 / a[0]]
    for j in range(1, terms + 1):
        e.append(-sum(a[i] * e[j - i] for i in range(1, j + 1)) / a[0])
    return e


def omega_symbol(st: Stencil, x: float) -> float:
    """``(1/2pi)(int_{-pi}^{pi} (cos(x xi)/A - 1/xi^2) dxi - 2/pi) + x/2`` for ``x >= 0``.

    Near ``xi = 0`` the integrand is replaced by its even Taylor polynomial
    of degree 4, built from the Taylor layers of ``A``.
    """
    x = abs(float(x))
    e = _inverse_ratio_series(st, 3)
    cos_c = [1.0, -x ** 2 / 2, x ** 4 / 24, -x ** 6 / 720]
    # (cos(x xi) xi^2/A - 1)/xi^2 = sum_k q_k xi^(2k-2)
    q = [sum(cos_c[i] * e[k - i] for i in range(k + 1)) for k in range(4)]
    local = q[1:]  # q[0] == 1 cancels the 1/xi^2
    rad = min(1e-2, 0.05 / (1.0 + x))
    patch = local[0] * rad + local[1] * rad ** 3 / 3 + local[2] * rad ** 5 / 5
    panels = 8 + int(2 * x)
    xi, w = composite_gauss(np.linspace(rad, np.pi, panels + 1), 24)
    A = st.symbol(xi).real
    body = np.sum(w * (np.cos(x * xi) / A - 1.0 / xi ** 2))
    integral = 2.0 * (patch + body)
    return (integral - 2.0 / np.pi) / (2.0 * np.pi) + x / 2.0


def omega_1d(N: int, x) -> np.ndarray | float:
    """Lattice constant of the order-``2N`` family at integer ``x >= 0``."""
    st = laplacian_1d(N)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs < 0) or np.any(xs != np.rint(xs)):
        raise ValueError("x must be a non-negative integer")
    vals = np.array([omega_symbol(st, v) for v in xs])
    return float(vals[0]) if np.ndim(x) == 0 else vals


def step_integral(x: int, n_panels: int | None = None) -> float:
    """``(1/4pi) int_{-pi}^{pi} (cos(x xi) - cos((x+1) xi)) / (1 - cos xi) dxi``.

    The integrand is a trigonometric polynomial in disguise; it is written
    with half angles so that ``xi = 0`` is harmless.
    """
    n_panels = n_panels or 8 + 2 * abs(int(x))
    xi, w = composite_gauss(np.linspace(0.0, np.pi, n_panels + 1), 24)
    num = 2.0 * np.sin((2 * x + 1) * xi / 2) * np.sin(xi / 2)
    den = 2.0 * np.sin(xi / 2) ** 2
    return float(2.0 * np.sum(w * num / den) / (4.0 * np.pi))


def origin_limit_terms(sigma: float) -> tuple[float, float]:
    """``I_1(sigma) = int_sigma^pi dxi / (2(1-cos xi))`` and ``I_2 = -int_sigma^pi dxi/xi^2``.

    ``I_1`` is integrated numerically; ``pi * Omega(0)`` for ``N = 1`` is
    the ``sigma -> 0`` limit of ``I_1 + I_2 - 1/pi``.
    """
    breaks = np.geomspace(sigma, np.pi, 40)
    xi, w = composite_gauss(breaks, 20)
    I1 = float(np.sum(w / (4.0 * np.sin(xi / 2) ** 2)))
    I2 = 1.0 / np.pi - 1.0 / sigma
    return I1, I2


# -- assemblies ---------------------------------------------------------------

def assemble_1d(N: int, which: str, x, t: float, J: int = 0, K1: int | None = None,
                argument: str = "scaled"):
    """Explicit large-time expansions of the order-``2N`` family.

    Parameters
    ----------
    which : {"first", "second", "gradient", "gradient_dt"}
        ``first``: ``d^J u/dt^J``; ``second``: ``v``; ``gradient``: the
        forward difference ``v(x+1) - v(x)``; ``gradient_dt``: ``d^J/dt^J``
        of ``u(x+1) - u(x)``.
    x : int or array of int
        Lattice points; negative points use the reflection rules.
    K1 : int
        Truncation; at least ``N`` for first/second and at least 2 for the
        gradients.
    argument : {"scaled", "unscaled"}
        For ``gradient_dt`` only: evaluate the two leading terms at
        ``x/sqrt(t)`` (what a Taylor expansion of the ``first`` series
        gives) or at ``x``.

    Returns
    -------
    AsymptoticValue
    """
    from .expansion import AsymptoticValue

    if which not in ASSEMBLIES:
        raise ValueError(f"which must be one of {ASSEMBLIES}")
    if argument not in ("scaled", "unscaled"):
        raise ValueError("argument must be 'scaled' or 'unscaled'")
    K1 = K1 if K1 is not None else (N if which in ("first", "second") else 2)
    low = N if which in ("first", "second") else 2
    if K1 < low:
        raise ValueError(f"K1 must be at least {low} for {which}")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs != np.rint(xs)):
        raise ValueError("x must be integer")
    prof = profiles(N)
    rt = math.sqrt(t)
    terms = []
    if which == "first":
        y = xs / rt
        terms.append((0, t ** (-J - 0.5) * prof.h_jn(J, 0, y)))
        for n in range(N, K1 + 1):
            terms.append((2 * n, t ** (-n - J - 0.5) * prof.h_jn(J, n, y)))
    elif which == "second":
        ax = np.abs(xs)
        y = ax / rt
        terms.append(("f0", rt * prof.f0(y)))
        terms.append(("omega", omega_1d(N, ax)))
        for n in range(N, K1 + 1):
            terms.append((f"f{n}", t ** (-(n - 0.5)) * prof.f_n(n, y)))
    else:
        sign = np.where(xs >= 0, 1.0, -1.0)
        ax = np.where(xs >= 0, xs, -(xs + 1))
        y = ax / rt
        if which == "gradient":
            grad_omega = omega_1d(N, ax + 1) - omega_1d(N, ax)
            terms.append(("grad_omega", sign * grad_omega))
            terms.append(("g", sign * prof.g(y)))
            terms.append(("h/2", sign * prof.h(y) / (2 * rt)))
            for n in range(2, K1 + 1):
                terms.append((f"g{n}", sign * t ** (-n / 2) * prof.g_n(n, y)))
        else:
            arg = y if argument == "scaled" else ax
            terms.append(("lead", sign * t ** (-J - 1) * h_derivative(2 * J + 1, arg)))
            terms.append(("next", sign * t ** (-J - 1.5) * h_derivative(2 * J + 2, arg) / 2))
            for n in range(2, K1 + 1):
                terms.append((f"g{J}{n}", sign * t ** (-J - 1 - n / 2) * prof.g_jn(J, n, y)))
    total = sum(v for _, v in terms)
    if np.ndim(x) == 0:
        total = float(total[0])
        terms = [(lab, float(np.atleast_1d(v)[0])) for lab, v in terms]
    return AsymptoticValue(total, terms, K1, t, which)
