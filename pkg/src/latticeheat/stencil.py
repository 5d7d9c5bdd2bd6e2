"""Difference operators on the lattice, their symbols and Taylor layers.

A stencil stores the operator in tap form,

    (A_eps u)(x) = eps**(-order) * sum_s c_s u(x + s*eps),

so its symbol is ``A(theta) = sum_s c_s exp(i s.theta)`` and the heat
semigroup is ``exp(-t A)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from .polyalg import (CRational, GradedSeries, HomoPoly, Poly, as_coefficient,
                      coefficient_from_json, coefficient_to_json, multinomial_layers)
from .quadrature import sphere_rule

__all__ = [
    "Stencil",
    "EllipticityReport",
    "from_difference_products",
    "symbol",
    "taylor_layers",
    "approximation_order",
    "check_ellipticity",
    "laplacian_coefficients",
    "laplacian_1d",
    "simple_walk",
    "triangular",
    "TRIANGULAR_MAP",
    "parse_stencil",
]

# Maps the triangular lattice chart onto a lattice whose continuous symbol is |xi|^2.
TRIANGULAR_MAP = np.array([[1.0, -1.0 / math.sqrt(3.0)], [0.0, 2.0 / math.sqrt(3.0)]])

_ZERO_FLOAT_TOL = 1e-13


class Stencil:
    """Finite difference operator in tap form.

    Parameters
    ----------
    taps : mapping of offset tuple -> coefficient
        Exact coefficients (int, Fraction, CRational) keep every derived
        polynomial exact; floats switch to double precision.
    order : int
        Even order ``l`` of the approximated differential operator.
    name : str, optional
        Identifier used in artifacts. Defaults to a JSON digest of the taps.
    """

    def __init__(self, taps: Mapping[Sequence[int], object], order: int, name: str | None = None):
        if order < 2 or order % 2:
            raise ValueError(f"order must be an even positive integer, got {order}")
        clean: dict[tuple, object] = {}
        dim = None
        for off, c in taps.items():
            off = tuple(int(v) for v in np.atleast_1d(off))
            if dim is None:
                dim = len(off)
            elif len(off) != dim:
                raise ValueError("offsets of different lengths")
            c = as_coefficient(c)
            clean[off] = clean[off] + c if off in clean else c
        if dim is None:
            raise ValueError("a stencil needs at least one offset")
        scale = max((abs(complex(c)) for c in clean.values()), default=0.0)
        self._exact = all(isinstance(c, CRational) for c in clean.values())
        if self._exact:
            clean = {s: c for s, c in clean.items() if c}
        else:
            clean = {s: complex(c) for s, c in clean.items()
                     if abs(complex(c)) > _ZERO_FLOAT_TOL * max(scale, 1.0)}
        total = sum(clean.values(), CRational(0))
        if (total if self._exact else abs(complex(total)) > 1e-12 * max(scale, 1.0)):
            raise ValueError(f"taps must sum to zero (A(0) = 0), got {total}")
        self.dim = dim
        self.order = int(order)
        self._taps = MappingProxyType(dict(sorted(clean.items())))
        self._offsets = np.array(list(self._taps), dtype=float).reshape(-1, dim)
        self._coeffs = np.array([complex(c) for c in self._taps.values()], dtype=complex)
        self._even = self.is_real and self.is_symmetric
        if self._even:
            # one representative per pair {s, -s}, weight -2 c_s counted twice
            half = [(s, c) for s, c in self._taps.items() if s > tuple(-v for v in s)]
            self._half_offsets = np.array([s for s, _ in half], dtype=float).reshape(-1, dim)
            self._half_coeffs = np.array([-4.0 * complex(c).real for _, c in half])
        self.name = name or "taps:" + json.dumps(
            [[list(s), str(c)] for s, c in self._taps.items()], separators=(",", ":"))
        self._layer_cache: dict[int, GradedSeries] = {}
        self._approx_order: int | None = None
        self._ellipticity: EllipticityReport | None = None

    # -- basic properties --------------------------------------------------
    @property
    def taps(self) -> Mapping:
        return self._taps

    @property
    def is_exact(self) -> bool:
        return self._exact

    @property
    def is_real(self) -> bool:
        return all(complex(c).imag == 0 for c in self._taps.values())

    @property
    def is_symmetric(self) -> bool:
        """True when ``c_s == c_{-s}`` for every offset."""
        for s, c in self._taps.items():
            mirror = tuple(-v for v in s)
            other = self._taps.get(mirror, 0)
            if self._exact:
                if c != other:
                    return False
            elif abs(complex(c) - complex(other)) > 1e-13:
                return False
        return True

    @property
    def diagonal(self):
        return self._taps.get((0,) * self.dim, CRational(0))

    def __repr__(self):
        return f"Stencil(name={self.name!r}, dim={self.dim}, order={self.order}, taps={len(self._taps)})"

    def __eq__(self, other):
        if not isinstance(other, Stencil):
            return NotImplemented
        return self.order == other.order and dict(self._taps) == dict(other._taps)

    __hash__ = None

    def scaled(self, factor) -> "Stencil":
        """Stencil whose taps are multiplied by ``factor``."""
        f = as_coefficient(factor)
        return Stencil({s: c * f for s, c in self._taps.items()}, self.order,
                       name=f"{self.name}*{factor}")

    # -- symbol ------------------------------------------------------------
    def symbol(self, theta) -> np.ndarray | complex:
        """``A(theta)`` for points of shape ``(..., dim)``.

        Written as ``sum_s c_s (exp(i s.theta) - 1)`` with the half-angle
        form of ``cos - 1`` so that relative accuracy survives near 0.
        """
        theta = np.asarray(theta, dtype=float)
        if self.dim == 1 and (theta.ndim == 0 or theta.shape[-1] != 1):
            theta = theta[..., None]
        if self._even:
            # sine parts cancel in pairs; keep one half-angle sine per tap
            half = np.sin(0.5 * (theta @ self._half_offsets.T))
            vals = (half * half) @ self._half_coeffs + 0j
        else:
            phase = theta @ self._offsets.T
            half = np.sin(0.5 * phase)
            vals = (-2.0 * half * half + 1j * np.sin(phase)) @ self._coeffs
        return complex(vals) if np.ndim(vals) == 0 else vals

    def symbol_gradient(self, theta) -> np.ndarray:
        """Gradient of the symbol, shape ``(..., dim)``."""
        theta = np.asarray(theta, dtype=float)
        if self.dim == 1 and (theta.ndim == 0 or theta.shape[-1] != 1):
            theta = theta[..., None]
        phase = np.exp(1j * (theta @ self._offsets.T))
        return 1j * (phase * self._coeffs) @ self._offsets

    def principal_symbol(self) -> Poly:
        """Grade-0 Taylor layer, the symbol of the continuous operator."""
        return taylor_layers(self, 0).layer(0)

    # -- serialisation -----------------------------------------------------
    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "order": self.order,
            "name": self.name,
            "taps": [{"offset": list(s), **coefficient_to_json(c)} for s, c in self._taps.items()],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "Stencil":
        taps = {tuple(t["offset"]): coefficient_from_json(t["re"], t["im"]) for t in data["taps"]}
        return cls(taps, data["order"], name=data.get("name"))


def symbol(st: Stencil, theta):
    """Evaluate the symbol of ``st`` at ``theta``."""
    return st.symbol(theta)


def _shift_poly(dim: int, exponents: Sequence[int]) -> dict:
    """Expand a product of difference factors into offset -> coefficient."""
    taps = {(0,) * dim: CRational(1)}
    for slot, power in enumerate(exponents):
        if power < 0:
            raise ValueError("difference exponents must be non-negative")
        axis, forward = divmod(slot, 2)
        step = [0] * dim
        step[axis] = 1 if forward else -1
        for _ in range(power):
            new: dict = {}
            for off, c in taps.items():
                moved = tuple(o + s for o, s in zip(off, step))
                new[moved] = new.get(moved, CRational(0)) + c
                new[off] = new.get(off, CRational(0)) - c
            taps = {k: v for k, v in new.items() if v}
    return taps


def from_difference_products(terms, order: int, name: str | None = None) -> Stencil:
    """Build a stencil from products of one-sided differences.

    Parameters
    ----------
    terms : list of (exponents, coefficient)
        ``exponents`` has length ``2*dim`` with slots ordered
        ``(1-, 1+, 2-, 2+, ...)``; slot ``k-`` is the backward difference
        ``u(y - e_k) - u(y)`` and ``k+`` the forward one.
    order : int
        Operator order; every product must have at least this many factors.
    """
    terms = list(terms)
    if not terms:
        raise ValueError("empty term list gives the zero operator")
    dim = None
    total: dict = {}
    for exps, a in terms:
        exps = [int(e) for e in exps]
        if len(exps) % 2 or not exps:
            raise ValueError("exponent vectors need an even, positive length")
        if dim is None:
            dim = len(exps) // 2
        elif len(exps) // 2 != dim:
            raise ValueError("inconsistent dimensions across terms")
        if sum(exps) < order:
            raise ValueError(f"product of {sum(exps)} differences cannot have order {order}")
        a = as_coefficient(a)
        for off, c in _shift_poly(dim, exps).items():
            total[off] = total[off] + a * c if off in total else a * c
    return Stencil(total, order, name=name)


def taylor_layers(st: Stencil, K: int) -> GradedSeries:
    """Homogeneous Taylor layers of the symbol up to grade ``K``.

    Grade ``k`` is the degree ``k + order`` part of
    ``sum_s c_s exp(i s.theta)``; lower degrees must cancel.
    """
    if K < 0:
        raise ValueError("K must be non-negative")
    cached = next((S for k, S in st._layer_cache.items() if k >= K), None)
    if cached is not None:
        return cached.truncate(K)
    ell = st.order
    layers = {}
    scale = max(abs(complex(c)) for c in st.taps.values()) if st.taps else 1.0
    i_pow = CRational(1)
    for n in range(K + ell + 1):
        terms = {}
        for alpha in multinomial_layers(st.dim, n):
            denom = 1
            for a in alpha:
                denom *= math.factorial(a)
            moment = CRational(0)
            for s, c in st.taps.items():
                mono = 1
                for sj, aj in zip(s, alpha):
                    mono *= sj ** aj
                if mono:
                    moment = moment + c * mono
            coeff = moment * i_pow / denom
            if not st.is_exact:
                coeff = complex(coeff)
                if abs(coeff) < 1e-12 * scale:
                    continue
            terms[alpha] = coeff
        poly = HomoPoly(st.dim, n, terms)
        if n < ell:
            if not poly.is_zero():
                raise ValueError(
                    f"degree-{n} Taylor layer is nonzero; the stencil is not consistent "
                    f"with an operator of order {ell}")
        else:
            layers[n - ell] = poly
        i_pow = i_pow * CRational(0, 1)
    series = GradedSeries(st.dim, ell, ell, K, layers)
    st._layer_cache[K] = series
    return series


def approximation_order(st: Stencil, K_max: int = 12) -> int:
    """Smallest grade ``k >= 1`` with a nonzero Taylor layer (``K_max + 1`` if none)."""
    if st._approx_order is not None and st._approx_order <= K_max:
        return st._approx_order
    M = taylor_layers(st, K_max).lowest_nonzero_grade(1)
    if M is None:
        return K_max + 1
    st._approx_order = M
    return M


@dataclass(frozen=True)
class EllipticityReport:
    """Sampled ellipticity constants of a stencil.

    Attributes
    ----------
    c_lower : float
        Minimum of ``Re A(theta) / |theta|**order`` over the grid, with the
        principal symbol standing in at the origin.
    C_upper : float
        Maximum of ``|A(theta)| / |theta|**order``.
    min_re_offorigin : float
        Minimum of ``Re A`` over the nonzero grid points.
    n_grid : int
        Grid intervals per axis.
    verified : bool
        ``c_lower > 0 and min_re_offorigin > 0``.
    """

    c_lower: float
    C_upper: float
    min_re_offorigin: float
    n_grid: int
    verified: bool

    def to_json(self) -> dict:
        return {"c_lower": self.c_lower, "C_upper": self.C_upper,
                "min_re_offorigin": self.min_re_offorigin, "n_grid": self.n_grid,
                "verified": self.verified}


def check_ellipticity(st: Stencil, n_grid: int = 256) -> EllipticityReport:
    """Sample the strong ellipticity constants of ``st`` on ``[-pi, pi]**dim``.

    The grid has ``n_grid`` intervals per axis and includes ``0`` and
    ``+-pi`` when ``n_grid`` is even. This is a numerical check, not a proof.
    """
    if n_grid < 64:
        raise ValueError("n_grid must be at least 64")
    cached = st._ellipticity
    if cached is not None and cached.n_grid == n_grid:
        return cached
    axis = np.linspace(-np.pi, np.pi, n_grid + 1)
    h = axis[1] - axis[0]
    lo, hi, min_re = np.inf, 0.0, np.inf
    d = st.dim
    if d == 1:
        chunks = [axis[:, None]]
    else:
        rest = np.stack(np.meshgrid(*([axis] * (d - 1)), indexing="ij"), axis=-1).reshape(-1, d - 1)
        chunks = (np.column_stack([np.full(len(rest), a), rest]) for a in axis)
    for pts in chunks:
        r = np.linalg.norm(pts, axis=1)
        keep = r > 0.5 * h
        if not np.any(keep):
            continue
        vals = st.symbol(pts[keep])
        ratio_re = vals.real / r[keep] ** st.order
        ratio_abs = np.abs(vals) / r[keep] ** st.order
        lo = min(lo, ratio_re.min())
        hi = max(hi, ratio_abs.max())
        min_re = min(min_re, vals.real.min())
    principal = st.principal_symbol()
    dirs, _, _ = sphere_rule(d, min(n_grid, 64 if d == 2 else 24))
    near = principal.evaluate(dirs) if not principal.is_zero() else np.zeros(len(dirs))
    lo = float(min(lo, np.min(np.real(near))))
    hi = float(max(hi, np.max(np.abs(near))))
    # values at rounding level of the tap magnitudes count as zeros
    floor = 1e-12 * max(sum(abs(complex(c)) for c in st.taps.values()), 1.0)
    report = EllipticityReport(c_lower=lo, C_upper=hi, min_re_offorigin=float(min_re),
                               n_grid=n_grid, verified=bool(lo > floor and min_re > floor))
    st._ellipticity = report
    return report


def min_symbol_derivative(st: Stencil, n_grid: int = 4096) -> float:
    """Minimum of ``A'(theta)`` over the open interval ``(0, pi)`` (1D only)."""
    if st.dim != 1:
        raise ValueError("defined for one-dimensional stencils")
    theta = np.linspace(0.0, np.pi, n_grid + 1)[1:-1]
    return float(np.min(st.symbol_gradient(theta)[..., 0].real))


def _solve_rational(mat, rhs):
    """Gaussian elimination over the rationals."""
    n = len(rhs)
    a = [[Fraction(v) for v in row] + [Fraction(r)] for row, r in zip(mat, rhs)]
    for col in range(n):
        piv = next(r for r in range(col, n) if a[r][col] != 0)
        a[col], a[piv] = a[piv], a[col]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col] / a[col][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [a[i][n] / a[i][i] for i in range(n)]


def laplacian_coefficients(N: int) -> list[Fraction]:
    """Weights ``a_1..a_N`` of the order-``2N`` central second difference.

    They solve ``sum_v a_v v**2 = 1`` and ``sum_v a_v v**(2m) = 0`` for
    ``m = 2..N``.
    """
    if N < 1:
        raise ValueError("N must be positive")
    mat = [[Fraction(v) ** (2 * m) for v in range(1, N + 1)] for m in range(1, N + 1)]
    rhs = [1] + [0] * (N - 1)
    return _solve_rational(mat, rhs)


def laplacian_1d(N: int) -> Stencil:
    """Minus the order-``2N`` accurate 1D Laplacian, ``A(theta) = 2 sum a_v (1 - cos v theta)``."""
    a = laplacian_coefficients(N)
    taps = {(0,): 2 * sum(a)}
    for v, av in enumerate(a, start=1):
        taps[(v,)] = -av
        taps[(-v,)] = -av
    return Stencil(taps, 2, name=f"laplacian1d:{N}")


def simple_walk(d: int) -> Stencil:
    """Generator of the simple walk, ``A(theta) = 2 sum_j (1 - cos theta_j)``."""
    if d < 1:
        raise ValueError("d must be positive")
    terms = []
    for j in range(d):
        nu = [0] * (2 * d)
        nu[2 * j] = nu[2 * j + 1] = 1
        terms.append((nu, 1))
    return from_difference_products(terms, 2, name=f"simple-walk:{d}")


def triangular() -> Stencil:
    """Nearest-neighbour operator of the triangular lattice in the Z^2 chart.

    ``A(theta) = 4 - (4/3)(cos theta_1 + cos theta_2 + cos(theta_1 - theta_2))``.
    """
    third = Fraction(2, 3)
    terms = [
        ([1, 1, 0, 0], 2 * third),
        ([0, 0, 1, 1], 2 * third),
        ([0, 1, 1, 0], -third),
        ([1, 0, 0, 1], -third),
    ]
    return from_difference_products(terms, 2, name="triangular")


def parse_stencil(spec: str) -> Stencil:
    """Build a stencil from ``laplacian1d:N``, ``simple-walk:d``, ``triangular`` or a JSON path."""
    spec = spec.strip()
    if spec == "triangular":
        return triangular()
    if ":" in spec:
        kind, _, arg = spec.partition(":")
        try:
            n = int(arg)
        except ValueError:
            raise ValueError(f"bad stencil parameter in {spec!r}") from None
        if kind == "laplacian1d":
            return laplacian_1d(n)
        if kind == "simple-walk":
            return simple_walk(n)
    if spec.endswith(".json"):
        with open(spec) as fh:
            return Stencil.from_json(json.load(fh))
    raise ValueError(f"unknown stencil {spec!r}")
