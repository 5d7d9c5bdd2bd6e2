"""Profile functions and large-time asymptotics of the lattice heat kernels.

Every profile is a Fourier integral over R^d of a polynomial times
``exp(-A0(xi))``, where ``A0`` is the principal symbol. These integrals are
evaluated by the trapezoid rule on a truncated cube; the step is chosen so
that the aliased copies of the profile fall outside its decay radius, which
makes the rule accurate to round-off (and this is re-checked on a finer
grid when a grid is built).

Radial profiles (``F_k`` and relatives) are one-dimensional integrals of
those Fourier profiles along the ray through ``y`` and use composite
Gauss-Legendre rules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernel_exact
from .exceptions import ExtractionFailedError, ToleranceNotMetError, UnsupportedCaseError
from .kernel_exact import QuadSpec
from .polyalg import GradedSeries, Poly, expansion_polynomials
from .quadrature import (composite_gauss, exp_remainder_ratio, gauss_legendre, pyramid_rule,
                         richardson_ladder, sphere_rule)
from .stencil import Stencil, approximation_order, check_ellipticity, taylor_layers

__all__ = [
    "AsymptoticValue",
    "RemainderProbe",
    "Profile",
    "KernelExpansion",
    "expansion_for",
    "continuous_kernel",
    "h_profile",
    "f_profile",
    "directional_taylor",
    "correction_profiles",
    "fhat_total",
    "s_profile",
    "omega",
    "first_asymptotic",
    "second_asymptotic",
    "remainder_probe",
]

_NODES = 16          # Gauss points per radial panel
_Y_FLOOR = 1e-3      # F_k with k <= order - dim is refused closer to 0
_CHUNK = 4_000_000   # complex entries per Fourier matrix block


@dataclass
class AsymptoticValue:
    """Truncated asymptotic sum and its individual terms.

    ``total`` equals the sum of the values in ``terms``. For vectorised
    calls every value is an array over the requested points.
    """

    total: complex | np.ndarray
    terms: list
    K: int
    t: float
    kind: str = "first"

    def to_json(self) -> dict:
        def enc(v):
            v = np.asarray(v, dtype=complex)
            return {"re": v.real.tolist(), "im": v.imag.tolist()}
        return {"kind": self.kind, "K": self.K, "t": self.t, "total": enc(self.total),
                "terms": [{"label": str(lab), **enc(v)} for lab, v in self.terms]}


@dataclass
class RemainderProbe:
    """Sup-norm remainder of an asymptotic assembly along a time ladder.

    Attributes
    ----------
    ts : ndarray
        Strictly increasing times.
    sup_errors : ndarray
        ``max_x |exact - assembly|`` at each time.
    slope : float
        Least-squares slope of ``log sup_errors`` against ``log ts``.
    expected_exponent : float
        Decay exponent guaranteed by the remainder estimate.
    R_hat : float
        ``max(sup_errors * ts**expected_exponent)``.
    """

    J: int
    K: int
    kind: str
    eps: float
    ts: np.ndarray
    sup_errors: np.ndarray
    slope: float
    expected_exponent: float
    R_hat: float
    window: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.ts = np.asarray(self.ts, dtype=float)
        if self.ts.size < 3 or np.any(np.diff(self.ts) <= 0):
            raise ValueError("a remainder probe needs at least 3 strictly increasing times")

    def scaled_errors(self) -> np.ndarray:
        return self.sup_errors * self.ts ** self.expected_exponent

    def to_json(self) -> dict:
        return {"J": self.J, "K": self.K, "kind": self.kind, "eps": self.eps,
                "window": self.window, "ts": self.ts.tolist(),
                "sup_errors": np.asarray(self.sup_errors).tolist(), "slope": self.slope,
                "expected_exponent": self.expected_exponent, "R_hat": self.R_hat,
                "meta": self.meta}


@dataclass
class _Grid:
    xi: np.ndarray        # (n, d) nodes
    weights: np.ndarray   # P(xi) exp(-A0(xi)) times the cell volume / (2 pi)^d
    step: float
    reach: float          # largest |y| the grid resolves
    axis: np.ndarray      # 1D node values shared by every coordinate
    index: np.ndarray     # (n, d) positions of the nodes in ``axis``


class Profile:
    """Evaluable profile in the self-similar variable ``y``.

    Thin named handle over a :class:`KernelExpansion` method; repeated
    points are served from a cache.
    """

    def __init__(self, expansion: "KernelExpansion", kind: str, J: int = 0, k: int = 0):
        methods = {"H": lambda y: expansion.h_profile(0, 0, y),
                   "H_Jk": lambda y: expansion.h_profile(J, k, y),
                   "F_k": lambda y: expansion.f_profile(k, y),
                   "Fhat_k": lambda y: expansion.correction_profiles(k, y)[0],
                   "G_k": lambda y: expansion.correction_profiles(k, y)[1],
                   "Omega_k": lambda y: expansion.correction_profiles(k, y)[2],
                   "Fhat": expansion.fhat_total,
                   "S": expansion.s_profile}
        if kind not in methods:
            raise ValueError(f"unknown profile kind {kind!r}")
        self.kind, self.J, self.k = kind, J, k
        self.expansion = expansion
        self._fn = methods[kind]
        self._cache: dict[tuple, complex] = {}

    def __call__(self, y):
        pts = self.expansion._points(y)
        scalar = np.ndim(y) == 0 or (np.ndim(y) == 1 and self.expansion.dim > 1)
        keys = [tuple(p) for p in pts]
        todo = sorted({key for key in keys if key not in self._cache})
        if todo:
            vals = np.atleast_1d(self._fn(np.array(todo)))
            self._cache.update(zip(todo, (complex(v) for v in vals)))
        out = np.array([self._cache[key] for key in keys])
        return complex(out[0]) if scalar else out

    def __repr__(self):
        return f"Profile({self.kind}, J={self.J}, k={self.k}, stencil={self.expansion.stencil.name!r})"


class KernelExpansion:
    """All asymptotic profiles of one stencil.

    Parameters
    ----------
    st : Stencil
        Strongly elliptic stencil (checked on construction).
    quad : QuadSpec, optional
        Used for the exact kernels needed by extraction routes.
    """

    def __init__(self, st: Stencil, quad: QuadSpec | None = None):
        report = check_ellipticity(st, 128 if st.dim <= 2 else 64)
        if not report.verified:
            raise UnsupportedCaseError(f"{st.name}: stencil is not strongly elliptic on the grid")
        self.stencil = st
        self.dim, self.order = st.dim, st.order
        self.quad = quad or QuadSpec(target_rel_tol=1e-12)
        self.M = approximation_order(st)
        self.principal = taylor_layers(st, 0).layer(0)
        dirs, _, _ = sphere_rule(self.dim, 32)
        vals = self.principal.evaluate(dirs)
        self.c_low = float(np.min(vals.real))
        self.c_up = float(np.max(np.abs(vals)))
        if self.c_low <= 0:
            raise UnsupportedCaseError("principal symbol is not strongly elliptic")
        self._series: dict[int, GradedSeries] = {}
        self._grids: dict[tuple, _Grid] = {}
        self._omega_a = None

    # -- polynomials -------------------------------------------------------
    def polynomials(self, J: int, K: int) -> GradedSeries:
        """Expansion polynomials of ``d^J/dt^J`` up to grade ``K``."""
        have = self._series.get(J)
        if have is None or have.max_grade < K:
            have = expansion_polynomials(taylor_layers(self.stencil, K), J, K)
            self._series[J] = have
        return have.truncate(K)

    def polynomial(self, J: int, k: int) -> Poly:
        return self.polynomials(J, k).layer(k)

    def _points(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.dim == 1:
            return y.reshape(-1, 1)
        return np.atleast_2d(y).reshape(-1, self.dim)

    # -- Fourier integrals ---------------------------------------------------
    def _decay_radius(self, degree: int) -> float:
        """Radius beyond which a profile of polynomial degree ``degree`` is negligible."""
        ell = self.order
        c_ell = (ell - 1) * ell ** (-ell / (ell - 1))
        r = np.linspace(1e-3, 400.0, 40001)
        logg = (degree / (ell - 1)) * np.log(r) - c_ell * (r ** ell / self.c_up) ** (1.0 / (ell - 1))
        bad = logg > logg.max() + math.log(1e-17)
        return 1.15 * float(r[np.nonzero(bad)[0][-1]]) + 1.0

    def _xi_radius(self, poly: Poly) -> float:
        coef = {}
        for e, c in poly.terms.items():
            coef[sum(e)] = coef.get(sum(e), 0.0) + abs(complex(c))
        r = np.linspace(1e-3, 60.0, 60001)
        mag = sum(c * r ** n for n, c in coef.items())
        logg = np.log(mag) - self.c_low * r ** self.order
        bad = logg > logg.max() + math.log(1e-19)
        return float(r[np.nonzero(bad)[0][-1]]) * 1.02

    def _grid(self, poly: Poly, reach: float) -> _Grid:
        """Trapezoid grid for ``poly * exp(-A0)`` resolving profiles up to ``|y| = reach``."""
        reach = max(8.0, 2.0 ** math.ceil(math.log2(max(reach, 1.0))))
        key = (tuple(poly.sorted_terms()), reach)
        grid = self._grids.get(key)
        if grid is not None:
            return grid
        R_xi = self._xi_radius(poly)
        R_H = self._decay_radius(max(poly.degree, 0))
        step = 2.0 * np.pi / (reach + R_H)
        probes = np.zeros((3, self.dim))
        probes[1, 0] = reach
        probes[2, :] = reach / math.sqrt(self.dim)
        for _ in range(6):
            grid = self._build_grid(poly, R_xi, step, reach)
            fine = self._build_grid(poly, R_xi * 1.1, step * 0.75, reach)
            a, b = self._apply(grid, probes), self._apply(fine, probes)
            scale = np.sum(np.abs(fine.weights))
            # summation round-off grows like sqrt(n) on large grids
            rel = max(1e-13, 8 * np.finfo(float).eps * math.sqrt(len(fine.xi)))
            if np.max(np.abs(a - b)) <= rel * max(scale, 1e-300):
                self._grids[key] = grid
                return grid
            R_xi, step = R_xi * 1.1, step * 0.75
        raise ToleranceNotMetError("profile quadrature grid did not settle")

    def _build_grid(self, poly: Poly, R_xi: float, step: float, reach: float) -> _Grid:
        n = int(math.ceil(2 * R_xi / step)) + 1
        axis = step * (np.arange(n) - 0.5 * (n - 1))
        # slabs of first-axis nodes keep the full cube out of memory
        if self.dim == 1:
            rest = np.zeros((1, 0), dtype=np.int64)
        else:
            mesh = np.meshgrid(*([np.arange(n)] * (self.dim - 1)), indexing="ij")
            rest = np.stack([m.ravel() for m in mesh], axis=-1)
        per_slab = max(1, (1 << 20) // len(rest))
        # exp(-A0) < 1e-30 outside this ball
        r2_max = 1.01 * (math.log(1e30) / self.c_low) ** (2.0 / self.order)
        xs, ws, idx = [], [], []
        for i0 in range(0, n, per_slab):
            first = np.arange(i0, min(n, i0 + per_slab))
            index = np.column_stack([np.repeat(first, len(rest)), np.tile(rest, (len(first), 1))])
            xi = axis[index]
            inside = np.sum(xi ** 2, axis=1) <= r2_max
            xi, index = xi[inside], index[inside]
            if not len(xi):
                continue
            env = np.exp(-self.principal.evaluate(xi))
            w = poly.evaluate(xi) * env * (step / (2 * np.pi)) ** self.dim
            keep = (np.abs(env) > 1e-30) & (np.abs(w) > 1e-300)
            xs.append(xi[keep])
            ws.append(w[keep])
            idx.append(index[keep])
        return _Grid(np.concatenate(xs), np.concatenate(ws), step, reach, axis, np.concatenate(idx))

    def _apply(self, grid: _Grid, Y: np.ndarray, factor=None) -> np.ndarray:
        """``sum_j w_j exp(i Y.xi_j)`` (or ``factor(xi, Y)`` instead of the plane wave)."""
        Y = np.asarray(Y, dtype=float).reshape(-1, self.dim)
        out = np.empty(len(Y), dtype=complex)
        rows = max(1, _CHUNK // max(len(grid.xi), 1))
        for i in range(0, len(Y), rows):
            blk = Y[i:i + rows]
            if factor is None:
                # plane waves as products of per-axis tables: one exp per axis node
                mat = np.exp(1j * blk[:, 0, None] * grid.axis[None, :])[:, grid.index[:, 0]]
                for j in range(1, self.dim):
                    mat *= np.exp(1j * blk[:, j, None] * grid.axis[None, :])[:, grid.index[:, j]]
            else:
                mat = factor(grid.xi, blk)
            out[i:i + rows] = mat @ grid.weights
        return out

    def _fourier(self, poly: Poly, Y: np.ndarray) -> np.ndarray:
        Y = self._points(Y)
        if poly.is_zero():
            return np.zeros(len(Y), dtype=complex)
        reach = float(np.max(np.linalg.norm(Y, axis=1))) if len(Y) else 0.0
        return self._apply(self._grid(poly, reach), Y)

    # -- profiles -------------------------------------------------------------
    def h_profile(self, J: int, k: int, y) -> np.ndarray:
        """``H_Jk(y)``; rows of ``y`` are points. Zero for ``k`` in ``1..M-1``."""
        poly = self.polynomial(J, k)
        if 1 <= k < self.M and not poly.is_zero():
            raise AssertionError(f"grade {k} below the approximation order is nonzero")
        return self._fourier(poly, y)

    def continuous_kernel(self, y) -> np.ndarray:
        """Green function of the continuous operator at unit time."""
        return self.h_profile(0, 0, y)

    def decay_radius(self, J: int = 0, k: int = 0) -> float:
        return self._decay_radius(max(self.polynomial(J, k).degree, 0))

    def directional_taylor(self, k: int, j: int, omega) -> np.ndarray:
        """``j``-th derivative of ``H_k`` at 0 along unit vectors ``omega``."""
        poly = self.polynomial(0, k)
        dirs = self._points(omega)
        if poly.is_zero():
            return np.zeros(len(dirs), dtype=complex)
        grid = self._grid(poly, 8.0)
        return np.array([np.sum(grid.weights * (1j * (grid.xi @ w)) ** j) for w in dirs])

    def _p(self, k: int) -> int:
        return self.order - self.dim - k

    def _rays(self, y):
        pts = self._points(y)
        r = np.linalg.norm(pts, axis=1)
        omega = np.zeros_like(pts)
        nz = r > 0
        omega[nz] = pts[nz] / r[nz, None]
        omega[~nz, 0] = 1.0
        return pts, r, omega

    def _ray_sum(self, poly: Poly, omega: np.ndarray, panels: list, weight_fn) -> np.ndarray:
        """``sum over nodes of weight_fn(i, rho) * H(rho * omega_i)`` for every ray ``i``.

        ``panels[i]`` is the list of breakpoints in ``rho`` for ray ``i``.
        """
        nodes, weights, owner = [], [], []
        for i, br in enumerate(panels):
            if len(br) < 2:
                continue
            rho, w = composite_gauss(np.asarray(br, dtype=float), _NODES)
            nodes.append(rho[:, None] * omega[i][None, :])
            weights.append(w * weight_fn(i, rho))
            owner.append(np.full(len(rho), i))
        out = np.zeros(len(panels), dtype=complex)
        if not nodes:
            return out
        vals = self._fourier(poly, np.concatenate(nodes))
        contrib = vals * np.concatenate(weights)
        idx = np.concatenate(owner)
        np.add.at(out, idx, contrib)
        return out

    def f_profile(self, k: int, y) -> np.ndarray:
        """``F_k(y)``, the radial antiderivative profile of the second kernel."""
        poly = self.polynomial(0, k)
        pts, r, omega = self._rays(y)
        if poly.is_zero():
            return np.zeros(len(pts), dtype=complex)
        ell, p = self.order, self._p(k)
        R = self._decay_radius(max(poly.degree, 0))
        if p >= 0:
            if np.any(r < _Y_FLOOR):
                raise ValueError(f"F_{k} is only evaluated for |y| >= {_Y_FLOOR}")
            panels = [_radial_breaks(ri, R) for ri in r]
            integral = self._ray_sum(poly, omega, panels, lambda i, rho: rho ** (-p - 1.0))
            return ell * r ** p * integral
        q = -p - 1
        out = np.empty(len(pts), dtype=complex)
        zero = r == 0
        if np.any(zero):
            out[zero] = -ell * self._fourier(poly, np.zeros((1, self.dim)))[0] / (q + 1)
        if np.any(~zero):
            rr = r[~zero]
            panels = [np.linspace(0.0, min(ri, R), max(2, int(math.ceil(min(ri, R))) + 1)) for ri in rr]
            integral = self._ray_sum(poly, omega[~zero], panels, lambda i, rho: rho ** q)
            out[~zero] = -ell * integral / rr ** (q + 1)
        return out

    def hhat_ratio(self, k: int, rho, omega) -> np.ndarray:
        """``Hhat_k(rho, omega) / rho**(p+1)`` with ``p = order - dim - k``.

        ``Hhat_k`` is ``H_k`` minus its Taylor polynomial of degree ``p``
        along the ray; the ratio is smooth and is evaluated with the stable
        kernel ``(i w.xi)**(p+1) E_{p+1}(i rho w.xi)``.
        """
        p = self._p(k)
        if p < 0:
            raise UnsupportedCaseError("defined for k <= order - dim")
        poly = self.polynomial(0, k)
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        if poly.is_zero():
            return np.zeros(len(rho), dtype=complex)
        w = np.asarray(omega, dtype=float).reshape(self.dim)
        grid = self._grid(poly, float(np.max(np.abs(rho))))
        proj = grid.xi @ w

        def factor(xi, blk):
            rr = blk[:, 0]
            return (1j * proj[None, :]) ** (p + 1) * exp_remainder_ratio(1j * rr[:, None] * proj[None, :], p + 1)

        return self._apply(grid, np.column_stack([rho] + [np.zeros_like(rho)] * (self.dim - 1)), factor)

    def _check_log_case(self):
        if self.order - self.dim < 0:
            raise UnsupportedCaseError("correction profiles exist only when order >= dim")

    def _hhat_integral(self, k: int, r: float, omega, lower: float, upper: float) -> complex:
        if upper == lower:
            return 0.0
        sign = 1.0
        if upper < lower:
            lower, upper, sign = upper, lower, -1.0
        p = self._p(k)
        breaks = np.linspace(lower, upper, max(2, int(math.ceil(upper - lower)) + 1))
        rho, w = composite_gauss(breaks, _NODES)
        return sign * complex(np.sum(w * self.hhat_ratio(k, rho, omega)))

    def correction_profiles(self, k: int, y):
        """``(Fhat_k(y), G_k(y), Omega_k(y))`` for ``0 <= k <= order - dim``."""
        self._check_log_case()
        p = self._p(k)
        if p < 0:
            raise UnsupportedCaseError("k must not exceed order - dim")
        ell = self.order
        pts, r, omega = self._rays(y)
        fhat = np.zeros(len(pts), dtype=complex)
        G = np.zeros(len(pts), dtype=complex)
        Om = np.zeros(len(pts), dtype=complex)
        poly = self.polynomial(0, k)
        R = self._decay_radius(max(poly.degree, 0))
        tail = self._ray_sum(poly, omega, [_radial_breaks(1.0, R)] * len(pts),
                             lambda i, rho: rho ** (-p - 1.0))
        for i in range(len(pts)):
            w, ri = omega[i], r[i]
            fhat[i] = ell * ri ** p * self._hhat_integral(k, ri, w, ri, 1.0)
            G[i] = self._g_value(k, ri, w)
            if ri == 0 and p > 0:
                Om[i] = 0.0
                continue
            if ri == 0:
                raise ValueError("Omega_k diverges logarithmically at y = 0")
            taylor = [self.directional_taylor(k, j, w)[0] for j in range(p + 1)]
            corr = sum(taylor[j] / (math.factorial(j) * (p - j)) for j in range(p))
            corr += taylor[p] / math.factorial(p) * math.log(ri)
            Om[i] = ell * ri ** p * (tail[i] - corr)
        return fhat, G, Om

    def _g_value(self, k: int, r: float, w) -> complex:
        ell, d = self.order, self.dim
        top = ell - d
        if k < top:
            s = sum(self.directional_taylor(m, k - m, w)[0] * r ** (k - m) / math.factorial(k - m)
                    for m in range(k + 1))
            return ell / (ell - k - d) * s
        return sum(self.directional_taylor(m, top - m, w)[0] * r ** (top - m) / math.factorial(top - m)
                   for m in range(top + 1))

    def fhat_total(self, y) -> np.ndarray:
        """``Fhat(y) = order * sum_k r**(order-dim-k) int_0^1 Hhat_k / rho**(p+1)``."""
        self._check_log_case()
        pts, r, omega = self._rays(y)
        out = np.zeros(len(pts), dtype=complex)
        for k in range(self.order - self.dim + 1):
            if self.polynomial(0, k).is_zero():
                continue
            p = self._p(k)
            for i in range(len(pts)):
                out[i] += self.order * r[i] ** p * self._hhat_integral(k, r[i], omega[i], 0.0, 1.0)
        return out

    def s_profile(self, y, n_ang: int = 24) -> np.ndarray:
        """Constant part ``S(y)`` of the second kernel when ``order == dim``.

        Sum of four integrals: the unit ball and exterior parts of
        ``(1 - exp(-A0))/A0`` and ``exp(-A0)/A0``, the zone integral of
        ``exp(i y.theta)/A - 1/A0`` and the angular integral of
        ``ln r_pi / A0``, over ``(2 pi)**dim``.
        """
        if self.order != self.dim:
            raise UnsupportedCaseError("direct S evaluation needs order == dim; use route 'extract'")
        pts = self._points(y)
        prev = None
        for level in range(6):
            est = self._s_once(pts, int(n_ang * 1.5 ** level), 16 + 8 * level)
            if prev is not None and np.max(np.abs(est - prev)) < 1e-11:
                return est
            prev = est
        raise ToleranceNotMetError("S quadrature did not converge", previous=prev, last=est)

    def _s_once(self, pts, n_ang: int, n_r: int) -> np.ndarray:
        d, ell = self.dim, self.order
        dirs, wdir, bound = sphere_rule(d, n_ang)
        a = self.principal.evaluate(dirs)
        # ball: int_0^1 r^(d-1) (1 - exp(-r^l a))/(r^l a) dr, smooth since l == d
        rr, wr = gauss_legendre(0.0, 1.0, n_r)
        z = rr[None, :] ** ell * a[:, None]
        t1 = np.sum(wdir * ((rr ** (d - 1) * wr)[None, :] * kernel_exact._phi1(z)).sum(axis=1))
        # exterior: int_1^R r^(d-1) exp(-r^l a)/(r^l a) dr
        R = (math.log(1e22) / self.c_low) ** (1.0 / ell) + 1.0
        re, we = composite_gauss(np.linspace(1.0, R, int(math.ceil(R - 1.0)) * 2 + 2), n_r)
        z = re[None, :] ** ell * a[:, None]
        t2 = np.sum(wdir * ((re ** (d - 1) * we)[None, :] * np.exp(-z) / z).sum(axis=1))
        # zone: exp(i y.theta)/A - 1/A0 by the pyramid rule
        reach = float(np.max(np.abs(pts))) if pts.size else 0.0
        theta, w, _ = pyramid_rule(d, [0.0, 0.25, 0.5, 1.0], n_r, max(n_ang, int(8 + 2 * reach)))
        A = self.stencil.symbol(theta)
        A0 = self.principal.evaluate(theta)
        t3 = (np.exp(1j * (pts @ theta.T)) / A[None, :] - 1.0 / A0[None, :]) @ w
        t4 = np.sum(wdir * np.log(bound) / a)
        return (t1 - t2 + t3 + t4) / (2 * np.pi) ** d

    # -- lattice constant -----------------------------------------------------
    def is_oned_family(self) -> bool:
        st = self.stencil
        return (self.dim == 1 and self.order == 2 and st.is_real and st.is_symmetric
                and self.principal == Poly(1, {(2,): 1}))

    def omega(self, x, route: str = "auto", tol: float = 1e-7) -> np.ndarray:
        """Lattice constant ``Omega`` at integer points ``x`` (unit mesh).

        Routes: ``integral`` (zone integral, order < dim), ``closed``
        (one-dimensional closed form), ``s`` (``S - Fhat - sum Omega_k``,
        order == dim, ``x != 0``), ``extract`` (large-time limit of the
        second kernel minus its profile terms, accepted when successive
        Richardson estimates agree to ``tol``).
        """
        pts = self._points(x)
        if route == "auto":
            if self.order < self.dim:
                route = "integral"
            elif self.is_oned_family():
                route = "closed"
            elif self.order == self.dim and np.all(np.any(pts != 0, axis=1)):
                route = "s"
            else:
                route = "extract"
        if route == "integral":
            if self._omega_a is None:
                self._omega_a = kernel_exact.omega_integral(self.stencil)
            return np.atleast_1d(self._omega_a(pts))
        if route == "closed":
            if not self.is_oned_family():
                raise UnsupportedCaseError("closed form applies to the 1D second-difference family")
            from .oned import omega_symbol
            return np.array([omega_symbol(self.stencil, float(v)) for v in pts[:, 0]], dtype=complex)
        if route == "s":
            if np.any(np.all(pts == 0, axis=1)):
                raise ValueError("route 's' needs x != 0")
            out = self.s_profile(pts) - self.fhat_total(pts)
            for k in range(self.order - self.dim + 1):
                if not self.polynomial(0, k).is_zero():
                    out = out - self.correction_profiles(k, pts)[2]
            return out
        if route == "extract":
            return np.atleast_1d(self.extract_constant(pts, tol=tol))
        raise ValueError(f"unknown route {route!r}")

    def extract_constant(self, x, t0: float | None = None, K: int | None = None,
                         tol: float = 1e-7):
        """Constant term of ``v(x, t)`` by Richardson extrapolation in ``t``.

        At ``x != 0`` (or when order < dim) this is ``Omega(x)``; at
        ``x = 0`` with ``order >= dim`` it is the constant ``omega`` that
        accompanies the ``ln t`` term. ``x`` may hold several points; they
        share one time ladder ``t0, 4 t0, 16 t0, 64 t0``.
        """
        pts = self._points(x)
        ell, d = self.order, self.dim
        K = K if K is not None else self.M + 4
        reach = float(np.max(np.abs(pts))) if pts.size else 0.0
        t0 = t0 if t0 is not None else 16.0 * max(1.0, reach) ** (ell / 2)
        ts = t0 * 4.0 ** np.arange(4)
        quad = QuadSpec(target_rel_tol=1e-13, max_doublings=14)
        vals = np.array([kernel_exact.second_green(self.stencil, 1.0, pts, t, quad) for t in ts])
        p0 = (K + 1 + d) / ell - 1.0
        exps = [p0, p0 + 1.0 / ell, p0 + 2.0 / ell]
        out = np.empty(len(pts), dtype=complex)
        for i, p in enumerate(pts):
            at_origin = not np.any(p) and ell - d >= 0
            resid = vals[:, i] - np.array([self._profile_sum(p, t, K, at_origin) for t in ts])
            try:
                out[i], _ = richardson_ladder(ts, resid, exps, tol, label=f"constant at x={p.tolist()}")
            except ExtractionFailedError as err:
                err.diagnostics["K"] = K
                raise
        return complex(out[0]) if np.ndim(x) <= (0 if d == 1 else 1) else out

    def _profile_sum(self, x, t: float, K: int, at_origin: bool) -> complex:
        ell, d = self.order, self.dim
        total = 0.0
        for k in range(K + 1):
            poly = self.polynomial(0, k)
            if poly.is_zero():
                continue
            if at_origin:
                h0 = self._fourier(poly, np.zeros((1, d)))[0]
                if k == ell - d:
                    total += h0 * math.log(t)
                else:
                    total += t ** (1 - (d + k) / ell) * ell * h0 / (ell - d - k)
            else:
                y = x / t ** (1.0 / ell)
                total += t ** (1 - (k + d) / ell) * self.f_profile(k, y)[0]
        return complex(total)

    # -- assemblies -----------------------------------------------------------
    def first_asymptotic(self, eps: float, x, t: float, J: int = 0, K: int | None = None) -> AsymptoticValue:
        """Truncated expansion of ``d^J u_eps/dt^J`` at points ``x``."""
        K = self.M if K is None else K
        if K < self.M:
            raise ValueError(f"K must be at least the approximation order {self.M}")
        pts = self._points(x)
        y = pts / t ** (1.0 / self.order)
        terms = []
        for k in range(K + 1):
            pref = eps ** k / t ** ((k + self.dim) / self.order + J)
            vals = pref * self.h_profile(J, k, y) if not (1 <= k < self.M) else np.zeros(len(pts), complex)
            terms.append((k, vals))
        total = sum(v for _, v in terms)
        return AsymptoticValue(total, terms, K, t, "first")

    def second_asymptotic(self, eps: float, x, t: float, K: int | None = None) -> AsymptoticValue:
        """Truncated expansion of ``v_eps(x, t)``.

        For order < dim, and for ``x != 0`` otherwise, the expansion is the
        lattice constant plus the ``F_k`` profile terms; at ``x = 0`` with
        order >= dim the ``ln t`` branch is used.
        """
        ell, d = self.order, self.dim
        K = max(self.M, ell - d) if K is None else K
        if K < max(self.M, ell - d):
            raise ValueError("K too small for the second-kernel expansion")
        pts = self._points(x)
        origin = np.all(pts == 0, axis=1)
        if ell - d >= 0 and np.any(origin) and not np.all(origin):
            raise ValueError("mix of x = 0 and x != 0 is not supported in one call")
        terms = []
        if ell - d >= 0 and np.all(origin):
            for k in range(K + 1):
                poly = self.polynomial(0, k)
                h0 = self._fourier(poly, np.zeros((1, d)))[0] if not poly.is_zero() else 0.0
                if k == ell - d:
                    const = self.s_constant()
                    val = eps ** k * (h0 * math.log(t) - ell * h0 * math.log(eps) + const)
                    terms.append(("omega", np.full(len(pts), val, dtype=complex)))
                else:
                    val = eps ** k * t ** (1 - (d + k) / ell) * ell * h0 / (ell - d - k)
                    terms.append((k, np.full(len(pts), val, dtype=complex)))
        else:
            lat = np.rint(pts / eps)
            if np.max(np.abs(lat - pts / eps)) > 1e-9:
                raise ValueError("x must lie on the eps-lattice")
            terms.append(("omega", eps ** (ell - d) * self.omega(lat)))
            y = pts / t ** (1.0 / ell)
            for k in range(K + 1):
                if self.polynomial(0, k).is_zero():
                    terms.append((k, np.zeros(len(pts), dtype=complex)))
                    continue
                terms.append((k, eps ** k * t ** (1 - (k + d) / ell) * self.f_profile(k, y)))
        total = sum(v for _, v in terms)
        return AsymptoticValue(total, terms, K, t, "second")

    def s_constant(self) -> complex:
        """The constant ``S(0)`` of the ``x = 0`` branch."""
        if self.order == self.dim:
            return complex(self.s_profile(np.zeros((1, self.dim)))[0])
        if self.is_oned_family():
            return complex(self.omega(np.zeros(1), route="closed")[0])
        return self.extract_constant(np.zeros(self.dim))

    def remainder_probe(self, eps: float, J: int, K: int, kind: str, ts, window: int,
                        x_min: int | None = None) -> RemainderProbe:
        """Sup error of the assembly over ``x = eps*m``, ``x_min <= |m|_inf <= window``."""
        ts = np.asarray(ts, dtype=float)
        if len(ts) < 3:
            raise ValueError("need at least 3 times")
        if kind not in ("first", "second"):
            raise ValueError("kind must be 'first' or 'second'")
        ell, d = self.order, self.dim
        if x_min is None:
            x_min = 1 if kind == "second" and ell - d >= 0 else 0
        errs = []
        for t in ts:
            fld = kernel_exact.green_field(self.stencil, eps, t, J, window,
                                           QuadSpec(target_rel_tol=1e-14), kind)
            m = kernel_exact.lattice_coordinates(d, window)
            keep = np.max(np.abs(m), axis=1) >= x_min
            exact = fld.values.ravel()[keep]
            x = m[keep] * eps
            if kind == "first":
                approx = self.first_asymptotic(eps, x, t, J, K).total
            else:
                approx = self.second_asymptotic(eps, x, t, K).total
            errs.append(float(np.max(np.abs(exact - approx))))
        errs = np.array(errs)
        slope = float(np.polyfit(np.log(ts), np.log(errs), 1)[0])
        if kind == "first":
            expected = (K + d + 1) / ell + J
        else:
            expected = (K + d + 1) / ell - 1
        R_hat = float(np.max(errs * ts ** expected)) / eps ** (K + 1)
        return RemainderProbe(J, K, kind, eps, ts, errs, slope, expected, R_hat, window)


def _radial_breaks(r: float, R: float) -> list:
    """Breakpoints from ``r`` to ``R``: doubling up to 1, unit panels after."""
    if r >= R:
        return []
    pts = [r]
    while pts[-1] * 2.0 < min(1.0, R):
        pts.append(pts[-1] * 2.0)
    if pts[-1] < 1.0 < R:
        pts.append(1.0)
    while pts[-1] < R:
        pts.append(min(R, pts[-1] + 1.0))
    return pts


_REGISTRY: dict[tuple, KernelExpansion] = {}


def expansion_for(st: Stencil) -> KernelExpansion:
    """Shared :class:`KernelExpansion` for a stencil (cached by taps)."""
    key = (st.order, tuple(st.taps.items()))
    exp = _REGISTRY.get(key)
    if exp is None:
        exp = _REGISTRY[key] = KernelExpansion(st)
    return exp


def continuous_kernel(st: Stencil, y):
    """Green function of the continuous operator at unit time."""
    return _squeeze(expansion_for(st).continuous_kernel(y), y, st.dim)


def h_profile(st: Stencil, J: int, k: int, y):
    return _squeeze(expansion_for(st).h_profile(J, k, y), y, st.dim)


def f_profile(st: Stencil, k: int, y):
    return _squeeze(expansion_for(st).f_profile(k, y), y, st.dim)


def directional_taylor(st: Stencil, k: int, j: int, omega):
    return _squeeze(expansion_for(st).directional_taylor(k, j, omega), omega, st.dim)


def correction_profiles(st: Stencil, k: int, y):
    vals = expansion_for(st).correction_profiles(k, y)
    return tuple(_squeeze(v, y, st.dim) for v in vals)


def fhat_total(st: Stencil, y):
    return _squeeze(expansion_for(st).fhat_total(y), y, st.dim)


def s_profile(st: Stencil, y):
    return _squeeze(expansion_for(st).s_profile(y), y, st.dim)


def omega(st: Stencil, x, route: str = "auto", tol: float = 1e-7):
    return _squeeze(expansion_for(st).omega(x, route, tol), x, st.dim)


def first_asymptotic(st: Stencil, eps: float, x, t: float, J: int = 0, K: int | None = None):
    return expansion_for(st).first_asymptotic(eps, x, t, J, K)


def second_asymptotic(st: Stencil, eps: float, x, t: float, K: int | None = None):
    return expansion_for(st).second_asymptotic(eps, x, t, K)


def remainder_probe(st: Stencil, eps: float, J: int, K: int, kind: str, ts, window: int,
                    x_min: int | None = None) -> RemainderProbe:
    return expansion_for(st).remainder_probe(eps, J, K, kind, ts, window, x_min)


def _squeeze(vals, arg, dim):
    """Scalar out for a single point in, array otherwise."""
    single = np.ndim(arg) == 0 or (dim > 1 and np.ndim(arg) == 1)
    return complex(vals[0]) if single else vals
