"""Exact lattice heat kernels from their Fourier representations.

The first kernel ``u`` solves ``du/dt + A_eps u = 0`` with a unit mass at
the origin; the second kernel ``v`` solves ``dv/dt + A_eps v = delta`` with
``v(., 0) = 0``, so ``u = dv/dt``. Both are Brillouin-zone integrals that
are evaluated by the periodic trapezoid rule (spectrally accurate), by an
FFT over a whole window, or, for singular integrands, by a pyramid
decomposition of the zone whose radial Jacobian removes the singularity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .exceptions import ToleranceNotMetError, UnsupportedCaseError
from .quadrature import pyramid_rule
from .stencil import Stencil, check_ellipticity

__all__ = [
    "QuadSpec",
    "KernelField",
    "first_green",
    "second_green",
    "green_field",
    "scale_factor",
    "scaling_transport",
    "omega_integral",
    "lattice_coordinates",
]

_ROUNDOFF = 64 * np.finfo(float).eps


@dataclass(frozen=True)
class QuadSpec:
    """Resolution and tolerance of a Brillouin-zone quadrature.

    Attributes
    ----------
    n_per_axis : int
        Starting number of nodes per axis (even, at least 16).
    target_rel_tol : float
        Stop refining when successive estimates differ by less than this
        (relative, floored at the round-off level of the integrand).
    max_doublings : int
        Refinement budget.
    scheme : {"auto", "trapezoid", "pyramid"}
        ``pyramid`` switches to the radial product rule, which resolves the
        narrow peak of the second-kernel integrand at large times.
    """

    n_per_axis: int = 64
    target_rel_tol: float = 1e-8
    max_doublings: int = 12
    scheme: str = "auto"

    def __post_init__(self):
        if self.n_per_axis < 16 or self.n_per_axis % 2:
            raise ValueError("n_per_axis must be even and at least 16")
        if self.target_rel_tol <= 0:
            raise ValueError("target_rel_tol must be positive")
        if self.scheme not in ("auto", "trapezoid", "pyramid"):
            raise ValueError(f"unknown scheme {self.scheme!r}")


def _next_pow2(n: int) -> int:
    return 1 << max(0, int(math.ceil(math.log2(max(n, 1)))))


def _lattice_index(x, eps: float, dim: int) -> np.ndarray:
    """Integer coordinates ``x/eps``; raises if ``x`` is off the lattice."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.shape[-1] != dim:
        if dim == 1:
            x = x[..., None]
        else:
            raise ValueError(f"expected points with {dim} coordinates")
    m = x / eps
    mi = np.rint(m)
    if np.any(np.abs(m - mi) > 1e-9 * np.maximum(1.0, np.abs(m))):
        raise ValueError("x is not a point of the eps-lattice")
    return mi.astype(np.int64)


def _first_multiplier(st: Stencil, t: float, J: int, eps: float):
    scale = eps ** (-st.order)

    def f(theta):
        a = scale * st.symbol(theta)
        out = np.exp(-t * a)
        if J:
            out = out * (-a) ** J
        return out

    return f


def _phi1(z):
    """``(1 - exp(-z)) / z`` with the removable point ``z = 0`` filled in."""
    z = np.asarray(z)
    if not np.iscomplexobj(z):
        z = z.astype(float)
    out = np.ones_like(z)
    nz = np.abs(z) > 1e-8
    out[nz] = -np.expm1(-z[nz]) / z[nz]
    small = ~nz
    out[small] = 1.0 - 0.5 * z[small]
    return out


def _second_multiplier(st: Stencil, t: float, eps: float):
    scale = eps ** (-st.order)

    def f(theta):
        a = scale * st.symbol(theta)
        return t * _phi1(t * a)

    return f


def _trapezoid(st: Stencil, eps: float, m: np.ndarray, multiplier: Callable, quad: QuadSpec):
    """Periodic trapezoid rule for ``eps**-d mean(F(theta) exp(i m.theta))``."""
    d = st.dim
    reach = int(np.max(np.abs(m))) if m.size else 0
    n = max(quad.n_per_axis, _next_pow2(4 * reach + 16))
    prev = None
    for _ in range(quad.max_doublings + 1):
        if n ** d > 2 ** 27:
            break
        axis = -np.pi + 2.0 * np.pi * np.arange(n) / n
        grids = np.meshgrid(*([axis] * d), indexing="ij")
        theta = np.stack([g.ravel() for g in grids], axis=-1)
        vals = multiplier(theta)
        floor = _ROUNDOFF * np.mean(np.abs(vals))
        phase = np.exp(1j * (m @ theta.T))
        est = phase @ vals / theta.shape[0]
        if prev is not None:
            diff = np.abs(est - prev)
            if np.all(diff <= np.maximum(quad.target_rel_tol * np.abs(est), floor)):
                return est * eps ** (-d), n
        prev = est
        n *= 2
    raise ToleranceNotMetError("trapezoid rule did not converge", previous=prev, last=est)


def _as_output(vals, scalar):
    return complex(vals[0]) if scalar else vals


def first_green(st: Stencil, eps: float, x, t: float, J: int = 0, quad: QuadSpec | None = None):
    """``d^J u_eps / dt^J`` at lattice point(s) ``x`` and time ``t``.

    Parameters
    ----------
    st : Stencil
    eps : float
        Mesh size; ``x`` must lie on ``eps * Z^d``.
    x : array_like
        One point of shape ``(d,)`` or several of shape ``(m, d)``.
    t : float
        Time, ``t >= 0``.
    J : int
        Order of the time derivative.

    Returns
    -------
    complex or ndarray of complex
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    quad = quad or QuadSpec()
    m = _lattice_index(x, eps, st.dim)
    scalar = m.ndim == 1
    m = np.atleast_2d(m)
    vals, _ = _trapezoid(st, eps, m, _first_multiplier(st, t, J, eps), quad)
    return _as_output(vals, scalar)


def _pyramid_second(st: Stencil, m: np.ndarray, tau: float, quad: QuadSpec):
    """Second kernel at ``eps = 1`` by the radial product rule."""
    d, ell = st.dim, st.order
    rep = check_ellipticity(st, 64)
    if not rep.verified:
        raise UnsupportedCaseError("the radial rule needs a strongly elliptic stencil")
    c = max(rep.c_lower, 1e-300)
    s_star = min(1.0, (1.0 / (tau * c)) ** (1.0 / ell) / np.pi) if tau > 0 else 1.0
    breaks = [0.0]
    s = s_star / 8.0
    while s < 1.0:
        breaks.append(s)
        s *= 2.0
    breaks.append(1.0)
    reach = float(np.max(np.abs(m))) if m.size else 0.0
    n_s, n_ang = 16, max(16, int(8 + 2 * reach))
    prev = None
    for _ in range(quad.max_doublings + 1):
        theta, w, _ = pyramid_rule(d, breaks, n_s, n_ang)
        a = st.symbol(theta)
        vals = tau * _phi1(tau * a) * w
        est = np.exp(1j * (m @ theta.T)) @ vals / (2 * np.pi) ** d
        if prev is not None:
            diff = np.abs(est - prev)
            floor = _ROUNDOFF * np.sum(np.abs(vals)) / (2 * np.pi) ** d
            if np.all(diff <= np.maximum(quad.target_rel_tol * np.abs(est), floor)):
                return est
        prev = est
        n_s, n_ang = int(n_s * 1.5), int(n_ang * 1.5)
        if len(theta) * 2.25 ** (d - 1) > 2 ** 24:
            break
    raise ToleranceNotMetError("radial rule did not converge", previous=prev, last=est)


def second_green(st: Stencil, eps: float, x, t: float, quad: QuadSpec | None = None):
    """Second kernel ``v_eps(x, t)``; ``du/dt`` of it is the first kernel.

    With ``scheme="auto"`` the trapezoid rule is used unless its node count
    would exceed a budget (large ``t`` in two or more dimensions), in which
    case the radial pyramid rule takes over.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    quad = quad or QuadSpec()
    m = _lattice_index(x, eps, st.dim)
    scalar = m.ndim == 1
    m = np.atleast_2d(m)
    if t == 0:
        return _as_output(np.zeros(m.shape[0], dtype=complex), scalar)
    tau = t / eps ** st.order
    scheme = quad.scheme
    if scheme == "auto":
        width = 40.0 * tau ** (1.0 / st.order) + 4 * (np.max(np.abs(m)) if m.size else 0)
        scheme = "trapezoid" if st.dim == 1 or width ** st.dim < 2 ** 22 else "pyramid"
    if scheme == "trapezoid":
        vals, _ = _trapezoid(st, 1.0, m, _second_multiplier(st, tau, 1.0), quad)
    else:
        vals = _pyramid_second(st, m, tau, quad)
    return _as_output(vals * eps ** (st.order - st.dim), scalar)


@dataclass
class KernelField:
    """Kernel values on the window ``[-W, W]**d`` of the ``eps``-lattice.

    ``values[i_1, ..., i_d]`` belongs to the point ``eps * (i - W)``.
    """

    stencil_name: str
    eps: float
    t: float
    J: int
    window: int
    kind: str
    values: np.ndarray
    n_fft: int
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.values.ndim

    def coordinates(self) -> np.ndarray:
        """Lattice points in the same order as ``values.ravel()``."""
        return lattice_coordinates(self.dim, self.window) * self.eps

    def value(self, x):
        idx = tuple(_lattice_index(x, self.eps, self.dim).ravel() + self.window)
        if any(i < 0 or i > 2 * self.window for i in idx):
            raise IndexError("point outside the window")
        return self.values[idx]

    def mass(self) -> complex:
        return complex(np.sum(self.values) * self.eps ** self.dim)


def lattice_coordinates(dim: int, W: int) -> np.ndarray:
    """Integer points of ``[-W, W]**dim`` in C order."""
    axis = np.arange(-W, W + 1)
    grids = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def green_field(st: Stencil, eps: float, t: float, J: int = 0, W: int = 32,
                quad: QuadSpec | None = None, kind: str = "first") -> KernelField:
    """Kernel on a whole window by an inverse FFT of the Fourier multiplier.

    The FFT returns the kernel periodised with period ``N * eps``. ``N``
    is doubled until the mass in the outer half of the periodic box, which
    bounds the aliasing error inside the window, is below tolerance.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if kind not in ("first", "second"):
        raise ValueError("kind must be 'first' or 'second'")
    quad = quad or QuadSpec()
    d = st.dim
    if kind == "first":
        mult = _first_multiplier(st, t, J, eps)
    else:
        mult = _second_multiplier(st, t, eps)
    n = max(quad.n_per_axis, _next_pow2(2 * (2 * W + 1)))
    for _ in range(quad.max_doublings + 1):
        if n ** d > 2 ** 26:
            break
        freq = 2.0 * np.pi * np.fft.fftfreq(n)
        grids = np.meshgrid(*([freq] * d), indexing="ij")
        theta = np.stack(grids, axis=-1)
        box = np.fft.ifftn(mult(theta)) * eps ** (-d)
        box = np.fft.fftshift(box)
        centre = n // 2
        outer = np.ones(box.shape, dtype=bool)
        inner = tuple(slice(centre - n // 4, centre + n // 4 + 1) for _ in range(d))
        outer[inner] = False
        total = np.sum(np.abs(box))
        tail = np.sum(np.abs(box[outer]))
        if tail <= quad.target_rel_tol * total or total == 0:
            win = tuple(slice(centre - W, centre + W + 1) for _ in range(d))
            return KernelField(st.name, eps, t, J if kind == "first" else 0, W, kind,
                               box[win].copy(), n,
                               meta={"tail": float(tail / total) if total else 0.0})
        n *= 2
    raise ToleranceNotMetError("FFT box too small for the requested tolerance")


def scale_factor(eps: float, order: int, dim: int, J: int = 0, kind: str = "first") -> float:
    """Factor relating the ``eps``-kernel to the unit-mesh kernel.

    ``d^J u_eps(x, t) = eps**(-J*order - dim) d^J u_1(x/eps, t/eps**order)`` and
    ``v_eps(x, t) = eps**(order - dim) v_1(x/eps, t/eps**order)``.
    """
    if kind == "first":
        return eps ** (-J * order - dim)
    if kind == "second":
        return eps ** (order - dim)
    raise ValueError("kind must be 'first' or 'second'")


def scaling_transport(value_at_unit_mesh, st: Stencil, eps: float, x, J: int = 0,
                      kind: str = "first"):
    """Turn a unit-mesh value at ``(x/eps, t/eps**order)`` into the ``eps`` value at ``(x, t)``."""
    _lattice_index(x, eps, st.dim)
    return value_at_unit_mesh * scale_factor(eps, st.order, st.dim, J, kind)


def omega_integral(st: Stencil, quad: QuadSpec | None = None) -> Callable:
    """Lattice constant ``(2 pi)**-d * int exp(i x.theta) / A(theta)`` over the zone.

    Valid when ``order < dim`` so that ``1/A`` is integrable. The zone is
    split into pyramids over the cube faces; their radial Jacobian cancels
    the ``|theta|**-order`` singularity, leaving a smooth integrand for the
    Gauss product rule.

    Returns
    -------
    callable
        ``omega(x)`` for one point ``(d,)`` or several ``(m, d)``.
    """
    if st.order - st.dim >= 0:
        raise UnsupportedCaseError("the zone integral of 1/A diverges unless order < dim")
    quad = quad or QuadSpec(target_rel_tol=1e-11)
    if not check_ellipticity(st, 64).verified:
        raise UnsupportedCaseError("stencil failed the ellipticity check")
    cache: dict[tuple, complex] = {}

    def evaluate(m: np.ndarray) -> np.ndarray:
        reach = float(np.max(np.abs(m))) if m.size else 0.0
        n_s, n_ang = 12, max(12, int(6 + 2 * reach))
        prev = None
        for _ in range(quad.max_doublings + 1):
            theta, w, _ = pyramid_rule(st.dim, [0.0, 0.25, 0.5, 1.0], n_s, n_ang)
            vals = w / st.symbol(theta)
            est = np.exp(1j * (m @ theta.T)) @ vals / (2 * np.pi) ** st.dim
            if prev is not None:
                floor = _ROUNDOFF * np.sum(np.abs(vals)) / (2 * np.pi) ** st.dim
                if np.all(np.abs(est - prev) <= np.maximum(quad.target_rel_tol * np.abs(est), floor)):
                    return est
            prev = est
            n_s, n_ang = int(n_s * 1.5), int(n_ang * 1.5)
        raise ToleranceNotMetError("lattice constant quadrature did not converge",
                                   previous=prev, last=est)

    def omega(x):
        m = _lattice_index(x, 1.0, st.dim)
        scalar = m.ndim == 1
        m = np.atleast_2d(m)
        todo = [tuple(r) for r in m if tuple(r) not in cache]
        if todo:
            for key, val in zip(todo, evaluate(np.array(todo))):
                cache[key] = complex(val)
        vals = np.array([cache[tuple(r)] for r in m])
        return _as_output(vals, scalar)

    omega.stencil = st
    return omega


def with_scheme(quad: QuadSpec | None, scheme: str) -> QuadSpec:
    return replace(quad or QuadSpec(), scheme=scheme)
