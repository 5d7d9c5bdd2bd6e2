"""Quadrature building blocks shared by the kernel and profile evaluators."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .exceptions import ExtractionFailedError


@lru_cache(maxsize=64)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(a: float, b: float, n: int):
    """Nodes and weights of the ``n``-point Gauss-Legendre rule on ``[a, b]``."""
    x, w = _leggauss(n)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def composite_gauss(breaks, n: int):
    """Gauss-Legendre rule on every panel between consecutive ``breaks``."""
    nodes, weights = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b > a:
            x, w = gauss_legendre(a, b, n)
            nodes.append(x)
            weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def geometric_breaks(a: float, b: float, ratio: float = 2.0, uniform_above: float | None = None,
                     panel: float = 1.0):
    """Breakpoints from ``a > 0`` to ``b`` that grow geometrically.

    Above ``uniform_above`` the panels have fixed length ``panel``.
    """
    if a <= 0 or b <= a:
        raise ValueError("need 0 < a < b")
    pts = [a]
    cap = b if uniform_above is None else min(b, uniform_above)
    while pts[-1] * ratio < cap:
        pts.append(pts[-1] * ratio)
    pts.append(cap)
    while pts[-1] < b:
        pts.append(min(b, pts[-1] + panel))
    return np.array(pts)


def pyramid_rule(dim: int, s_breaks, n_s: int, n_ang: int):
    """Product rule on the cube ``[-pi, pi]**dim`` split into ``2*dim`` pyramids.

    Every pyramid has its apex at the origin and one cube face as base. A
    point is ``theta = pi*s*(sign*e_k + sum_{j != k} u_j e_j)`` with
    ``s`` in ``[0, 1]`` and ``u`` in ``[-1, 1]**(dim-1)``; the Jacobian
    ``pi**dim * s**(dim-1)`` absorbs singularities of order below ``dim``
    at the origin, so integrands like ``1/A(theta)`` become smooth.

    Returns
    -------
    theta : ndarray of shape (m, dim)
    weights : ndarray of shape (m,)
    s : ndarray of shape (m,)
        Radial parameter of every node (useful for stable rewrites).
    """
    s, ws = composite_gauss(np.asarray(s_breaks, dtype=float), n_s)
    if dim == 1:
        u = np.zeros((1, 0))
        wu = np.ones(1)
    else:
        x, w = gauss_legendre(-1.0, 1.0, n_ang)
        grids = np.meshgrid(*([x] * (dim - 1)), indexing="ij")
        u = np.stack([g.ravel() for g in grids], axis=-1)
        wgrid = np.meshgrid(*([w] * (dim - 1)), indexing="ij")
        wu = np.prod(np.stack([g.ravel() for g in wgrid], axis=-1), axis=-1)
    thetas, weights, ss = [], [], []
    jac = np.pi ** dim * s ** (dim - 1) * ws
    for k in range(dim):
        for sign in (-1.0, 1.0):
            face = np.empty((u.shape[0], dim))
            face[:, k] = sign
            others = [j for j in range(dim) if j != k]
            face[:, others] = u
            pts = np.pi * s[:, None, None] * face[None, :, :]
            thetas.append(pts.reshape(-1, dim))
            weights.append((jac[:, None] * wu[None, :]).ravel())
            ss.append(np.repeat(s, u.shape[0]))
    return np.concatenate(thetas), np.concatenate(weights), np.concatenate(ss)


def sphere_rule(dim: int, n_ang: int):
    """Directions and solid-angle weights from the cube-face parametrisation.

    A direction is ``p/|p|`` with ``p`` on a face of ``[-pi, pi]**dim``;
    the solid angle element is ``pi**dim / |p|**dim du``. The returned
    ``boundary`` is ``|p|``, the distance from the origin to the cube
    boundary along that direction.
    """
    if dim == 1:
        return np.array([[-1.0], [1.0]]), np.ones(2), np.full(2, np.pi)
    x, w = gauss_legendre(-1.0, 1.0, n_ang)
    grids = np.meshgrid(*([x] * (dim - 1)), indexing="ij")
    u = np.stack([g.ravel() for g in grids], axis=-1)
    wgrid = np.meshgrid(*([w] * (dim - 1)), indexing="ij")
    wu = np.prod(np.stack([g.ravel() for g in wgrid], axis=-1), axis=-1)
    dirs, weights, bound = [], [], []
    for k in range(dim):
        for sign in (-1.0, 1.0):
            p = np.empty((u.shape[0], dim))
            p[:, k] = sign * np.pi
            others = [j for j in range(dim) if j != k]
            p[:, others] = np.pi * u
            norm = np.linalg.norm(p, axis=1)
            dirs.append(p / norm[:, None])
            weights.append(wu * np.pi ** dim / norm ** dim)
            bound.append(norm)
    return np.concatenate(dirs), np.concatenate(weights), np.concatenate(bound)


def richardson(ts, values, exponents):
    """Eliminate ``c_j * t**(-p_j)`` terms from ``values`` sampled at ``ts``.

    With ``len(ts) == len(exponents) + 1`` the result is exact for data of
    the form ``L + sum_j c_j t**(-p_j)``. Returns the extrapolated limit.
    """
    ts = np.asarray(ts, dtype=float)
    vals = np.asarray(values, dtype=complex)
    if len(exponents) != len(ts) - 1:
        raise ValueError("need one more sample than exponents")
    mat = np.ones((len(ts), len(ts)), dtype=float)
    for j, p in enumerate(exponents):
        mat[:, j + 1] = ts ** (-p)
    sol = np.linalg.solve(mat, vals)
    return sol[0]


def richardson_ladder(ts, values, exponents, tol: float, label: str = "limit"):
    """Richardson limit with a Cauchy check between consecutive orders.

    The limit from all samples is compared with the limit that drops the
    smallest ``t``; if they differ by more than ``tol`` an
    :class:`ExtractionFailedError` is raised.
    """
    full = richardson(ts, values, exponents)
    reduced = richardson(ts[1:], values[1:], exponents[:-1])
    spread = abs(full - reduced)
    if not np.isfinite(spread) or spread > tol:
        raise ExtractionFailedError(
            f"{label}: ladder not Cauchy (|difference| = {spread:.3e} > {tol:.1e})",
            diagnostics={"ts": list(map(float, ts)),
                         "values": [complex(v) for v in values],
                         "full": complex(full), "reduced": complex(reduced)})
    return full, spread


def exp_remainder_ratio(w, m: int):
    """``(exp(w) - sum_{n<m} w**n/n!) / w**m`` evaluated without cancellation."""
    w = np.asarray(w, dtype=complex)
    out = np.empty_like(w)
    small = np.abs(w) < 2.0
    if np.any(small):
        ws = w[small]
        term = np.full_like(ws, 1.0 / _fact(m))
        acc = term.copy()
        for n in range(1, 60):
            term = term * ws / (n + m)
            acc = acc + term
        out[small] = acc
    big = ~small
    if np.any(big):
        wb = w[big]
        partial = np.zeros_like(wb)
        term = np.ones_like(wb)
        for n in range(m):
            partial = partial + term
            term = term * wb / (n + 1)
        out[big] = (np.exp(wb) - partial) / wb ** m
    return out


def _fact(n: int) -> float:
    out = 1.0
    for k in range(2, n + 1):
        out *= k
    return out
