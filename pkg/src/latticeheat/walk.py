"""Continuous-time random walks generated by stencils.

A stencil ``A`` with non-positive off-diagonal taps is minus the generator
of a walk that leaves every site at rate ``lambda = A_00`` and jumps by
``s`` with probability ``-A_s / lambda``. The transition probability of the
walk is then exactly the first lattice heat kernel of ``A``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import NotAGeneratorError
from .kernel_exact import QuadSpec, green_field, lattice_coordinates
from .stencil import TRIANGULAR_MAP, Stencil

__all__ = [
    "CTRWSpec",
    "Histogram",
    "CompareReport",
    "LatticeMap",
    "generator_from_stencil",
    "simulate",
    "compare",
    "model_tv",
    "pushforward",
    "isotropy_ratio",
    "TRIANGULAR",
]

_CHUNK = 1 << 16  # paths per independent random substream


@dataclass(frozen=True)
class CTRWSpec:
    """Jump rates of the walk whose transition probability solves ``p' = -A p``.

    Attributes
    ----------
    stencil : Stencil
        The (already scaled) operator ``A``.
    rate : float
        Total jump rate, the diagonal tap of ``A``.
    offsets : ndarray of int, shape (k, d)
    probs : ndarray, shape (k,)
        Jump distribution; sums to one.
    scale : float
        Factor applied to the input stencil.
    """

    stencil: Stencil
    rate: float
    offsets: np.ndarray
    probs: np.ndarray
    scale: float = 1.0

    @property
    def dim(self) -> int:
        return self.stencil.dim

    def rates(self) -> dict:
        return {tuple(int(v) for v in s): float(self.rate * p) for s, p in zip(self.offsets, self.probs)}

    def transition_probability(self, t: float, window: int, quad: QuadSpec | None = None):
        """Exact ``P(X_t = x)`` on ``[-window, window]**d`` as a :class:`KernelField`."""
        return green_field(self.stencil, 1.0, t, 0, window, quad or QuadSpec(target_rel_tol=1e-13))


def generator_from_stencil(st: Stencil, scale: float = 1.0) -> CTRWSpec:
    """Validate ``scale * st`` as minus a Markov generator and extract its jump law."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    scaled = st if scale == 1 else st.scaled(scale)
    origin = (0,) * st.dim
    offsets, rates = [], []
    for s, c in scaled.taps.items():
        c = complex(c)
        if abs(c.imag) > 1e-14:
            raise NotAGeneratorError(f"tap at {s} is not real")
        if s == origin:
            continue
        if c.real > 1e-14:
            raise NotAGeneratorError(
                f"tap {c.real:g} at offset {s} is positive, which would be a negative jump rate")
        if c.real < 0:
            offsets.append(s)
            rates.append(-c.real)
    rate = float(sum(rates))
    if rate <= 0:
        raise NotAGeneratorError("the walk never jumps (all off-diagonal taps vanish)")
    diag = complex(scaled.diagonal).real
    if abs(diag - rate) > 1e-12 * max(rate, 1.0):
        raise NotAGeneratorError("diagonal tap does not balance the jump rates")
    return CTRWSpec(scaled, rate, np.array(offsets, dtype=np.int64).reshape(-1, st.dim),
                    np.array(rates) / rate, float(scale))


@dataclass
class Histogram:
    """Final positions of simulated paths.

    ``points[i]`` was hit ``counts[i]`` times; points are unique and sorted.
    """

    points: np.ndarray
    counts: np.ndarray
    n_paths: int
    t: float
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.int64).reshape(len(self.counts), -1)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if int(self.counts.sum()) != self.n_paths:
            raise ValueError("counts do not add up to n_paths")

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def as_dict(self) -> dict:
        return {tuple(int(v) for v in p): int(c) for p, c in zip(self.points, self.counts)}

    def frequencies(self) -> np.ndarray:
        return self.counts / self.n_paths

    def merge(self, other: "Histogram") -> "Histogram":
        """Pool two histograms taken at the same time."""
        if other.t != self.t or other.dim != self.dim:
            raise ValueError("histograms differ in time or dimension")
        pts = np.concatenate([self.points, other.points])
        cnt = np.concatenate([self.counts, other.counts])
        uniq, inv = np.unique(pts, axis=0, return_inverse=True)
        merged = np.bincount(inv.ravel(), weights=cnt, minlength=len(uniq)).astype(np.int64)
        return Histogram(uniq, merged, self.n_paths + other.n_paths, self.t, None)

    def mean(self) -> np.ndarray:
        return self.frequencies() @ self.points

    def second_moment(self) -> np.ndarray:
        return self.frequencies() @ (self.points.astype(float) ** 2)


def simulate(spec: CTRWSpec, t: float, n_paths: int, seed: int = 0) -> Histogram:
    """Sample ``X_t`` for ``n_paths`` independent walks started at 0.

    The number of jumps before ``t`` of an exponential clock with rate
    ``lambda`` is Poisson(``lambda t``); given that number, the jumps are
    i.i.d. from the jump law. Paths are processed in fixed blocks, each with
    its own counter-based (Philox) stream spawned from ``seed``, so the
    result does not depend on how the blocks are scheduled.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be at least 1")
    if t < 0:
        raise ValueError("t must be non-negative")
    d = spec.dim
    n_blocks = -(-n_paths // _CHUNK)
    streams = np.random.SeedSequence(seed).spawn(n_blocks)
    finals = []
    for b, ss in enumerate(streams):
        size = min(_CHUNK, n_paths - b * _CHUNK)
        rng = np.random.Generator(np.random.Philox(ss))
        n_jumps = rng.poisson(spec.rate * t, size=size)
        total = int(n_jumps.sum())
        pos = np.zeros((size, d), dtype=np.int64)
        if total:
            picks = rng.choice(len(spec.probs), size=total, p=spec.probs)
            owner = np.repeat(np.arange(size), n_jumps)
            steps = spec.offsets[picks]
            for j in range(d):
                pos[:, j] = np.bincount(owner, weights=steps[:, j], minlength=size).astype(np.int64)
        finals.append(pos)
    finals = np.concatenate(finals)
    uniq, counts = np.unique(finals, axis=0, return_counts=True)
    return Histogram(uniq, counts, n_paths, float(t), seed,
                     meta={"rate": spec.rate, "blocks": n_blocks, "bit_generator": "Philox"})


@dataclass
class CompareReport:
    """Distance between an empirical histogram and a model probability.

    ``sampling_scale`` is ``sqrt(support / n)``; ``expected_tv`` is the mean
    total variation of a multinomial sample from the model (normal
    approximation), a sharper noise floor.
    """

    order: str
    tv: float
    sampling_scale: float
    expected_tv: float
    support: int
    n_paths: int
    model_mass_outside: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _model_on_window(spec: CTRWSpec, t: float, W: int, order):
    if order == "exact":
        fld = spec.transition_probability(t, W)
        return fld.values.real.ravel()
    from .expansion import expansion_for
    K = int(order)
    if K < 0:
        raise ValueError("order must be 'exact' or a non-negative grade")
    exp = expansion_for(spec.stencil)
    x = lattice_coordinates(spec.dim, W).astype(float)
    # grades 1..M-1 vanish, so any K below M keeps only the leading term
    terms = exp.first_asymptotic(1.0, x, t, 0, max(K, exp.M)).terms
    return sum(v for k, v in terms if k <= K).real


def compare(hist: Histogram, spec: CTRWSpec, order="exact") -> CompareReport:
    """Total variation between ``hist`` and the exact or asymptotic transition law.

    ``order`` is ``"exact"`` or a truncation grade ``K`` for the first-kernel
    expansion; ``K = 0`` compares with the leading (continuous) term alone.
    """
    if hist.dim != spec.dim:
        raise ValueError("histogram and walk differ in dimension")
    spread = math.sqrt(2.0 * spec.rate * hist.t / spec.dim) * float(np.max(np.abs(spec.offsets)))
    W = int(max(np.max(np.abs(hist.points)) if hist.points.size else 0, 8 * spread + 8))
    model = _model_on_window(spec, hist.t, W, order)
    emp = np.zeros_like(model)
    flat = np.ravel_multi_index(tuple((hist.points + W).T), (2 * W + 1,) * spec.dim)
    emp[flat] = hist.frequencies()
    outside = max(0.0, 1.0 - float(model.sum()))
    tv = 0.5 * (float(np.abs(emp - model).sum()) + outside)
    p = np.clip(model, 0.0, 1.0)
    expected = 0.5 * float(np.sum(np.sqrt(2.0 * p * (1.0 - p) / (math.pi * hist.n_paths))))
    support = int(np.count_nonzero(p > 1.0 / (10.0 * hist.n_paths)))
    return CompareReport(str(order), tv, math.sqrt(support / hist.n_paths), expected,
                         support, hist.n_paths, outside)


def model_tv(spec: CTRWSpec, t: float, K: int, window: int | None = None) -> float:
    """Total variation between the exact transition law and its grade-``K`` expansion."""
    if window is None:
        spread = math.sqrt(2.0 * spec.rate * t / spec.dim) * float(np.max(np.abs(spec.offsets)))
        window = int(8 * spread + 8)
    exact = _model_on_window(spec, t, window, "exact")
    approx = _model_on_window(spec, t, window, K)
    return 0.5 * float(np.abs(exact - approx).sum())


@dataclass(frozen=True)
class LatticeMap:
    """Linear map ``M`` from a source lattice to ``Z^d``.

    A source point with Cartesian coordinates ``z`` sits at the chart point
    ``x = M z``; :meth:`to_source` applies ``M^-1``.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("the map must be a square matrix")
        if abs(np.linalg.det(m)) < 1e-12:
            raise ValueError("the map is singular")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def to_source(self, x) -> np.ndarray:
        return np.linalg.solve(self.matrix, np.asarray(x, dtype=float).T).T

    def to_chart(self, z) -> np.ndarray:
        return np.asarray(z, dtype=float) @ self.matrix.T


TRIANGULAR = LatticeMap(TRIANGULAR_MAP)


def pushforward(points, values, lmap: LatticeMap):
    """Relabel chart points ``x`` by their source-lattice coordinates ``M^-1 x``.

    Values are point masses and move unchanged.

    Returns
    -------
    chart : ndarray (m, d)
    source : ndarray (m, d)
    values : ndarray (m,)
    """
    pts = np.asarray(points)
    if isinstance(points, Histogram):
        pts, values = points.points, points.frequencies()
    return pts, lmap.to_source(pts), np.asarray(values)


def isotropy_ratio(st: Stencil, lmap: LatticeMap, t: float, shell_width: float = 1.0) -> dict:
    """Angular spread of the kernel on a shell ``|M^-1 x| ~ sqrt(t)``.

    On the shell the values ``u(x, t) * exp(|z|^2 / (4t))``, with
    ``z = M^-1 x``, are constant for a radially symmetric Gaussian. Returns
    their max/min ratio, which tends to 1 when the continuous limit of
    ``st`` is isotropic in the source coordinates.
    """
    radius = math.sqrt(t)
    reach = radius + shell_width
    W = int(math.ceil(reach * np.max(np.abs(lmap.matrix)) * 1.5)) + 2
    fld = green_field(st, 1.0, t, 0, W, QuadSpec(target_rel_tol=1e-12))
    x = lattice_coordinates(st.dim, W)
    z = lmap.to_source(x)
    r = np.linalg.norm(z, axis=1)
    on_shell = np.abs(r - radius) <= 0.5 * shell_width
    vals = fld.values.real.ravel()[on_shell] * np.exp(r[on_shell] ** 2 / (4.0 * t))
    return {"t": t, "radius": radius, "points": int(on_shell.sum()),
            "ratio": float(vals.max() / vals.min()), "min": float(vals.min()),
            "max": float(vals.max())}
