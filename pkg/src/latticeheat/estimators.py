"""scikit-learn style wrappers around the exact and asymptotic kernels.

Both estimators take rows ``[x_1, ..., x_d, t]`` and predict kernel values.
``fit`` does no learning; it resolves the stencil and caches the
checks that every later call relies on, so the objects compose with
sklearn tooling (``get_params``, ``clone``, pipelines).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import expansion as _expansion
from .kernel_exact import QuadSpec, first_green, second_green
from .stencil import Stencil, approximation_order, check_ellipticity, parse_stencil

__all__ = ["GreenFunction", "AsymptoticGreenFunction"]


def _resolve(stencil) -> Stencil:
    return stencil if isinstance(stencil, Stencil) else parse_stencil(stencil)


def _real_if_close(vals: np.ndarray) -> np.ndarray:
    if np.all(np.abs(vals.imag) <= 1e-13 * np.maximum(1.0, np.abs(vals.real))):
        return vals.real.copy()
    return vals


class _KernelBase(BaseEstimator):
    def _check_X(self, X) -> tuple[np.ndarray, np.ndarray]:
        check_is_fitted(self, "stencil_")
        X = check_array(X, dtype=float)
        d = self.stencil_.dim
        if X.shape[1] != d + 1:
            raise ValueError(f"expected {d + 1} columns (x_1..x_{d}, t), got {X.shape[1]}")
        if np.any(X[:, -1] <= 0):
            raise ValueError("t must be positive")
        return X[:, :d], X[:, -1]

    def _fit_stencil(self):
        if self.kind not in ("first", "second"):
            raise ValueError("kind must be 'first' or 'second'")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        st = _resolve(self.stencil)
        self.stencil_ = st
        self.ellipticity_ = check_ellipticity(st)
        self.approx_order_ = approximation_order(st)
        self.n_features_in_ = st.dim + 1
        return st


class GreenFunction(_KernelBase):
    """Exact lattice heat kernel evaluated by Fourier quadrature.

    Parameters
    ----------
    stencil : str or Stencil
        Builder name (``"laplacian1d:N"``, ``"simple-walk:d"``,
        ``"triangular"``), a JSON path, or a stencil object.
    eps : float
        Mesh size.
    J : int
        Time derivative order (first kernel only).
    kind : {"first", "second"}
    tol : float
        Target relative tolerance of the quadrature.
    """

    def __init__(self, stencil="laplacian1d:1", eps: float = 1.0, J: int = 0, kind: str = "first",
                 tol: float = 1e-10):
        self.stencil = stencil
        self.eps = eps
        self.J = J
        self.kind = kind
        self.tol = tol

    def fit(self, X=None, y=None):
        self._fit_stencil()
        self.quad_ = QuadSpec(target_rel_tol=self.tol)
        return self

    def predict(self, X) -> np.ndarray:
        x, t = self._check_X(X)
        out = np.empty(len(t), dtype=complex)
        for tv in np.unique(t):
            rows = t == tv
            if self.kind == "first":
                vals = first_green(self.stencil_, self.eps, x[rows], tv, self.J, self.quad_)
            else:
                vals = second_green(self.stencil_, self.eps, x[rows], tv, self.quad_)
            out[rows] = vals
        return _real_if_close(out)


class AsymptoticGreenFunction(_KernelBase):
    """Truncated large-time expansion of the lattice heat kernel.

    Parameters
    ----------
    stencil : str or Stencil
    eps : float
    J : int
        Time derivative order (first kernel only).
    K : int or None
        Truncation grade; ``None`` uses the approximation order.
    kind : {"first", "second"}
    """

    def __init__(self, stencil="laplacian1d:1", eps: float = 1.0, J: int = 0, K: int | None = None,
                 kind: str = "first"):
        self.stencil = stencil
        self.eps = eps
        self.J = J
        self.K = K
        self.kind = kind

    def fit(self, X=None, y=None):
        st = self._fit_stencil()
        self.expansion_ = _expansion.expansion_for(st)
        K = self.approx_order_ if self.K is None else self.K
        if self.kind == "second":
            K = max(K, self.approx_order_, st.order - st.dim)
        self.K_ = K
        return self

    def _assemble(self, x, t):
        if self.kind == "first":
            return self.expansion_.first_asymptotic(self.eps, x, t, self.J, self.K_)
        return self.expansion_.second_asymptotic(self.eps, x, t, self.K_)

    def transform(self, X) -> np.ndarray:
        """Per-term contributions, one column per term in expansion order."""
        x, t = self._check_X(X)
        cols = None
        for tv in np.unique(t):
            rows = t == tv
            terms = self._assemble(x[rows], tv).terms
            if cols is None:
                cols = np.zeros((len(t), len(terms)), dtype=complex)
            if len(terms) != cols.shape[1]:
                raise ValueError("rows mix x = 0 and x != 0 branches of the second kernel")
            for j, (_, v) in enumerate(terms):
                cols[rows, j] = v
        return _real_if_close(cols)

    def predict(self, X) -> np.ndarray:
        return np.asarray(self.transform(X)).sum(axis=1)

    def term_labels(self, X) -> list:
        """Labels of the columns returned by :meth:`transform` for the first row's time."""
        x, t = self._check_X(X)
        return [k for k, _ in self._assemble(x[:1], t[0]).terms]
