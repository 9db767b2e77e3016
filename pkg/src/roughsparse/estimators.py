"""scikit-learn style wrappers around the grid operators.

Inputs are :class:`~roughsparse.norms.GridFunction` objects or flat arrays of
``2**(n m)`` cell values (the grid is then inferred from ``n`` and ``L``).
Transformers return plain arrays with the input's shape.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .harness import rdf_R
from .norms import maximal_fn, parse_young, weight_constants
from .rough import OmegaKernel, apply_t_omega, commutator_apply
from .sparse import sparse_dominate_commutator
from .validation import check_exponent, check_grid_function, check_nonnegative, check_weight


def _kernel(spec, n):
    if isinstance(spec, OmegaKernel):
        return spec
    if spec is None:
        return OmegaKernel.hilbert() if n == 1 else OmegaKernel.alternating(16)
    return OmegaKernel.from_config(spec)


def _out(values, X):
    if isinstance(X, np.ndarray):
        return values.reshape(X.shape)
    return values


class WeightProfile(BaseEstimator):
    """Muckenhoupt-type characteristics of a weight."""

    def __init__(self, p=2.0, q=None, tau=None, n=1, L=1.0):
        self.p = p
        self.q = q
        self.tau = tau
        self.n = n
        self.L = L

    def fit(self, X, y=None):
        p = check_exponent("p", self.p, 1.0)
        q = None if self.q is None else check_exponent("q", self.q, 1.0, strict=True)
        if q is not None and not q < p:
            raise ValueError(f"q must be smaller than p, got q={q:g}, p={p:g}")
        w = check_weight(X, n=self.n, L=self.L)
        self.constants_ = weight_constants(w, p, q, self.tau)
        self.a_p_ = self.constants_.a_p
        self.a_1_ = self.constants_.a_1
        self.a_inf_ = self.constants_.a_inf
        self.mixed_ = self.constants_.mixed
        self.r_w_ = self.constants_.rh_exponent
        return self

    def to_row(self):
        check_is_fitted(self, "constants_")
        return self.constants_.row()


class OrliczMaximal(BaseEstimator, TransformerMixin):
    """Maximal function ``M_psi`` over the cube family."""

    def __init__(self, psi="power:1", n=1, L=1.0):
        self.psi = psi
        self.n = n
        self.L = L

    def fit(self, X=None, y=None):
        self.psi_ = parse_young(self.psi)
        return self

    def transform(self, X):
        check_is_fitted(self, "psi_")
        h = check_grid_function(X, n=self.n, L=self.L)
        return _out(maximal_fn(h, self.psi_).values, X)


class RoughSingularIntegral(BaseEstimator, TransformerMixin):
    """``T_Omega`` as a transformer."""

    def __init__(self, omega=None, n=1, L=1.0):
        self.omega = omega
        self.n = n
        self.L = L

    def fit(self, X=None, y=None):
        self.kernel_ = _kernel(self.omega, self.n)
        return self

    def transform(self, X):
        check_is_fitted(self, "kernel_")
        f = check_grid_function(X, n=self.n, L=self.L)
        return _out(apply_t_omega(f, self.kernel_).values, X)


class Commutator(BaseEstimator, TransformerMixin):
    """``[b, T_Omega]``; ``fit`` takes the symbol ``b``."""

    def __init__(self, omega=None, n=1, L=1.0):
        self.omega = omega
        self.n = n
        self.L = L

    def fit(self, X, y=None):
        self.symbol_ = check_grid_function(X, n=self.n, L=self.L)
        self.kernel_ = _kernel(self.omega, self.n)
        return self

    def transform(self, X):
        check_is_fitted(self, "symbol_")
        f = check_grid_function(X, self.symbol_.grid)
        return _out(commutator_apply(self.symbol_, f, self.kernel_).values, X)


class RubioDeFrancia(BaseEstimator, TransformerMixin):
    """Rubio de Francia majorant in ``L^p(M_r w)``; ``fit`` takes the weight."""

    def __init__(self, p=2.0, r=1.5, max_terms=16, n=1, L=1.0, seed=0):
        self.p = p
        self.r = r
        self.max_terms = max_terms
        self.n = n
        self.L = L
        self.seed = seed

    def fit(self, X, y=None):
        check_exponent("p", self.p, 1.0, strict=True)
        check_exponent("r", self.r, 1.0, strict=True)
        self.weight_ = check_weight(X, n=self.n, L=self.L)
        return self

    def transform(self, X):
        check_is_fitted(self, "weight_")
        h = check_nonnegative(check_grid_function(X, self.weight_.grid))
        self.result_ = rdf_R(h, self.weight_, self.p, self.r, self.max_terms,
                             rng=np.random.default_rng(self.seed))
        return _out(self.result_.Rh.values, X)


class SparseDominator(BaseEstimator):
    """Sparse domination of ``<[b, T] f, g>``; ``fit(b, (f, g))``."""

    def __init__(self, omega=None, s=2.0, n=1, L=1.0):
        self.omega = omega
        self.s = s
        self.n = n
        self.L = L

    def fit(self, X, y):
        s = check_exponent("s", self.s, 1.0, strict=True)
        b = check_grid_function(X, n=self.n, L=self.L)
        f, g = y
        f = check_grid_function(f, b.grid)
        g = check_grid_function(g, b.grid)
        self.result_ = sparse_dominate_commutator(b, f, g, _kernel(self.omega, self.n), s)
        self.K_ = self.result_.K_empirical
        self.families_ = self.result_.families
        return self

    def score(self, X=None, y=None):
        """``lhs / rhs`` of the fitted domination (at most 1)."""
        check_is_fitted(self, "result_")
        r = self.result_
        return 0.0 if r.rhs == 0 else r.lhs / r.rhs
