"""scikit-learn style facade over the eigensolver."""

import numpy as np
from sklearn.base import BaseEstimator

from .eigensolver import HermitianOperator, lowest_eigenpairs

__all__ = ["MagneticSpectrum"]


def _as_operator(X):
    if isinstance(X, HermitianOperator):
        return X
    if hasattr(X, "faces"):
        from .mesh import build_cotan_magnetic

        return build_cotan_magnetic(X)
    if hasattr(X, "theta_x"):
        from .grid import build_operator

        return build_operator(X)
    raise TypeError(f"cannot build an operator from {type(X).__name__}")


class MagneticSpectrum(BaseEstimator):
    """Lowest ``k`` eigenpairs of a magnetic operator.

    ``fit`` accepts a HermitianOperator, a grid (torus or rectangle) or a
    triangle mesh carrying link phases.

    >>> from magspec import Lattice
    >>> from magspec.grid import torus_grid
    >>> est = MagneticSpectrum(k=3).fit(torus_grid(Lattice([[1, 0], [0, 1]]), 16))
    >>> bool(abs(est.eigenvalues_[0]) < 1e-9)
    True
    """

    def __init__(self, k=6, tol=1e-10, seed=0, method="auto"):
        self.k = k
        self.tol = tol
        self.seed = seed
        self.method = method

    def fit(self, X, y=None):
        op = _as_operator(X)
        res = lowest_eigenpairs(op, self.k, tol=self.tol, seed=self.seed, method=self.method)
        self.operator_ = op
        self.result_ = res
        self.eigenvalues_ = np.asarray(res.eigenvalues)
        self.eigenvectors_ = res.eigenvectors
        self.residuals_ = np.asarray(res.residuals)
        self.converged_ = bool(res.converged)
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X).eigenvalues_
