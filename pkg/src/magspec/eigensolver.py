"""Lowest eigenpairs of H x = lambda M x with Hermitian H and diagonal M > 0.

The generalized problem is symmetrically scaled to S = M^-1/2 H M^-1/2.
Small problems go to LAPACK; larger ones to ARPACK in shift-invert mode,
shifted below a Gershgorin lower bound so that S - sigma is positive
definite. Either way the returned pairs carry residual certificates that
are recomputed from H and M, not taken from the solver.
"""

from dataclasses import dataclass, field
import logging

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._validation import SolverError, check_count

logger = logging.getLogger(__name__)

__all__ = [
    "HermitianOperator",
    "SpectralResult",
    "lowest_eigenpairs",
    "residual_norms",
    "heat_trace_partial",
    "riesz_mean",
]

DENSE_MAX_DIM = 1500
EXTRA_PAIRS = 4


@dataclass(eq=False)
class HermitianOperator:
    """Discrete H_{A,q}: a sparse Hermitian matrix and a positive diagonal mass.

    ``meta`` carries geometry facts the bound checks need (mesh width,
    geometry kind). The object is not mutated after assembly.
    """

    matrix: sp.csr_matrix
    mass: np.ndarray
    meta: dict = field(default_factory=dict)
    hermitian: bool = True

    def __post_init__(self):
        self.matrix = sp.csr_matrix(self.matrix, dtype=complex)
        self.mass = np.asarray(self.mass, dtype=float).reshape(-1)
        n = self.matrix.shape[0]
        if self.matrix.shape != (n, n) or self.mass.shape != (n,):
            raise ValueError("matrix must be square and mass must match its dimension")
        if not np.all(self.mass > 0):
            raise ValueError("mass entries must be positive")
        if self.hermitian:
            skew = abs(self.matrix - self.matrix.conj().T)
            assert skew.nnz == 0 or skew.max() == 0.0, "non-Hermitian assembly"

    @property
    def dim(self):
        return self.matrix.shape[0]

    def apply(self, x):
        return self.matrix @ x

    def shifted(self, c):
        """H + c M (same mass)."""
        return HermitianOperator(self.matrix + sp.diags(c * self.mass), self.mass, dict(self.meta))

    def scaled(self):
        d = sp.diags(1.0 / np.sqrt(self.mass))
        S = (d @ self.matrix @ d).tocsr()
        # symmetrize away the last-bit asymmetry of the two-sided scaling
        return ((S + S.conj().T) * 0.5).tocsr()


@dataclass
class SpectralResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    iterations: int
    converged: bool
    seed: int
    method: str
    tol: float
    scale: float

    def __len__(self):
        return len(self.eigenvalues)


def gershgorin_bounds(S):
    S = sp.csr_matrix(S)
    diag = S.diagonal().real
    radius = np.asarray(abs(S).sum(axis=1)).ravel() - np.abs(diag)
    return float(np.min(diag - radius)), float(np.max(diag + radius))


def residual_norms(op, eigenvalues, eigenvectors):
    """||H x - lambda M x||_{M^-1} / ||x||_M for each column."""
    out = []
    for lam, x in zip(eigenvalues, eigenvectors.T):
        r = op.apply(x) - lam * op.mass * x
        num = np.sqrt(np.sum(np.abs(r) ** 2 / op.mass))
        den = np.sqrt(np.sum(op.mass * np.abs(x) ** 2))
        out.append(num / den)
    return np.asarray(out)


def _rayleigh_ritz(S, Y):
    Q, _ = np.linalg.qr(Y)
    T = Q.conj().T @ (S @ Q)
    T = 0.5 * (T + T.conj().T)
    w, V = la.eigh(T)
    return w, Q @ V


def _dense(S, m):
    w, Y = la.eigh(S.toarray(), subset_by_index=[0, m - 1], driver="evr")
    return w, Y, 1


def _iterative(S, m, tol, seed, k):
    n = S.shape[0]
    lo, hi = gershgorin_bounds(S)
    sigma = lo - 1e-3 * max(1.0, hi - lo)
    lu = spla.splu((S - sigma * sp.identity(n, dtype=complex, format="csc")).tocsc())
    count = [0]

    def solve(x):
        count[0] += 1
        return lu.solve(np.asarray(x, dtype=complex).reshape(-1))

    opinv = spla.LinearOperator((n, n), matvec=solve, dtype=complex)
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    ncv = min(n, max(2 * m + 1, 20))
    try:
        w, Y = spla.eigsh(
            S, k=m, sigma=sigma, which="LM", v0=v0, tol=tol * 1e-2, ncv=ncv, maxiter=50 * k, OPinv=opinv
        )
        converged = True
    except spla.ArpackNoConvergence as exc:
        logger.warning("ARPACK did not converge: %s", exc)
        w, Y = exc.eigenvalues, exc.eigenvectors
        converged = False
        if len(w) == 0:
            return np.empty(0), np.empty((n, 0), dtype=complex), count[0], False
    w, Y = _rayleigh_ritz(S, Y)
    return w, Y, count[0], converged


def lowest_eigenpairs(op, k, tol=1e-10, seed=0, method="auto"):
    """The k lowest eigenpairs of ``op`` with residual certificates.

    A pair is certified when ||H x - lambda M x||_{M^-1} <= tol * scale with
    ||x||_M = 1, where scale = max(1, Gershgorin bound on ||S||). The
    ``converged`` flag is False (never silently dropped) when any requested
    pair misses its certificate.
    """
    k = check_count(k, "k")
    n = op.dim
    if k >= n:
        raise ValueError(f"k={k} must be smaller than the dimension {n}")
    if not 1e-12 <= tol <= 1e-4:
        raise ValueError(f"tol must lie in [1e-12, 1e-4], got {tol}")
    if method not in ("auto", "dense", "iterative"):
        raise ValueError(f"unknown method {method!r}")

    S = op.scaled()
    lo, hi = gershgorin_bounds(S)
    scale = max(1.0, abs(lo), abs(hi))
    if method == "auto":
        method = "dense" if n <= DENSE_MAX_DIM else "iterative"

    if method == "dense":
        m = min(k + EXTRA_PAIRS, n)
        w, Y, iters = _dense(S, m)
        converged = True
    else:
        m = min(k + EXTRA_PAIRS, n - 1)
        w, Y, iters, converged = _iterative(S, m, tol, seed, k)

    order = np.argsort(w, kind="stable")
    w, Y = w[order][:k], Y[:, order][:, :k]
    X = Y / np.sqrt(op.mass)[:, None]
    res = residual_norms(op, w, X)
    if len(w) < k:
        converged = False
    if np.any(res > tol * scale):
        converged = False
    return SpectralResult(
        eigenvalues=np.asarray(w, dtype=float),
        eigenvectors=X,
        residuals=res,
        iterations=int(iters),
        converged=bool(converged),
        seed=int(seed),
        method=method,
        tol=float(tol),
        scale=float(scale),
    )


def require_converged(result, count=None):
    count = len(result) if count is None else count
    if not result.converged or len(result) < count:
        raise SolverError(f"need {count} converged eigenvalues, solver returned {len(result)} (converged={result.converged})")
    return result


def heat_trace_partial(eigs, t):
    """sum exp(-t * lambda) over the given eigenvalues.

    Every omitted term is positive, so this is a lower bound on the full
    heat trace.
    """
    t = float(t)
    if not t > 0:
        raise ValueError(f"t must be > 0, got {t}")
    eigs = np.asarray(eigs, dtype=float)
    return float(np.sum(np.exp(-t * eigs)))


def riesz_mean(eigs, z):
    """sum (z - lambda)_+; exact when ``eigs`` holds every eigenvalue below z."""
    eigs = np.asarray(eigs, dtype=float)
    return float(np.sum(np.clip(float(z) - eigs, 0.0, None)))
