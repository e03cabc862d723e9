"""Small argument checks shared across the package."""

import numbers

import numpy as np


class RankError(ValueError):
    """Raised when a lattice basis is singular."""


class MeshQualityError(ValueError):
    """Raised for degenerate or non-manifold triangle meshes."""


class SolverError(RuntimeError):
    """Raised when an eigensolve cannot deliver what the caller asked for."""


def check_basis(basis, max_dim=3):
    basis = np.atleast_2d(np.asarray(basis, dtype=float))
    n, m = basis.shape
    if n != m or not 1 <= n <= max_dim:
        raise ValueError(f"basis must be square with dimension in [1, {max_dim}], got {basis.shape}")
    if not np.all(np.isfinite(basis)):
        raise ValueError("basis has non-finite entries")
    if abs(np.linalg.det(basis)) <= 1e-12:
        raise RankError("lattice basis is singular (|det| <= 1e-12)")
    return basis


def check_vector(x, dim, name="vector"):
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (dim,):
        raise ValueError(f"{name} must have length {dim}, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} has non-finite entries")
    return x


def check_positive(value, name, strict=True):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ValueError(f"{name} must be a finite real number, got {value!r}")
    if strict and value <= 0:
        raise ValueError(f"{name} must be > 0, got {value}")
    if not strict and value < 0:
        raise ValueError(f"{name} must be >= 0, got {value}")
    return float(value)


def check_count(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)
