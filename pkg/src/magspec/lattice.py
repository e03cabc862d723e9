"""Lattices in R^n (n <= 3), their duals, and certified closest-vector search.

Everything here is exhaustive enumeration inside a box that provably contains
every lattice point of a given ball. For n <= 3 that is cheap and exact, so no
basis reduction is attempted.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_basis, check_positive, check_vector

__all__ = [
    "Lattice",
    "LatticePointSet",
    "dual",
    "flux_lattice",
    "enumerate_points",
    "closest_vectors",
    "distance_to_flux_lattice",
    "fluxes",
]

TIE_RTOL = 1e-9
COEFF_ATOL = 1e-9


@dataclass(frozen=True, eq=False)
class Lattice:
    """Full-rank lattice; columns of ``basis`` are the generators."""

    basis: np.ndarray

    def __post_init__(self):
        basis = check_basis(self.basis)
        basis.setflags(write=False)
        object.__setattr__(self, "basis", basis)

    @property
    def dim(self):
        return self.basis.shape[0]

    @property
    def covolume(self):
        return abs(float(np.linalg.det(self.basis)))

    def coefficients(self, points):
        """Real coefficient vectors of ``points`` (rows) in this basis."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return np.linalg.solve(self.basis, points.T).T

    def contains(self, point, atol=COEFF_ATOL):
        c = self.coefficients(point)[0]
        return bool(np.all(np.abs(c - np.rint(c)) <= atol))

    def same_points(self, other, atol=COEFF_ATOL):
        """True when both bases generate the same point set.

        Each generator of one lattice must have integer coordinates in the
        other; checking both directions makes the change of basis unimodular.
        """
        if self.dim != other.dim:
            return False
        a = self.coefficients(other.basis.T)
        b = other.coefficients(self.basis.T)
        return bool(np.all(np.abs(a - np.rint(a)) <= atol) and np.all(np.abs(b - np.rint(b)) <= atol))

    def __repr__(self):
        return f"Lattice(basis={self.basis.tolist()!r})"


@dataclass(frozen=True)
class LatticePointSet:
    """Integer coefficient vectors and their Cartesian embeddings (rows)."""

    coefficients: np.ndarray
    points: np.ndarray

    def __len__(self):
        return len(self.coefficients)

    def as_tuples(self):
        return [tuple(int(v) for v in c) for c in self.coefficients]


def _embed(basis, coeffs):
    # column-by-column accumulation: keeps the arithmetic identical for any
    # caller that embeds coefficients the same way
    pts = np.zeros((coeffs.shape[0], basis.shape[0]))
    for k in range(basis.shape[1]):
        pts += coeffs[:, k : k + 1] * basis[:, k]
    return pts


def _sq_dist(points, target):
    diff = points - target
    out = np.zeros(points.shape[0])
    for k in range(points.shape[1]):
        out += diff[:, k] * diff[:, k]
    return out


def _lexsorted(coeffs):
    if len(coeffs) == 0:
        return coeffs
    order = np.lexsort(coeffs.T[::-1])
    return coeffs[order]


def dual(lattice):
    """Dual lattice {v : <v, w> in Z for all w in the lattice}.

    The dual generators are the columns of the inverse transpose, so
    ``dual(L).basis.T @ L.basis`` is the identity.
    """
    return Lattice(np.linalg.inv(lattice.basis).T)


def flux_lattice(lattice):
    """Harmonic forms with integer flux on R^n / lattice, i.e. 2*pi times the dual."""
    return Lattice(2.0 * np.pi * np.linalg.inv(lattice.basis).T)


def _coefficient_box(lattice, center, radius):
    # c_i - (B^-1 center)_i = row_i(B^-1) . (p - center), and the rows of
    # B^-1 are the dual generators, so |c_i - c0_i| <= |dual_i| * radius.
    inv = np.linalg.inv(lattice.basis)
    c0 = inv @ center
    reach = np.linalg.norm(inv, axis=1) * radius
    lo = np.floor(c0 - reach - COEFF_ATOL).astype(int)
    hi = np.ceil(c0 + reach + COEFF_ATOL).astype(int)
    return lo, hi


def _box_coefficients(lo, hi):
    axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=1)


def enumerate_points(lattice, center, radius):
    """All lattice points within ``radius`` of ``center`` (closed ball).

    Points are returned in lexicographic order of their coefficient vectors.
    A relative slack of 1e-12 on the radius keeps boundary points that sit
    exactly on the sphere.
    """
    center = check_vector(center, lattice.dim, "center")
    radius = check_positive(float(radius), "radius", strict=False)
    lo, hi = _coefficient_box(lattice, center, radius)
    coeffs = _box_coefficients(lo, hi)
    pts = _embed(lattice.basis, coeffs.astype(float))
    d2 = _sq_dist(pts, center)
    keep = d2 <= radius * radius * (1 + 1e-12) + 1e-300
    coeffs = _lexsorted(coeffs[keep])
    return LatticePointSet(coeffs, _embed(lattice.basis, coeffs.astype(float)))


def closest_vectors(lattice, target):
    """Squared distance from ``target`` to the lattice and every minimizer.

    Rounding the target's coefficients gives a lattice point whose distance
    bounds the optimum from above; enumerating that ball is then exhaustive.
    Ties within a relative 1e-9 are all reported, lexicographically ordered.
    """
    target = check_vector(target, lattice.dim, "target")
    babai = np.rint(np.linalg.solve(lattice.basis, target))
    r2 = float(_sq_dist(_embed(lattice.basis, babai[None, :]), target)[0])
    # widen by the tie tolerance so near-ties beyond the rounded point are kept
    reach = np.sqrt(r2 + 2 * TIE_RTOL * max(1.0, r2))
    lo, hi = _coefficient_box(lattice, target, reach)
    coeffs = _box_coefficients(lo, hi)
    d2 = _sq_dist(_embed(lattice.basis, coeffs.astype(float)), target)
    best = float(d2.min())
    ties = d2 <= best + TIE_RTOL * max(1.0, best)
    coeffs = _lexsorted(coeffs[ties])
    return best, LatticePointSet(coeffs, _embed(lattice.basis, coeffs.astype(float)))


def distance_to_flux_lattice(lattice, h, volume):
    """L^2 distance squared from a constant form ``h`` to the flux lattice.

    Parallel forms have constant pointwise norm on a flat torus, so the L^2
    norm squared is ``volume`` times the pointwise one.
    """
    volume = check_positive(float(volume), "volume")
    d2, _ = closest_vectors(flux_lattice(lattice), h)
    return volume * d2


def fluxes(lattice, h):
    """Flux (1/2pi) * h(X) of a constant form around the loop of each generator X."""
    h = check_vector(h, lattice.dim, "h")
    return lattice.basis.T @ h / (2.0 * np.pi)
