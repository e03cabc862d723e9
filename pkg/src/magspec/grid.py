"""Gauge-covariant finite differences for H_{A,q} on 2D tori and rectangles.

Each grid edge carries the exact line integral theta_e of A. The quadratic
form is sum_e w_e |u_b - exp(i theta_e) u_a|^2 + sum_v q_v m_v |u_v|^2, so
replacing A by A + d(chi) multiplies the matrix by a diagonal unitary and the
spectrum is unchanged to rounding.

In two dimensions the Dirichlet energy is conformally invariant: for
g = exp(2 phi) * flat only the mass picks up the factor exp(2 phi).
"""

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from ._validation import SolverError, check_count
from .eigensolver import HermitianOperator, lowest_eigenpairs
from .exact_torus import ConstantForm
from .lattice import Lattice, closest_vectors, flux_lattice
from .potentials import ConstantPotential, ConstantScalar, GradientPotential, OneForm, ScalarField

__all__ = [
    "TorusGrid",
    "RectangleGrid",
    "SampledForm",
    "torus_grid",
    "rectangle_grid",
    "build_torus_operator",
    "build_rectangle_operator",
    "build_operator",
    "plaquette_field",
    "hodge_decompose",
    "scalar_quantities",
    "flux_distance2",
    "form_norm2",
    "form_inner",
    "with_gauge",
    "comparison_grid",
]

MIN_CELLS = 8


@dataclass(frozen=True, eq=False)
class SampledForm:
    """Edge integrals of a 1-form on a periodic N1 x N2 grid.

    ``theta_x[i, j]`` integrates along the edge (i, j) -> (i+1, j) and
    ``theta_y[i, j]`` along (i, j) -> (i, j+1), indices mod N.
    """

    theta_x: np.ndarray
    theta_y: np.ndarray
    spacing: tuple

    def __post_init__(self):
        if self.theta_x.shape != self.theta_y.shape:
            raise ValueError("edge arrays must share a shape")
        if not (np.all(np.isfinite(self.theta_x)) and np.all(np.isfinite(self.theta_y))):
            raise ValueError("edge integrals must be finite")

    def __add__(self, other):
        return SampledForm(self.theta_x + other.theta_x, self.theta_y + other.theta_y, self.spacing)

    def __sub__(self, other):
        return SampledForm(self.theta_x - other.theta_x, self.theta_y - other.theta_y, self.spacing)


@dataclass(frozen=True, eq=False)
class TorusGrid:
    lattice: Lattice
    shape: tuple
    theta_x: np.ndarray
    theta_y: np.ndarray
    q: np.ndarray
    phi: np.ndarray
    potential: OneForm = None
    q_field: object = None
    phi_field: object = None

    @property
    def periods(self):
        return float(self.lattice.basis[0, 0]), float(self.lattice.basis[1, 1])

    @property
    def spacing(self):
        (L1, L2), (N1, N2) = self.periods, self.shape
        return L1 / N1, L2 / N2

    @property
    def cell_area(self):
        h1, h2 = self.spacing
        return h1 * h2

    @property
    def mass(self):
        return self.cell_area * np.exp(2.0 * self.phi)

    @property
    def form(self):
        return SampledForm(self.theta_x, self.theta_y, self.spacing)

    def nodes(self):
        h1, h2 = self.spacing
        N1, N2 = self.shape
        X, Y = np.meshgrid(np.arange(N1) * h1, np.arange(N2) * h2, indexing="ij")
        return np.stack([X.ravel(), Y.ravel()], axis=1)


@dataclass(frozen=True, eq=False)
class RectangleGrid:
    sides: tuple
    shape: tuple
    theta_x: np.ndarray
    theta_y: np.ndarray
    q: np.ndarray
    potential: OneForm = None
    q_field: object = None

    @property
    def spacing(self):
        (L1, L2), (N1, N2) = self.sides, self.shape
        return L1 / N1, L2 / N2

    @property
    def cell_area(self):
        h1, h2 = self.spacing
        return h1 * h2

    @property
    def mass(self):
        return np.full(self.shape, self.cell_area)

    def nodes(self):
        h1, h2 = self.spacing
        N1, N2 = self.shape
        X, Y = np.meshgrid((np.arange(N1) + 0.5) * h1, (np.arange(N2) + 0.5) * h2, indexing="ij")
        return np.stack([X.ravel(), Y.ravel()], axis=1)


def _rectangular_periods(lattice):
    B = lattice.basis
    if lattice.dim != 2:
        raise ValueError("grid tori are two-dimensional")
    if abs(B[0, 1]) > 1e-12 or abs(B[1, 0]) > 1e-12 or B[0, 0] <= 0 or B[1, 1] <= 0:
        raise ValueError("grid tori need a diagonal basis with positive periods; use exact_torus for skew lattices")
    return float(B[0, 0]), float(B[1, 1])


def _check_shape(shape):
    if np.isscalar(shape):
        shape = (shape, shape)
    N1, N2 = (check_count(int(n), "resolution", minimum=MIN_CELLS) for n in shape)
    return N1, N2


def _sample(value, nodes, shape, name):
    if value is None:
        return np.zeros(shape), None
    if isinstance(value, ScalarField):
        return value.value(nodes).reshape(shape), value
    if np.isscalar(value):
        return np.full(shape, float(value)), ConstantScalar(value)
    arr = np.asarray(value, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"{name} samples must have shape {shape}, got {arr.shape}")
    return arr.copy(), None


def _edge_integrals(potential, nodes, spacing, shape):
    if potential is None:
        return np.zeros(shape), np.zeros(shape)
    h1, h2 = spacing
    tx = potential.line_integral(nodes, nodes + [h1, 0.0]).reshape(shape)
    ty = potential.line_integral(nodes, nodes + [0.0, h2]).reshape(shape)
    return tx, ty


def torus_grid(lattice, shape, A=None, q=0.0, phi=0.0):
    """Sample A (as exact edge integrals), q and the conformal exponent phi."""
    if not isinstance(lattice, Lattice):
        lattice = Lattice(lattice)
    L1, L2 = _rectangular_periods(lattice)
    N1, N2 = _check_shape(shape)
    h = (L1 / N1, L2 / N2)
    X, Y = np.meshgrid(np.arange(N1) * h[0], np.arange(N2) * h[1], indexing="ij")
    nodes = np.stack([X.ravel(), Y.ravel()], axis=1)
    if isinstance(A, (list, tuple, np.ndarray, ConstantForm)):
        A = ConstantPotential(A.components if isinstance(A, ConstantForm) else A)
    tx, ty = _edge_integrals(A, nodes, h, (N1, N2))
    qs, qf = _sample(q, nodes, (N1, N2), "q")
    ps, pf = _sample(phi, nodes, (N1, N2), "phi")
    return TorusGrid(lattice, (N1, N2), tx, ty, qs, ps, A, qf, pf)


def rectangle_grid(sides, shape, A=None, q=0.0):
    """Cell-centred grid on [0, L1] x [0, L2]; nodes sit at cell centres."""
    L1, L2 = (float(s) for s in sides)
    if not (L1 > 0 and L2 > 0):
        raise ValueError("rectangle sides must be positive")
    N1, N2 = _check_shape(shape)
    h = (L1 / N1, L2 / N2)
    X, Y = np.meshgrid((np.arange(N1) + 0.5) * h[0], (np.arange(N2) + 0.5) * h[1], indexing="ij")
    nodes = np.stack([X.ravel(), Y.ravel()], axis=1)
    if isinstance(A, (list, tuple, np.ndarray, ConstantForm)):
        A = ConstantPotential(A.components if isinstance(A, ConstantForm) else A)
    tx, ty = _edge_integrals(A, nodes, h, (N1, N2))
    qs, qf = _sample(q, nodes, (N1, N2), "q")
    return RectangleGrid((L1, L2), (N1, N2), tx, ty, qs, A, qf)


def _assemble(shape, spacing, theta_x, theta_y, q, mass, periodic):
    N1, N2 = shape
    h1, h2 = spacing
    wx, wy = h2 / h1, h1 / h2
    idx = np.arange(N1 * N2).reshape(shape)
    rows, cols, vals = [], [], []
    diag = q * mass

    def link(a, b, theta, w):
        # one coupling per edge; both conjugate entries come from the same value
        z = -w * np.exp(-1j * theta)
        rows.extend([a, b])
        cols.extend([b, a])
        vals.extend([z, np.conj(z)])

    if periodic:
        link(idx.ravel(), np.roll(idx, -1, axis=0).ravel(), theta_x.ravel(), wx)
        link(idx.ravel(), np.roll(idx, -1, axis=1).ravel(), theta_y.ravel(), wy)
        diag = diag + 2 * wx + 2 * wy
    else:
        link(idx[:-1, :].ravel(), idx[1:, :].ravel(), theta_x[:-1, :].ravel(), wx)
        link(idx[:, :-1].ravel(), idx[:, 1:].ravel(), theta_y[:, :-1].ravel(), wy)
        # natural boundary: a node only pays for the links it actually has
        deg_x = np.full(shape, 2.0)
        deg_x[0, :] -= 1
        deg_x[-1, :] -= 1
        deg_y = np.full(shape, 2.0)
        deg_y[:, 0] -= 1
        deg_y[:, -1] -= 1
        diag = diag + wx * deg_x + wy * deg_y

    r = np.concatenate(rows + [idx.ravel()])
    c = np.concatenate(cols + [idx.ravel()])
    v = np.concatenate(vals + [diag.ravel().astype(complex)])
    return sp.csr_matrix((v, (r, c)), shape=(N1 * N2, N1 * N2))


def build_torus_operator(grid):
    """Periodic 5-point Peierls stencil; generalized problem H x = lambda M x."""
    mass = grid.mass
    H = _assemble(grid.shape, grid.spacing, grid.theta_x, grid.theta_y, grid.q, mass, periodic=True)
    meta = {"geometry": "torus", "h": max(grid.spacing), "shape": grid.shape, "periods": grid.periods}
    return HermitianOperator(H, mass.ravel(), meta)


def build_rectangle_operator(grid):
    """Same stencil with outward links dropped: the magnetic Neumann condition."""
    mass = grid.mass
    H = _assemble(grid.shape, grid.spacing, grid.theta_x, grid.theta_y, grid.q, mass, periodic=False)
    meta = {"geometry": "rectangle", "h": max(grid.spacing), "shape": grid.shape, "sides": grid.sides}
    return HermitianOperator(H, mass.ravel(), meta)


def build_operator(grid):
    if isinstance(grid, TorusGrid):
        return build_torus_operator(grid)
    return build_rectangle_operator(grid)


def with_gauge(grid, chi):
    """Same grid with A replaced by A + d(chi); phases gain exact differences."""
    nodes = grid.nodes()
    h1, h2 = grid.spacing
    c0 = chi.value(nodes)
    dx = (chi.value(nodes + [h1, 0.0]) - c0).reshape(grid.shape)
    dy = (chi.value(nodes + [0.0, h2]) - c0).reshape(grid.shape)
    pot = GradientPotential(chi) if grid.potential is None else grid.potential + GradientPotential(chi)
    return replace(grid, theta_x=grid.theta_x + dx, theta_y=grid.theta_y + dy, potential=pot)


def comparison_grid(grid):
    """Same geometry with A = 0 and q replaced by q + |A|_g^2 sampled at nodes."""
    if grid.potential is None:
        return replace(grid, q_field=None)
    a2 = np.sum(grid.potential.value(grid.nodes()) ** 2, axis=1).reshape(grid.shape)
    if isinstance(grid, TorusGrid):
        a2 = a2 * np.exp(-2.0 * grid.phi)
    zero = np.zeros(grid.shape)
    return replace(grid, theta_x=zero, theta_y=zero, q=grid.q + a2, potential=None, q_field=None)


def scalar_grid(grid):
    """The A = 0, q = 0 operator on the same geometry."""
    zero = np.zeros(grid.shape)
    return replace(grid, theta_x=zero, theta_y=zero, q=zero, potential=None, q_field=None)


def _circulations(grid):
    if isinstance(grid, TorusGrid):
        tx, ty = grid.theta_x, grid.theta_y
        return tx + np.roll(ty, -1, axis=0) - np.roll(tx, -1, axis=1) - ty
    # rectangle: tile the domain itself by N1 x N2 cells with corners on the
    # boundary, so no boundary strip is lost
    if grid.potential is None:
        return np.zeros(grid.shape)
    h1, h2 = grid.spacing
    N1, N2 = grid.shape
    X, Y = np.meshgrid(np.arange(N1) * h1, np.arange(N2) * h2, indexing="ij")
    p = np.stack([X.ravel(), Y.ravel()], axis=1)
    A = grid.potential
    c = (
        A.line_integral(p, p + [h1, 0])
        + A.line_integral(p + [h1, 0], p + [h1, h2])
        - A.line_integral(p + [0, h2], p + [h1, h2])
        - A.line_integral(p, p + [0, h2])
    )
    return c.reshape(grid.shape)


def plaquette_field(grid):
    """Per-cell field B = circulation / cell area and ||B||^2.

    The 2-form norm is conformally invariant in two dimensions, so the flat
    cell area is used even on conformal tori.
    """
    area = grid.cell_area
    circ = _circulations(grid)
    B = circ / area
    return B, float(np.sum(circ * circ) / area)


def _edge_weights(spacing):
    h1, h2 = spacing
    return h2 / h1, h1 / h2


def form_inner(alpha, beta, phi=None):
    """L^2 pairing of two sampled 1-forms.

    With a conformal exponent the pointwise metric factor exp(-2 phi) and the
    volume factor exp(2 phi) are both applied at edge midpoints; they cancel,
    which is the conformal invariance of the 1-form energy in 2D.
    """
    wx, wy = _edge_weights(alpha.spacing)
    if phi is None:
        fx = fy = 1.0
    else:
        px = 0.5 * (phi + np.roll(phi, -1, axis=0))
        py = 0.5 * (phi + np.roll(phi, -1, axis=1))
        fx = np.exp(-2.0 * px) * np.exp(2.0 * px)
        fy = np.exp(-2.0 * py) * np.exp(2.0 * py)
    return float(wx * np.sum(fx * alpha.theta_x * beta.theta_x) + wy * np.sum(fy * alpha.theta_y * beta.theta_y))


def form_norm2(alpha, phi=None):
    return form_inner(alpha, alpha, phi)


def _constant_sampled(components, spacing, shape):
    h1, h2 = spacing
    return SampledForm(np.full(shape, components[0] * h1), np.full(shape, components[1] * h2), spacing)


def hodge_decompose(form):
    """Split a periodic sampled 1-form into harmonic + coexact + exact parts.

    The harmonic part is the componentwise mean. The exact part d(f) is the
    orthogonal projection onto discrete gradients, solved by FFT since the
    weighted periodic graph Laplacian is diagonal in Fourier space. The
    coexact part is what remains: divergence-free with zero mean.
    """
    N1, N2 = form.theta_x.shape
    h1, h2 = form.spacing
    wx, wy = _edge_weights(form.spacing)
    h = ConstantForm([form.theta_x.mean() / h1, form.theta_y.mean() / h2])
    harmonic = _constant_sampled(h.components, form.spacing, (N1, N2))
    rest = form - harmonic

    # b = d^T W rest, L = d^T W d
    b = wx * (np.roll(rest.theta_x, 1, axis=0) - rest.theta_x) + wy * (np.roll(rest.theta_y, 1, axis=1) - rest.theta_y)
    kx = 2.0 - 2.0 * np.cos(2 * np.pi * np.arange(N1) / N1)
    ky = 2.0 - 2.0 * np.cos(2 * np.pi * np.arange(N2) / N2)
    sym = wx * kx[:, None] + wy * ky[None, :]
    sym[0, 0] = 1.0
    fhat = np.fft.fft2(b) / sym
    fhat[0, 0] = 0.0
    f = np.real(np.fft.ifft2(fhat))
    exact = SampledForm(np.roll(f, -1, axis=0) - f, np.roll(f, -1, axis=1) - f, form.spacing)
    coexact = rest - exact
    return h, coexact, exact


def flux_distance2(grid, conformal=False):
    """d(h, L_Z)^2 for the harmonic part h of the grid's potential.

    The minimizing integral form is found by closest-vector search; its L^2
    distance is then measured on the grid, in the flat metric or (with
    ``conformal``) with the conformal factors applied.
    """
    h, _, _ = hodge_decompose(grid.form)
    _, minimizers = closest_vectors(flux_lattice(grid.lattice), h.components)
    omega = minimizers.points[0]
    diff = _constant_sampled(h.components - omega, grid.spacing, grid.shape)
    return form_norm2(diff, grid.phi if conformal else None)


def scalar_quantities(grid, tol=1e-10, seed=0, count=6):
    """|M|, integral of q, and mu = first positive eigenvalue of the scalar Laplacian."""
    mass = grid.mass
    volume = float(np.sum(mass))
    q_integral = float(np.sum(grid.q * mass))
    res = lowest_eigenpairs(build_operator(scalar_grid(grid)), count, tol=tol, seed=seed)
    return {"volume": volume, "qIntegral": q_integral, "mu": first_positive(res)}


def first_positive(res):
    w = res.eigenvalues
    thresh = 1e-8 * max(1.0, float(np.max(np.abs(w))))
    pos = w[w > thresh]
    if not res.converged or len(res) < 2 or len(pos) == 0:
        raise SolverError("need at least two converged eigenvalues to read off mu")
    return float(pos[0])
