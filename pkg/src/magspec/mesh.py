"""Cotan-weight magnetic Schrodinger operators on closed triangle meshes."""

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg  # noqa: F401  (sp.linalg)

from ._validation import MeshQualityError, check_count, check_positive
from .eigensolver import HermitianOperator, lowest_eigenpairs
from .grid import first_positive
from .lattice import Lattice, closest_vectors
from .potentials import GradientPotential, ScalarField

__all__ = [
    "TriMesh",
    "icosahedron",
    "make_sphere_mesh",
    "make_torus_mesh",
    "attach_fields",
    "build_cotan_magnetic",
    "mesh_field_norm",
    "mesh_scalar_quantities",
    "mesh_with_gauge",
    "mesh_comparison",
    "harmonic_basis",
    "mesh_flux_distance2",
    "write_off",
]

MIN_ANGLE = 1e-6


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Closed oriented triangle mesh with per-edge phases and per-vertex q.

    ``edges`` lists each undirected edge once as (i, j) with i < j, and
    ``theta[e]`` integrates A from vertex i to vertex j along the chord.
    """

    vertices: np.ndarray
    faces: np.ndarray
    edges: np.ndarray
    theta: np.ndarray
    q: np.ndarray
    potential: object = None
    cuts: tuple = ()

    @property
    def euler_characteristic(self):
        return len(self.vertices) - len(self.edges) + len(self.faces)

    @property
    def genus(self):
        return (2 - self.euler_characteristic) // 2

    @property
    def face_areas(self):
        v = self.vertices[self.faces]
        return 0.5 * np.linalg.norm(np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]), axis=1)

    @property
    def vertex_areas(self):
        a = np.zeros(len(self.vertices))
        np.add.at(a, self.faces.ravel(), np.repeat(self.face_areas / 3.0, 3))
        return a

    @property
    def area(self):
        return float(self.face_areas.sum())

    def vertex_normals(self):
        v = self.vertices[self.faces]
        fn = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
        n = np.zeros_like(self.vertices)
        for c in range(3):
            np.add.at(n, self.faces[:, c], fn)
        return n / np.linalg.norm(n, axis=1, keepdims=True)

    def edge_index(self):
        return {(int(i), int(j)): e for e, (i, j) in enumerate(self.edges)}


def _unique_edges(faces):
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    return np.unique(np.sort(e, axis=1), axis=0)


def _validate(vertices, faces):
    directed = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    und = np.sort(directed, axis=1)
    _, counts = np.unique(und, axis=0, return_counts=True)
    if np.any(counts != 2):
        raise MeshQualityError("every edge must be shared by exactly two triangles")
    _, dcounts = np.unique(directed, axis=0, return_counts=True)
    if np.any(dcounts != 1):
        raise MeshQualityError("triangles are not consistently oriented")
    chi = len(vertices) - len(counts) + len(faces)
    if chi not in (2, 0):
        raise MeshQualityError(f"Euler characteristic {chi} not supported (need 2 or 0)")
    v = vertices[faces]
    area = 0.5 * np.linalg.norm(np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]), axis=1)
    if np.any(area <= 0):
        raise MeshQualityError("zero-area triangle")


def _new_mesh(vertices, faces, cuts=()):
    vertices = np.asarray(vertices, dtype=float)
    faces = np.asarray(faces, dtype=np.int64)
    _validate(vertices, faces)
    edges = _unique_edges(faces)
    return TriMesh(vertices, faces, edges, np.zeros(len(edges)), np.zeros(len(vertices)), cuts=tuple(cuts))


def icosahedron():
    t = (1.0 + np.sqrt(5.0)) / 2.0
    v = np.array(
        [[-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
         [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
         [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1]],
        dtype=float,
    )
    f = np.array(
        [[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
         [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
         [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
         [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]]
    )
    return v / np.linalg.norm(v, axis=1, keepdims=True), f


def _subdivide(vertices, faces):
    verts = list(vertices)
    cache = {}

    def mid(a, b):
        key = (a, b) if a < b else (b, a)
        if key not in cache:
            m = 0.5 * (vertices[a] + vertices[b])
            verts.append(m / np.linalg.norm(m))
            cache[key] = len(verts) - 1
        return cache[key]

    out = []
    for a, b, c in faces:
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        out += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
    return np.array(verts), np.array(out)


def make_sphere_mesh(subdiv):
    """Geodesic icosphere on the unit sphere, outward oriented."""
    subdiv = check_count(subdiv, "subdiv")
    if subdiv > 6:
        raise ValueError(f"subdiv must lie in [1, 6], got {subdiv}")
    v, f = icosahedron()
    for _ in range(subdiv):
        v, f = _subdivide(v, f)
    return _new_mesh(v, f)


def make_torus_mesh(R, r, res):
    """Torus of revolution with ``res`` segments around the axis.

    The tube gets ceil(res * r / R) segments (at least 8) so triangles stay
    close to isotropic.
    """
    R = check_positive(float(R), "R")
    r = check_positive(float(r), "r")
    if not R > r:
        raise ValueError(f"need R > r > 0, got R={R}, r={r}")
    nu = check_count(res, "res", minimum=8)
    nv = max(8, int(np.ceil(nu * r / R)))
    u = 2 * np.pi * np.arange(nu) / nu
    v = 2 * np.pi * np.arange(nv) / nv
    U, V = np.meshgrid(u, v, indexing="ij")
    rho = R + r * np.cos(V)
    verts = np.stack([rho * np.cos(U), rho * np.sin(U), r * np.sin(V)], axis=-1).reshape(-1, 3)
    idx = np.arange(nu * nv).reshape(nu, nv)
    a = idx
    b = np.roll(idx, -1, axis=0)
    c = np.roll(np.roll(idx, -1, axis=0), -1, axis=1)
    d = np.roll(idx, -1, axis=1)
    faces = np.concatenate([np.stack([a, b, c], -1).reshape(-1, 3), np.stack([a, c, d], -1).reshape(-1, 3)])
    # seams: last column -> first column around the axis, last row -> first row around the tube
    col = np.repeat(np.arange(nu), nv)
    row = np.tile(np.arange(nv), nu)
    return _new_mesh(verts, faces, cuts=(_seam(faces, col, nu), _seam(faces, row, nv)))


def _seam(faces, label, n):
    """Per-directed-edge crossing of the seam between label n-1 and label 0.

    Returned as a dict (i, j) -> +1 for each undirected edge (i < j) whose
    i -> j direction crosses the seam forwards, -1 backwards.
    """
    out = {}
    for c in range(3):
        a, b = faces[:, c], faces[:, (c + 1) % 3]
        la, lb = label[a], label[b]
        fwd = (la == n - 1) & (lb == 0)
        bwd = (la == 0) & (lb == n - 1)
        for x, y, sgn in zip(a[fwd | bwd], b[fwd | bwd], np.where(fwd, 1, -1)[fwd | bwd]):
            key = (int(min(x, y)), int(max(x, y)))
            out[key] = int(sgn if x < y else -sgn)
    return out


def attach_fields(mesh, A=None, q=0.0):
    """Set chord phases from an analytic 1-form and sample q at the vertices."""
    if A is None:
        theta = np.zeros(len(mesh.edges))
    else:
        theta = A.line_integral(mesh.vertices[mesh.edges[:, 0]], mesh.vertices[mesh.edges[:, 1]])
    if isinstance(q, ScalarField):
        qs = q.value(mesh.vertices)
    elif np.isscalar(q):
        qs = np.full(len(mesh.vertices), float(q))
    else:
        qs = np.asarray(q, dtype=float)
        if qs.shape != (len(mesh.vertices),):
            raise ValueError("q samples must have one value per vertex")
    return replace(mesh, theta=np.asarray(theta, dtype=float), q=qs, potential=A)


def cotan_weights(mesh):
    """w_ij = (cot alpha + cot beta) / 2 per undirected edge, aligned with ``mesh.edges``."""
    V, F = mesh.vertices, mesh.faces
    rows, cols, vals = [], [], []
    for c in range(3):
        i, j, k = F[:, c], F[:, (c + 1) % 3], F[:, (c + 2) % 3]
        u = V[i] - V[k]
        w = V[j] - V[k]
        cross = np.linalg.norm(np.cross(u, w), axis=1)
        dot = np.einsum("ij,ij->i", u, w)
        angle = np.arctan2(cross, dot)
        if np.any(angle < MIN_ANGLE) or np.any(angle > np.pi - MIN_ANGLE):
            raise MeshQualityError("degenerate triangle (angle below 1e-6)")
        rows.append(np.minimum(i, j))
        cols.append(np.maximum(i, j))
        vals.append(0.5 * dot / cross)
    W = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(len(V),) * 2).tocsr()
    return np.asarray(W[mesh.edges[:, 0], mesh.edges[:, 1]]).ravel()


def build_cotan_magnetic(mesh):
    """Off-diagonals -w_ij exp(-i theta_ij), diagonal sum_j w_ij + q_i a_i, lumped mass a_i."""
    w = cotan_weights(mesh)
    mass = mesh.vertex_areas
    n = len(mesh.vertices)
    i, j = mesh.edges[:, 0], mesh.edges[:, 1]
    z = -w * np.exp(-1j * mesh.theta)
    deg = np.zeros(n)
    np.add.at(deg, i, w)
    np.add.at(deg, j, w)
    diag = deg + mesh.q * mass
    r = np.concatenate([i, j, np.arange(n)])
    c = np.concatenate([j, i, np.arange(n)])
    v = np.concatenate([z, np.conj(z), diag.astype(complex)])
    H = sp.csr_matrix((v, (r, c)), shape=(n, n))
    edge_len = np.linalg.norm(mesh.vertices[i] - mesh.vertices[j], axis=1)
    meta = {"geometry": "mesh", "h": float(edge_len.max()), "genus": int(mesh.genus), "vertices": n}
    return HermitianOperator(H, mass, meta)


def face_circulations(mesh):
    index = mesh.edge_index()
    circ = np.zeros(len(mesh.faces))
    for c in range(3):
        a, b = mesh.faces[:, c], mesh.faces[:, (c + 1) % 3]
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        e = np.fromiter((index[(int(x), int(y))] for x, y in zip(lo, hi)), dtype=np.int64, count=len(a))
        circ += np.where(a < b, 1.0, -1.0) * mesh.theta[e]
    return circ


def mesh_field_norm(mesh):
    """||B||^2 = sum_f c_f^2 / area_f with c_f the oriented circulation."""
    c = face_circulations(mesh)
    return float(np.sum(c * c / mesh.face_areas))


def mesh_scalar_quantities(mesh, tol=1e-10, seed=0, count=6):
    mass = mesh.vertex_areas
    scalar = replace(mesh, theta=np.zeros(len(mesh.edges)), q=np.zeros(len(mesh.vertices)), potential=None)
    res = lowest_eigenpairs(build_cotan_magnetic(scalar), count, tol=tol, seed=seed)
    return {"volume": float(mass.sum()), "qIntegral": float(np.sum(mesh.q * mass)), "mu": first_positive(res)}


def mesh_with_gauge(mesh, chi):
    """A -> A + d(chi): chord integrals of a gradient are endpoint differences."""
    i, j = mesh.edges[:, 0], mesh.edges[:, 1]
    dtheta = chi.value(mesh.vertices[j]) - chi.value(mesh.vertices[i])
    pot = GradientPotential(chi) if mesh.potential is None else mesh.potential + GradientPotential(chi)
    return replace(mesh, theta=mesh.theta + dtheta, potential=pot)


def mesh_comparison(mesh):
    """A = 0 with q + |A_tangential|^2 sampled at the vertices."""
    a2 = np.zeros(len(mesh.vertices))
    if mesh.potential is not None:
        A = mesh.potential.value(mesh.vertices)
        nrm = mesh.vertex_normals()
        At = A - np.einsum("ij,ij->i", A, nrm)[:, None] * nrm
        a2 = np.sum(At * At, axis=1)
    return replace(mesh, theta=np.zeros(len(mesh.edges)), q=mesh.q + a2, potential=None)


def exterior_derivative(mesh):
    """Edge-by-vertex incidence d0 with (d0 f)_e = f_j - f_i for e = (i, j)."""
    ne = len(mesh.edges)
    r = np.repeat(np.arange(ne), 2)
    c = mesh.edges.ravel()
    v = np.tile([-1.0, 1.0], ne)
    return sp.csr_matrix((v, (r, c)), shape=(ne, len(mesh.vertices)))


def _remove_exact(mesh, cochain, w, d0):
    # least-squares projection onto gradients in the cotan-weighted pairing
    L = (d0.T @ sp.diags(w) @ d0).tocsc()
    b = d0.T @ (w * cochain)
    # pin one vertex: the Laplacian kernel is the constants
    L = L[1:, 1:]
    f = np.zeros(len(mesh.vertices))
    f[1:] = sp.linalg.spsolve(L, b[1:])
    return cochain - d0 @ f, f


def harmonic_basis(mesh):
    """Discrete harmonic 1-forms dual to the mesh's seams.

    Each seam cochain (2 pi on edges crossing the seam) is closed with
    period 2 pi around one generating loop; removing its exact part keeps
    the periods and leaves a harmonic form. These forms generate the
    integral lattice L_Z.
    """
    if not mesh.cuts:
        return np.zeros((0, len(mesh.edges)))
    w = cotan_weights(mesh)
    d0 = exterior_derivative(mesh)
    index = mesh.edge_index()
    basis = []
    for cut in mesh.cuts:
        c = np.zeros(len(mesh.edges))
        for key, sgn in cut.items():
            c[index[key]] = 2 * np.pi * sgn
        basis.append(_remove_exact(mesh, c, w, d0)[0])
    return np.array(basis)


def mesh_flux_distance2(mesh):
    """d(h, L_Z)^2 with h the harmonic part of the mesh phases.

    The harmonic part is the cotan-weighted projection onto the harmonic
    basis; the distance to the integer combinations is a closest-vector
    problem in the Gram geometry of that basis.
    """
    eta = harmonic_basis(mesh)
    if len(eta) == 0:
        return 0.0
    w = cotan_weights(mesh)
    G = (eta * w) @ eta.T
    coeff = np.linalg.solve(G, (eta * w) @ mesh.theta)
    C = np.linalg.cholesky(G)
    d2, _ = closest_vectors(Lattice(C.T), C.T @ coeff)
    return float(d2)


def write_off(mesh, path):
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{len(mesh.vertices)} {len(mesh.faces)} 0\n")
        for x, y, z in mesh.vertices:
            fh.write(f"{x:.17g} {y:.17g} {z:.17g}\n")
        for a, b, c in mesh.faces:
            fh.write(f"3 {a} {b} {c}\n")
