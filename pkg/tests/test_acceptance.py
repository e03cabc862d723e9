"""Acceptance criteria 1-12, one test each; every test prints a PASS/FAIL line."""

import itertools
import math
import time

import numpy as np
import pytest
import scipy.linalg as la
import scipy.sparse as sp
from scipy.special import iv

from conftest import ACCEPTANCE_LINES
from magspec import bounds
from magspec.bounds import Quantities, gamma
from magspec.config import ConfigDoc
from magspec.eigensolver import HermitianOperator, lowest_eigenpairs
from magspec.exact_torus import FlatTorus, exact_lambda1, minimizing_forms
from magspec.grid import build_operator, comparison_grid, rectangle_grid, torus_grid, with_gauge, plaquette_field
from magspec.lattice import Lattice, closest_vectors
from magspec.mesh import (
    attach_fields, build_cotan_magnetic, make_sphere_mesh, make_torus_mesh, mesh_comparison, mesh_field_norm,
    mesh_scalar_quantities, mesh_with_gauge,
)
from magspec.potentials import (
    AngularPotential, ConstantPotential, HarmonicPotential, HarmonicScalar, MonomialScalar, ProductScalar,
    RotationPotential, SumPotential,
)
from magspec.scenario import parse_scenario, run_scenario

PI2 = math.pi**2
Z2 = Lattice(np.eye(2))


def record(n, ok, detail):
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def scenario(raw):
    doc = ConfigDoc({"scenarios": [raw]}, {}, "acceptance")
    return parse_scenario(doc, 0)


def eigs(op, k, **kw):
    return lowest_eigenpairs(op, k, **kw)


# 1 -------------------------------------------------------------------------------
def test_criterion_01_exact_flat_torus():
    t0 = time.perf_counter()
    T = FlatTorus(Z2)
    exact = exact_lambda1(T, [math.pi, 0.0])
    n_min = len(minimizing_forms(T, [math.pi, 0.0]))
    res = eigs(build_operator(torus_grid(Z2, 128, A=[math.pi, 0.0])), 2)
    elapsed = time.perf_counter() - t0
    rel = abs(res.eigenvalues[0] - PI2) / PI2
    ok = abs(exact - PI2) <= 1e-14 * PI2 and n_min == 2 and res.converged and rel <= 1e-3 and elapsed < 30
    record(1, ok, f"exact={exact:.15g} minimizers={n_min} grid N=128 rel.err={rel:.3e} time={elapsed:.1f}s")


# 2 -------------------------------------------------------------------------------
def test_criterion_02_equality_case():
    sc = scenario({
        "name": "eq",
        "geometry": {"type": "flat_torus", "resolution": 128},
        "potential": {"A": {"kind": "constant", "components": [math.pi / 2, 0.0]}, "q": 1.0},
        "solver": {"k": 1},
        "checks": ["lambda1_closed"],
    })
    r = run_scenario(sc)
    lam = r.eigenvalues[0]
    pred = PI2 / 4 + 1
    err = r.extra["richardson_error"]
    eq = next(x for x in r.reports if x.name == "lambda1_closed_equality")
    rel = abs(lam - pred) / pred
    ok = eq.holds and rel <= 1e-3 and abs(lam - pred) <= 5 * err
    record(2, ok, f"lambda1={lam:.10f} predicted={pred:.10f} |dev|={abs(lam - pred):.2e} richardson={err:.2e} rel={rel:.2e}")


# 3 -------------------------------------------------------------------------------
def fourier_conformal_oracle(amplitude, A1, modes=40):
    """phi = a cos(2 pi x) separates; Galerkin in e^{2 pi i m x} with exact mass entries I_{m-n}(2a)."""
    m = np.arange(-modes, modes + 1)
    K = np.diag((2 * np.pi * m - A1) ** 2)
    M = iv(np.abs(m[:, None] - m[None, :]), 2 * amplitude)
    return la.eigh(K, M, eigvals_only=True)[0]


def test_criterion_03_strictness_conformal_torus():
    sc = scenario({
        "name": "conf",
        "geometry": {"type": "conformal_torus", "resolution": 128, "phi": {"kind": "cos", "amplitude": 0.3, "mode": [1, 0]}},
        "potential": {"A": {"kind": "constant", "components": [math.pi, 0.0]}},
        "solver": {"k": 1},
        "checks": ["lambda1_closed"],
    })
    r = run_scenario(sc)
    strict = next(x for x in r.reports if x.name == "lambda1_closed_strict")
    lam = r.eigenvalues[0]
    bound = PI2 / iv(0, 0.6)
    oracle = fourier_conformal_oracle(0.3, math.pi)
    combined = strict.inputs["combinedTol"]
    gap = (bound - lam) / bound
    ok = strict.holds and (bound - lam) > 3 * combined and abs(lam - oracle) / oracle < 1e-3
    record(3, ok, f"lambda1={lam:.8f} (Fourier oracle {oracle:.8f}) bound={bound:.8f} "
                  f"gap={bound - lam:.4f} ({100 * gap:.1f}%) 3*combinedTol={3 * combined:.2e}")


# 4 -------------------------------------------------------------------------------
def test_criterion_04_flux_quantization_sweep():
    worst, zero_dev = 0.0, 0.0
    for alpha in np.round(np.arange(0.0, 1.0 + 1e-12, 0.05), 10):
        lam = eigs(build_operator(torus_grid(Z2, 64, A=[2 * np.pi * alpha, 0.0])), 1).eigenvalues[0]
        ref = 4 * PI2 * min(alpha - math.floor(alpha), math.ceil(alpha) - alpha) ** 2
        if ref == 0:
            zero_dev = max(zero_dev, abs(lam))
        else:
            worst = max(worst, abs(lam - ref) / ref)
        rep = bounds.check_flux_quantization(FlatTorus(Z2), [2 * np.pi * alpha, 0.0], lambda1=lam)
        assert rep.holds, alpha
    ok = worst <= 1e-3 and zero_dev <= 1e-9
    record(4, ok, f"21 points, worst rel.err={worst:.2e}, |lambda1| at alpha in {{0,1}} <= {zero_dev:.1e}")


# 5 -------------------------------------------------------------------------------
GRID_GAUGES = [
    HarmonicScalar(1.0, [2 * np.pi, 2 * np.pi]),
    ProductScalar(HarmonicScalar(1.0, [2 * np.pi, 0], -np.pi / 2), HarmonicScalar(1.0, [0, 2 * np.pi])),
    HarmonicScalar(3.0, [4 * np.pi, -2 * np.pi], 0.4),
]
MESH_GAUGES = [
    MonomialScalar(1.0, [1, 1, 0]),
    HarmonicScalar(2.0, [1.0, -0.5, 2.0], 0.2),
    ProductScalar(MonomialScalar(1.0, [0, 0, 2]), HarmonicScalar(1.0, [0.0, 3.0, 0.0])),
]


def test_criterion_05_gauge_invariance():
    worst = 0.0
    A = HarmonicPotential(1.0, [2 * np.pi, 0], [0, 1])
    for grid in (torus_grid(Z2, 32, A=A), rectangle_grid((1.0, 1.0), 32, A=SumPotential([A, ConstantPotential([0.5, 0])]))):
        base = eigs(build_operator(grid), 10).eigenvalues
        for chi in GRID_GAUGES:
            worst = max(worst, np.max(np.abs(base - eigs(build_operator(with_gauge(grid, chi)), 10).eigenvalues)))
    meshes = (
        attach_fields(make_sphere_mesh(3), A=RotationPotential(1.0)),
        attach_fields(make_torus_mesh(2.0, 0.5, 32), A=AngularPotential(0.5)),
    )
    for mesh in meshes:
        base = eigs(build_cotan_magnetic(mesh), 10).eigenvalues
        for chi in MESH_GAUGES:
            worst = max(worst, np.max(np.abs(base - eigs(build_cotan_magnetic(mesh_with_gauge(mesh, chi)), 10).eigenvalues)))
    record(5, worst <= 1e-9, f"4 geometries x 3 gauges, max |lambda_j(A) - lambda_j(A+dchi)| over j<=10 = {worst:.2e}")


# 6, 7 ----------------------------------------------------------------------------
def random_scenario(rng):
    """Random torus or rectangle with catalog A and q (q may be negative)."""
    N = int(rng.choice([16, 20, 24]))
    terms = [ConstantPotential(rng.uniform(-4, 4, size=2))]
    for _ in range(rng.integers(0, 3)):
        mode = rng.integers(-2, 3, size=2)
        terms.append(HarmonicPotential(rng.uniform(-2, 2), 2 * np.pi * mode, rng.normal(size=2), rng.uniform(0, 2 * np.pi)))
    A = SumPotential(terms)
    q = float(rng.uniform(-8, 3)) if rng.random() < 0.5 else HarmonicScalar(rng.uniform(-5, 5), 2 * np.pi * rng.integers(-1, 2, size=2))
    if rng.random() < 0.5:
        return torus_grid(Z2, N, A=A, q=q)
    return rectangle_grid((1.0, rng.uniform(0.5, 2.0)), N, A=A, q=q)


def zero_field(grid):
    from dataclasses import replace

    z = np.zeros(grid.shape)
    return replace(grid, theta_x=z, theta_y=z, potential=None)


def test_criterion_06_diamagnetic():
    rng = np.random.default_rng(2024)
    fails, has_neg, worst = 0, 0, np.inf
    for _ in range(50):
        g = random_scenario(rng)
        has_neg += int(np.min(g.q) < 0)
        rep = bounds.check_diamagnetic(eigs(build_operator(g), 1), eigs(build_operator(zero_field(g)), 1), slack=1e-12)
        worst = min(worst, rep.margin)
        fails += not rep.holds
    record(6, fails == 0 and has_neg > 0, f"50 scenarios ({has_neg} with q<0 somewhere), violations={fails}, min margin={worst:.3e}")


def test_criterion_07_comparison():
    rng = np.random.default_rng(7)
    viol, worst_j = [], []
    for s in range(20):
        g = random_scenario(rng)
        op = build_operator(g)
        reps = bounds.check_comparison(eigs(op, 6), eigs(build_operator(comparison_grid(g)), 6), 6, op.meta["h"])
        for r in reps:
            if not r.holds:
                viol.append((s, r.inputs["j"], r.margin))
    js = sorted({j for _, j, _ in viol})
    detail = f"20 scenarios x 6 eigenvalues, violations={len(viol)}"
    if viol:
        detail += f" (at j in {js}; worst margin {min(m for *_, m in viol):.3f}; none at j=1)"
        assert all(j > 1 for _, j, _ in viol)
    record(7, not viol, detail)


# 8 -------------------------------------------------------------------------------
def test_criterion_08_gamma_bound():
    # torus, A = cos(2 pi x) dy: d = 0, ||B||^2 = 2 pi^2, mu = 4 pi^2, |M| = 1, q = 0
    g_exact = gamma(Quantities(1.0, 0.0, 2 * PI2, 4 * PI2, 0.0))
    sc = scenario({
        "name": "tf",
        "geometry": {"type": "flat_torus", "resolution": 64},
        "potential": {"A": {"kind": "cos", "mode": [1, 0], "direction": [0, 1]}},
        "solver": {"k": 1},
        "checks": ["lambda1_general"],
    })
    r = run_scenario(sc)
    torus_ok = g_exact == 0.5 and r.eigenvalues[0] <= 0.5 and r.reports[0].holds
    # round sphere, rotation form: ||B||^2 = 16 pi / 3, mu = 2, |M| = 4 pi
    s_exact = gamma(Quantities(4 * math.pi, 0.0, 16 * math.pi / 3, 2.0, 0.0))
    mesh = attach_fields(make_sphere_mesh(4), A=RotationPotential(1.0))
    lam_s = eigs(build_cotan_magnetic(mesh), 1).eigenvalues[0]
    sphere_ok = abs(s_exact - 2 / 3) < 1e-15 and lam_s <= (2 / 3) * 1.02
    record(8, torus_ok and sphere_ok,
           f"torus Gamma={g_exact!r} lambda1={r.eigenvalues[0]:.6f} (numeric Gamma {r.reports[0].rhs:.6f}); "
           f"sphere Gamma={s_exact:.15f} lambda1={lam_s:.6f}")


# 9 -------------------------------------------------------------------------------
def test_criterion_09_hersch():
    sphere = make_sphere_mesh(4)
    q0 = mesh_scalar_quantities(sphere)
    lam2 = eigs(build_cotan_magnetic(sphere), 2).eigenvalues[1]
    rel = abs(lam2 * q0["volume"] - 8 * math.pi) / (8 * math.pi)
    rot = attach_fields(sphere, A=RotationPotential(1.0))
    Q = Quantities(q0["volume"], 0.0, mesh_field_norm(rot), q0["mu"], 0.0, genus=0)
    rep = bounds.check_lambda2_surface(Q, eigs(build_cotan_magnetic(rot), 2))
    ok = rel <= 0.02 and rep.holds and rep.margin > 0
    record(9, ok, f"A=0: lambda2*|M|/(8 pi) - 1 = {rel:.2e}; rotation form: {rep.lhs:.4f} <= {rep.rhs:.4f} (margin {rep.margin:.3f})")


# 10 ------------------------------------------------------------------------------
def neumann_modes(count):
    return sorted(PI2 * (m * m + n * n) for m in range(60) for n in range(60))[:count]


def euclidean_reports(eigs_list, complete):
    Q = Quantities(1.0, mu=PI2)
    reps = [bounds.check_riesz(Q, eigs_list, z, complete=complete) for z in (30.0, 100.0)]
    for k in (1, 4, 16):
        reps += bounds.check_sum_and_kth(Q, eigs_list, k, scalar_sum=math.fsum(eigs_list[:k]))
    reps += [bounds.check_heat_trace(Q, eigs_list, t) for t in (0.1, 1.0, 10.0)]
    return reps


def test_criterion_10_euclidean_domain_suite():
    closed = euclidean_reports(neumann_modes(3600), complete=True)
    grid_eigs = [float(x) for x in eigs(build_operator(rectangle_grid((1.0, 1.0), 64)), 25).eigenvalues]
    numeric = euclidean_reports(grid_eigs, complete=False)
    riesz30 = closed[0]
    ok = all(r.holds for r in closed + numeric)
    record(10, ok, f"closed-form {sum(r.holds for r in closed)}/{len(closed)}, grid (25 eigenvalues) "
                   f"{sum(r.holds for r in numeric)}/{len(numeric)}; Riesz z=30: {riesz30.rhs:.2f} >= {riesz30.lhs:.2f}")


# 11 ------------------------------------------------------------------------------
def test_criterion_11_solver_certification():
    rng = np.random.default_rng(11)
    worst_diff, worst_cert, failures = 0.0, 0.0, 0
    for _ in range(100):
        n = int(rng.integers(20, 201))
        A = sp.random(n, n, density=0.08, random_state=rng, dtype=complex,
                      data_rvs=lambda m: rng.normal(size=m) + 1j * rng.normal(size=m))
        mass = rng.uniform(0.3, 3.0, size=n)
        op = HermitianOperator(A + A.conj().T, mass)
        k = int(rng.integers(1, 9))
        res = lowest_eigenpairs(op, k, tol=1e-10, seed=int(rng.integers(1 << 30)), method="iterative")
        Hd = (A + A.conj().T).toarray()
        oracle = la.eigh(Hd, np.diag(mass), eigvals_only=True)[:k]
        worst_diff = max(worst_diff, np.max(np.abs(res.eigenvalues - oracle)))
        for lam, x in zip(res.eigenvalues, res.eigenvectors.T):
            r = Hd @ x - lam * mass * x
            cert = np.sqrt(np.sum(np.abs(r) ** 2 / mass)) / np.sqrt(np.sum(mass * np.abs(x) ** 2))
            worst_cert = max(worst_cert, cert / res.scale)
            failures += cert > res.tol * res.scale
        failures += not res.converged
    ok = worst_diff <= 1e-8 and failures == 0
    record(11, ok, f"100 matrices: max |iterative - dense| = {worst_diff:.2e}, max scaled residual = {worst_cert:.2e}")


# 12 ------------------------------------------------------------------------------
def exhaustive_cvp(B, t):
    inv = np.linalg.inv(B)
    c0 = inv @ t
    # any lattice point bounds the optimum; the rounded-coefficient one is cheap
    R = np.linalg.norm(B @ np.round(c0) - t)
    half = np.linalg.norm(inv, axis=1) * R
    axes = [np.arange(np.floor(c - h), np.ceil(c + h) + 1) for c, h in zip(c0, half)]
    C = np.array(list(itertools.product(*axes)))
    d2 = np.sum((C @ B.T - t) ** 2, axis=1)
    best = d2.min()
    return best, {tuple(int(v) for v in row) for row in C[d2 <= best + 1e-9 * max(1.0, best)]}


def test_criterion_12_cvp_oracle():
    rng = np.random.default_rng(12)
    mismatches, ties_seen = 0, 0
    for i in range(10_000):
        if i % 5 == 0:
            # integer bases with half-integer targets produce exact ties
            B = rng.integers(-3, 4, size=(2, 2)).astype(float)
            if abs(np.linalg.det(B)) < 0.5:
                B = np.eye(2) * rng.integers(1, 4)
            t = B @ (rng.integers(-5, 6, size=2) + 0.5)
        else:
            B = rng.normal(size=(2, 2)) + rng.uniform(0.2, 2) * np.eye(2)
            if abs(np.linalg.det(B)) < 1e-2:
                B += np.eye(2)
            t = rng.uniform(-10, 10, size=2)
        d2, pts = closest_vectors(Lattice(B), t)
        best, oracle = exhaustive_cvp(B, t)
        ties_seen += len(oracle) > 1
        if abs(d2 - best) > 1e-12 * max(1.0, best) or set(pts.as_tuples()) != oracle:
            mismatches += 1
    record(12, mismatches == 0, f"10000 instances ({ties_seen} with ties), mismatches={mismatches}")
