"""Explicit upper bounds for magnetic Schrodinger eigenvalues, as auditable reports.

Every check is a named formula ``inputs -> (lhs, rhs)`` registered in
``FORMULAS``. A check function assembles the inputs, evaluates its formula
and wraps the result in a :class:`BoundReport`; :func:`recompute` evaluates
the same formula from a report's echoed inputs, so stored reports can be
audited later.

Reports are always oriented as ``lhs <= rhs``: for lower bounds (Riesz
means, heat trace) the bound itself is the lhs.
"""

from dataclasses import asdict, dataclass
import math

import numpy as np

from .eigensolver import heat_trace_partial, riesz_mean
from .exact_torus import exact_lambda1
from .lattice import fluxes
from .reports import BoundReport

__all__ = [
    "Quantities",
    "PreconditionError",
    "UnsupportedGeometryError",
    "gamma",
    "weyl_constant",
    "unit_ball_volume",
    "default_tolerance",
    "check_lambda1_general",
    "check_lambda1_closed",
    "check_lambda2_surface",
    "check_lambda2_conformal",
    "check_lambda2_planar",
    "check_riesz",
    "check_sum_and_kth",
    "check_heat_trace",
    "check_comparison",
    "check_diamagnetic",
    "check_flux_quantization",
    "check_gauge",
    "recompute",
    "FORMULAS",
]

FIELD_FREE = 1e-10


class PreconditionError(ValueError):
    pass


class UnsupportedGeometryError(ValueError):
    pass


@dataclass
class Quantities:
    """Scalar inputs of the bounds: |M|, d(h, L_Z)^2, ||B||^2, mu, integral of q."""

    volume: float
    dist2: float = 0.0
    fieldNorm2: float = 0.0
    mu: float = 1.0
    qIntegral: float = 0.0
    genus: int = None
    conformalVolume: float = None

    def __post_init__(self):
        for name in ("volume", "dist2", "fieldNorm2", "mu", "qIntegral"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite")
            setattr(self, name, value)
        if self.volume <= 0:
            raise ValueError("volume must be > 0")
        if self.mu <= 0:
            raise ValueError("mu must be > 0")
        if self.fieldNorm2 < 0 or self.dist2 < 0:
            raise ValueError("fieldNorm2 and dist2 must be >= 0")

    def echo(self):
        return {k: v for k, v in asdict(self).items() if v is not None}


def _gamma(inp):
    if inp["mu"] <= 0:
        raise ValueError("mu must be > 0")
    return (inp["dist2"] + inp["fieldNorm2"] / inp["mu"] + inp["qIntegral"]) / inp["volume"]


def gamma(Q):
    """(d^2 + ||B||^2 / mu + int q) / |M|."""
    return _gamma(Q.echo())


def unit_ball_volume(n):
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def weyl_constant(n):
    """4 pi^2 / omega_n^(2/n); equals 4 pi in the plane."""
    return 4 * math.pi**2 / unit_ball_volume(n) ** (2 / n)


def default_tolerance(rhs, solver_tol=1e-10):
    return max(1e-9, 10 * solver_tol * abs(rhs))


def _eigs(spectrum):
    w = getattr(spectrum, "eigenvalues", spectrum)
    converged = getattr(spectrum, "converged", True)
    if not converged:
        raise PreconditionError("spectrum is not converged")
    return [float(x) for x in w]


# -- formulas: inputs -> (lhs, rhs) -------------------------------------------


def _f_lambda1_general(inp):
    return inp["lambda1"], _gamma(inp)


def _f_lambda1_closed(inp):
    return inp["lambda1"], (inp["dist2"] + inp["qIntegral"]) / inp["volume"]


def _f_closed_equality(inp):
    return abs(inp["lambda1"] - (inp["dist2"] + inp["qIntegral"]) / inp["volume"]), 0.0


def _f_closed_strict(inp):
    return inp["lambda1"] + 3.0 * inp["combinedTol"], (inp["dist2"] + inp["qIntegral"]) / inp["volume"]


def _genus_term(genus):
    return 8 * math.pi * math.floor((genus + 3) / 2)


def _f_lambda2_surface(inp):
    lhs = inp["lambda2"] * inp["volume"]
    rhs = _genus_term(inp["genus"]) + inp["fieldNorm2"] / inp["mu"] + inp["dist2"] + inp["qIntegral"]
    return lhs, rhs


def _f_lambda2_conformal(inp):
    n = inp["n"]
    return inp["lambda2"], n * inp["conformalVolume"] / inp["volume"] + _gamma(inp)


def _f_lambda2_planar(inp):
    n = inp["n"]
    sphere_area = 2 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)
    return inp["lambda2"], n * (sphere_area / inp["volume"]) ** (2 / n) + _gamma(inp)


def _f_riesz(inp):
    n = inp["n"]
    z = inp["z"]
    coeff = 2 * inp["volume"] / (n + 2) * weyl_constant(n) ** (-n / 2)
    bound = coeff * max(z - _gamma(inp), 0.0) ** (1 + n / 2)
    return bound, riesz_mean(inp["eigenvalues"], z)


def _f_eigen_sum(inp):
    n, k = inp["n"], inp["k"]
    eigs = inp["eigenvalues"][:k]
    rhs = n / (n + 2) * weyl_constant(n) * ((k - 1) / inp["volume"]) ** (2 / n) + _gamma(inp)
    return math.fsum(eigs) / k, rhs


def _f_kth(inp):
    n, k = inp["n"], inp["k"]
    rhs = max(2 * (n + 2) ** (2 / n) * weyl_constant(n) * ((k - 1) / inp["volume"]) ** (2 / n), 2 * _gamma(inp))
    return inp["eigenvalues"][k - 1], rhs


def _f_heat(inp):
    n, t = inp["n"], inp["t"]
    bound = inp["volume"] / (4 * math.pi * t) ** (n / 2) * math.exp(-t * _gamma(inp))
    return bound, heat_trace_partial(inp["eigenvalues"], t)


def _f_comparison(inp):
    return inp["lambdaMagnetic"], inp["lambdaScalar"] + inp["slack"]


def _f_diamagnetic(inp):
    return inp["lambdaScalar"], inp["lambdaMagnetic"]


def _f_flux(inp):
    integral = all(abs(f - round(f)) <= inp["fluxTol"] for f in inp["fluxes"])
    zero = inp["lambda1"] <= inp["zeroTol"]
    return float(integral != zero), 0.0


def _f_gauge(inp):
    a, b = np.asarray(inp["spectrumA"]), np.asarray(inp["spectrumB"])
    return float(np.max(np.abs(a - b))), 0.0


FORMULAS = {
    "lambda1_general": (_f_lambda1_general, "lambda_1 <= (d^2 + ||B||^2/mu + int q)/|M|"),
    "lambda1_closed": (_f_lambda1_closed, "lambda_1 <= (d^2 + int q)/|M|"),
    "lambda1_closed_equality": (_f_closed_equality, "|lambda_1 - (d^2 + int q)/|M|| <= 0"),
    "lambda1_closed_strict": (_f_closed_strict, "lambda_1 + 3*tol < (d^2 + int q)/|M|"),
    "lambda2_surface": (_f_lambda2_surface, "lambda_2*|M| <= 8pi*floor((genus+3)/2) + ||B||^2/mu + d^2 + int q"),
    "lambda2_conformal_volume": (_f_lambda2_conformal, "lambda_2 <= n*V_c/|M| + Gamma"),
    "lambda2_planar": (_f_lambda2_planar, "lambda_2 <= n*(|S^n|/|M|)^(2/n) + Gamma"),
    "riesz_mean": (_f_riesz, "2|M|/(n+2) W_n^(-n/2) (z-Gamma)_+^(1+n/2) <= sum (z-lambda_j)_+"),
    "eigenvalue_sum": (_f_eigen_sum, "(1/k) sum lambda_j <= n/(n+2) W_n ((k-1)/|M|)^(2/n) + Gamma"),
    "kth_eigenvalue": (_f_kth, "lambda_k <= max(2(n+2)^(2/n) W_n ((k-1)/|M|)^(2/n), 2 Gamma)"),
    "heat_trace": (_f_heat, "|M| (4 pi t)^(-n/2) exp(-t Gamma) <= sum exp(-t lambda_j)"),
    "comparison": (_f_comparison, "lambda_j(H_A,q) <= lambda_j(Delta + |A|^2 + q) + slack"),
    "diamagnetic": (_f_diamagnetic, "lambda_1(H_0,q) <= lambda_1(H_A,q)"),
    "flux_quantization": (_f_flux, "[lambda_1 = 0] == [all fluxes integral]"),
    "gauge_invariance": (_f_gauge, "max_j |lambda_j(A) - lambda_j(A + d chi)| <= 0"),
}


def _report(name, inputs, tol=None, solver_tol=1e-10):
    formula, eq = FORMULAS[name]
    lhs, rhs = formula(inputs)
    if tol is None:
        tol = default_tolerance(rhs, solver_tol)
    return BoundReport(name=name, eq=eq, lhs=lhs, rhs=rhs, tol=tol, inputs=dict(inputs))


def recompute(report):
    """(lhs, rhs) evaluated afresh from the report's echoed inputs."""
    formula, _ = FORMULAS[report.name]
    return formula(report.inputs)


# -- checks --------------------------------------------------------------------


def check_lambda1_general(Q, spectrum, tol=None, solver_tol=1e-10):
    """First eigenvalue against Gamma(M, A, q)."""
    inputs = Q.echo()
    inputs["lambda1"] = _eigs(spectrum)[0]
    return _report("lambda1_general", inputs, tol, solver_tol)


def check_lambda1_closed(Q, spectrum, flat=False, conformal=False, constant_q=False, tol=None,
                         combined_tol=None, solver_tol=1e-10):
    """Closed-potential bound, plus its equality / strictness companions.

    On a flat torus with constant q the bound is attained; on a conformal
    non-flat torus with constant q it is strict, and the gap must exceed
    three times ``combined_tol`` to count.
    """
    if Q.fieldNorm2 > FIELD_FREE:
        raise PreconditionError(f"closed-potential bound needs B = 0, got ||B||^2 = {Q.fieldNorm2}")
    inputs = Q.echo()
    inputs["lambda1"] = _eigs(spectrum)[0]
    reports = [_report("lambda1_closed", inputs, tol, solver_tol)]
    if constant_q and flat:
        eq_tol = combined_tol if combined_tol is not None else default_tolerance(inputs["lambda1"], solver_tol)
        reports.append(_report("lambda1_closed_equality", inputs, eq_tol))
    if constant_q and conformal and not flat:
        if combined_tol is None:
            raise PreconditionError("strictness needs a combined (solver + discretization) tolerance")
        strict_inputs = dict(inputs, combinedTol=float(combined_tol))
        reports.append(_report("lambda1_closed_strict", strict_inputs, tol=0.0))
    return reports


def check_lambda2_surface(Q, spectrum, tol=None, solver_tol=1e-10):
    """Second eigenvalue on a closed surface of genus 0 or 1."""
    if Q.genus is None or Q.genus not in (0, 1):
        raise UnsupportedGeometryError(f"genus {Q.genus} is unsupported (only 0 and 1)")
    eigs = _eigs(spectrum)
    if len(eigs) < 2:
        raise PreconditionError("need at least two eigenvalues")
    inputs = Q.echo()
    inputs["lambda2"] = eigs[1]
    return _report("lambda2_surface", inputs, tol, solver_tol)


def check_lambda2_conformal(Q, spectrum, n=2, tol=None, solver_tol=1e-10):
    if Q.conformalVolume is None:
        raise PreconditionError("conformal volume not known for this geometry")
    eigs = _eigs(spectrum)
    inputs = Q.echo()
    inputs.update(lambda2=eigs[1], n=n)
    return _report("lambda2_conformal_volume", inputs, tol, solver_tol)


def check_lambda2_planar(Q, spectrum, n=2, tol=None, solver_tol=1e-10):
    """Planar domain with a metric conformal to the Euclidean one (V_c <= |S^n|)."""
    eigs = _eigs(spectrum)
    inputs = Q.echo()
    inputs.update(lambda2=eigs[1], n=n)
    return _report("lambda2_planar", inputs, tol, solver_tol)


def _require_complete(eigs, z, complete):
    if not complete and (len(eigs) == 0 or max(eigs) < z):
        raise PreconditionError(
            f"eigenvalue list is not certified complete below z={z}: largest value {max(eigs) if eigs else None}"
        )


def check_riesz(Q, eigs, z, n=2, complete=False, tol=None, solver_tol=1e-10):
    """Riesz mean lower bound. ``eigs`` must contain every eigenvalue below z.

    Completeness is certified when the list reaches past z (eigenvalues are
    sorted), or asserted by the caller with ``complete=True`` (closed forms).
    """
    eigs = sorted(_eigs(eigs))
    _require_complete(eigs, z, complete)
    inputs = Q.echo()
    inputs.update(eigenvalues=eigs, z=float(z), n=n)
    return _report("riesz_mean", inputs, tol, solver_tol)


def check_sum_and_kth(Q, eigs, k, scalar_sum, n=2, tol=None, solver_tol=1e-10):
    """Mean of the first k eigenvalues, and the k-th eigenvalue alone.

    ``scalar_sum`` is sum_{j<=k} lambda_j(Delta + q); the k-th eigenvalue
    bound is only asserted when it is non-negative.
    """
    eigs = sorted(_eigs(eigs))
    if len(eigs) < k:
        raise PreconditionError(f"need {k} eigenvalues, got {len(eigs)}")
    inputs = Q.echo()
    inputs.update(eigenvalues=eigs[:k], k=int(k), n=n)
    reports = [_report("eigenvalue_sum", inputs, tol, solver_tol)]
    # a zero ground state comes back as +-1e-15 from the solver
    if scalar_sum is None or scalar_sum < -1e-9 * max(1.0, k):
        raise PreconditionError("k-th eigenvalue bound needs sum of scalar eigenvalues >= 0")
    reports.append(_report("kth_eigenvalue", dict(inputs, scalarSum=float(scalar_sum)), tol, solver_tol))
    return reports


def check_heat_trace(Q, eigs, t, n=2, tol=None, solver_tol=1e-10):
    """Heat-trace lower bound; the partial sum under-counts, so a pass is certified."""
    if not t > 0:
        raise ValueError(f"t must be > 0, got {t}")
    inputs = Q.echo()
    inputs.update(eigenvalues=sorted(_eigs(eigs)), t=float(t), n=n)
    return _report("heat_trace", inputs, tol, solver_tol)


def check_comparison(spec_A, spec_scalar, k, h, geometry_A=None, geometry_scalar=None, scale=None):
    """lambda_j(H_{A,q}) <= lambda_j(Delta + |A|^2 + q) for j <= k.

    The discrete forms differ by O(h^2), so each j gets slack
    max(1e-6, 5 h^2 |lambda_j|).
    """
    if geometry_A is not None and geometry_scalar is not None and _geom_key(geometry_A) != _geom_key(geometry_scalar):
        raise PreconditionError("spectra come from different geometries")
    a, s = _eigs(spec_A), _eigs(spec_scalar)
    if len(a) < k or len(s) < k:
        raise PreconditionError(f"need {k} eigenvalues on both sides")
    reports = []
    for j in range(k):
        ref = abs(s[j]) if scale is None else scale
        slack = max(1e-6, 5 * h * h * ref)
        inputs = {"j": j + 1, "lambdaMagnetic": a[j], "lambdaScalar": s[j], "slack": slack, "h": float(h)}
        reports.append(_report("comparison", inputs, tol=0.0))
    return reports


def _geom_key(meta):
    return tuple(sorted((k, str(v)) for k, v in meta.items() if k in ("geometry", "h", "shape", "periods", "sides", "vertices")))


def check_diamagnetic(spec_A, spec_0, slack=1e-12):
    """lambda_1(H_{A,q}) >= lambda_1(H_{0,q})."""
    inputs = {"lambdaMagnetic": _eigs(spec_A)[0], "lambdaScalar": _eigs(spec_0)[0]}
    return _report("diamagnetic", inputs, tol=slack)


def check_flux_quantization(torus, A, lambda1=None, zero_tol=1e-9, flux_tol=1e-9):
    """lambda_1(Delta_A) vanishes exactly when every flux of the closed A is an integer."""
    a = getattr(A, "components", A)
    if lambda1 is None:
        lambda1 = exact_lambda1(torus, a)
    inputs = {
        "lambda1": float(lambda1),
        "fluxes": [float(f) for f in fluxes(torus.lattice, a)],
        "zeroTol": zero_tol,
        "fluxTol": flux_tol,
    }
    return _report("flux_quantization", inputs, tol=0.0)


def check_gauge(spec_A, spec_gauged, tol=1e-9):
    a, b = _eigs(spec_A), _eigs(spec_gauged)
    if len(a) != len(b):
        raise PreconditionError("spectra differ in length")
    return _report("gauge_invariance", {"spectrumA": a, "spectrumB": b}, tol=tol)
