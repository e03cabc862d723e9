import numpy as np
import pytest
from scipy.integrate import quad

from magspec.potentials import (
    AngularPotential, ConstantPotential, GradientPotential, HarmonicPotential, HarmonicScalar, MonomialScalar,
    ProductScalar, RotationPotential, SumScalar, TubeAngularPotential,
)


def numeric_integral(form, p0, p1):
    p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
    d = p1 - p0
    val, _ = quad(lambda t: float(form.value(p0 + t * d)[0] @ d), 0.0, 1.0, epsabs=1e-14, epsrel=1e-13)
    return val


FORMS = [
    (ConstantPotential([0.3, -1.2]), [0.1, 0.2], [0.7, -0.4]),
    (HarmonicPotential(1.4, [2 * np.pi, 4 * np.pi], [0.2, 1.0], 0.3), [0.1, 0.2], [0.35, 0.9]),
    (HarmonicPotential(1.0, [2 * np.pi, 0.0], [0.0, 1.0]), [0.2, 0.0], [0.2, 0.5]),
    (GradientPotential(ProductScalar(HarmonicScalar(1.0, [3.0, 1.0]), MonomialScalar(2.0, [1, 2]))), [0.1, 0.5], [0.9, -0.3]),
    (RotationPotential(0.8), [1.0, 0.2, 0.3], [0.4, 0.9, -0.2]),
    (AngularPotential(0.5), [1.0, 0.2, 0.3], [0.4, 0.9, -0.2]),
    (TubeAngularPotential(2.0, 0.7), [2.4, 0.1, 0.2], [2.1, 0.3, -0.35]),
]


@pytest.mark.parametrize("form,p0,p1", FORMS)
def test_closed_form_line_integrals(form, p0, p1):
    assert form.line_integral(p0, p1)[0] == pytest.approx(numeric_integral(form, p0, p1), abs=1e-12)


def test_harmonic_integral_is_stable_across_a_node():
    f = HarmonicPotential(1.0, [2 * np.pi, 0.0], [1.0, 0.0])
    assert f.line_integral([0.25, 0.0], [0.25 + 1e-14, 0.0])[0] == pytest.approx(0.0, abs=1e-14)


def test_gradient_matches_finite_difference():
    s = SumScalar([HarmonicScalar(0.7, [1.0, 2.0], 0.1), MonomialScalar(1.5, [2, 1])])
    x = np.array([[0.3, -0.4]])
    eps = 1e-6
    fd = [(s.value(x + e) - s.value(x - e))[0] / (2 * eps) for e in (np.array([eps, 0]), np.array([0, eps]))]
    assert np.allclose(s.gradient(x)[0], fd, atol=1e-8)


def test_sum_of_forms():
    f = ConstantPotential([1.0, 0.0]) + ConstantPotential([0.0, 2.0])
    assert f.line_integral([0, 0], [1, 1])[0] == pytest.approx(3.0)
