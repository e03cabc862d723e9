"""Analytic catalog of scalar fields and 1-forms with exact edge integrals.

Every 1-form knows its straight-segment line integral. Closed forms are used
where they exist (constants, single harmonics, gradients, linear fields);
anything else falls back to Gauss-Legendre quadrature along the segment.
"""

import numpy as np

__all__ = [
    "ScalarField",
    "ConstantScalar",
    "HarmonicScalar",
    "MonomialScalar",
    "SumScalar",
    "ProductScalar",
    "OneForm",
    "ConstantPotential",
    "HarmonicPotential",
    "GradientPotential",
    "RotationPotential",
    "AngularPotential",
    "TubeAngularPotential",
    "SumPotential",
    "periodic_wavevector",
]


def periodic_wavevector(modes, periods):
    """Wavevector 2*pi*(m_1/L_1, ..., m_n/L_n) of a mode periodic on the box."""
    return 2.0 * np.pi * np.asarray(modes, dtype=float) / np.asarray(periods, dtype=float)


def _points(x):
    x = np.asarray(x, dtype=float)
    return x[None, :] if x.ndim == 1 else x


class ScalarField:
    def value(self, x):
        raise NotImplementedError

    def gradient(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return self.value(x)

    def __add__(self, other):
        return SumScalar([self, other])


class ConstantScalar(ScalarField):
    def __init__(self, c):
        self.c = float(c)

    def value(self, x):
        x = _points(x)
        return np.full(x.shape[0], self.c)

    def gradient(self, x):
        return np.zeros_like(_points(x))

    def __repr__(self):
        return f"ConstantScalar({self.c!r})"


class HarmonicScalar(ScalarField):
    """amplitude * cos(<k, x> + phase)."""

    def __init__(self, amplitude, wavevector, phase=0.0):
        self.amplitude = float(amplitude)
        self.k = np.asarray(wavevector, dtype=float)
        self.phase = float(phase)

    def value(self, x):
        return self.amplitude * np.cos(_points(x) @ self.k + self.phase)

    def gradient(self, x):
        s = -self.amplitude * np.sin(_points(x) @ self.k + self.phase)
        return s[:, None] * self.k[None, :]

    def __repr__(self):
        return f"HarmonicScalar({self.amplitude!r}, {self.k.tolist()!r}, {self.phase!r})"


class MonomialScalar(ScalarField):
    """coef * prod_i x_i ** powers[i]."""

    def __init__(self, coef, powers):
        self.coef = float(coef)
        self.powers = np.asarray(powers, dtype=int)

    def value(self, x):
        return self.coef * np.prod(_points(x) ** self.powers, axis=1)

    def gradient(self, x):
        x = _points(x)
        out = np.zeros_like(x)
        for i, p in enumerate(self.powers):
            if p == 0:
                continue
            pw = self.powers.copy()
            pw[i] -= 1
            out[:, i] = self.coef * p * np.prod(x**pw, axis=1)
        return out


class SumScalar(ScalarField):
    def __init__(self, terms):
        self.terms = list(terms)

    def value(self, x):
        x = _points(x)
        return sum((t.value(x) for t in self.terms), np.zeros(x.shape[0]))

    def gradient(self, x):
        x = _points(x)
        return sum((t.gradient(x) for t in self.terms), np.zeros_like(x))


class ProductScalar(ScalarField):
    def __init__(self, f, g):
        self.f, self.g = f, g

    def value(self, x):
        return self.f.value(x) * self.g.value(x)

    def gradient(self, x):
        return self.f.gradient(x) * self.g.value(x)[:, None] + self.f.value(x)[:, None] * self.g.gradient(x)


_GL = {n: np.polynomial.legendre.leggauss(n) for n in (4, 8, 16)}


class OneForm:
    """Real 1-form on R^n given through its vector proxy."""

    quad_order = 4

    def value(self, x):
        raise NotImplementedError

    def line_integral(self, p0, p1):
        """Integral of the form along the straight segments p0[i] -> p1[i]."""
        p0, p1 = _points(p0), _points(p1)
        nodes, weights = _GL[self.quad_order]
        d = p1 - p0
        total = np.zeros(p0.shape[0])
        for t, w in zip(0.5 * (nodes + 1.0), 0.5 * weights):
            total += w * np.einsum("ij,ij->i", self.value(p0 + t * d), d)
        return total

    def __add__(self, other):
        return SumPotential([self, other])


class ConstantPotential(OneForm):
    def __init__(self, components):
        self.components = np.asarray(components, dtype=float)

    def value(self, x):
        x = _points(x)
        return np.broadcast_to(self.components, x.shape).copy()

    def line_integral(self, p0, p1):
        return (_points(p1) - _points(p0)) @ self.components

    def __repr__(self):
        return f"ConstantPotential({self.components.tolist()!r})"


class HarmonicPotential(OneForm):
    """amplitude * cos(<k, x> + phase) * <direction, dx>."""

    def __init__(self, amplitude, wavevector, direction, phase=0.0):
        self.amplitude = float(amplitude)
        self.k = np.asarray(wavevector, dtype=float)
        self.direction = np.asarray(direction, dtype=float)
        self.phase = float(phase)

    def value(self, x):
        c = self.amplitude * np.cos(_points(x) @ self.k + self.phase)
        return c[:, None] * self.direction[None, :]

    def line_integral(self, p0, p1):
        p0, p1 = _points(p0), _points(p1)
        a = p0 @ self.k + self.phase
        b = p1 @ self.k + self.phase
        # (sin b - sin a)/(b - a) = cos((a+b)/2) * sinc((b-a)/2), stable as b -> a
        mean = np.cos(0.5 * (a + b)) * np.sinc((b - a) / (2.0 * np.pi))
        return self.amplitude * ((p1 - p0) @ self.direction) * mean


class GradientPotential(OneForm):
    """A = d(psi); segment integrals are exact endpoint differences."""

    def __init__(self, scalar):
        self.scalar = scalar

    def value(self, x):
        return self.scalar.gradient(x)

    def line_integral(self, p0, p1):
        return self.scalar.value(p1) - self.scalar.value(p0)


class RotationPotential(OneForm):
    """a * (-y, x, 0): the metric dual of the rotation field about the z axis.

    Linear in position, so the midpoint rule integrates it exactly.
    """

    def __init__(self, a=1.0):
        self.a = float(a)

    def value(self, x):
        x = _points(x)
        out = np.zeros_like(x)
        out[:, 0] = -self.a * x[:, 1]
        out[:, 1] = self.a * x[:, 0]
        return out

    def line_integral(self, p0, p1):
        p0, p1 = _points(p0), _points(p1)
        return np.einsum("ij,ij->i", self.value(0.5 * (p0 + p1)), p1 - p0)


def _wrap(angle):
    return (angle + np.pi) % (2 * np.pi) - np.pi


class AngularPotential(OneForm):
    """alpha * dU with U the angle around the z axis; flux alpha around the axis.

    Closed but not exact off the axis. A chord that does not pass near the
    axis sweeps an angle below pi, so the wrapped endpoint difference is its
    exact integral.
    """

    def __init__(self, alpha=1.0):
        self.alpha = float(alpha)

    def value(self, x):
        x = _points(x)
        r2 = x[:, 0] ** 2 + x[:, 1] ** 2
        out = np.zeros_like(x)
        out[:, 0] = -self.alpha * x[:, 1] / r2
        out[:, 1] = self.alpha * x[:, 0] / r2
        return out

    def line_integral(self, p0, p1):
        p0, p1 = _points(p0), _points(p1)
        u0 = np.arctan2(p0[:, 1], p0[:, 0])
        u1 = np.arctan2(p1[:, 1], p1[:, 0])
        return self.alpha * _wrap(u1 - u0)


class TubeAngularPotential(OneForm):
    """alpha * dV with V the angle around the core circle of radius R (z axis)."""

    def __init__(self, R, alpha=1.0):
        self.R = float(R)
        self.alpha = float(alpha)

    def _angle(self, x):
        rho = np.hypot(x[:, 0], x[:, 1])
        return np.arctan2(x[:, 2], rho - self.R)

    def value(self, x):
        x = _points(x)
        rho = np.hypot(x[:, 0], x[:, 1])
        s, z = rho - self.R, x[:, 2]
        d2 = s * s + z * z
        out = np.zeros_like(x)
        out[:, 0] = -self.alpha * z * x[:, 0] / (rho * d2)
        out[:, 1] = -self.alpha * z * x[:, 1] / (rho * d2)
        out[:, 2] = self.alpha * s / d2
        return out

    def line_integral(self, p0, p1):
        p0, p1 = _points(p0), _points(p1)
        return self.alpha * _wrap(self._angle(p1) - self._angle(p0))


class SumPotential(OneForm):
    def __init__(self, terms):
        self.terms = list(terms)

    def value(self, x):
        x = _points(x)
        return sum((t.value(x) for t in self.terms), np.zeros_like(x))

    def line_integral(self, p0, p1):
        p0 = _points(p0)
        return sum((t.line_integral(p0, p1) for t in self.terms), np.zeros(p0.shape[0]))
