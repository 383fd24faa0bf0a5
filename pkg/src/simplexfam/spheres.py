"""Embedded spheres given as radial graphs, with first derivatives.

An embedding of the circle or 2-sphere is represented as u -> r(u) * u with
r a positive radial function (see :mod:`simplexfam.radial`). Ambient points,
surface tangents, and derivatives through local charts are all evaluated
here.

Working charts for root finding are per-point orthonormal tangent charts
(``TangentChart``): coordinates xi in the tangent plane at a base point map
to normalize(base + frame @ xi). They have no polar singularity; the global
(phi, theta) chart is used only to evaluate the radial function itself, and
its 1/sin(phi) factor is guarded near the poles.

Spherical convention for k = 3: u = (sin phi cos theta, sin phi sin theta,
cos phi), phi in [0, pi] measured from the +z axis, theta the azimuth.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ChartSingularityError, DegenerateRadiusError, PositivityViolationError
from .radial import BlendRadial, RadialFunction

R_FLOOR = 1e-6
POLE_SIN_TOL = 1e-8


def sphere_angles(u: np.ndarray) -> tuple[float, ...]:
    """Angles of a unit vector: (theta,) on the circle, (phi, theta) on the 2-sphere."""
    if len(u) == 2:
        return (float(np.arctan2(u[1], u[0])),)
    phi = float(np.arccos(np.clip(u[2], -1.0, 1.0)))
    return (phi, float(np.arctan2(u[1], u[0])))


def unit_from_angles(angles, k: int) -> np.ndarray:
    if k == 2:
        (th,) = angles
        return np.array([np.cos(th), np.sin(th)])
    phi, th = angles
    s = np.sin(phi)
    return np.array([s * np.cos(th), s * np.sin(th), np.cos(phi)])


@dataclass(frozen=True)
class SpherePoint:
    """Point of S^(k-1), kept as a unit vector; angles are derived on demand."""

    u: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        n = np.linalg.norm(u)
        if abs(n - 1.0) > 1e-12:
            u = u / n
        object.__setattr__(self, "u", u)

    @classmethod
    def from_angles(cls, angles, k: int) -> "SpherePoint":
        return cls(unit_from_angles(angles, k))

    @property
    def angles(self) -> tuple[float, ...]:
        return sphere_angles(self.u)

    @property
    def k(self) -> int:
        return len(self.u)


@dataclass(frozen=True)
class TangentChart:
    """Orthonormal tangent chart xi -> normalize(base + frame @ xi)."""

    base: np.ndarray
    frame: np.ndarray  # k x (k-1), columns orthonormal, orthogonal to base

    @classmethod
    def at(cls, u: np.ndarray) -> "TangentChart":
        u = np.asarray(u, dtype=float)
        u = u / np.linalg.norm(u)
        Q, _ = np.linalg.qr(u[:, None], mode="complete")
        if Q[:, 0] @ u < 0:
            Q = -Q
        return cls(u, Q[:, 1:])

    def point(self, xi: np.ndarray) -> np.ndarray:
        w = self.base + self.frame @ xi
        return w / np.linalg.norm(w)

    def dpoint(self, xi: np.ndarray) -> np.ndarray:
        """Jacobian of point(xi) with respect to xi, columns tangent to the sphere."""
        w = self.base + self.frame @ xi
        n = np.linalg.norm(w)
        return self.frame / n - np.outer(w, (w @ self.frame)) / n**3


def _observe_r_min(radial: RadialFunction, k: int) -> float:
    if k == 2:
        th = np.linspace(0.0, 2 * np.pi, 2048, endpoint=False)
        return float(np.min(radial.value((th,))))
    phi = np.linspace(0.0, np.pi, 66)[1:-1]
    th = np.linspace(0.0, 2 * np.pi, 128, endpoint=False)
    P, T = np.meshgrid(phi, th, indexing="ij")
    return float(np.min(radial.value((P, T))))


@dataclass(frozen=True)
class RadialEmbedding:
    """Evaluable embedding u -> r(u) u of S^(k-1) into R^k."""

    k: int
    radial: RadialFunction
    r_floor: float = R_FLOOR
    r_min_observed: float = field(init=False)

    def __post_init__(self):
        if self.k not in (2, 3):
            raise ValueError("only ambient dimensions 2 and 3 are supported")
        if self.radial.nvars != self.k - 1:
            raise ValueError(
                f"radial function has {self.radial.nvars} angle(s), need {self.k - 1}"
            )
        object.__setattr__(self, "r_min_observed", _observe_r_min(self.radial, self.k))

    def _guard(self, r: float, u: np.ndarray) -> float:
        if r <= self.r_floor:
            if isinstance(self.radial, BlendRadial):
                raise PositivityViolationError(u, float(r), t=self.radial.t)
            raise DegenerateRadiusError(u, float(r))
        return float(r)

    def radius(self, u: np.ndarray) -> float:
        return self._guard(self.radial.value(sphere_angles(u)), u)

    def point(self, u) -> np.ndarray:
        """Ambient point r(u) u of the surface."""
        if isinstance(u, SpherePoint):
            u = u.u
        return self.radius(u) * u

    def radius_and_gradient(self, u: np.ndarray) -> tuple[float, np.ndarray]:
        """Radius and the ambient gradient of r restricted to the sphere at u.

        Near a pole of the 2-sphere the azimuthal term carries a 1/sin(phi)
        factor; it is dropped when the theta-derivative vanishes there and
        raises ChartSingularityError otherwise.
        """
        angles = sphere_angles(u)
        r, grads = self.radial.value_grad(angles)
        r = self._guard(r, u)
        if self.k == 2:
            e_t = np.array([-u[1], u[0]])
            return r, float(grads[0]) * e_t
        r_phi, r_th = float(grads[0]), float(grads[1])
        sin_phi = float(np.hypot(u[0], u[1]))
        th = angles[1]
        ct, st = np.cos(th), np.sin(th)
        e_phi = np.array([u[2] * ct, u[2] * st, -sin_phi])
        grad = r_phi * e_phi
        if sin_phi < POLE_SIN_TOL:
            if abs(r_th) > 1e-10 * (1.0 + abs(r_phi)):
                raise ChartSingularityError(
                    f"azimuthal derivative {r_th:.3e} at sin(phi)={sin_phi:.3e}"
                )
            return r, grad
        e_th = np.array([-st, ct, 0.0])
        return r, grad + (r_th / sin_phi) * e_th

    def ambient_jacobian(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Point and matrix J with D_v(point) = J v for tangent vectors v at u."""
        r, grad = self.radius_and_gradient(u)
        return r * u, np.outer(u, grad) + r * np.eye(self.k)

    def isotopy(self, t: float) -> "RadialEmbedding":
        """Blend toward this surface: t=0 is the round sphere, t=1 is this embedding."""
        if isinstance(self.radial, BlendRadial):
            # re-blend from the original target rather than stacking blends
            return RadialEmbedding(self.k, BlendRadial(self.radial.base, t * self.radial.t),
                                   self.r_floor)
        return RadialEmbedding(self.k, BlendRadial(self.radial, t), self.r_floor)

    def describe(self) -> dict:
        return {"k": self.k, "radial": self.radial.describe()}


def tangent_frame(gamma: RadialEmbedding, u) -> np.ndarray:
    """Derivative of the surface point with respect to orthonormal chart coordinates.

    Returns a k x (k-1) matrix whose columns span the tangent space of the
    embedded surface at gamma.point(u); they are the partials of
    gamma.point(chart.point(xi)) at xi = 0 for the tangent chart at u.
    """
    if isinstance(u, SpherePoint):
        u = u.u
    chart = TangentChart.at(u)
    _, J = gamma.ambient_jacobian(u)
    return J @ chart.frame


def isotopy(gamma: RadialEmbedding, t: float) -> RadialEmbedding:
    """Module-level alias for RadialEmbedding.isotopy."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"blend parameter {t} outside [0, 1]")
    return gamma.isotopy(t)


def round_sphere(k: int) -> RadialEmbedding:
    from .radial import RoundRadial

    return RadialEmbedding(k, RoundRadial(nvars=k - 1))
