"""Cayley transform between H^N and the punctured unit sphere of C^{N+1}.

The sphere carries the quasi-distance d(zeta, eta)^2 = 2 |1 - <zeta, eta>|.
The transform used here is

    C(z, t) = ( 2 z / P,  (1 - |z|^2 + i t) / P ),   P = 1 + |z|^2 - i t,

which maps the origin to (0, ..., 0, 1), misses exactly the pole
(0, ..., 0, -1), and satisfies

    d(C(w), C(w')) = d(w, w') * (4 / |P|^2)^{1/4} * (4 / |P'|^2)^{1/4}

with the left-invariant Koranyi distance on the group side.  (The sign of t
inside P is the unique choice consistent with the group law convention used in
:mod:`cryamabe.heisenberg`.)  The conformal volume factor is

    Lambda_C = 2^Q / ((1 + |z|^2)^2 + t^2)^{N+1}.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, PoleError
from .heisenberg import (
    Array,
    HeisPoint,
    dilate_zt,
    homogeneous_dim,
    inv_zt,
    mul_zt,
)

POLE_TOL = 1e-6


@dataclass(frozen=True)
class SpherePoint:
    """A unit vector of C^{N+1}."""

    zeta: Array

    def __post_init__(self):
        zeta = np.asarray(self.zeta, dtype=np.complex128)
        zeta.setflags(write=False)
        object.__setattr__(self, "zeta", zeta)
        r = np.linalg.norm(zeta)
        if abs(r - 1.0) > 1e-12:
            raise DomainError(f"|zeta| = {r!r} is not 1 within 1e-12")

    @property
    def N(self) -> int:
        return self.zeta.shape[-1] - 1


def _zeta_array(s) -> Array:
    return s.zeta if isinstance(s, SpherePoint) else np.asarray(s, dtype=np.complex128)


def north_pole(N: int) -> SpherePoint:
    zeta = np.zeros(N + 1, dtype=np.complex128)
    zeta[-1] = 1.0
    return SpherePoint(zeta)


def chart_pole(N: int) -> Array:
    zeta = np.zeros(N + 1, dtype=np.complex128)
    zeta[-1] = -1.0
    return zeta


# ---------------------------------------------------------------------------
# the transform and its conformal factor (array kernels)


def cayley_zt(z: Array, t: Array) -> Array:
    P = 1.0 + np.sum((z * np.conj(z)).real, axis=-1) - 1.0j * t
    top = 2.0 * z / P[..., None]
    last = (2.0 - P) / P
    return np.concatenate([top, last[..., None]], axis=-1)


def cayley_inv_zeta(zeta: Array, pole_tol: float = POLE_TOL) -> tuple[Array, Array]:
    last = zeta[..., -1]
    denom = 1.0 + last
    if np.any(np.abs(denom) < pole_tol):
        raise PoleError("point within pole tolerance of (0,...,0,-1)")
    P = 2.0 / denom
    z = zeta[..., :-1] * (P / 2.0)[..., None]
    t = -P.imag
    return z, np.asarray(t, dtype=np.float64)


def lambda_cayley_zt(z: Array, t: Array) -> Array:
    N = z.shape[-1]
    Q = homogeneous_dim(N)
    D = (1.0 + np.sum((z * np.conj(z)).real, axis=-1)) ** 2 + t * t
    return (2.0**Q) / D ** (N + 1)


def sphere_dist_zeta(a: Array, b: Array) -> Array:
    inner = np.sum(a * np.conj(b), axis=-1)
    return np.sqrt(2.0 * np.abs(1.0 - inner))


# point wrappers -----------------------------------------------------------


def cayley(p: HeisPoint) -> SpherePoint:
    return SpherePoint(cayley_zt(p.z, np.asarray(p.t)))


def cayley_inv(s: SpherePoint | Array) -> HeisPoint:
    z, t = cayley_inv_zeta(_zeta_array(s))
    return HeisPoint(z, float(t))


def lambda_cayley(p: HeisPoint) -> float:
    return float(lambda_cayley_zt(p.z, np.asarray(p.t)))


def sphere_dist(a: SpherePoint | Array, b: SpherePoint | Array) -> float:
    return float(sphere_dist_zeta(_zeta_array(a), _zeta_array(b)))


def distance_relation_factor(p: HeisPoint) -> float:
    """(4 / ((1+|z|^2)^2 + t^2))^{1/4}, the conformal distortion of distances."""
    D = (1.0 + float(np.sum((p.z * np.conj(p.z)).real))) ** 2 + p.t * p.t
    return (4.0 / D) ** 0.25


# ---------------------------------------------------------------------------
# conformal charts: Cayley composed with a translation and a dilation


@dataclass(frozen=True)
class ConformalChart:
    """rho(w) = C(center . d_scale(w)), the chart used for concentration analysis.

    ``from_dilate_then_translate`` builds the equivalent chart written as
    C o d_R o tau_xi; dilations are group automorphisms, so that chart equals
    the canonical one with center d_R(xi).
    """

    center: HeisPoint
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError("chart scale must be positive")

    @staticmethod
    def plain_cayley(N: int) -> "ConformalChart":
        return ConformalChart(HeisPoint.origin(N), 1.0)

    @staticmethod
    def from_dilate_then_translate(xi: HeisPoint, scale: float) -> "ConformalChart":
        zc, tc = dilate_zt(scale, xi.z, np.asarray(xi.t))
        return ConformalChart(HeisPoint(zc, float(tc)), scale)

    @property
    def N(self) -> int:
        return self.center.N

    # --- forward map and jacobian -----------------------------------------

    def map_zt(self, z: Array, t: Array) -> Array:
        zd, td = dilate_zt(self.scale, z, t)
        zm, tm = mul_zt(self.center.z, self.center.t, zd, td)
        return cayley_zt(zm, tm)

    def jacobian_zt(self, z: Array, t: Array) -> Array:
        """Lambda_rho = Lambda_C(center . d_R w) * R^Q by the chain rule."""
        zd, td = dilate_zt(self.scale, z, t)
        zm, tm = mul_zt(self.center.z, self.center.t, zd, td)
        return lambda_cayley_zt(zm, tm) * self.scale ** homogeneous_dim(self.N)

    # --- inverse map and jacobian ------------------------------------------

    def inv_zeta(self, zeta: Array, pole_tol: float = POLE_TOL) -> tuple[Array, Array]:
        zc, tc = cayley_inv_zeta(zeta, pole_tol)
        zs, ts = mul_zt(*inv_zt(self.center.z, np.asarray(self.center.t)), zc, tc)
        return dilate_zt(1.0 / self.scale, zs, ts)

    def inv_jacobian_zeta(self, zeta: Array, pole_tol: float = POLE_TOL) -> Array:
        """Lambda_sigma for sigma = rho^{-1}: 1 / (Lambda_rho o sigma)."""
        z, t = self.inv_zeta(zeta, pole_tol)
        return 1.0 / self.jacobian_zt(z, t)


def chart_map(chart: ConformalChart, p: HeisPoint) -> SpherePoint:
    return SpherePoint(chart.map_zt(p.z, np.asarray(p.t)))


def chart_jacobian(chart: ConformalChart, p: HeisPoint) -> float:
    return float(chart.jacobian_zt(p.z, np.asarray(p.t)))


# ---------------------------------------------------------------------------
# conformal transport of functions


def conformal_pullback(u: Callable[[Array], Array], chart: ConformalChart, k: float):
    """Pull a sphere function back to H^N with the (Q-2k)/2Q conformal weight.

    Returns a vectorized field (z, t) -> Lambda_rho^{(Q-2k)/2Q} * u(rho(z, t)).
    ``u`` receives a (..., N+1) array of sphere points.
    """
    Q = homogeneous_dim(chart.N)
    expo = (Q - 2.0 * k) / (2.0 * Q)

    def field(z: Array, t: Array) -> Array:
        return chart.jacobian_zt(z, t) ** expo * np.asarray(u(chart.map_zt(z, t)))

    return field


def conformal_pushforward(U: Callable[[Array, Array], Array], chart: ConformalChart, k: float):
    """Push a Heisenberg function to the sphere: Lambda_sigma^{(Q-2k)/2Q} * (U o sigma)."""
    Q = homogeneous_dim(chart.N)
    expo = (Q - 2.0 * k) / (2.0 * Q)

    def fn(zeta: Array) -> Array:
        z, t = chart.inv_zeta(np.asarray(zeta, dtype=np.complex128))
        return chart.inv_jacobian_zeta(np.asarray(zeta, dtype=np.complex128)) ** expo * np.asarray(U(z, t))

    return fn
