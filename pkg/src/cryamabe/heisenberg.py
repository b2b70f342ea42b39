"""Heisenberg group algebra, Koranyi metric, left-invariant derivatives, volume quadrature.

Points of the group are pairs (z, t) with z in C^N and t real.  The group law is

    (z, t) . (z', t') = (z + z', t + t' + 2 Im <z, z'>),   <z, z'> = sum_j z_j conj(z'_j),

anisotropic dilations are d_lam(z, t) = (lam z, lam^2 t), and the homogeneous
dimension is Q = 2N + 2.  All numerical kernels are vectorized: they accept z of
shape (..., N) and t of shape (...), broadcasting over leading axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DivergentIntegralError, DomainError

Array = np.ndarray

# ---------------------------------------------------------------------------
# points


def _np_z(z) -> Array:
    z = np.asarray(z, dtype=np.complex128)
    if z.ndim == 0:
        z = z.reshape(1)
    return z


@dataclass(frozen=True)
class HeisPoint:
    """A point (z, t) of the Heisenberg group H^N."""

    z: Array
    t: float

    def __post_init__(self):
        z = _np_z(self.z)
        z.setflags(write=False)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "t", float(self.t))
        if not (np.all(np.isfinite(z.view(np.float64))) and math.isfinite(self.t)):
            raise DomainError("HeisPoint components must be finite")

    @property
    def N(self) -> int:
        return self.z.shape[-1]

    @staticmethod
    def origin(N: int) -> "HeisPoint":
        return HeisPoint(np.zeros(N, dtype=np.complex128), 0.0)

    def is_close(self, other: "HeisPoint", tol: float = 1e-12) -> bool:
        return bool(
            np.max(np.abs(self.z - other.z), initial=0.0) <= tol
            and abs(self.t - other.t) <= tol
        )


def hermitian_im(z1: Array, z2: Array) -> Array:
    """Im <z1, z2> with the Hermitian pairing sum_j z1_j conj(z2_j)."""
    return np.sum(z1 * np.conj(z2), axis=-1).imag


# array kernels ------------------------------------------------------------


def mul_zt(z1: Array, t1: Array, z2: Array, t2: Array) -> tuple[Array, Array]:
    return z1 + z2, t1 + t2 + 2.0 * hermitian_im(z1, z2)


def inv_zt(z: Array, t: Array) -> tuple[Array, Array]:
    return -z, -t


def dilate_zt(lam: float, z: Array, t: Array) -> tuple[Array, Array]:
    return lam * z, lam * lam * t


def gauge_zt(z: Array, t: Array) -> Array:
    """Koranyi gauge (|z|^4 + t^2)^(1/4), computed as sqrt(hypot(|z|^2, t))."""
    zz = np.sum((z * np.conj(z)).real, axis=-1)
    return np.sqrt(np.hypot(zz, t))


def dist_zt(z1: Array, t1: Array, z2: Array, t2: Array) -> Array:
    """Left-invariant Koranyi distance, gauge(q^{-1} . p)."""
    zi, ti = mul_zt(*inv_zt(z2, t2), z1, t1)
    return gauge_zt(zi, ti)


# point wrappers -----------------------------------------------------------


def group_mul(p: HeisPoint, q: HeisPoint) -> HeisPoint:
    z, t = mul_zt(p.z, p.t, q.z, q.t)
    return HeisPoint(z, float(t))


def group_inv(p: HeisPoint) -> HeisPoint:
    return HeisPoint(-p.z, -p.t)


def dilate(lam: float, p: HeisPoint) -> HeisPoint:
    if not lam > 0:
        raise DomainError(f"dilation factor must be positive, got {lam}")
    return HeisPoint(lam * p.z, lam * lam * p.t)


def koranyi_gauge(p: HeisPoint) -> float:
    return float(gauge_zt(p.z, p.t))


def koranyi_dist(p: HeisPoint, q: HeisPoint) -> float:
    return float(dist_zt(p.z, p.t, q.z, q.t))


def homogeneous_dim(N: int) -> int:
    return 2 * N + 2


# ---------------------------------------------------------------------------
# scalar fields and left-invariant derivatives


@dataclass(frozen=True)
class ScalarFieldH:
    """A real scalar field on H^N with a finite-difference step.

    ``evaluator`` must accept (z, t) arrays of shapes (..., N) and (...) and
    return values of shape (...).  Use :meth:`from_pointwise` to wrap a
    function of a single HeisPoint.
    """

    evaluator: Callable[[Array, Array], Array]
    derivative_step: float = 1e-4

    def __post_init__(self):
        if not self.derivative_step > 0:
            raise DomainError("derivative_step must be positive")

    @staticmethod
    def from_pointwise(fn: Callable[[HeisPoint], float], h: float = 1e-4) -> "ScalarFieldH":
        def ev(z, t):
            zb = np.broadcast_to(z, np.broadcast_shapes(z.shape, t.shape + (z.shape[-1],)))
            tb = np.broadcast_to(t, zb.shape[:-1])
            out = np.empty(tb.shape, dtype=np.float64)
            it = np.nditer(tb, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                out[idx] = fn(HeisPoint(zb[idx], float(tb[idx])))
            return out

        return ScalarFieldH(ev, h)

    def __call__(self, z: Array, t: Array) -> Array:
        return np.asarray(self.evaluator(np.asarray(z, dtype=np.complex128), np.asarray(t, dtype=np.float64)), dtype=np.float64)


def _field_eval(f, z, t):
    ev = f.evaluator if isinstance(f, ScalarFieldH) else f
    return np.asarray(ev(z, t))


def _flow_offsets(kind: str, j: int, N: int) -> Array:
    """Unit horizontal/vertical direction for the exact one-parameter flow."""
    e = np.zeros(N, dtype=np.complex128)
    if kind == "X":
        e[j - 1] = 1.0
    elif kind == "Y":
        e[j - 1] = 1.0j
    elif kind != "T":
        raise DomainError(f"unknown vector field kind {kind!r}")
    return e


def vector_field(which, f, z, t, h: float | None = None) -> Array:
    """Apply X_j, Y_j or T by a central difference along the exact flow.

    The flow of a left-invariant field is right group multiplication, so the
    stencil points are p.(±h e, 0) (or p.(0, ±h) for T); left invariance holds
    to rounding error by construction.  ``which`` is "T" or a pair like
    ("X", 1).
    """
    kind, j = (which, 1) if isinstance(which, str) else which
    if isinstance(f, ScalarFieldH) and h is None:
        h = f.derivative_step
    h = 1e-4 if h is None else h
    z = np.asarray(z, dtype=np.complex128)
    t = np.asarray(t, dtype=np.float64)
    hh = np.asarray(h, dtype=np.float64)
    if kind == "T":
        fp = _field_eval(f, z, t + hh)
        fm = _field_eval(f, z, t - hh)
        return (fp - fm) / (2.0 * hh)
    e = _flow_offsets(kind, j, z.shape[-1])
    he = hh[..., None] * e if hh.ndim else hh * e
    zp, tp = mul_zt(z, t, he, np.zeros_like(t))
    zm, tm = mul_zt(z, t, -he, np.zeros_like(t))
    return (_field_eval(f, zp, tp) - _field_eval(f, zm, tm)) / (2.0 * hh)


def sub_laplacian(f, z, t, h: float | None = None) -> Array:
    """Delta_b f = (1/4) sum_j (X_j^2 + Y_j^2) f by second differences along flows."""
    if isinstance(f, ScalarFieldH) and h is None:
        h = f.derivative_step
    h = 1e-4 if h is None else h
    z = np.asarray(z, dtype=np.complex128)
    t = np.asarray(t, dtype=np.float64)
    hh = np.asarray(h, dtype=np.float64)
    N = z.shape[-1]
    f0 = _field_eval(f, z, t)
    acc = np.zeros_like(f0)
    zeros = np.zeros_like(t)
    for jj in range(1, N + 1):
        for kind in ("X", "Y"):
            e = _flow_offsets(kind, jj, N)
            he = hh[..., None] * e if hh.ndim else hh * e
            zp, tp = mul_zt(z, t, he, zeros)
            zm, tm = mul_zt(z, t, -he, zeros)
            acc = acc + (_field_eval(f, zp, tp) + _field_eval(f, zm, tm) - 2.0 * f0)
    return acc / (4.0 * hh * hh)


# ---------------------------------------------------------------------------
# volume form and quadrature


def kappa_haar(N: int) -> float:
    """Constant relating the contact volume form on H^N to Lebesgue measure.

    theta ^ (dtheta)^N = 4^N N! dx dy dt; the whole calibration triple
    (Haar constant, sphere volume mass, conformal factor) is pinned by the
    change-of-variables identity and verified numerically in the tests.
    """
    return float(4**N * math.factorial(N))


@dataclass(frozen=True)
class HaarMeasure:
    """dv_H = kappa_H * Lebesgue on R^{2N+1}."""

    kappa_H: float

    def __post_init__(self):
        if not self.kappa_H > 0:
            raise DomainError("kappa_H must be positive")

    @staticmethod
    def standard(N: int) -> "HaarMeasure":
        return HaarMeasure(kappa_haar(N))


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box in (x_1..x_N, y_1..y_N, t) coordinates."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise DomainError("box bounds must have equal length")

    @property
    def dim(self) -> int:
        return len(self.lo)

    def is_empty(self) -> bool:
        return any(h <= l for l, h in zip(self.lo, self.hi))

    @staticmethod
    def koranyi(N: int, L: float, center: HeisPoint | None = None) -> "BoxDomain":
        # anisotropic box [-L, L]^{2N} x [-L^2, L^2]; centering is applied by
        # left translation in the quadrature, not by shifting the bounds.
        del center
        lo = tuple([-L] * (2 * N) + [-L * L])
        hi = tuple([L] * (2 * N) + [L * L])
        return BoxDomain(lo, hi)


@dataclass(frozen=True)
class KoranyiBall:
    center: HeisPoint
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError("ball radius must be positive")


def _box_grid(box: BoxDomain, resolution) -> tuple[list[Array], float]:
    dim = box.dim
    res = (resolution,) * dim if np.isscalar(resolution) else tuple(resolution)
    if len(res) != dim or any(int(r) <= 0 for r in res):
        raise DomainError(f"resolution must be {dim} positive integers")
    axes, cell = [], 1.0
    for lo, hi, n in zip(box.lo, box.hi, res):
        n = int(n)
        h = (hi - lo) / n
        axes.append(lo + h * (np.arange(n) + 0.5))
        cell *= h
    return axes, cell


def _grid_points(axes: list[Array], N: int) -> tuple[Array, Array]:
    mesh = np.meshgrid(*axes, indexing="ij")
    x = np.stack(mesh[:N], axis=-1)
    y = np.stack(mesh[N : 2 * N], axis=-1)
    return (x + 1.0j * y).reshape(-1, N), mesh[2 * N].reshape(-1)


def haar_integral(
    f,
    domain: BoxDomain | KoranyiBall,
    resolution,
    measure: HaarMeasure | None = None,
    *,
    N: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Integrate f dv_H over a box (midpoint rule) or a Koranyi ball (Monte Carlo).

    Monte Carlo sampling is deterministic for a given generator; ``resolution``
    is the sample count for balls and the per-axis node count for boxes.
    """
    if isinstance(domain, BoxDomain):
        if domain.is_empty():
            return 0.0
        if N is None:
            N = (domain.dim - 1) // 2
        measure = measure or HaarMeasure.standard(N)
        axes, cell = _box_grid(domain, resolution)
        z, t = _grid_points(axes, N)
        vals = _field_eval(f, z, t)
        return float(measure.kappa_H * cell * np.sum(vals))

    if isinstance(domain, KoranyiBall):
        n_samples = int(resolution)
        if n_samples <= 0:
            raise DomainError("sample count must be positive")
        N = domain.center.N
        measure = measure or HaarMeasure.standard(N)
        rng = rng or np.random.default_rng(0)
        R = domain.radius
        # sample the bounding box of the centered ball, then translate
        xy = rng.uniform(-R, R, size=(n_samples, 2 * N))
        tt = rng.uniform(-R * R, R * R, size=n_samples)
        z0 = xy[:, :N] + 1.0j * xy[:, N:]
        inside = gauge_zt(z0, tt) <= R
        z, t = mul_zt(domain.center.z, domain.center.t, z0, tt)
        vals = np.where(inside, _field_eval(f, z, t), 0.0)
        box_vol = (2 * R) ** (2 * N) * 2 * R * R
        return float(measure.kappa_H * box_vol * np.mean(vals))

    raise DomainError(f"unsupported domain {type(domain).__name__}")


def koranyi_ball_volume(N: int, radius: float = 1.0, measure: HaarMeasure | None = None) -> float:
    """dv_H volume of a Koranyi ball.  Closed form for N=1, Monte Carlo otherwise."""
    measure = measure or HaarMeasure.standard(N)
    if N == 1:
        # Lebesgue volume of the unit gauge ball in R^3 is pi^2 / 2
        return measure.kappa_H * (math.pi**2 / 2.0) * radius**4
    return haar_integral(
        lambda z, t: np.ones_like(t),
        KoranyiBall(HeisPoint.origin(N), radius),
        200_000,
        measure,
        rng=np.random.default_rng(7),
    )


# ---------------------------------------------------------------------------
# nested-shell quadrature for decaying integrands


@dataclass(frozen=True)
class ShellScheme:
    """Geometric ladder of Koranyi-adapted boxes for integrands decaying at infinity.

    Boxes are [-L, L]^{2N} x [-L^2, L^2] with L doubling per shell; doubling
    keeps inner-box faces aligned with outer-shell cell boundaries, so the
    midpoint rule never splits a cell across the shell interface.
    """

    l0: float = 1.5
    n_shells: int = 5
    n_inner: int = 64
    n_shell: int = 48

    def __post_init__(self):
        if self.n_shell % 4 or self.n_inner <= 0 or self.n_shells < 1 or self.l0 <= 0:
            raise DomainError("need n_shell % 4 == 0, positive sizes")

    @staticmethod
    def reaching(l_max: float, l0: float = 1.5, n_inner: int = 64, n_shell: int = 48) -> "ShellScheme":
        n = 1
        L = l0
        while L < l_max:
            L *= 2.0
            n += 1
        return ShellScheme(l0=l0, n_shells=n, n_inner=n_inner, n_shell=n_shell)


def integrate_decaying(
    f,
    N: int,
    scheme: ShellScheme = ShellScheme(),
    measure: HaarMeasure | None = None,
    center: HeisPoint | None = None,
    check_decay: bool = True,
) -> tuple[float, list[float]]:
    """Integrate f dv_H over H^N by nested Koranyi boxes centered at ``center``.

    Returns (value, per-shell contributions).  Raises DivergentIntegralError
    when the outermost shells grow, which diagnoses a non-integrable input.
    """
    measure = measure or HaarMeasure.standard(N)
    shells: list[float] = []
    L = scheme.l0
    for i in range(scheme.n_shells):
        n = scheme.n_inner if i == 0 else scheme.n_shell
        box = BoxDomain.koranyi(N, L)
        axes, cell = _box_grid(box, (n,) * (2 * N) + (n,))
        z, t = _grid_points(axes, N)
        if i > 0:
            Lin = L / 2.0
            xy_in = np.all(np.abs(np.concatenate([z.real, z.imag], axis=-1)) <= Lin, axis=-1)
            keep = ~(xy_in & (np.abs(t) <= Lin * Lin))
            z, t = z[keep], t[keep]
        if center is not None:
            z, t = mul_zt(center.z, center.t, z, t)
        vals = _field_eval(f, z, t)
        shells.append(float(measure.kappa_H * cell * np.sum(vals)))
        L *= 2.0
    if check_decay and len(shells) >= 3:
        tail = [abs(s) for s in shells[-3:]]
        if tail[-1] > tail[-2] > tail[-3] and tail[-1] > 1e-12 * max(abs(s) for s in shells):
            raise DivergentIntegralError(f"shell contributions grow: {shells}")
    return float(sum(shells)), shells
