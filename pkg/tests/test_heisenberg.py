import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cryamabe.errors import DivergentIntegralError, DomainError
from cryamabe.heisenberg import (
    BoxDomain,
    HaarMeasure,
    HeisPoint,
    KoranyiBall,
    ScalarFieldH,
    ShellScheme,
    dilate,
    dist_zt,
    group_inv,
    group_mul,
    haar_integral,
    integrate_decaying,
    kappa_haar,
    koranyi_dist,
    koranyi_gauge,
    mul_zt,
    sub_laplacian,
    vector_field,
)

finite = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False)


@st.composite
def points(draw, N=1):
    re = [draw(finite) for _ in range(N)]
    im = [draw(finite) for _ in range(N)]
    t = draw(finite)
    return HeisPoint(np.array(re) + 1.0j * np.array(im), t)


class TestGroupLaw:
    def test_identity(self):
        e = HeisPoint.origin(1)
        p = HeisPoint([0.3 + 0.1j], -0.7)
        assert group_mul(e, p).is_close(p)
        assert group_mul(p, e).is_close(p)

    def test_twist_example(self):
        p = HeisPoint([1.0 + 0j], 0.0)
        q = HeisPoint([1.0j], 0.0)
        r = group_mul(p, q)
        assert np.allclose(r.z, [1.0 + 1.0j]) and r.t == -2.0

    def test_inverse_values(self):
        assert group_inv(HeisPoint.origin(1)).is_close(HeisPoint.origin(1))
        p = group_inv(HeisPoint([1.0j], 3.0))
        assert np.allclose(p.z, [-1.0j]) and p.t == -3.0

    @settings(max_examples=60, deadline=None)
    @given(points(), points(), points())
    def test_associativity(self, a, b, c):
        lhs = group_mul(group_mul(a, b), c)
        rhs = group_mul(a, group_mul(b, c))
        assert lhs.is_close(rhs, tol=1e-10)

    @settings(max_examples=60, deadline=None)
    @given(points())
    def test_inverse_axiom(self, p):
        assert group_mul(p, group_inv(p)).is_close(HeisPoint.origin(1), tol=1e-12)
        assert group_inv(group_inv(p)).is_close(p)

    def test_finite_validation(self):
        with pytest.raises(DomainError):
            HeisPoint([np.nan + 0j], 0.0)
        with pytest.raises(DomainError):
            HeisPoint([0.0j], math.inf)


class TestDilations:
    def test_identity_map(self):
        p = HeisPoint([0.5 - 0.2j], 1.1)
        assert dilate(1.0, p).is_close(p)

    def test_substitution(self):
        p = dilate(2.0, HeisPoint([1.0 + 0j], 3.0))
        assert np.allclose(p.z, [2.0 + 0j]) and p.t == 12.0

    @settings(max_examples=40, deadline=None)
    @given(points(), st.floats(min_value=0.05, max_value=8.0))
    def test_group_property(self, p, lam):
        assert dilate(1.0 / lam, dilate(lam, p)).is_close(p, tol=1e-11)
        assert koranyi_gauge(dilate(lam, p)) == pytest.approx(lam * koranyi_gauge(p), abs=1e-11)

    def test_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            dilate(0.0, HeisPoint.origin(1))
        with pytest.raises(DomainError):
            dilate(-1.0, HeisPoint.origin(1))


class TestGaugeAndDistance:
    def test_gauge_pure_parts(self):
        assert koranyi_gauge(HeisPoint([3.0 + 4.0j], 0.0)) == pytest.approx(5.0, abs=1e-14)
        assert koranyi_gauge(HeisPoint([0.0j], 9.0)) == pytest.approx(3.0, abs=1e-14)

    def test_left_invariance_batch(self):
        rng = np.random.default_rng(0)
        z = rng.normal(size=(10_000, 1)) + 1.0j * rng.normal(size=(10_000, 1))
        t = rng.normal(size=10_000)
        za, ta = rng.normal(size=(10_000, 1)) + 1.0j * rng.normal(size=(10_000, 1)), rng.normal(size=10_000)
        zb, tb = rng.normal(size=(10_000, 1)) + 1.0j * rng.normal(size=(10_000, 1)), rng.normal(size=10_000)
        d1 = dist_zt(*mul_zt(z, t, za, ta), *mul_zt(z, t, zb, tb))
        d2 = dist_zt(za, ta, zb, tb)
        assert np.max(np.abs(d1 - d2)) < 1e-12

    def test_self_distance_zero(self):
        # the twist term cancels only up to one rounding when FMA is in play,
        # and the fourth root amplifies that to ~1e-9
        p = HeisPoint([0.2 + 0.9j], -0.4)
        assert koranyi_dist(p, p) <= 1e-8

    def test_quasi_triangle_constant(self):
        rng = np.random.default_rng(1)
        n = 10_000
        mk = lambda: (rng.normal(size=(n, 1)) + 1.0j * rng.normal(size=(n, 1)), rng.normal(size=n))
        (za, ta), (zb, tb), (zc, tc) = mk(), mk(), mk()
        K = np.max(dist_zt(za, ta, zb, tb) / (dist_zt(za, ta, zc, tc) + dist_zt(zc, tc, zb, tb)))
        assert K <= 2.0


class TestDerivatives:
    def test_constant_field(self):
        f = lambda z, t: np.ones_like(t)
        z, t = np.array([[0.3 + 0.2j]]), np.array([0.1])
        for which in (("X", 1), ("Y", 1), "T"):
            assert abs(vector_field(which, f, z, t)[0]) < 1e-12
        assert abs(sub_laplacian(f, z, t)[0]) < 1e-12

    def test_vertical_coordinate(self):
        f = lambda z, t: t
        z, t = np.array([[0.7 + 0.4j]]), np.array([0.0])
        assert vector_field(("X", 1), f, z, t)[0] == pytest.approx(2 * 0.4, abs=1e-10)
        assert vector_field(("Y", 1), f, z, t)[0] == pytest.approx(-2 * 0.7, abs=1e-10)
        assert vector_field("T", f, z, t)[0] == pytest.approx(1.0, abs=1e-12)
        assert abs(sub_laplacian(f, z, t)[0]) < 1e-10

    def test_horizontal_coordinate(self):
        f = lambda z, t: z[..., 0].real
        z, t = np.array([[0.7 + 0.4j]]), np.array([0.3])
        assert vector_field(("X", 1), f, z, t)[0] == pytest.approx(1.0, abs=1e-12)

    def test_sub_laplacian_radial_square(self):
        f = lambda z, t: np.sum((z * np.conj(z)).real, axis=-1)
        z, t = np.array([[0.5 - 0.1j]]), np.array([0.2])
        assert sub_laplacian(f, z, t)[0] == pytest.approx(1.0, abs=1e-8)

    def test_left_invariance(self):
        f = lambda z, t: np.sin(z[..., 0].real + t) * np.exp(-(z[..., 0].imag ** 2))
        rng = np.random.default_rng(2)
        a = HeisPoint(rng.normal(size=1) + 1.0j * rng.normal(size=1), float(rng.normal()))
        z = rng.normal(size=(50, 1)) + 1.0j * rng.normal(size=(50, 1))
        t = rng.normal(size=50)
        shifted = lambda zz, tt: f(*mul_zt(a.z, a.t, zz, tt))
        za, ta = mul_zt(a.z, a.t, z, t)
        for which in (("X", 1), ("Y", 1)):
            lhs = vector_field(which, shifted, z, t, h=1e-4)
            rhs = vector_field(which, f, za, ta, h=1e-4)
            assert np.max(np.abs(lhs - rhs)) < 1e-8

    def test_scaling_covariance(self):
        f = lambda z, t: np.cos(z[..., 0].real) * z[..., 0].imag + np.sin(t)
        rng = np.random.default_rng(3)
        z = rng.normal(size=(50, 1)) + 1.0j * rng.normal(size=(50, 1))
        t = rng.normal(size=50)
        lam = 1.7
        scaled = lambda zz, tt: f(lam * zz, lam * lam * tt)
        lhs = sub_laplacian(scaled, z, t, h=1e-4)
        rhs = lam * lam * sub_laplacian(f, lam * z, lam * lam * t, h=1e-4)
        # both sides are O(h^2) approximations of the same covariant value
        assert np.max(np.abs(lhs - rhs)) < 1e-4

    def test_scalar_field_wrapper(self):
        field = ScalarFieldH.from_pointwise(lambda p: float(p.t + p.z[0].real))
        z, t = np.array([[1.0 + 2.0j], [0.0j]]), np.array([3.0, 1.0])
        assert np.allclose(field(z, t), [4.0, 1.0])
        with pytest.raises(DomainError):
            ScalarFieldH(lambda z, t: t, derivative_step=0.0)


class TestHaarQuadrature:
    def test_zero_and_box_volume(self):
        box = BoxDomain((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))
        assert haar_integral(lambda z, t: np.zeros_like(t), box, 8) == 0.0
        val = haar_integral(lambda z, t: np.ones_like(t), box, 8)
        assert val == pytest.approx(kappa_haar(1), rel=1e-12)

    def test_empty_box_and_bad_resolution(self):
        empty = BoxDomain((0.0, 0.0, 0.0), (0.0, 1.0, 1.0))
        assert haar_integral(lambda z, t: np.ones_like(t), empty, 8) == 0.0
        box = BoxDomain((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))
        with pytest.raises(DomainError):
            haar_integral(lambda z, t: np.ones_like(t), box, 0)

    def test_bubble_mass_matches_sphere_transport(self):
        # int omega^{p*} dv_H equals u0^{p*} times the sphere volume mass,
        # which collapses to pi^2 for N = 1, k = 1
        from cryamabe.energy import BubbleParams, YamabeConstants, bubble_eval_zt

        consts = YamabeConstants.create(1, 1.0)
        val, shells = integrate_decaying(
            lambda z, t: bubble_eval_zt(BubbleParams.standard(1), z, t, consts) ** 4,
            1,
            ShellScheme(l0=2.0, n_shells=7, n_inner=96, n_shell=48),
        )
        exact = consts.u0**4 * consts.total_mass
        assert exact == pytest.approx(math.pi**2, rel=1e-12)
        assert val == pytest.approx(exact, rel=2e-3)
        assert abs(shells[-1]) < 1e-5 * abs(val)

    def test_ball_quadrature_deterministic(self):
        ball = KoranyiBall(HeisPoint.origin(1), 1.0)
        rng1 = np.random.default_rng(5)
        rng2 = np.random.default_rng(5)
        f = lambda z, t: 1.0 + 0.0 * t
        v1 = haar_integral(f, ball, 50_000, rng=rng1)
        v2 = haar_integral(f, ball, 50_000, rng=rng2)
        assert v1 == v2
        assert v1 == pytest.approx(kappa_haar(1) * math.pi**2 / 2.0, rel=2e-2)

    def test_divergent_tail_diagnosed(self):
        with pytest.raises(DivergentIntegralError):
            integrate_decaying(lambda z, t: np.ones_like(t), 1, ShellScheme(n_shells=5))

    def test_haar_measure_validation(self):
        with pytest.raises(DomainError):
            HaarMeasure(0.0)
        assert HaarMeasure.standard(2).kappa_H == 32.0
