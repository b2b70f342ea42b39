import math
import os

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cryamabe.errors import DomainError
from cryamabe.polynomials import ambient_laplacian, poly_eval
from cryamabe.spectral import (
    SphereQuadrature,
    SpectralFunction,
    analyze,
    apply_A2_differential,
    apply_A2k,
    basis_element,
    build_basis,
    constant_function,
    dim_H,
    lambda_jk,
    load_basis,
    monomial_moment,
    norm_H_minus_k,
    norm_Hk,
    pairing,
    save_basis,
    save_quadrature,
    synthesize,
    total_sphere_mass,
)


# independent Gamma oracle (Lanczos-free series; only used to cross-check lgamma)
def gamma_oracle(x: float) -> float:
    # Spouge approximation with a = 12, independent of math.lgamma
    a = 12
    c = [math.sqrt(2 * math.pi)]
    for k in range(1, a):
        c.append(
            ((-1) ** (k - 1) / math.factorial(k - 1))
            * (a - k) ** (k - 0.5)
            * math.exp(a - k)
        )
    s = c[0]
    for k in range(1, a):
        s += c[k] / (x - 1 + k)
    return s * (x - 1 + a) ** (x - 0.5) * math.exp(-(x - 1 + a))


class TestDimensions:
    def test_closed_form_values(self):
        assert dim_H(0, 0, 1) == 1 and dim_H(0, 0, 5) == 1
        assert dim_H(1, 0, 1) == 2
        assert dim_H(1, 1, 1) == 3
        assert dim_H(1, 1, 2) == 8
        assert dim_H(2, 1, 2) == 15

    def test_rank_oracle_bidegree_11(self):
        # rank of the (1,1) monomial Gram after projecting out constants
        mass = total_sphere_mass(1)
        mons = [((1, 0), (1, 0)), ((1, 0), (0, 1)), ((0, 1), (1, 0)), ((0, 1), (0, 1))]

        def herm(k1, k2):
            (a1, b1), (a2, b2) = k1, k2
            left = tuple(x + y for x, y in zip(a1, b2))
            right = tuple(x + y for x, y in zip(b1, a2))
            if left != right:
                return 0.0
            alpha = left
            num = math.factorial(alpha[0]) * math.factorial(alpha[1])
            return mass * num / math.factorial(1 + sum(alpha))

        G = np.array([[herm(k1, k2) for k2 in mons] for k1 in mons])
        ones = np.array([herm(k, ((0, 0), (0, 0))) for k in mons])
        G_perp = G - np.outer(ones, ones) / mass
        rank = int(np.sum(np.linalg.eigvalsh(G_perp) > 1e-10 * np.max(G_perp)))
        assert rank == dim_H(1, 1, 1) == 3

    def test_validation(self):
        with pytest.raises(DomainError):
            dim_H(-1, 0, 1)
        with pytest.raises(DomainError):
            dim_H(0, 0, 0)

    def test_overflow_safe(self):
        assert dim_H(32, 32, 3) > 0  # exact integer arithmetic


class TestMoments:
    def test_off_diagonal_vanishes(self):
        assert monomial_moment((1, 0), (0, 1), 1) == 0.0

    def test_total_mass(self):
        assert monomial_moment((0, 0), (0, 0), 1) == pytest.approx(16 * math.pi**2, rel=1e-14)

    def test_first_moment_value(self):
        assert monomial_moment((1, 0), (1, 0), 1) == pytest.approx(total_sphere_mass(1) / 2.0, rel=1e-14)

    def test_monte_carlo_oracle(self):
        rng = np.random.default_rng(42)
        n = 10_000_000
        g = rng.standard_normal((n, 4))
        zeta = g[:, :2] + 1.0j * g[:, 2:]
        zeta /= np.linalg.norm(zeta, axis=1)[:, None]
        mc = np.mean(np.abs(zeta[:, 0]) ** 2) * total_sphere_mass(1)
        assert mc == pytest.approx(monomial_moment((1, 0), (1, 0), 1), rel=1e-3)


class TestMultipliers:
    def test_recurrence_values(self):
        assert lambda_jk(0, 1.0, 4) == pytest.approx(0.5, rel=1e-14)
        assert lambda_jk(2, 1.0, 4) == pytest.approx(2.5, rel=1e-14)

    def test_gamma_oracle(self):
        val = lambda_jk(0, 0.5, 4)
        oracle = gamma_oracle(1.25) / gamma_oracle(0.75)
        assert val == pytest.approx(oracle, rel=1e-10)

    def test_monotone_in_j(self):
        vals = [lambda_jk(j, 0.7, 4) for j in range(10)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            lambda_jk(0, 2.0, 4)


class TestBasisConstruction:
    def test_block_counts(self, prob6):
        basis = prob6.basis
        for (j, l), sl in basis.block_slices.items():
            assert sl.stop - sl.start == dim_H(j, l, 1)

    def test_constant_block(self, prob6):
        e = basis_element(prob6.basis, 0, 0, 0)
        nodes = prob6.quad.nodes()[:7]
        vals = e.eval(nodes)
        assert np.allclose(vals, 1.0 / math.sqrt(total_sphere_mass(1)), atol=1e-13)

    def test_orthonormality_quadrature_oracle(self, prob6):
        basis, quad = prob6.basis, prob6.quad
        sub = [basis.index_of(j, l, 0) for j in range(4) for l in range(4)]
        vals = np.stack([quad.synthesize_values(np.eye(basis.n_basis)[i], basis) for i in sub])
        gram = np.einsum("in,n,jn->ij", vals, quad.weights(), vals)
        assert np.max(np.abs(gram - np.eye(len(sub)))) < 1e-8

    def test_elements_are_harmonic(self, prob6):
        # the ambient representative of each element has harmonic leading part;
        # restricted to the sphere its flat Laplacian lies in lower bidegrees
        basis = prob6.basis
        e = basis.element_poly(basis.index_of(2, 1, 0))
        rng = np.random.default_rng(0)
        g = rng.standard_normal((20, 4))
        zeta = g[:, :2] + 1.0j * g[:, 2:]
        zeta /= np.linalg.norm(zeta, axis=1)[:, None]
        lead = {k: c for k, c in e.items() if sum(k[0]) == 2 and sum(k[1]) == 1}
        lap = ambient_laplacian(lead, 1)
        assert np.max(np.abs(poly_eval(lap, zeta))) < 1e-10

    def test_eigenfunction_property(self, prob6):
        basis = prob6.basis
        rng = np.random.default_rng(1)
        g = rng.standard_normal((25, 4))
        zeta = g[:, :2] + 1.0j * g[:, 2:]
        zeta /= np.linalg.norm(zeta, axis=1)[:, None]
        mult = basis.multipliers(1.0)
        for idx in (basis.index_of(1, 0, 0), basis.index_of(1, 1, 1), basis.index_of(3, 2, 2)):
            e = SpectralFunction(np.eye(basis.n_basis)[idx], basis)
            lhs = apply_A2_differential(e, zeta)
            rhs = mult[idx] * e.eval(zeta)
            assert np.max(np.abs(lhs - rhs)) < 1e-6 * max(1.0, np.max(np.abs(rhs)))

    def test_constant_eigenvalue(self, prob6):
        u = constant_function(1.0, prob6.basis)
        zeta = prob6.quad.nodes()[:5]
        lhs = apply_A2_differential(u, zeta)
        assert np.allclose(lhs, 0.25, atol=1e-12)  # N^2/4 at N = 1

    def test_truncation_guard(self):
        with pytest.raises(DomainError):
            build_basis(1, 40)

    def test_n2_block_from_moments(self):
        basis = build_basis(2, 1)
        assert basis.block_slices[(1, 1)].stop - basis.block_slices[(1, 1)].start == 8
        assert basis.n_basis == sum(dim_H(j, l, 2) for j in range(2) for l in range(2))


class TestTransforms:
    def test_analyze_basis_element(self, prob6):
        basis, quad = prob6.basis, prob6.quad
        idx = basis.index_of(2, 1, 1)
        vals = quad.synthesize_values(np.eye(basis.n_basis)[idx], basis)
        u = analyze(vals, quad, basis)
        assert u.coeffs[idx] == pytest.approx(1.0, abs=1e-8)
        others = np.delete(u.coeffs, idx)
        assert np.max(np.abs(others)) < 1e-8

    def test_analyze_zero(self, prob6):
        u = analyze(np.zeros(prob6.quad.n_nodes), prob6.quad, prob6.basis)
        assert np.all(u.coeffs == 0.0)

    def test_roundtrip_and_parseval(self, prob6):
        rng = np.random.default_rng(3)
        c = rng.standard_normal(prob6.basis.n_basis)
        vals = prob6.quad.synthesize_values(c, prob6.basis)
        back = analyze(vals, prob6.quad, prob6.basis)
        assert np.max(np.abs(back.coeffs - c)) < 1e-7
        assert prob6.quad.integrate(vals * vals) == pytest.approx(float(np.sum(c * c)), rel=1e-8)
        assert back.tail_energy < 1e-8
        assert back.imag_residual < 1e-8

    def test_pointwise_synthesize(self, prob6):
        u = basis_element(prob6.basis, 1, 0, 0)
        node = prob6.quad.nodes()[123]
        grid_val = prob6.quad.synthesize_values(u.coeffs, prob6.basis)[123]
        assert synthesize(u, node) == pytest.approx(grid_val, abs=1e-12)

    def test_quadrature_moment_validation(self, prob6):
        quad = prob6.quad
        nodes, w = quad.nodes(), quad.weights()
        for alpha, beta in (((0, 0), (0, 0)), ((1, 0), (1, 0)), ((2, 1), (2, 1)), ((1, 0), (0, 1))):
            mono = nodes[:, 0] ** alpha[0] * nodes[:, 1] ** alpha[1]
            mono = mono * np.conj(nodes[:, 0]) ** beta[0] * np.conj(nodes[:, 1]) ** beta[1]
            quad_val = float(np.real(w @ mono))
            assert quad_val == pytest.approx(monomial_moment(alpha, beta, 1), abs=1e-8 * quad.total_mass)

    def test_monte_carlo_quadrature(self):
        quad = SphereQuadrature.build(2, degree=8, seed=1, n_samples=200_000)
        val = quad.integrate(np.ones(quad.n_nodes))
        assert val == pytest.approx(total_sphere_mass(2), rel=1e-12)
        nodes = quad.nodes()
        mc = float(np.real(quad.weights() @ (nodes[:, 0] * np.conj(nodes[:, 0]))))
        assert mc == pytest.approx(monomial_moment((1, 0, 0), (1, 0, 0), 2), rel=2e-2)


class TestDiagonalOperator:
    def test_constant_action(self, prob_half):
        u = constant_function(1.0, prob_half.basis)
        out = apply_A2k(u, 0.5)
        lam0 = lambda_jk(0, 0.5, 4)
        assert out.coeffs[prob_half.basis.index_of(0, 0, 0)] == pytest.approx(
            lam0**2 * u.coeffs[prob_half.basis.index_of(0, 0, 0)], rel=1e-13
        )

    def test_matches_differential(self, prob6):
        rng = np.random.default_rng(5)
        c = rng.standard_normal(prob6.basis.n_basis)
        u = SpectralFunction(c, prob6.basis)
        out = apply_A2k(u, 1.0)
        g = rng.standard_normal((15, 4))
        zeta = g[:, :2] + 1.0j * g[:, 2:]
        zeta /= np.linalg.norm(zeta, axis=1)[:, None]
        assert np.max(np.abs(apply_A2_differential(u, zeta) - out.eval(zeta))) < 1e-6 * np.max(
            np.abs(out.eval(zeta))
        )

    @settings(max_examples=20, deadline=None)
    @given(st.floats(min_value=-3, max_value=3), st.floats(min_value=-3, max_value=3))
    def test_linearity_exact(self, a, b):
        basis = build_basis(1, 2)
        u = basis_element(basis, 1, 0, 0)
        v = basis_element(basis, 2, 2, 3)
        lhs = apply_A2k(a * u + b * v, 1.0).coeffs
        rhs = a * apply_A2k(u, 1.0).coeffs + b * apply_A2k(v, 1.0).coeffs
        assert np.array_equal(lhs, rhs)

    def test_composition_multiplies(self, prob6):
        rng = np.random.default_rng(6)
        u = SpectralFunction(rng.standard_normal(prob6.basis.n_basis), prob6.basis)
        lhs = apply_A2k(apply_A2k(u, 1.0), 0.5).coeffs
        rhs = u.coeffs * prob6.basis.multipliers(1.0) * prob6.basis.multipliers(0.5)
        assert np.max(np.abs(lhs - rhs)) < 1e-13 * np.max(np.abs(rhs))


class TestNorms:
    def test_single_mode_norm(self, prob6):
        u = basis_element(prob6.basis, 2, 1, 0)
        lam = lambda_jk(2, 1.0, 4) * lambda_jk(1, 1.0, 4)
        assert norm_Hk(u, 1.0) == pytest.approx(math.sqrt(lam), rel=1e-13)
        assert norm_H_minus_k(u, 1.0) == pytest.approx(1.0 / math.sqrt(lam), rel=1e-13)

    def test_duality_equality_case(self, prob6):
        rng = np.random.default_rng(7)
        u = SpectralFunction(rng.standard_normal(prob6.basis.n_basis), prob6.basis)
        f = apply_A2k(u, 1.0)
        assert pairing(f, u) == pytest.approx(norm_Hk(u, 1.0) ** 2, rel=1e-12)
        assert norm_H_minus_k(f, 1.0) == pytest.approx(norm_Hk(u, 1.0), rel=1e-12)

    def test_duality_bound(self, prob6):
        rng = np.random.default_rng(8)
        for _ in range(50):
            f = SpectralFunction(rng.standard_normal(prob6.basis.n_basis), prob6.basis)
            u = SpectralFunction(rng.standard_normal(prob6.basis.n_basis), prob6.basis)
            assert abs(pairing(f, u)) <= norm_H_minus_k(f, 1.0) * norm_Hk(u, 1.0) * (1 + 1e-12)

    def test_sobolev_embedding_sanity(self, prob6):
        rng = np.random.default_rng(9)
        cs = prob6.constants.C_S
        for _ in range(1000):
            u = SpectralFunction(rng.standard_normal(prob6.basis.n_basis), prob6.basis)
            lhs = prob6.lp_star_mass(u) ** (2.0 / prob6.constants.p_star)
            assert lhs <= cs * norm_Hk(u, 1.0) ** 2 * (1 + 1e-10)


class TestDiskCache:
    def test_basis_roundtrip(self, tmp_path):
        basis = build_basis(1, 2)
        prefix = os.path.join(tmp_path, "basis")
        save_basis(basis, prefix)
        loaded = load_basis(prefix)
        assert loaded.n_basis == basis.n_basis
        rng = np.random.default_rng(10)
        g = rng.standard_normal((10, 4))
        zeta = g[:, :2] + 1.0j * g[:, 2:]
        zeta /= np.linalg.norm(zeta, axis=1)[:, None]
        assert np.max(np.abs(loaded.eval_elements(zeta) - basis.eval_elements(zeta))) < 1e-12

    def test_quadrature_dump(self, tmp_path):
        quad = SphereQuadrature.build(1, degree=8)
        prefix = os.path.join(tmp_path, "quad")
        save_quadrature(quad, prefix)
        assert os.path.exists(prefix + ".csv") and os.path.exists(prefix + ".json")
        with open(prefix + ".csv") as fh:
            header = fh.readline().strip().split(",")
        assert header == ["re0", "re1", "im0", "im1", "weight"]
