"""Synthesized concentrating sequences, energy quantization, and flow experiments.

A synthesized sequence is u_n = u_inf + sum_l v_n^l with

    v_n^l = Lambda_sigma^{(Q-2k)/2Q} * beta^l * (U_inf^l o sigma_n^l),

where sigma_n is the inverse of the chart rho_n(w) = C(w_c . d_{R_n} w) and
beta is a sphere cutoff equal to 1 on the quarter ball around the
concentration center.  Band-limited projections of v_n cannot resolve scales
R_n below the quadrature resolution, so every quantitative check here
(energies, p*-masses, gradient residuals) is evaluated through the exact
conformal change of variables back to the group side, where the integrands
live at unit scale.  The residual dE(u_n) transports to the pointwise field

    G_n = L(W_n) - |W_n|^{p*-2} W_n,       W_n = Lambda_rho^{1/p*} (u_n o rho_n),

and ||dE(u_n)||_{L^pbar(sphere)} = ||G_n||_{L^pbar(group)} exactly, which
dominates the dual-space residual; a chart-adapted witness pairing supplies
the matching lower bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cayley import ConformalChart, cayley_inv, chart_pole, sphere_dist_zeta
from .errors import DomainError, PoleError
from .heisenberg import (
    Array,
    HeisPoint,
    ScalarFieldH,
    ShellScheme,
    gauge_zt,
    integrate_decaying,
    sub_laplacian,
    vector_field,
)
from .energy import (
    BubbleParams,
    YamabeConstants,
    YamabeProblem,
    bubble_eval_zt,
    bubble_horizontal_gradient_zt,
    dirichlet_form,
)
from .spectral import SpectralFunction, analyze, norm_Hk

# ---------------------------------------------------------------------------
# cutoffs


def _smoothstep5(x: Array) -> Array:
    x = np.clip(x, 0.0, 1.0)
    return x * x * x * (10.0 + x * (-15.0 + 6.0 * x))


@dataclass(frozen=True)
class CutoffSpec:
    """C^2 cutoff on the sphere: 1 inside the r_inner ball, 0 outside r_outer.

    The profile is the quintic smoothstep applied to the normalized squared
    quasi-distance, so two distributional derivatives stay bounded.
    """

    center: Array
    r_inner: float = 0.25
    r_outer: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.center, dtype=np.complex128)
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        if not 0 < self.r_inner < self.r_outer:
            raise DomainError("need 0 < r_inner < r_outer")

    def value(self, zeta: Array) -> Array:
        d2 = 2.0 * np.abs(1.0 - np.sum(np.asarray(zeta) * np.conj(self.center), axis=-1))
        x = (d2 - self.r_inner**2) / (self.r_outer**2 - self.r_inner**2)
        return 1.0 - _smoothstep5(x)

    def second_derivative_scan(self, n: int = 2000) -> float:
        """Max |d^2/dtheta^2| of the profile along a great circle through the center."""
        e = np.zeros_like(self.center)
        e[0 if abs(self.center[0]) < 0.9 else -1] = 1.0
        e = e - np.sum(e * np.conj(self.center)) * self.center
        e = e / np.linalg.norm(e)
        theta = np.linspace(0.0, math.pi, n)
        pts = np.cos(theta)[:, None] * self.center + np.sin(theta)[:, None] * e
        vals = self.value(pts)
        h = theta[1] - theta[0]
        second = (vals[2:] - 2 * vals[1:-1] + vals[:-2]) / h**2
        return float(np.max(np.abs(second)))


def make_cutoff(center, r_inner: float = 0.25, r_outer: float = 1.0) -> CutoffSpec:
    c = center.zeta if hasattr(center, "zeta") else np.asarray(center, dtype=np.complex128)
    return CutoffSpec(c, r_inner, r_outer)


# ---------------------------------------------------------------------------
# charts and sequence specifications


@dataclass(frozen=True)
class BubbleChart:
    """One concentrating bubble: sphere center, shrinking radii, group profile."""

    center: Array  # sphere point; the group center is its Cayley preimage
    radii: tuple[float, ...]
    profile: BubbleParams
    cutoff: CutoffSpec
    profile_factor: float = 1.0  # multiplies the extremal profile (non-solutions probe decay failures)

    def __post_init__(self):
        c = np.asarray(self.center, dtype=np.complex128)
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        r = tuple(float(x) for x in self.radii)
        object.__setattr__(self, "radii", r)
        if len(r) == 0 or any(x <= 0 for x in r):
            raise DomainError("radii must be positive")
        if any(r[i + 1] >= r[i] for i in range(len(r) - 1)):
            raise DomainError("radii must decrease strictly")
        pole = chart_pole(c.shape[-1] - 1)
        if sphere_dist_zeta(c, pole) <= self.cutoff.r_outer:
            raise PoleError("cutoff support reaches the chart pole")

    @staticmethod
    def standard(center, radii: Sequence[float], constants: YamabeConstants, profile_factor: float = 1.0) -> "BubbleChart":
        c = center.zeta if hasattr(center, "zeta") else np.asarray(center, dtype=np.complex128)
        return BubbleChart(
            c,
            tuple(radii),
            BubbleParams.standard(constants.N),
            make_cutoff(c),
            profile_factor,
        )

    @property
    def group_center(self) -> HeisPoint:
        return cayley_inv(self.center)

    def chart(self, n: int) -> ConformalChart:
        return ConformalChart(self.group_center, self.radii[n])


@dataclass(frozen=True)
class PSSequenceSpec:
    """Weak limit plus finitely many bubbles at pairwise distinct centers."""

    u_infty: SpectralFunction
    bubbles: tuple[BubbleChart, ...]

    def __post_init__(self):
        object.__setattr__(self, "bubbles", tuple(self.bubbles))
        cs = [b.center for b in self.bubbles]
        for i in range(len(cs)):
            for j in range(i + 1, len(cs)):
                if sphere_dist_zeta(cs[i], cs[j]) < 1e-8:
                    raise DomainError("bubble centers must have distinct limits")

    def disjoint_supports(self) -> bool:
        # the sphere quasi-distance satisfies the triangle inequality, and the
        # cutoffs vanish on their boundary spheres, so touching closed balls
        # still give disjoint open supports
        cs = [b.center for b in self.bubbles]
        rs = [b.cutoff.r_outer for b in self.bubbles]
        for i in range(len(cs)):
            for j in range(i + 1, len(cs)):
                if sphere_dist_zeta(cs[i], cs[j]) < rs[i] + rs[j]:
                    return False
        return True


# ---------------------------------------------------------------------------
# synthesis on the sphere (band-limited projections)


def vn_values(chart: BubbleChart, n: int, constants: YamabeConstants, zeta: Array) -> Array:
    """Pointwise values of v_n at sphere points; zero outside the cutoff."""
    Q = constants.Q
    expo = (Q - 2.0 * constants.k) / (2.0 * Q)
    beta = chart.cutoff.value(zeta)
    out = np.zeros(beta.shape)
    live = beta > 0.0
    if np.any(live):
        conf = chart.chart(n)
        z, t = conf.inv_zeta(zeta[live])
        lam_sigma = conf.inv_jacobian_zeta(zeta[live])
        U = chart.profile_factor * bubble_eval_zt(chart.profile, z, t, constants)
        out[live] = lam_sigma**expo * beta[live] * U
    return out


def synthesize_vn(chart: BubbleChart, n: int, prob: YamabeProblem) -> SpectralFunction:
    """Band-limited projection of v_n; tail_energy records unresolved mass."""
    vals = vn_values(chart, n, prob.constants, prob.quad.nodes())
    return analyze(vals, prob.quad, prob.basis)


def ps_term(spec: PSSequenceSpec, n: int, prob: YamabeProblem) -> SpectralFunction:
    """u_n = u_inf + sum_l v_n^l as spectral coefficients (band-limited)."""
    coeffs = spec.u_infty.coeffs.copy()
    tail = 0.0
    for chart in spec.bubbles:
        v = synthesize_vn(chart, n, prob)
        coeffs = coeffs + v.coeffs
        tail += v.tail_energy or 0.0
    return SpectralFunction(coeffs, prob.basis, tail_energy=tail)


# ---------------------------------------------------------------------------
# transported energy bookkeeping


def _cutoff_on_group(chart: BubbleChart, n: int, constants: YamabeConstants):
    conf = chart.chart(n)

    def beta_n(z, t):
        return chart.cutoff.value(conf.map_zt(z, t))

    return beta_n


def _beta_step(z, t):
    return 0.02 * (1.0 + gauge_zt(z, t))


def bubble_piece_report(
    chart: BubbleChart,
    n: int,
    u_infty: SpectralFunction,
    prob: YamabeProblem,
    scheme: ShellScheme | None = None,
) -> dict:
    """Exact-transport integrals of one bubble piece at rung n.

    Returns the quadratic form a_n and p*-mass m_n of v_n, the coupling of
    v_n with the weak limit in both the quadratic and p*-parts, and the
    L^2-against-smooth pairing used for the weak-convergence diagnostic.
    Only the local case k = 1 supports the Dirichlet-form route.
    """
    constants = prob.constants
    if abs(constants.k - 1.0) > 1e-14:
        raise DomainError("transported bubbling reports require k = 1")
    R = chart.radii[n]
    scheme = scheme or ShellScheme.reaching(4.0 / R, l0=1.5, n_inner=64, n_shell=48)
    conf = chart.chart(n)
    beta_n = _cutoff_on_group(chart, n, constants)
    w_c = chart.group_center
    p_star = constants.p_star

    def W(z, t):  # transported bubble with cutoff
        return beta_n(z, t) * chart.profile_factor * bubble_eval_zt(chart.profile, z, t, constants)

    a_n = dirichlet_form(W, constants, scheme)
    m_n, _ = integrate_decaying(
        lambda z, t: np.abs(W(z, t)) ** p_star, constants.N, scheme, constants.measure
    )

    # couplings with the weak limit, all pulled to the group side
    Au = SpectralFunction(prob.basis.multipliers(constants.k) * u_infty.coeffs, prob.basis)

    def cross_quad_integrand(z, t):
        lam = conf.jacobian_zt(z, t)
        g = Au.eval(conf.map_zt(z, t))
        return lam ** ((constants.Q + 2 * constants.k) / (2.0 * constants.Q)) * g * W(z, t)

    cross_quad, _ = integrate_decaying(cross_quad_integrand, constants.N, scheme, constants.measure)

    def coupling_integrand(z, t):
        lam = conf.jacobian_zt(z, t)
        a = u_infty.eval(conf.map_zt(z, t))
        b = lam ** (-1.0 / p_star) * W(z, t)
        return lam * (
            np.abs(a + b) ** p_star - np.abs(a) ** p_star - np.abs(b) ** p_star
        )

    coupling, _ = integrate_decaying(coupling_integrand, constants.N, scheme, constants.measure)

    return {
        "R_n": R,
        "a_n": a_n,
        "m_n": m_n,
        "cross_quad": cross_quad,
        "coupling_pstar": coupling,
        "energy_piece": 0.5 * a_n - m_n / p_star,
    }


def ps_energy_report(
    spec: PSSequenceSpec,
    n: int,
    prob: YamabeProblem,
    scheme: ShellScheme | None = None,
) -> dict:
    """Energies and masses of u_n evaluated by exact conformal transport.

    Bubble-bubble interactions vanish identically for k = 1 when the cutoff
    supports are disjoint (the operator is local), which the sequence spec
    enforces; couplings with the weak limit are integrated on the group side.
    """
    constants = prob.constants
    if len(spec.bubbles) > 1 and not spec.disjoint_supports():
        raise DomainError("overlapping bubble supports are out of scope")
    E_inf = prob.energy(spec.u_infty)
    mass_inf = prob.lp_star_mass(spec.u_infty)
    nsq_inf = float(np.sum(prob.basis.multipliers(constants.k) * spec.u_infty.coeffs**2))
    pieces = [bubble_piece_report(ch, n, spec.u_infty, prob, scheme) for ch in spec.bubbles]
    E_n = (
        E_inf
        + sum(p["energy_piece"] for p in pieces)
        + sum(p["cross_quad"] for p in pieces)
        - sum(p["coupling_pstar"] for p in pieces) / constants.p_star
    )
    mass_n = mass_inf + sum(p["m_n"] + p["coupling_pstar"] for p in pieces)
    nsq_n = nsq_inf + sum(p["a_n"] + 2.0 * p["cross_quad"] for p in pieces)
    return {
        "n": n,
        "R_n": spec.bubbles[0].radii[n] if spec.bubbles else None,
        "E_n": E_n,
        "E_infty": E_inf,
        "energy_gap": E_n - E_inf - len(spec.bubbles) * constants.C_E,
        "mass_n": mass_n,
        "mass_infty": mass_inf,
        "mass_gap": mass_n - mass_inf - sum(p["m_n"] for p in pieces),
        "hk_norm_sq": nsq_n,
        "E_vn": sum(p["energy_piece"] for p in pieces),
        "pieces": pieces,
    }


def quantization_ladder(spec: PSSequenceSpec, prob: YamabeProblem) -> list[dict]:
    """One report per rung of the radius ladder shared by all bubbles."""
    n_rungs = len(spec.bubbles[0].radii) if spec.bubbles else 0
    return [ps_energy_report(spec, n, prob) for n in range(n_rungs)]


# ---------------------------------------------------------------------------
# gradient decay along the ladder


def residual_report(
    spec: PSSequenceSpec,
    n: int,
    prob: YamabeProblem,
    scheme: ShellScheme | None = None,
) -> dict:
    """Upper and lower bounds for ||dE(u_n)||_{H^{-k}} via the group transport.

    Upper: the L^pbar norm of the transported pointwise residual G_n (the
    dual-space embedding constant is harmless for trend assertions).  Lower:
    pairing with the chart-adapted witness, divided by its H^k norm.  Also
    reports the naive spectral residual of the band-limited projection.
    """
    constants = prob.constants
    if abs(constants.k - 1.0) > 1e-14:
        raise DomainError("transported residual reports require k = 1")
    if len(spec.bubbles) != 1:
        raise DomainError("residual ladder is a one-bubble diagnostic")
    chart = spec.bubbles[0]
    R = chart.radii[n]
    scheme = scheme or ShellScheme.reaching(4.0 / R, l0=1.5, n_inner=64, n_shell=48)
    conf = chart.chart(n)
    beta_n = _cutoff_on_group(chart, n, constants)
    p_star = constants.p_star
    pbar = 2.0 * constants.Q / (constants.Q + 2.0 * constants.k)
    c_prof = chart.profile_factor
    expo = 1.0 / p_star

    # the weak limit must be an exact critical point for L(A) = A^{p*-1}
    resid_inf = prob.residual(spec.u_infty)

    def A_fn(z, t):
        lam = conf.jacobian_zt(z, t)
        return lam**expo * spec.u_infty.eval(conf.map_zt(z, t))

    def G_fn(z, t):
        om = bubble_eval_zt(chart.profile, z, t, constants)
        beta = beta_n(z, t)
        A = A_fn(z, t)
        # L(beta c om) = beta c om^3 + c om L(beta) + c H(beta, om), L = -Delta_b
        h = _beta_step(z, t)
        lap_beta = sub_laplacian(beta_n, z, t, h=h)
        gx_om, gy_om = bubble_horizontal_gradient_zt(z, t, constants)
        gx_b = np.stack(
            [vector_field(("X", j + 1), beta_n, z, t, h=h) for j in range(constants.N)], axis=-1
        )
        gy_b = np.stack(
            [vector_field(("Y", j + 1), beta_n, z, t, h=h) for j in range(constants.N)], axis=-1
        )
        cross = -0.5 * (np.sum(gx_b * gx_om, axis=-1) + np.sum(gy_b * gy_om, axis=-1))
        L_betaU = c_prof * (beta * om**3 - om * lap_beta + cross)
        W = A + c_prof * beta * om
        return A**3 + L_betaU - W**3

    ub_int, _ = integrate_decaying(
        lambda z, t: np.abs(G_fn(z, t)) ** pbar, constants.N, scheme, constants.measure
    )
    upper = ub_int ** (1.0 / pbar)

    # witness: fixed Schwartz-type bump in chart coordinates
    def witness(z, t):
        return np.exp(-0.5 * (np.sum((z * np.conj(z)).real, axis=-1) ** 2 + t * t))

    wit_scheme = ShellScheme(l0=2.0, n_shells=5, n_inner=64, n_shell=48)
    wit_pair, _ = integrate_decaying(
        lambda z, t: G_fn(z, t) * witness(z, t), constants.N, wit_scheme, constants.measure
    )
    wit_norm = math.sqrt(dirichlet_form(witness, constants, wit_scheme))
    lower = abs(wit_pair) / wit_norm

    u_n = ps_term(spec, n, prob)
    spectral = prob.residual(u_n)
    return {
        "n": n,
        "R_n": R,
        "residual_upper": float(upper),
        "residual_lower": float(lower),
        "residual_spectral": float(spectral),
        "residual_weak_limit": float(resid_inf),
    }


def gradient_decay_check(spec: PSSequenceSpec, n_list: Sequence[int], prob: YamabeProblem) -> dict:
    """Residual ladder with a trend verdict.

    ``decays`` asserts a 10x drop of the transported residual bound between
    the first and last rung; the negative control (a profile that is not a
    solution) is flagged when the lower bound stays within a factor two of
    its first-rung value.
    """
    rows = [residual_report(spec, n, prob) for n in n_list]
    first, last = rows[0], rows[-1]
    decays = last["residual_upper"] <= 0.1 * first["residual_upper"]
    stagnates = last["residual_lower"] >= 0.5 * first["residual_lower"]
    return {"rows": rows, "decays": bool(decays), "stagnates": bool(stagnates)}


# ---------------------------------------------------------------------------
# concentration measurements


def concentration_centers(N: int, n_s: int = 8, n_phi: int = 8, extra: Sequence[Array] = ()) -> Array:
    """Deterministic quasi-uniform center grid (512 points for the defaults)."""
    if N != 1:
        raise DomainError("center grids are provided for N = 1")
    x, _ = np.polynomial.legendre.leggauss(n_s)
    s = 0.5 * (x + 1.0)
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    S, P1, P2 = np.meshgrid(s, phi, phi, indexing="ij")
    z1 = np.sqrt(S) * np.exp(1.0j * P1)
    z2 = np.sqrt(1.0 - S) * np.exp(1.0j * P2)
    grid = np.stack([z1, z2], axis=-1).reshape(-1, 2)
    if extra:
        grid = np.concatenate([grid, np.stack([np.asarray(e) for e in extra])], axis=0)
    return grid


def concentration_function(
    u: SpectralFunction, r: float, centers: Array, prob: YamabeProblem
) -> tuple[float, Array]:
    """sup over centers of the p*-mass in the quasi-distance ball of radius r.

    Ball masses are node sums, so radii below the quadrature's angular spacing
    (about 2 pi / n_phi in phase, i.e. r ~ 0.3 at the default degree) can miss
    every node near unfavourably placed centers.
    """
    if r <= 0:
        raise DomainError("radius must be positive")
    nodes = prob.quad.nodes()
    w = prob.quad.weights()
    dens = np.abs(prob.values(u)) ** prob.constants.p_star * w
    inner = np.abs(1.0 - centers @ np.conj(nodes).T)
    masses = (2.0 * inner <= r * r) @ dens
    best = int(np.argmax(masses))
    return float(masses[best]), centers[best]


def detect_concentration(
    spec: PSSequenceSpec,
    epsilon0: float,
    r_list: Sequence[float],
    n_list: Sequence[int],
    prob: YamabeProblem,
    centers: Array | None = None,
    merge_dist: float | None = None,
) -> list[Array]:
    """Grid points whose small-ball p*-mass persists above epsilon0 along the ladder.

    Works on the band-limited terms, so the rungs in ``n_list`` must stay
    within the quadrature resolution; synthesized bubbles at finer rungs are
    measured through the transported reports instead.  Neighbouring grid
    centers see the same concentration point, so hits are merged within a
    ball-radius multiple.
    """
    if centers is None:
        centers = concentration_centers(prob.constants.N, extra=[b.center for b in spec.bubbles])
    if merge_dist is None:
        merge_dist = 2.2 * min(r_list)
    nodes = prob.quad.nodes()
    w = prob.quad.weights()
    inner = np.abs(1.0 - centers @ np.conj(nodes).T)
    persistent = np.full(len(centers), np.inf)
    r_small = min(r_list)
    for n in n_list:
        u_n = ps_term(spec, n, prob)
        dens = np.abs(prob.values(u_n)) ** prob.constants.p_star * w
        masses = (2.0 * inner <= r_small * r_small) @ dens
        persistent = np.minimum(persistent, masses)
    hits = [(float(m), c) for m, c in zip(persistent, centers) if m >= epsilon0]
    hits.sort(key=lambda t: -t[0])
    clusters: list[Array] = []
    for _, c in hits:
        if all(sphere_dist_zeta(c, rep) > merge_dist for rep in clusters):
            clusters.append(c)
    return clusters


# ---------------------------------------------------------------------------
# preconditioned descent below the compactness threshold


def hk_gradient_flow(
    u_start: SpectralFunction,
    prob: YamabeProblem,
    tau: float = 0.9,
    max_iter: int = 400,
    target_norm: float = 1e-5,
) -> dict:
    """u <- u - tau A_{2k}^{-1} dE(u) with Armijo backtracking.

    The preconditioner is diagonal in the basis, so each step is exact; the
    descent quantity is the squared dual norm of the gradient.
    """
    constants = prob.constants
    mult = prob.basis.multipliers(constants.k)
    u = u_start
    rows = []
    status = "budget_exhausted"
    for it in range(max_iter):
        g = prob.gradient(u)
        dual_sq = float(np.sum(g.coeffs**2 / mult))
        E0 = prob.energy(u)
        rows.append({"iter": it, "energy": E0, "hk_norm": norm_Hk(u, constants.k), "residual": math.sqrt(dual_sq)})
        if norm_Hk(u, constants.k) < target_norm:
            status = "converged_to_zero"
            break
        if math.sqrt(dual_sq) < 1e-12:
            status = "stationary"
            break
        step = tau
        accepted = False
        for _ in range(40):
            trial = SpectralFunction(u.coeffs - step * g.coeffs / mult, prob.basis)
            if prob.energy(trial) <= E0 - 1e-4 * step * dual_sq:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            status = "line_search_failed"
            break
        u = trial
    final_norm = norm_Hk(u, constants.k)
    if status == "budget_exhausted" and final_norm < target_norm:
        status = "converged_to_zero"
    return {"status": status, "final": u, "final_norm": final_norm, "rows": rows}


def subcritical_threshold_check(
    u_start: SpectralFunction,
    prob: YamabeProblem,
    energy_cap_frac: float = 1.0,
    **flow_kwargs,
) -> dict:
    """Run the preconditioned flow from data below the bubble energy level."""
    E0 = prob.energy(u_start)
    cap = energy_cap_frac * prob.constants.C_E
    report = hk_gradient_flow(u_start, prob, **flow_kwargs)
    report["initial_energy"] = E0
    report["below_threshold"] = bool(E0 < cap)
    return report


# ---------------------------------------------------------------------------
# three-term commutator


def three_commutator(u, v, k: float, p: HeisPoint, h: float = 1e-4) -> float:
    """H(u, v) = L_{2k}(uv) - u L_{2k} v - v L_{2k} u at a point.

    k = 1 is evaluated with the local operator; fractional orders go through
    the principal-value kernel route at reduced accuracy.
    """
    z, t = p.z[None, :], np.asarray([p.t])
    if abs(k - 1.0) < 1e-14:
        ue = u.evaluator if isinstance(u, ScalarFieldH) else u
        ve = v.evaluator if isinstance(v, ScalarFieldH) else v
        prod = lambda zz, tt: np.asarray(ue(zz, tt)) * np.asarray(ve(zz, tt))
        val = (
            -sub_laplacian(prod, z, t, h=h)
            + np.asarray(ue(z, t)) * sub_laplacian(ve, z, t, h=h)
            + np.asarray(ve(z, t)) * sub_laplacian(ue, z, t, h=h)
        )
        return float(val[0])
    from .riesz import pv_fractional

    ue = u.evaluator if isinstance(u, ScalarFieldH) else u
    ve = v.evaluator if isinstance(v, ScalarFieldH) else v
    prod = ScalarFieldH(lambda zz, tt: np.asarray(ue(zz, tt)) * np.asarray(ve(zz, tt)))
    alpha = 2.0 * k
    return (
        pv_fractional(prod, alpha, p)
        - float(ue(z, t)[0]) * pv_fractional(ScalarFieldH(ve), alpha, p)
        - float(ve(z, t)[0]) * pv_fractional(ScalarFieldH(ue), alpha, p)
    )


def commutator_identity_value(u, v, p: HeisPoint, h: float = 1e-4) -> float:
    """-(1/2) sum_j (X_j u X_j v + Y_j u Y_j v) at a point (the k = 1 closed form)."""
    z, t = p.z[None, :], np.asarray([p.t])
    N = p.N
    acc = 0.0
    for j in range(1, N + 1):
        for kind in ("X", "Y"):
            du = vector_field((kind, j), u, z, t, h=h)
            dv = vector_field((kind, j), v, z, t, h=h)
            acc += float(du[0] * dv[0])
    return -0.5 * acc
