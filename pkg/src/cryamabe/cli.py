"""Command-line driver: seeded verification runs with CSV/JSON artifacts.

Every acceptance-style check is runnable by exactly one subcommand; outputs
are written atomically (temp file + rename) so interrupted runs never leave
half-written artifacts.  Exit codes: 0 all checks passed, 1 at least one
assertion failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys


def _cap_threads() -> None:
    cap = os.environ.get("CRYAMABE_THREADS")
    if cap:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, cap)


_cap_threads()

import numpy as np  # noqa: E402  (thread caps must precede the first import)

from .config import ExperimentConfig  # noqa: E402
from .errors import CRYamabeError  # noqa: E402


class CheckTable:
    """Rows of (check, value, threshold, passed) with an overall verdict."""

    def __init__(self, name: str):
        self.name = name
        self.rows: list[tuple[str, float, float, bool]] = []

    def add(self, check: str, value: float, threshold: float, larger_ok: bool = False) -> bool:
        ok = value >= threshold if larger_ok else value <= threshold
        self.rows.append((check, float(value), float(threshold), bool(ok)))
        return ok

    def record(self, check: str, value: float) -> None:
        self.rows.append((check, float(value), math.nan, True))

    @property
    def passed(self) -> bool:
        return all(ok for _, _, _, ok in self.rows)

    def write_csv(self, path: str) -> None:
        lines = ["check,value,threshold,passed"]
        for check, value, threshold, ok in self.rows:
            lines.append(f"{check},{value!r},{threshold!r},{int(ok)}")
        _atomic_write(path, "\n".join(lines) + "\n")

    def echo(self) -> None:
        for check, value, threshold, ok in self.rows:
            flag = "PASS" if ok else "FAIL"
            print(f"  [{flag}] {check}: value={value:.6g} threshold={threshold:.6g}")
        print(f"{self.name}: {'PASS' if self.passed else 'FAIL'}")


def _atomic_write(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_json(path: str, payload) -> None:
    _atomic_write(path, json.dumps(payload, indent=1, sort_keys=True) + "\n")


def _problem(cfg: ExperimentConfig):
    from .energy import YamabeProblem

    return YamabeProblem.build(cfg.N, cfg.k, cfg.jmax, cfg.lmax, cfg.quad_degree, seed=cfg.seed)


# ---------------------------------------------------------------------------
# subcommands


def run_verify_group(cfg: ExperimentConfig) -> CheckTable:
    from . import heisenberg as hg

    rng = np.random.default_rng(cfg.seed)
    table = CheckTable("verify-group")
    n = 10_000
    tol = 1e-12 * cfg.tol_scale

    def pts(count):
        z = rng.normal(size=(count, cfg.N)) + 1.0j * rng.normal(size=(count, cfg.N))
        return z, rng.normal(size=count)

    za, ta = pts(n)
    zb, tb = pts(n)
    zc, tc = pts(n)
    lhs = hg.mul_zt(*hg.mul_zt(za, ta, zb, tb), zc, tc)
    rhs = hg.mul_zt(za, ta, *hg.mul_zt(zb, tb, zc, tc))
    table.add("associativity", float(np.max(np.abs(lhs[1] - rhs[1])) + np.max(np.abs(lhs[0] - rhs[0]))), tol)
    zi, ti = hg.mul_zt(za, ta, *hg.inv_zt(za, ta))
    table.add("inverse", float(np.max(np.abs(zi)) + np.max(np.abs(ti))), tol)
    lam = rng.uniform(0.01, 10.0, size=n)
    zl, tl = lam[:, None] * za, lam * lam * ta
    table.add(
        "gauge_homogeneity",
        float(np.max(np.abs(hg.gauge_zt(zl, tl) - lam * hg.gauge_zt(za, ta)))),
        tol,
    )
    d1 = hg.dist_zt(*hg.mul_zt(zc, tc, za, ta), *hg.mul_zt(zc, tc, zb, tb))
    d2 = hg.dist_zt(za, ta, zb, tb)
    table.add("dist_left_invariance", float(np.max(np.abs(d1 - d2))), tol)
    # left invariance of the flow-stencil derivatives on a smooth field
    f = lambda z, t: np.sin(z[..., 0].real) * np.cos(t) + z[..., 0].imag ** 2
    za8, ta8 = pts(n)
    a = hg.HeisPoint(rng.normal(size=cfg.N) + 1.0j * rng.normal(size=cfg.N), float(rng.normal()))
    shifted = lambda z, t: f(*hg.mul_zt(a.z, a.t, z, t))
    lhsv = hg.vector_field(("X", 1), shifted, za8, ta8, h=1e-4)
    zr, tr = hg.mul_zt(a.z, a.t, za8, ta8)
    rhsv = hg.vector_field(("X", 1), f, zr, tr, h=1e-4)
    table.add("vector_field_left_invariance", float(np.max(np.abs(lhsv - rhsv))), 1e-9)
    # empirical quasi-triangle constant (recorded)
    d_ab = hg.dist_zt(za, ta, zb, tb)
    d_ac = hg.dist_zt(za, ta, zc, tc)
    d_cb = hg.dist_zt(zc, tc, zb, tb)
    K = float(np.max(d_ab / (d_ac + d_cb)))
    table.add("quasi_triangle_K", K, 2.0)
    return table


def run_verify_cayley(cfg: ExperimentConfig) -> CheckTable:
    from . import heisenberg as hg
    from .cayley import (
        ConformalChart,
        cayley_inv_zeta,
        cayley_zt,
        conformal_pullback,
        sphere_dist_zeta,
    )
    from .heisenberg import sub_laplacian
    from .spectral import SpectralFunction, apply_A2k

    rng = np.random.default_rng(cfg.seed)
    table = CheckTable("verify-cayley")
    n = 1000
    z = rng.normal(size=(n, cfg.N)) + 1.0j * rng.normal(size=(n, cfg.N))
    t = rng.normal(size=n)
    zeta = cayley_zt(z, t)
    table.add("unit_norm", float(np.max(np.abs(np.linalg.norm(zeta, axis=-1) - 1.0))), 1e-12)
    zi, ti = cayley_inv_zeta(zeta)
    table.add("roundtrip", float(np.max(np.abs(zi - z)) + np.max(np.abs(ti - t))), 1e-10)
    zb = rng.normal(size=(n, cfg.N)) + 1.0j * rng.normal(size=(n, cfg.N))
    tb = rng.normal(size=n)
    lhs = sphere_dist_zeta(zeta, cayley_zt(zb, tb))
    fac = lambda zz, tt: (4.0 / ((1.0 + np.sum((zz * np.conj(zz)).real, -1)) ** 2 + tt * tt)) ** 0.25
    rhs = hg.dist_zt(z, t, zb, tb) * fac(z, t) * fac(zb, tb)
    table.add("distance_relation", float(np.max(np.abs(lhs - rhs))), 1e-10)
    # ball inclusion: preimage of B_R contains the half-radius gauge ball
    R = 0.8
    base = cayley_zt(z[:1], t[:1])
    zsmp = rng.normal(size=(n, cfg.N)) + 1.0j * rng.normal(size=(n, cfg.N))
    tsmp = rng.normal(size=n)
    g = hg.gauge_zt(zsmp, tsmp)
    scale = (R / 2.0) * rng.uniform(0, 1, size=n) ** 0.25 / np.maximum(g, 1e-9)
    zin, tin = scale[:, None] * zsmp, scale**2 * tsmp
    zball, tball = hg.mul_zt(z[:1], t[:1], zin, tin)
    dist_sphere = sphere_dist_zeta(cayley_zt(zball, tball), base)
    table.add("ball_inclusion_violations", float(np.sum(dist_sphere > R)), 0.0)
    if abs(cfg.k - 1.0) < 1e-14:
        prob = _problem(cfg.with_overrides(jmax=min(cfg.jmax, 4)))
        chart = ConformalChart.plain_cayley(cfg.N)
        worst = 0.0
        for _ in range(20):
            c = rng.standard_normal(prob.basis.n_basis)
            u = SpectralFunction(c, prob.basis)
            Au = apply_A2k(u, 1.0)
            F = conformal_pullback(lambda zz: u.eval(zz), chart, 1.0)
            zz = 0.8 * (rng.normal(size=(100, cfg.N)) + 1.0j * rng.normal(size=(100, cfg.N)))
            tt = rng.normal(size=100)
            lhsc = -sub_laplacian(F, zz, tt, h=1e-4)
            rhsc = chart.jacobian_zt(zz, tt) ** ((cfg.N + 2) / (2.0 * cfg.N + 2.0)) * Au.eval(chart.map_zt(zz, tt))
            scale_c = np.median(np.abs(rhsc))
            worst = max(worst, float(np.max(np.abs(lhsc - rhsc) / np.maximum(np.abs(rhsc), 1e-3 * scale_c))))
        table.add("conformal_covariance", worst, 1e-4 * cfg.tol_scale)
    return table


def run_verify_spectral(cfg: ExperimentConfig) -> CheckTable:
    from .spectral import SpectralFunction, analyze, apply_A2_differential

    prob = _problem(cfg)
    table = CheckTable("verify-spectral")
    rng = np.random.default_rng(cfg.seed)
    basis, quad = prob.basis, prob.quad
    vals = np.stack([quad.synthesize_values(np.eye(basis.n_basis)[i], basis) for i in range(basis.n_basis)])
    gram = np.einsum("in,n,jn->ij", vals, quad.weights(), vals)
    table.add("orthonormality", float(np.max(np.abs(gram - np.eye(basis.n_basis)))), 1e-8 * cfg.tol_scale)
    if abs(cfg.k - 1.0) < 1e-14:
        g = rng.standard_normal((30, 2 * (cfg.N + 1)))
        zeta = g[:, : cfg.N + 1] + 1.0j * g[:, cfg.N + 1 :]
        zeta /= np.linalg.norm(zeta, axis=1)[:, None]
        mult = basis.multipliers(1.0)
        worst = 0.0
        for i in range(basis.n_basis):
            e = SpectralFunction(np.eye(basis.n_basis)[i], basis)
            lhs = apply_A2_differential(e, zeta)
            rhs = mult[i] * e.eval(zeta)
            worst = max(worst, float(np.max(np.abs(lhs - rhs)) / max(np.max(np.abs(rhs)), 1e-12)))
        table.add("eigen_consistency", worst, 1e-6 * cfg.tol_scale)
    c = rng.standard_normal(basis.n_basis)
    u = SpectralFunction(c, basis)
    v = quad.synthesize_values(c, basis)
    back = analyze(v, quad, basis)
    table.add("roundtrip", float(np.max(np.abs(back.coeffs - c))), 1e-7 * cfg.tol_scale)
    table.add("parseval", abs(quad.integrate(v * v) - float(np.sum(c * c))), 1e-8 * max(1.0, float(np.sum(c * c))))
    return table


def run_sobolev_sharpness(cfg: ExperimentConfig) -> CheckTable:
    from .energy import sobolev_constant, lambda0
    from .spectral import total_sphere_mass, basis_element

    table = CheckTable("sobolev-sharpness")
    for (NN, kk) in ((1, 1.0), (1, 0.5), (2, 1.0)):
        Q = 2 * NN + 2
        ident = sobolev_constant(NN, kk) * lambda0(NN, kk) ** 2 * total_sphere_mass(NN) ** (2 * kk / Q)
        table.add(f"closed_form_identity_N{NN}_k{kk}", abs(ident - 1.0), 1e-12)
    prob = _problem(cfg)
    q_const = prob.sobolev_quotient(prob.ground_constant())
    table.add("constant_saturates", abs(q_const - prob.constants.C_S) / prob.constants.C_S, 5e-3)
    q_mode = prob.sobolev_quotient(basis_element(prob.basis, 1, 0, 0))
    table.add("mode_strictly_below", prob.constants.C_S - q_mode, 1e-4, larger_ok=True)
    ks = np.linspace(0.2, 1.6, 8)
    cs = [sobolev_constant(1, float(kk)) for kk in ks]
    table.record("cs_monotone_decreasing_in_k", float(np.max(np.diff(cs))))
    return table


def run_bubble_residual(cfg: ExperimentConfig) -> CheckTable:
    from .energy import (
        BubbleParams,
        bubble_eval_zt,
        bubble_field,
        energy_heis,
        calibrate_normalizations,
    )
    from .heisenberg import HeisPoint, ShellScheme, sub_laplacian
    from .cayley import ConformalChart, conformal_pullback

    prob = _problem(cfg)
    consts = prob.constants
    table = CheckTable("bubble-residual")
    rng = np.random.default_rng(cfg.seed)
    table.record("cQ", consts.cQ)
    # pushforward of the standard bubble equals the constant solution
    chart = ConformalChart.plain_cayley(cfg.N)
    field = conformal_pullback(lambda zeta: np.full(zeta.shape[:-1], consts.u0), chart, consts.k)
    z = rng.normal(size=(100, cfg.N)) + 1.0j * rng.normal(size=(100, cfg.N))
    t = 2.0 * rng.normal(size=100)
    direct = bubble_eval_zt(BubbleParams.standard(cfg.N), z, t, consts)
    table.add("pushforward_matches_constant", float(np.max(np.abs(field(z, t) - direct) / direct)), 1e-8)
    if abs(cfg.k - 1.0) < 1e-14:
        om = bubble_field(BubbleParams.standard(cfg.N), consts)
        lhs = -sub_laplacian(om, z, t, h=1e-4)
        rhs = om(z, t) ** (consts.p_star - 1.0)
        table.add("pde_residual", float(np.max(np.abs(lhs - rhs) / rhs)), 1e-5 * cfg.tol_scale)
        scheme = ShellScheme(l0=2.0, n_shells=6, n_inner=96, n_shell=48)
        shifted = HeisPoint(np.ones(cfg.N, dtype=np.complex128), 1.0)
        for lam in (0.5, 1.0, 2.0):
            for xi in (HeisPoint.origin(cfg.N), shifted):
                U = bubble_field(BubbleParams(lam, xi), consts)
                eh = energy_heis(U, consts, scheme=scheme, center=xi)
                table.add(f"energy_lam{lam}_t{xi.t}", abs(eh - consts.C_E) / consts.C_E, 1e-2 * cfg.tol_scale)
    rep = calibrate_normalizations(consts)
    table.add("kappa_calibration", rep["kappa_rel_err"], 5e-3)
    return table


def run_ps_quantization(cfg: ExperimentConfig, n_bubbles: int = 1) -> tuple[CheckTable, list[dict]]:
    from .bubbling import BubbleChart, PSSequenceSpec, quantization_ladder

    prob = _problem(cfg)
    consts = prob.constants
    table = CheckTable("ps-quantization")
    center_a = np.zeros(cfg.N + 1, dtype=np.complex128)
    center_a[0] = 1.0
    charts = [BubbleChart.standard(center_a, cfg.rn_ladder, consts)]
    if n_bubbles == 2:
        charts.append(BubbleChart.standard(-center_a, cfg.rn_ladder, consts))
    spec = PSSequenceSpec(prob.ground_constant(), tuple(charts))
    rows = quantization_ladder(spec, prob)
    gaps = [abs(r["energy_gap"]) / consts.C_E for r in rows]
    for r, g in zip(rows, gaps):
        table.record(f"gap_over_CE_at_R{r['R_n']:g}", g)
    trend_ok = all(b <= a * 1.1 or b < 0.02 for a, b in zip(gaps, gaps[1:]))
    table.add("gap_trend_decreasing", 0.0 if trend_ok else 1.0, 0.5)
    table.add("final_gap", gaps[-1], 0.02 * cfg.tol_scale if n_bubbles == 1 else 0.04 * cfg.tol_scale)
    table.add("hk_norm_bounded", max(r["hk_norm_sq"] for r in rows), 10.0 * (consts.C_E * 4 * (1 + n_bubbles)))
    mass_gaps = [abs(r["mass_gap"]) for r in rows]
    table.add("mass_quantization_final", mass_gaps[-1], 0.05 * cfg.tol_scale * consts.total_mass * consts.u0**4)
    return table, rows


def run_gradient_decay(cfg: ExperimentConfig) -> tuple[CheckTable, dict]:
    from .bubbling import BubbleChart, PSSequenceSpec, gradient_decay_check

    prob = _problem(cfg)
    consts = prob.constants
    table = CheckTable("gradient-decay")
    center = np.zeros(cfg.N + 1, dtype=np.complex128)
    center[0] = 1.0
    good = PSSequenceSpec(
        prob.ground_constant(), (BubbleChart.standard(center, cfg.rn_ladder, consts),)
    )
    rep = gradient_decay_check(good, range(len(cfg.rn_ladder)), prob)
    ratio = rep["rows"][0]["residual_upper"] / max(rep["rows"][-1]["residual_upper"], 1e-300)
    table.add("residual_drop_factor", ratio, 10.0, larger_ok=True)
    bad = PSSequenceSpec(
        prob.ground_constant(),
        (BubbleChart.standard(center, cfg.rn_ladder, consts, profile_factor=2.0),),
    )
    rep_bad = gradient_decay_check(bad, range(len(cfg.rn_ladder)), prob)
    table.add("negative_control_stagnates", 1.0 if rep_bad["stagnates"] else 0.0, 1.0, larger_ok=True)
    return table, {"good": rep, "bad": rep_bad}


def run_subcritical_flow(cfg: ExperimentConfig) -> CheckTable:
    from .bubbling import hk_gradient_flow, subcritical_threshold_check
    from .spectral import SpectralFunction, norm_Hk

    prob = _problem(cfg)
    consts = prob.constants
    table = CheckTable("subcritical-flow")
    rng = np.random.default_rng(cfg.seed)
    failures = 0
    for s in range(cfg.flow_seeds):
        c = rng.standard_normal(prob.basis.n_basis)
        u = SpectralFunction(c, prob.basis)
        ball = math.sqrt(consts.C_S ** (-consts.Q / (2 * consts.k)))
        u = (rng.uniform(0.1, 0.45) * ball / norm_Hk(u, consts.k)) * u
        rep = subcritical_threshold_check(u, prob, energy_cap_frac=0.9, target_norm=1e-5)
        if not (rep["below_threshold"] and rep["status"] == "converged_to_zero" and rep["final_norm"] < 1e-4):
            failures += 1
    table.add("flows_converged_to_zero", float(failures), 0.0)
    stat = hk_gradient_flow(prob.ground_constant(), prob, max_iter=20)
    moved = float(np.max(np.abs(stat["final"].coeffs - prob.ground_constant().coeffs)))
    table.add("critical_point_stationary", moved, 1e-10)
    return table


def run_riesz_check(cfg: ExperimentConfig) -> tuple[CheckTable, dict]:
    from . import riesz as rz
    from .heisenberg import BoxDomain, HeisPoint, ScalarFieldH

    table = CheckTable("riesz-check")
    rng = np.random.default_rng(cfg.seed)
    spec1 = rz.KernelSpec(1.0, cfg.N, "riesz")
    spech = rz.KernelSpec(2.0 * cfg.k, cfg.N, "hyper")
    z = rng.normal(size=(50, cfg.N)) + 1.0j * rng.normal(size=(50, cfg.N))
    t = rng.normal(size=50)
    lam = 1.7
    hom = np.max(
        np.abs(
            rz.kernel_eval_zt(spec1, lam * z, lam * lam * t)
            - lam**spec1.exponent * rz.kernel_eval_zt(spec1, z, t)
        )
    )
    table.add("kernel_homogeneity", float(hom), 1e-14)
    table.add("hyper_decay_slope", abs(rz.decay_exponent_fit(spech) - spech.exponent), 1e-3)
    sg = rz.semigroup_check(shape=cfg.grid_shape, half_widths=cfg.grid_half_widths, seed=cfg.seed)
    table.add("semigroup_shape_residual", sg["shape_residual"], 0.05 * cfg.tol_scale)
    box = BoxDomain((-3.0,) * 2 * cfg.N + (-6.0,), (3.0,) * 2 * cfg.N + (6.0,))
    g48 = rz.green_inversion_check(rz.gaussian_bump(box, (48,) * 3, 0.6), margin=6, centered_radial=True)
    g64 = rz.green_inversion_check(rz.gaussian_bump(box, (64,) * 3, 0.6), margin=8, centered_radial=True)
    table.add("green_residual_64", g64["residual"], 0.10 * cfg.tol_scale)
    table.add(
        "green_constant_stability",
        abs(g48["constant"] - g64["constant"]) / abs(g64["constant"]),
        0.05 * cfg.tol_scale,
    )
    probe = rz.mapping_bound_probe(1.0, cfg.N, q=2.0, n_bumps=10, seed=cfg.seed)
    table.record("mapping_bound_max_ratio", probe["max_ratio"])
    table.add("mapping_bound_spread", probe["spread"], 3.0)
    const = ScalarFieldH(lambda zz, tt: np.ones_like(tt))
    table.add("pv_constant_vanishes", abs(rz.pv_fractional(const, 1.0, HeisPoint.origin(cfg.N))), 1e-12)
    bump = ScalarFieldH(lambda zz, tt: np.exp(-(np.sum((zz * np.conj(zz)).real, -1) ** 2 + tt * tt)))
    pv_val, pv_sens = rz.pv_fractional(bump, 1.0, HeisPoint.origin(cfg.N), return_sensitivity=True)
    table.add("pv_interior_max_sign", pv_val, 0.0, larger_ok=True)
    table.record("pv_delta_sensitivity", pv_sens)
    return table, {"semigroup": sg, "green_48": g48, "green_64": g64, "mapping": probe}


def run_commutator_check(cfg: ExperimentConfig) -> CheckTable:
    from .bubbling import commutator_identity_value, three_commutator
    from .heisenberg import HeisPoint

    table = CheckTable("commutator-check")
    rng = np.random.default_rng(cfg.seed)

    def poly_pair():
        cu = rng.uniform(-1, 1, size=6)
        cv = rng.uniform(-1, 1, size=6)

        def mk(c):
            def fn(z, t):
                x, y = z[..., 0].real, z[..., 0].imag
                return c[0] + c[1] * x + c[2] * y + c[3] * t + c[4] * x * y + c[5] * x * x
            return fn

        return mk(cu), mk(cv)

    worst = 0.0
    for _ in range(1000):
        u, v = poly_pair()
        z = rng.uniform(-1, 1, size=cfg.N) + 1.0j * rng.uniform(-1, 1, size=cfg.N)
        p = HeisPoint(z, float(rng.uniform(-1, 1)))
        direct = three_commutator(u, v, 1.0, p)
        closed = commutator_identity_value(u, v, p)
        worst = max(worst, abs(direct - closed))
    table.add("three_commutator_identity", worst, 1e-6 * cfg.tol_scale)
    x1 = lambda z, t: z[..., 0].real
    y1 = lambda z, t: z[..., 0].imag
    p0 = HeisPoint(np.array([0.4 + 0.3j]), 0.2)
    table.add("commutator_x1_y1", abs(three_commutator(x1, y1, 1.0, p0)), 1e-8)
    table.add("commutator_x1_x1", abs(three_commutator(x1, x1, 1.0, p0) + 0.5), 1e-8)
    return table


def run_minimax_explore(cfg: ExperimentConfig, out_dir: str | None = None) -> tuple[CheckTable, list]:
    from .minimax import SubgroupSpec, invariance_check, minimax_search, random_unitary, write_reports
    from .spectral import SpectralFunction

    prob = _problem(cfg)
    consts = prob.constants
    table = CheckTable("minimax-explore")
    rng = np.random.default_rng(cfg.seed)
    # invariance is a band-limited statement; a low truncation keeps the
    # rotated re-analysis cheap without weakening the check
    prob_inv = _problem(cfg.with_overrides(jmax=min(cfg.jmax, 4)))
    c = rng.standard_normal(prob_inv.basis.n_basis)
    u = SpectralFunction(c, prob_inv.basis)
    worst = 0.0
    for _ in range(100):
        worst = max(worst, invariance_check(u, random_unitary(cfg.N + 1, rng), prob_inv))
    table.add("energy_invariance", worst, 1e-6 * cfg.tol_scale)
    ctrl = minimax_search(SubgroupSpec(hopf_invariant=True), [prob.ground_constant()], prob, budget=60)
    table.add("hopf_control_energy", abs(ctrl[0].energy - consts.C_E), 1e-8)
    reports = minimax_search(
        SubgroupSpec(hopf_invariant=True, antipodal_odd=True),
        cfg.minimax_seeds,
        prob,
        budget=cfg.minimax_budget,
        tol=1e-5 * cfg.tol_scale,
        rng=np.random.default_rng(cfg.seed + 1),
    )
    best = min(reports, key=lambda r: r.residual_full)
    table.add("best_full_residual", best.residual_full, 1e-4 * cfg.tol_scale)
    table.add("energy_margin_positive", best.energy - consts.C_E, 0.0, larger_ok=True)
    table.record("best_energy_over_CE", best.energy / consts.C_E)
    sc_ok = all(r.residual_full <= 2.0 * max(r.residual, 1e-14) for r in reports if r.converged)
    table.add("symmetric_criticality", 0.0 if sc_ok else 1.0, 0.5)
    if out_dir:
        write_reports(reports + ctrl, os.path.join(out_dir, "minimax_candidates.json"))
    return table, reports


def run_calibrate(cfg: ExperimentConfig) -> tuple[CheckTable, dict]:
    from .energy import YamabeConstants, calibrate_normalizations

    consts = YamabeConstants.create(cfg.N, cfg.k)
    rep = calibrate_normalizations(consts)
    table = CheckTable("calibrate-normalizations")
    table.add("kappa_rel_err", rep["kappa_rel_err"], 5e-3)
    table.add("bubble_constant_rel_err", rep["bubble_constant_rel_err"], 1e-8)
    table.record("kappa_fit", rep["kappa_fit"])
    table.record("mass_closed_form", rep["mass_closed_form"])
    return table, rep


# ---------------------------------------------------------------------------
# driver

SUBCOMMANDS = (
    "verify-group",
    "verify-cayley",
    "verify-spectral",
    "sobolev-sharpness",
    "bubble-residual",
    "ps-quantization",
    "gradient-decay",
    "subcritical-flow",
    "riesz-check",
    "commutator-check",
    "minimax-explore",
    "calibrate-normalizations",
)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cryamabe", description=__doc__)
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", type=str, default=None, help="JSON config file")
    parser.add_argument("--N", type=int, default=None)
    parser.add_argument("--k", type=float, default=None)
    parser.add_argument("--jmax", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", type=str, default=None, help="output directory")
    parser.add_argument("--tol-scale", type=float, default=None)
    parser.add_argument("--bubbles", type=int, default=1, choices=(1, 2))
    parser.add_argument("--ladder", type=str, default=None, help="comma-separated radii or 'default'")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
        cfg = cfg.with_overrides(
            N=args.N, k=args.k, jmax=args.jmax, seed=args.seed, out_dir=args.out, tol_scale=args.tol_scale
        )
        if args.ladder and args.ladder != "default":
            cfg = cfg.with_overrides(rn_ladder=tuple(float(x) for x in args.ladder.split(",")))
    except (CRYamabeError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    out = cfg.out_dir
    extra_json = None
    try:
        if args.subcommand == "verify-group":
            table = run_verify_group(cfg)
        elif args.subcommand == "verify-cayley":
            table = run_verify_cayley(cfg)
        elif args.subcommand == "verify-spectral":
            table = run_verify_spectral(cfg)
        elif args.subcommand == "sobolev-sharpness":
            table = run_sobolev_sharpness(cfg)
        elif args.subcommand == "bubble-residual":
            table = run_bubble_residual(cfg)
        elif args.subcommand == "ps-quantization":
            table, rows = run_ps_quantization(cfg, n_bubbles=args.bubbles)
            lines = ["n,R_n,E_n,energy_gap,pstar_mass,mass_gap,hk_norm_sq"]
            for r in rows:
                lines.append(
                    f"{r['n']},{r['R_n']!r},{r['E_n']!r},{r['energy_gap']!r},{r['mass_n']!r},{r['mass_gap']!r},{r['hk_norm_sq']!r}"
                )
            _atomic_write(os.path.join(out, "ps_quantization_ladder.csv"), "\n".join(lines) + "\n")
        elif args.subcommand == "gradient-decay":
            table, reps = run_gradient_decay(cfg)
            lines = ["control,n,R_n,residual_upper,residual_lower,residual_spectral"]
            for tag in ("good", "bad"):
                for r in reps[tag]["rows"]:
                    lines.append(
                        f"{tag},{r['n']},{r['R_n']!r},{r['residual_upper']!r},{r['residual_lower']!r},{r['residual_spectral']!r}"
                    )
            _atomic_write(os.path.join(out, "gradient_decay_ladder.csv"), "\n".join(lines) + "\n")
        elif args.subcommand == "subcritical-flow":
            table = run_subcritical_flow(cfg)
        elif args.subcommand == "riesz-check":
            table, extra_json = run_riesz_check(cfg)
        elif args.subcommand == "commutator-check":
            table = run_commutator_check(cfg)
        elif args.subcommand == "minimax-explore":
            table, _ = run_minimax_explore(cfg, out_dir=out)
        elif args.subcommand == "calibrate-normalizations":
            table, extra_json = run_calibrate(cfg)
        else:  # pragma: no cover
            return 2
    except CRYamabeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    table.write_csv(os.path.join(out, args.subcommand.replace("-", "_") + ".csv"))
    if extra_json is not None:
        _write_json(os.path.join(out, args.subcommand.replace("-", "_") + ".json"), extra_json)
    table.echo()
    if not table.passed:
        _write_json(
            os.path.join(out, args.subcommand.replace("-", "_") + "_failures.json"),
            [
                {"check": c, "value": v, "threshold": thr}
                for c, v, thr, ok in table.rows
                if not ok
            ],
        )
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
