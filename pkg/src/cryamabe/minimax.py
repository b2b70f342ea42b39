"""Symmetry-restricted subspaces and Nehari-constrained critical point searches.

Two commuting constraints act diagonally on the bidegree blocks: invariance
under the phase circle zeta -> e^{i theta} zeta keeps exactly the blocks with
j = l, and oddness under the antipodal map keeps exactly the blocks with
j + l odd.  The antipodal map is the phase rotation at theta = pi, so the two
masks are provably incompatible: j = l forces j + l even at every truncation.
Requesting both therefore raises MaskEmptyError, and the combined search
degrades to the odd mask (the component that excludes constants and forces
sign changes), recording the degradation in its report.

Critical points are searched by preconditioned descent restricted to the
Nehari normalization, where the energy reduces to a positive multiple of the
squared Sobolev norm.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, MaskEmptyError
from .energy import YamabeProblem
from .spectral import SpectralFunction, norm_Hk

Array = np.ndarray


@dataclass(frozen=True)
class SubgroupSpec:
    """Flags selecting the symmetry constraints.

    ``hopf_invariant``: invariance under the diagonal phase action (circle
    orbits accumulate everywhere).  ``antipodal_odd``: equivariance
    u(-zeta) = -u(zeta) under the antipodal involution.
    """

    hopf_invariant: bool = False
    antipodal_odd: bool = False

    def __post_init__(self):
        if not (self.hopf_invariant or self.antipodal_odd):
            raise DomainError("at least one symmetry flag must be set")

    @property
    def name(self) -> str:
        parts = []
        if self.hopf_invariant:
            parts.append("hopf")
        if self.antipodal_odd:
            parts.append("odd")
        return "+".join(parts)


def mask_for(G: SubgroupSpec, basis) -> Array:
    """Boolean mask over basis elements kept by the invariance constraints."""
    keep = np.ones(basis.n_basis, dtype=bool)
    if G.hopf_invariant:
        keep &= basis.labels_j == basis.labels_l
    if G.antipodal_odd:
        keep &= (basis.labels_j + basis.labels_l) % 2 == 1
    if not np.any(keep):
        raise MaskEmptyError(
            f"mask {G.name!r} selects no coefficients: the phase circle contains "
            "the antipodal map, so invariant blocks (j = l) are all antipodally even"
        )
    return keep


def project_XG(u: SpectralFunction, G: SubgroupSpec) -> SpectralFunction:
    """Orthogonal projection onto the invariant subspace (exact coefficient mask)."""
    keep = mask_for(G, u.basis)
    return u.copy_with(np.where(keep, u.coeffs, 0.0))


def invariance_check(u: SpectralFunction, g: Array, prob: YamabeProblem) -> float:
    """|E(u) - E(u o g)| for a unitary g acting on C^{N+1}."""
    g = np.asarray(g, dtype=np.complex128)
    n = u.basis.N + 1
    if g.shape != (n, n) or np.max(np.abs(g.conj().T @ g - np.eye(n))) > 1e-10:
        raise DomainError("group element must be a unitary matrix on C^{N+1}")
    rotated_nodes = prob.quad.nodes() @ g.T
    vals = u.eval(rotated_nodes)
    u_rot = prob.analyze(vals)
    return abs(prob.energy(u) - prob.energy(u_rot))


def random_unitary(n: int, rng: np.random.Generator) -> Array:
    g = rng.standard_normal((n, n)) + 1.0j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))[None, :].conj()


def hopf_phase(n: int, theta: float) -> Array:
    return np.exp(1.0j * theta) * np.eye(n, dtype=np.complex128)


def orbit_accumulation_check(zeta, action, n_samples: int = 512) -> bool:
    """Whether the orbit of a point has accumulation points (minimum-gap scan).

    ``action`` is "hopf" (the full phase circle), ("discrete", m) for the
    cyclic phase subgroup of order m, or "trivial".  The scan declares
    accumulation when the smallest gap between distinct orbit samples keeps
    shrinking as the sample count grows.
    """
    z = zeta.zeta if hasattr(zeta, "zeta") else np.asarray(zeta, dtype=np.complex128)

    def orbit(m: int) -> Array:
        if action == "trivial":
            return z[None, :]
        if action == "hopf":
            theta = 2.0 * math.pi * np.arange(m) / m + 0.39269
            return np.exp(1.0j * theta)[:, None] * z[None, :]
        if isinstance(action, tuple) and action[0] == "discrete":
            order = int(action[1])
            theta = 2.0 * math.pi * np.arange(order) / order
            return np.exp(1.0j * theta)[:, None] * z[None, :]
        raise DomainError(f"unknown action {action!r}")

    def min_gap(pts: Array) -> float:
        if len(pts) < 2:
            return math.inf
        inner = np.abs(1.0 - pts @ np.conj(pts).T)
        d = np.sqrt(2.0 * inner)
        np.fill_diagonal(d, np.inf)
        return float(d.min())

    g1 = min_gap(orbit(n_samples // 2))
    g2 = min_gap(orbit(n_samples))
    return bool(g2 < 0.75 * g1 and np.isfinite(g2))


# ---------------------------------------------------------------------------
# Nehari normalization and the search


def nehari_rescale(u: SpectralFunction, prob: YamabeProblem) -> SpectralFunction:
    """Scale u so that its Sobolev norm squared equals its p*-mass.

    On the resulting ray point, E = (1/2 - 1/p*) ||u||^2.
    """
    k = prob.constants.k
    nsq = norm_Hk(u, k) ** 2
    if nsq == 0.0:
        raise DomainError("cannot normalize the zero function")
    mass = prob.lp_star_mass(u)
    t = (nsq / mass) ** (1.0 / (prob.constants.p_star - 2.0))
    return u.copy_with(t * u.coeffs)


@dataclass
class CriticalPointReport:
    candidate: SpectralFunction
    energy: float
    residual: float
    residual_full: float
    distance_to_bubble_level: float
    iterations: int
    converged: bool
    seed_index: int
    mask_name: str
    mask_degraded: bool = False
    message: str = ""
    nl_tail: float = 0.0  # quadrature L^2 mass of |u|^{p*-2}u beyond the truncation

    def __post_init__(self):
        if self.residual < 0 or self.residual_full < 0:
            raise DomainError("residuals are norms")

    def to_json_dict(self) -> dict:
        return {
            "mask": self.mask_name,
            "mask_degraded": self.mask_degraded,
            "seed_index": self.seed_index,
            "energy": self.energy,
            "residual_masked": self.residual,
            "residual_full": self.residual_full,
            "distance_to_bubble_level": self.distance_to_bubble_level,
            "iterations": self.iterations,
            "converged": self.converged,
            "jmax": self.candidate.basis.jmax,
            "nl_tail": self.nl_tail,
            "coefficients": list(map(float, self.candidate.coeffs)),
            "message": self.message,
        }


def _masked_descent(
    seed_fn: SpectralFunction,
    mask: Array,
    prob: YamabeProblem,
    budget: int,
    tol: float,
) -> tuple[SpectralFunction, int, bool, str]:
    k = prob.constants.k
    mult = prob.basis.multipliers(k)
    u = nehari_rescale(seed_fn.copy_with(np.where(mask, seed_fn.coeffs, 0.0)), prob)
    message = ""
    for it in range(budget):
        g = prob.gradient(u).coeffs * mask
        res = math.sqrt(float(np.sum(g**2 / mult)))
        if res < tol:
            return u, it, True, message
        step = 1.0
        E0 = prob.energy(u)
        moved = False
        direction = g / mult
        decrease = float(np.sum(g * direction))
        for _ in range(30):
            trial_c = u.coeffs - step * direction
            if not np.any(trial_c):
                step *= 0.5
                continue
            trial = nehari_rescale(u.copy_with(trial_c), prob)
            if prob.energy(trial) <= E0 - 1e-4 * step * decrease:
                u = trial
                moved = True
                break
            step *= 0.5
        if not moved:
            message = "line search stalled"
            break
    g = prob.gradient(u).coeffs * mask
    res = math.sqrt(float(np.sum(g**2 / mult)))
    return u, budget, res < tol, message or ("budget exhausted" if res >= tol else "")


def minimax_search(
    G: SubgroupSpec,
    seeds: Sequence[SpectralFunction] | int,
    prob: YamabeProblem,
    budget: int = 300,
    tol: float = 1e-5,
    rng: np.random.Generator | None = None,
) -> list[CriticalPointReport]:
    """Nehari-constrained descent inside the masked subspace, one run per seed.

    When both flags are requested the literal mask is empty (see module
    docstring); the search then runs on the odd mask alone and marks every
    report ``mask_degraded``.
    """
    degraded = False
    try:
        mask = mask_for(G, prob.basis)
        mask_name = G.name
    except MaskEmptyError:
        mask = mask_for(SubgroupSpec(antipodal_odd=True), prob.basis)
        mask_name = G.name + "->odd"
        degraded = True
    rng = rng or np.random.default_rng(0)
    if isinstance(seeds, int):
        seed_list = []
        for _ in range(seeds):
            c = rng.standard_normal(prob.basis.n_basis)
            seed_list.append(SpectralFunction(c, prob.basis))
    else:
        seed_list = list(seeds)
    k = prob.constants.k
    mult = prob.basis.multipliers(k)
    reports = []
    for idx, seed_fn in enumerate(seed_list):
        u, iters, converged, message = _masked_descent(seed_fn, mask, prob, budget, tol)
        grad = prob.gradient(u)
        g_full = grad.coeffs
        res_masked = math.sqrt(float(np.sum((g_full * mask) ** 2 / mult)))
        res_full = math.sqrt(float(np.sum(g_full**2 / mult)))
        E = prob.energy(u)
        reports.append(
            CriticalPointReport(
                candidate=u,
                energy=E,
                residual=res_masked,
                residual_full=res_full,
                distance_to_bubble_level=abs(E - prob.constants.C_E),
                iterations=iters,
                converged=converged,
                seed_index=idx,
                mask_name=mask_name,
                mask_degraded=degraded,
                message=message,
                nl_tail=grad.tail_energy or 0.0,
            )
        )
    return reports


def write_reports(reports: Sequence[CriticalPointReport], path: str) -> None:
    payload = [r.to_json_dict() for r in reports]
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
    import os

    os.replace(tmp, path)
