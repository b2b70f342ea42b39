"""Bidegree harmonic bases on S^{2N+1}, sphere quadrature, and fractional multipliers.

L^2 of the sphere splits into blocks H_{j,l} of restrictions of harmonic
polynomials homogeneous of degree j in zeta and l in conj(zeta).  The basis
built here is real-valued and orthonormal for the contact volume form dv_S,
whose total mass is 2^{2N+2} pi^{N+1}.  All inner products used during
construction come from closed-form monomial moments, so orthonormality is
limited only by linear-algebra conditioning, never by quadrature.

The fractional operator of order 2k acts diagonally: the element with label
(j, l) is multiplied by lam_j(k) * lam_l(k), with Gamma-ratio multipliers
lam_j(k) = Gamma((Q+2k)/4 + j) / Gamma((Q-2k)/4 + j).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import BasisConstructionError, DomainError
from .polynomials import Poly, conformal_sublaplacian, poly_add, poly_conj, poly_eval, poly_scale

Array = np.ndarray

# ---------------------------------------------------------------------------
# closed-form combinatorics


def surface_measure(N: int) -> float:
    """Euclidean surface measure of S^{2N+1}: 2 pi^{N+1} / N!."""
    return 2.0 * math.pi ** (N + 1) / math.factorial(N)


def total_sphere_mass(N: int) -> float:
    """Mass of dv_S: 2^{2N+1} N! times the surface measure, i.e. 2^{2N+2} pi^{N+1}."""
    return float(2 ** (2 * N + 1) * math.factorial(N) * surface_measure(N))


def dim_H(j: int, l: int, N: int) -> int:
    """Dimension of the bidegree-(j, l) harmonic block."""
    if j < 0 or l < 0 or N < 1:
        raise DomainError("need j, l >= 0 and N >= 1")
    num = (
        Fraction(math.factorial(j + N - 1))
        * math.factorial(l + N - 1)
        * (j + l + N)
    )
    den = (
        Fraction(math.factorial(N))
        * math.factorial(N - 1)
        * math.factorial(j)
        * math.factorial(l)
    )
    val = num / den
    assert val.denominator == 1
    return int(val)


def monomial_moment(alpha: Sequence[int], beta: Sequence[int], N: int, total_mass: float | None = None) -> float:
    """Integral of zeta^alpha conj(zeta)^beta over the sphere against dv_S.

    Vanishes unless alpha == beta; the diagonal value is
    total_mass * alpha! N! / (N + |alpha|)!.
    """
    alpha, beta = tuple(alpha), tuple(beta)
    if alpha != beta:
        return 0.0
    mass = total_sphere_mass(N) if total_mass is None else total_mass
    num = Fraction(1)
    for a in alpha:
        num *= math.factorial(a)
    return mass * float(num * math.factorial(N) / math.factorial(N + sum(alpha)))


def _moment_fraction(kappa: tuple[int, ...], N: int) -> float:
    num = Fraction(1)
    for a in kappa:
        num *= math.factorial(a)
    return float(num * math.factorial(N) / math.factorial(N + sum(kappa)))


def lambda_jk(j: int, k: float, Q: int) -> float:
    """Gamma-ratio multiplier of the order-2k operator on degree index j."""
    if not (0 < 2 * k < Q):
        raise DomainError(f"need 0 < 2k < Q, got k={k}, Q={Q}")
    return math.exp(math.lgamma((Q + 2 * k) / 4.0 + j) - math.lgamma((Q - 2 * k) / 4.0 + j))


def _multiindices(degree: int, length: int) -> list[tuple[int, ...]]:
    if length == 1:
        return [(degree,)]
    out = []
    for first in range(degree, -1, -1):
        for rest in _multiindices(degree - first, length - 1):
            out.append((first,) + rest)
    return out


# ---------------------------------------------------------------------------
# harmonic basis construction


@dataclass
class HarmonicBasis:
    """Real orthonormal basis adapted to the bidegree decomposition.

    Elements carry labels (j, l, m); the coefficient matrix expresses each
    element over a global table of ambient monomials.  The tables are
    Hermitian-symmetric, so every element is a real function.
    """

    N: int
    jmax: int
    lmax: int
    mon_keys: list[tuple[tuple[int, ...], tuple[int, ...]]]
    coeff: Array  # (n_basis, n_mon) complex
    labels_j: Array
    labels_l: Array
    block_slices: dict[tuple[int, int], slice]

    @property
    def n_basis(self) -> int:
        return self.coeff.shape[0]

    @property
    def total_mass(self) -> float:
        return total_sphere_mass(self.N)

    def label(self, idx: int) -> tuple[int, int, int]:
        j, l = int(self.labels_j[idx]), int(self.labels_l[idx])
        return j, l, idx - self.block_slices[(j, l)].start

    def index_of(self, j: int, l: int, m: int = 0) -> int:
        return self.block_slices[(j, l)].start + m

    def multipliers(self, k: float) -> Array:
        Q = 2 * self.N + 2
        lj = np.array([lambda_jk(int(j), k, Q) for j in self.labels_j])
        ll = np.array([lambda_jk(int(l), k, Q) for l in self.labels_l])
        return lj * ll

    def element_poly(self, idx: int) -> Poly:
        return {key: c for key, c in zip(self.mon_keys, self.coeff[idx]) if c != 0}

    def eval_elements(self, zeta: Array, indices: Sequence[int] | None = None) -> Array:
        """Values of basis elements at points (..., N+1); returns (n_sel, ...)."""
        sel = np.arange(self.n_basis) if indices is None else np.asarray(indices)
        mon_vals = _monomial_values(self.mon_keys, np.asarray(zeta, dtype=np.complex128))
        vals = self.coeff[sel] @ mon_vals
        return vals.real


def _monomial_values(keys, zeta: Array) -> Array:
    """Values of each monomial at each point: (n_mon, n_pts)."""
    zeta = zeta.reshape(-1, zeta.shape[-1])
    npts, nvar = zeta.shape
    maxdeg = max((max(max(a), max(b)) for a, b in keys), default=0)
    pows = np.empty((nvar, maxdeg + 1, npts), dtype=np.complex128)
    pows[:, 0] = 1.0
    for p in range(1, maxdeg + 1):
        pows[:, p] = pows[:, p - 1] * zeta.T
    cpows = np.conj(pows)
    out = np.empty((len(keys), npts), dtype=np.complex128)
    for i, (alpha, beta) in enumerate(keys):
        acc = pows[0, alpha[0]].copy()
        for v in range(1, nvar):
            if alpha[v]:
                acc *= pows[v, alpha[v]]
        for v in range(nvar):
            if beta[v]:
                acc *= cpows[v, beta[v]]
        out[i] = acc
    return out


def _combine_monomials(keys, weights: Array, zeta: Array, chunk: int = 200_000) -> Array:
    """sum_m weights[m] * monomial_m(zeta), chunked to bound peak memory."""
    zeta = zeta.reshape(-1, zeta.shape[-1])
    npts = zeta.shape[0]
    out = np.empty(npts, dtype=np.complex128)
    for c0 in range(0, npts, chunk):
        vals = _monomial_values(keys, zeta[c0 : c0 + chunk])
        out[c0 : c0 + chunk] = weights @ vals
    return out


class _MomentTable:
    """Closed-form Hermitian and bilinear pairings of ambient monomials."""

    def __init__(self, N: int, mass: float):
        self.N = N
        self.mass = mass
        self._cache: dict[tuple[int, ...], float] = {}

    def _mu(self, kappa: tuple[int, ...]) -> float:
        v = self._cache.get(kappa)
        if v is None:
            v = self.mass * _moment_fraction(kappa, self.N)
            self._cache[kappa] = v
        return v

    def herm(self, key1, key2) -> float:
        """<mono1, mono2> = integral of mono1 * conj(mono2)."""
        (a1, b1), (a2, b2) = key1, key2
        left = tuple(x + y for x, y in zip(a1, b2))
        right = tuple(x + y for x, y in zip(b1, a2))
        return self._mu(left) if left == right else 0.0

    def bilin(self, key1, key2) -> float:
        """integral of mono1 * mono2 (no conjugation)."""
        (a1, b1), (a2, b2) = key1, key2
        left = tuple(x + y for x, y in zip(a1, a2))
        right = tuple(x + y for x, y in zip(b1, b2))
        return self._mu(left) if left == right else 0.0

    def gram(self, keys1, keys2, pairing: str = "herm") -> Array:
        fn = self.herm if pairing == "herm" else self.bilin
        out = np.zeros((len(keys1), len(keys2)))
        for i, k1 in enumerate(keys1):
            for jj, k2 in enumerate(keys2):
                out[i, jj] = fn(k1, k2)
        return out


_EIG_CUT = 1e-10


def _orthonormal_block(G: Array, expected: int, j: int, l: int) -> tuple[Array, Array]:
    """Top eigenvectors of a (possibly complex) Gram matrix, rank-checked."""
    vals, vecs = np.linalg.eigh(G)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    top = vals[0] if vals.size else 0.0
    if top <= 0:
        raise BasisConstructionError(j, l, "Gram matrix is not positive")
    rank = int(np.sum(vals > _EIG_CUT * top))
    if rank != expected:
        raise BasisConstructionError(j, l, f"rank {rank} != expected dim {expected}")
    return vals[:expected], vecs[:, :expected]


def build_basis(N: int, jmax: int, lmax: int | None = None) -> HarmonicBasis:
    """Construct the real orthonormal bidegree basis up to (jmax, lmax).

    Per block: project the bidegree-(j, l) monomials off the span of the
    (j-1, l-1) monomials (which carries every lower block), orthonormalize the
    remainder by a symmetric eigen-decomposition, then realify.  For j > l the
    real and imaginary parts of the complex block fill the (j, l) and (l, j)
    labels; the diagonal blocks are realified through their 2d real Gram.
    """
    lmax = jmax if lmax is None else lmax
    if jmax > 32 or lmax > 32:
        raise DomainError("truncation above 32 is not supported")
    mass = total_sphere_mass(N)
    moments = _MomentTable(N, mass)

    mon_index: dict[tuple, int] = {}
    rows: list[dict[int, complex]] = []
    labels: list[tuple[int, int]] = []

    def mon_id(key) -> int:
        idx = mon_index.get(key)
        if idx is None:
            idx = len(mon_index)
            mon_index[key] = idx
        return idx

    def add_element(j: int, l: int, table: dict):
        rows.append({mon_id(k): c for k, c in table.items() if c != 0})
        labels.append((j, l))

    pairs = sorted(
        {(j, l) for j in range(jmax + 1) for l in range(lmax + 1)}
        | {(l, j) for j in range(jmax + 1) for l in range(lmax + 1)},
    )
    done: set[tuple[int, int]] = set()
    elements: dict[tuple[int, int], list[dict]] = {}

    for (j, l) in pairs:
        if (j, l) in done or j < l:
            continue
        done.update({(j, l), (l, j)})
        upper = [
            (a, b)
            for a in _multiindices(j, N + 1)
            for b in _multiindices(l, N + 1)
        ]
        if j >= 1 and l >= 1:
            lower = [
                (a, b)
                for a in _multiindices(j - 1, N + 1)
                for b in _multiindices(l - 1, N + 1)
            ]
        else:
            lower = []
        G_up = moments.gram(upper, upper)
        if lower:
            G_low = moments.gram(lower, lower)
            B = moments.gram(lower, upper)
            Y = np.linalg.lstsq(G_low, B, rcond=None)[0]
            G_perp = G_up - B.T @ Y
            X = Y  # real moments: conj(Y) == Y
        else:
            G_perp = G_up
            X = np.zeros((0, len(upper)))

        def perp_table(vec: Array) -> Poly:
            table: Poly = {}
            for a, key in enumerate(upper):
                if vec[a]:
                    table[key] = table.get(key, 0.0) + vec[a]
            if len(lower):
                low_c = -X @ vec
                for m, key in enumerate(lower):
                    if low_c[m]:
                        table[key] = table.get(key, 0.0) + low_c[m]
            return table

        d = dim_H(j, l, N)
        if j > l:
            svals, svecs = _orthonormal_block(G_perp, d, j, l)
            re_list, im_list = [], []
            for m in range(d):
                y = perp_table(svecs[:, m] / math.sqrt(svals[m]))
                yc = poly_conj(y)
                re_list.append(poly_add(poly_scale(y, 1 / math.sqrt(2)), poly_scale(yc, 1 / math.sqrt(2))))
                im_list.append(poly_add(poly_scale(y, -1j / math.sqrt(2)), poly_scale(yc, 1j / math.sqrt(2))))
            elements[(j, l)] = re_list
            elements[(l, j)] = im_list
        else:
            # diagonal block: orthonormalize { Re q_a, Im q_a } with the real Gram
            n_up = len(upper)
            Bq = np.zeros((n_up, n_up))
            # bilinear pairing of the projected generators
            B_upup = moments.gram(upper, upper, "bilin")
            if len(lower):
                B_uplow = moments.gram(upper, lower, "bilin")
                B_lowlow = moments.gram(lower, lower, "bilin")
                Bq = B_upup - B_uplow @ X - X.T @ B_uplow.T + X.T @ B_lowlow @ X
            else:
                Bq = B_upup
            Hq = G_perp
            S = np.zeros((2 * n_up, 2 * n_up))
            S[:n_up, :n_up] = 0.5 * (Bq + Hq)
            S[n_up:, n_up:] = 0.5 * (Hq - Bq)
            # real moments make the mixed Re/Im pairings vanish identically
            svals, svecs = _orthonormal_block(S, d, j, l)
            out = []
            for m in range(d):
                vec = svecs[:, m] / math.sqrt(svals[m])
                table: Poly = {}
                for a in range(n_up):
                    if vec[a] or vec[n_up + a]:
                        q = perp_table(np.eye(n_up)[a])
                        qc = poly_conj(q)
                        # Re q = (q + qc)/2, Im q = (q - qc)/(2i)
                        c_re, c_im = vec[a], vec[n_up + a]
                        table = poly_add(table, poly_scale(q, 0.5 * c_re - 0.5j * c_im))
                        table = poly_add(table, poly_scale(qc, 0.5 * c_re + 0.5j * c_im))
                out.append(table)
            elements[(j, j)] = out

    block_slices: dict[tuple[int, int], slice] = {}
    ordered = sorted(elements.keys())
    for key in ordered:
        start = len(rows)
        for table in elements[key]:
            add_element(key[0], key[1], table)
        block_slices[key] = slice(start, len(rows))

    keys_list = [None] * len(mon_index)
    for key, idx in mon_index.items():
        keys_list[idx] = key
    coeff = np.zeros((len(rows), len(keys_list)), dtype=np.complex128)
    for r, row in enumerate(rows):
        for cidx, c in row.items():
            coeff[r, cidx] = c
    lj = np.array([j for j, _ in labels], dtype=np.int64)
    ll = np.array([l for _, l in labels], dtype=np.int64)
    return HarmonicBasis(N, jmax, lmax, keys_list, coeff, lj, ll, block_slices)


# ---------------------------------------------------------------------------
# quadrature


@dataclass
class SphereQuadrature:
    """Quadrature for dv_S.

    N = 1: tensor-product rule in Hopf coordinates (Gauss-Legendre in
    s = |zeta_1|^2, uniform in the two phases), exact for bidegree
    polynomials of total degree <= ``degree``.  N >= 2: seeded Monte Carlo
    with equal weights; tolerances must then be statistical.
    """

    N: int
    degree: int
    total_mass: float
    s_nodes: Array | None = None
    s_weights: Array | None = None  # normalized to sum 1
    n_phi: int = 0
    mc_nodes: Array | None = None
    seed: int | None = None
    _flat_nodes: Array | None = field(default=None, repr=False)

    @staticmethod
    def build(N: int, degree: int, seed: int = 0, n_samples: int = 200_000) -> "SphereQuadrature":
        mass = total_sphere_mass(N)
        if N == 1:
            n_phi = degree + 1
            n_s = degree // 4 + 1
            x, w = np.polynomial.legendre.leggauss(n_s)
            s = 0.5 * (x + 1.0)
            ws = 0.5 * w
            return SphereQuadrature(N, degree, mass, s, ws, n_phi)
        rng = np.random.default_rng(seed)
        g = rng.standard_normal((n_samples, 2 * (N + 1)))
        zeta = g[:, : N + 1] + 1.0j * g[:, N + 1 :]
        zeta /= np.linalg.norm(zeta, axis=1)[:, None]
        return SphereQuadrature(N, degree, mass, mc_nodes=zeta, seed=seed)

    # --- node access --------------------------------------------------------

    @property
    def grid_shape(self) -> tuple[int, ...]:
        if self.N == 1:
            return (len(self.s_nodes), self.n_phi, self.n_phi)
        return (len(self.mc_nodes),)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.grid_shape))

    def nodes(self) -> Array:
        """All nodes as a (n_nodes, N+1) complex array."""
        if self._flat_nodes is not None:
            return self._flat_nodes
        if self.N == 1:
            s = self.s_nodes[:, None, None]
            phi = 2.0 * math.pi * np.arange(self.n_phi) / self.n_phi
            e1 = np.exp(1.0j * phi)[None, :, None]
            e2 = np.exp(1.0j * phi)[None, None, :]
            z1 = np.sqrt(s) * e1 * np.ones((1, 1, self.n_phi))
            z2 = np.sqrt(1.0 - s) * e2 * np.ones((1, self.n_phi, 1))
            nodes = np.stack([z1, z2], axis=-1).reshape(-1, 2)
        else:
            nodes = self.mc_nodes
        self._flat_nodes = nodes
        return nodes

    def weights(self) -> Array:
        if self.N == 1:
            w = self.total_mass * self.s_weights / self.n_phi**2
            return np.repeat(w, self.n_phi**2)
        return np.full(len(self.mc_nodes), self.total_mass / len(self.mc_nodes))

    def integrate(self, values: Array) -> float:
        values = np.asarray(values)
        if self.N == 1:
            v = values.reshape(self.grid_shape)
            w = self.total_mass * self.s_weights / self.n_phi**2
            return float(np.einsum("s,sab->", w, v))
        return float(np.mean(values) * self.total_mass)

    def eval_fn(self, fn: Callable[[Array], Array]) -> Array:
        return np.asarray(fn(self.nodes()), dtype=np.float64)

    # --- spectral transforms (N = 1 fast path) -------------------------------

    def _profiles(self, basis: HarmonicBasis) -> tuple[Array, Array, Array]:
        key = "_prof_cache"
        cache = getattr(self, key, None)
        if cache is not None and cache[0] is basis.mon_keys:
            return cache[1], cache[2], cache[3]
        s = self.s_nodes
        prof = np.empty((len(basis.mon_keys), len(s)))
        bins = np.empty((len(basis.mon_keys), 2), dtype=np.int64)
        c = np.sqrt(s)
        q = np.sqrt(1.0 - s)
        for i, (alpha, beta) in enumerate(basis.mon_keys):
            a, b = alpha[0] + beta[0], alpha[1] + beta[1]
            prof[i] = c**a * q**b
            bins[i, 0] = (alpha[0] - beta[0]) % self.n_phi
            bins[i, 1] = (alpha[1] - beta[1]) % self.n_phi
        setattr(self, key, (basis.mon_keys, prof, bins[:, 0], bins[:, 1]))
        return prof, bins[:, 0], bins[:, 1]

    def analyze_values(self, values: Array, basis: HarmonicBasis) -> tuple[Array, float]:
        """Coefficients of the basis expansion; returns (coeffs, imag_residual)."""
        if self.N != 1:
            bv = basis.eval_elements(self.mc_nodes)
            w = self.total_mass / len(self.mc_nodes)
            return w * (bv @ np.asarray(values)), 0.0
        v = np.asarray(values, dtype=np.complex128).reshape(self.grid_shape)
        vhat = np.fft.fft2(v, axes=(1, 2))
        prof, b1, b2 = self._profiles(basis)
        gathered = vhat[:, b1, b2].T  # (n_mon, n_s)
        w = self.total_mass * self.s_weights / self.n_phi**2
        mono_int = np.einsum("ms,s,ms->m", prof, w, gathered)
        raw = np.conj(basis.coeff) @ mono_int
        resid = float(np.max(np.abs(raw.imag), initial=0.0))
        return raw.real.copy(), resid

    def synthesize_values(self, coeffs: Array, basis: HarmonicBasis) -> Array:
        """Values of sum_m c_m y_m on the quadrature grid."""
        if self.N != 1:
            bv = basis.eval_elements(self.mc_nodes)
            return np.asarray(coeffs) @ bv
        mon_c = basis.coeff.T @ np.asarray(coeffs, dtype=np.complex128)
        prof, b1, b2 = self._profiles(basis)
        n_s = len(self.s_nodes)
        fhat = np.zeros((n_s, self.n_phi, self.n_phi), dtype=np.complex128)
        flat = fhat.reshape(n_s, -1)
        idx = b1 * self.n_phi + b2
        np.add.at(flat.T, idx, (mon_c[:, None] * prof))
        vals = np.fft.ifft2(fhat, axes=(1, 2)) * self.n_phi**2
        return vals.real.reshape(-1)


# ---------------------------------------------------------------------------
# spectral functions


@dataclass
class SpectralFunction:
    """A real function on the sphere stored by coefficients in a HarmonicBasis."""

    coeffs: Array
    basis: HarmonicBasis
    tail_energy: float | None = None
    imag_residual: float | None = None

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64)
        if self.coeffs.shape != (self.basis.n_basis,):
            raise DomainError("coefficient vector does not match the basis size")

    def copy_with(self, coeffs: Array) -> "SpectralFunction":
        return SpectralFunction(coeffs, self.basis)

    def __add__(self, other: "SpectralFunction") -> "SpectralFunction":
        return SpectralFunction(self.coeffs + other.coeffs, self.basis)

    def __sub__(self, other: "SpectralFunction") -> "SpectralFunction":
        return SpectralFunction(self.coeffs - other.coeffs, self.basis)

    def __mul__(self, scalar: float) -> "SpectralFunction":
        return SpectralFunction(self.coeffs * scalar, self.basis)

    __rmul__ = __mul__

    def to_poly(self) -> Poly:
        mon_c = self.basis.coeff.T @ self.coeffs.astype(np.complex128)
        return {key: c for key, c in zip(self.basis.mon_keys, mon_c) if c != 0}

    def eval(self, zeta: Array) -> Array:
        shape = np.asarray(zeta).shape[:-1]
        mon_c = self.basis.coeff.T @ self.coeffs.astype(np.complex128)
        live = np.abs(mon_c) > 0
        keys = [k for k, m in zip(self.basis.mon_keys, live) if m]
        out = _combine_monomials(keys, mon_c[live], np.asarray(zeta, dtype=np.complex128))
        return out.real.reshape(shape)


def zero_function(basis: HarmonicBasis) -> SpectralFunction:
    return SpectralFunction(np.zeros(basis.n_basis), basis)


def constant_function(value: float, basis: HarmonicBasis) -> SpectralFunction:
    c = np.zeros(basis.n_basis)
    c[basis.index_of(0, 0, 0)] = value * math.sqrt(basis.total_mass)
    return SpectralFunction(c, basis)


def basis_element(basis: HarmonicBasis, j: int, l: int, m: int = 0) -> SpectralFunction:
    c = np.zeros(basis.n_basis)
    c[basis.index_of(j, l, m)] = 1.0
    return SpectralFunction(c, basis)


def analyze(data, quad: SphereQuadrature, basis: HarmonicBasis) -> SpectralFunction:
    """Project samples or a callable onto the basis; reports tail diagnostics.

    ``tail_energy`` is the quadrature L^2 mass not captured by the truncation
    (zero for band-limited input up to rounding).
    """
    values = quad.eval_fn(data) if callable(data) else np.asarray(data, dtype=np.float64)
    coeffs, resid = quad.analyze_values(values, basis)
    l2 = quad.integrate(values * values)
    tail = max(l2 - float(np.sum(coeffs**2)), 0.0)
    return SpectralFunction(coeffs, basis, tail_energy=tail, imag_residual=resid)


def synthesize(f: SpectralFunction, s) -> float | Array:
    """Pointwise values of a spectral function (scalar for a single point)."""
    zeta = s.zeta if hasattr(s, "zeta") else np.asarray(s, dtype=np.complex128)
    out = f.eval(zeta)
    return float(out) if out.ndim == 0 else out


def apply_A2k(u: SpectralFunction, k: float) -> SpectralFunction:
    """Order-2k operator: multiply the (j, l) coefficients by lam_j(k) lam_l(k)."""
    return u.copy_with(u.coeffs * u.basis.multipliers(k))


def solve_A2k(f: SpectralFunction, k: float) -> SpectralFunction:
    return f.copy_with(f.coeffs / f.basis.multipliers(k))


def norm_Hk(u: SpectralFunction, k: float) -> float:
    return math.sqrt(float(np.sum(u.basis.multipliers(k) * u.coeffs**2)))


def norm_H_minus_k(f: SpectralFunction, k: float) -> float:
    return math.sqrt(float(np.sum(f.coeffs**2 / f.basis.multipliers(k))))


def pairing(f: SpectralFunction, u: SpectralFunction) -> float:
    """L^2 duality pairing; coefficients are in the same orthonormal basis."""
    return float(np.dot(f.coeffs, u.coeffs))


def apply_A2_differential(u, zeta) -> float | Array:
    """Apply the second-order conformal sub-Laplacian by exact differentiation.

    ``u`` may be a SpectralFunction or a polynomial table; the operator is
    applied symbolically to the ambient polynomial and evaluated at ``zeta``.
    """
    if isinstance(u, SpectralFunction):
        N = u.basis.N
        p = u.to_poly()
    else:
        p = u
        N = len(next(iter(p))[0]) - 1
    zarr = zeta.zeta if hasattr(zeta, "zeta") else np.asarray(zeta, dtype=np.complex128)
    ap = conformal_sublaplacian(p, N)
    out = poly_eval(ap, zarr).real
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# disk cache (CSV tables with a JSON header)


def save_basis(basis: HarmonicBasis, prefix: str) -> None:
    header = {"N": basis.N, "jmax": basis.jmax, "lmax": basis.lmax, "n_basis": basis.n_basis}
    with open(prefix + ".json", "w", encoding="utf-8") as fh:
        json.dump(header, fh)
    with open(prefix + ".csv", "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        nvar = basis.N + 1
        wr.writerow(
            ["element", "j", "l"]
            + [f"alpha{i}" for i in range(nvar)]
            + [f"beta{i}" for i in range(nvar)]
            + ["re", "im"]
        )
        for e in range(basis.n_basis):
            j, l = int(basis.labels_j[e]), int(basis.labels_l[e])
            for key, c in zip(basis.mon_keys, basis.coeff[e]):
                if c == 0:
                    continue
                wr.writerow([e, j, l, *key[0], *key[1], repr(float(c.real)), repr(float(c.imag))])


def load_basis(prefix: str) -> HarmonicBasis:
    with open(prefix + ".json", encoding="utf-8") as fh:
        header = json.load(fh)
    N, jmax, lmax, n_basis = header["N"], header["jmax"], header["lmax"], header["n_basis"]
    nvar = N + 1
    mon_index: dict[tuple, int] = {}
    entries: list[tuple[int, int, complex]] = []
    labels = [None] * n_basis
    with open(prefix + ".csv", newline="", encoding="utf-8") as fh:
        rd = csv.reader(fh)
        next(rd)
        for row in rd:
            e = int(row[0])
            labels[e] = (int(row[1]), int(row[2]))
            alpha = tuple(int(x) for x in row[3 : 3 + nvar])
            beta = tuple(int(x) for x in row[3 + nvar : 3 + 2 * nvar])
            key = (alpha, beta)
            idx = mon_index.setdefault(key, len(mon_index))
            entries.append((e, idx, float(row[-2]) + 1.0j * float(row[-1])))
    keys_list = [None] * len(mon_index)
    for key, idx in mon_index.items():
        keys_list[idx] = key
    coeff = np.zeros((n_basis, len(keys_list)), dtype=np.complex128)
    for e, idx, c in entries:
        coeff[e, idx] = c
    lj = np.array([j for j, _ in labels], dtype=np.int64)
    ll = np.array([l for _, l in labels], dtype=np.int64)
    slices: dict[tuple[int, int], slice] = {}
    start = 0
    for e in range(n_basis):
        key = labels[e]
        if key not in slices:
            slices[key] = slice(e, e)
    # rebuild slice extents
    for key in slices:
        idxs = [e for e in range(n_basis) if labels[e] == key]
        slices[key] = slice(min(idxs), max(idxs) + 1)
    return HarmonicBasis(N, jmax, lmax, keys_list, coeff, lj, ll, slices)


def save_quadrature(quad: SphereQuadrature, prefix: str) -> None:
    header = {
        "N": quad.N,
        "degree": quad.degree,
        "total_mass": quad.total_mass,
        "seed": quad.seed,
        "n_phi": quad.n_phi,
    }
    with open(prefix + ".json", "w", encoding="utf-8") as fh:
        json.dump(header, fh)
    nodes, w = quad.nodes(), quad.weights()
    with open(prefix + ".csv", "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        nvar = quad.N + 1
        wr.writerow([f"re{i}" for i in range(nvar)] + [f"im{i}" for i in range(nvar)] + ["weight"])
        for p, wi in zip(nodes, w):
            wr.writerow(
                [repr(float(x)) for x in p.real]
                + [repr(float(x)) for x in p.imag]
                + [repr(float(wi))]
            )
