"""Polynomials in (zeta, conj(zeta)) on C^{N+1} with exact differential operators.

A polynomial is a dict mapping (alpha, beta) -> complex coefficient, where
alpha and beta are exponent tuples of length N+1 for zeta and conj(zeta).
This is the engine behind the sphere harmonic basis: tangential operators
T_j = d/dzeta_j - conj(zeta_j) * sum_k zeta_k d/dzeta_k act exactly on
monomials, so eigenvalue checks need no quadrature.
"""

from __future__ import annotations

from typing import Dict, Tuple

import numpy as np

Multi = Tuple[int, ...]
Poly = Dict[Tuple[Multi, Multi], complex]


def poly_add(p: Poly, q: Poly, coeff: complex = 1.0) -> Poly:
    out = dict(p)
    for key, c in q.items():
        out[key] = out.get(key, 0.0) + coeff * c
    return {k: v for k, v in out.items() if v != 0.0}


def poly_scale(p: Poly, c: complex) -> Poly:
    return {k: c * v for k, v in p.items()}


def poly_conj(p: Poly) -> Poly:
    """Complex conjugate as a function: swaps the exponent pair."""
    return {(beta, alpha): np.conj(c) for (alpha, beta), c in p.items()}


def monomial(alpha: Multi, beta: Multi) -> Poly:
    return {(tuple(alpha), tuple(beta)): 1.0 + 0.0j}


def _bump(idx: Multi, j: int, step: int) -> Multi:
    lst = list(idx)
    lst[j] += step
    return tuple(lst)


def d_zeta(p: Poly, j: int) -> Poly:
    out: Poly = {}
    for (alpha, beta), c in p.items():
        if alpha[j] > 0:
            key = (_bump(alpha, j, -1), beta)
            out[key] = out.get(key, 0.0) + c * alpha[j]
    return out


def d_zbar(p: Poly, j: int) -> Poly:
    out: Poly = {}
    for (alpha, beta), c in p.items():
        if beta[j] > 0:
            key = (alpha, _bump(beta, j, -1))
            out[key] = out.get(key, 0.0) + c * beta[j]
    return out


def mul_zeta(p: Poly, j: int) -> Poly:
    return {(_bump(alpha, j, 1), beta): c for (alpha, beta), c in p.items()}


def mul_zbar(p: Poly, j: int) -> Poly:
    return {(alpha, _bump(beta, j, 1)): c for (alpha, beta), c in p.items()}


def radial_z(p: Poly) -> Poly:
    """sum_k zeta_k d/dzeta_k; multiplies each monomial by its zeta-degree."""
    return {key: c * sum(key[0]) for key, c in p.items() if sum(key[0])}


def radial_zbar(p: Poly) -> Poly:
    return {key: c * sum(key[1]) for key, c in p.items() if sum(key[1])}


def t_op(p: Poly, j: int) -> Poly:
    """T_j = d/dzeta_j - conj(zeta_j) sum_k zeta_k d/dzeta_k."""
    return poly_add(d_zeta(p, j), mul_zbar(radial_z(p), j), coeff=-1.0)


def tbar_op(p: Poly, j: int) -> Poly:
    return poly_add(d_zbar(p, j), mul_zeta(radial_zbar(p), j), coeff=-1.0)


def conformal_sublaplacian(p: Poly, N: int) -> Poly:
    """-(1/2) sum_j (T_j Tbar_j + Tbar_j T_j) + N^2/4, exactly on polynomials."""
    acc: Poly = {}
    for j in range(N + 1):
        acc = poly_add(acc, t_op(tbar_op(p, j), j))
        acc = poly_add(acc, tbar_op(t_op(p, j), j))
    return poly_add(poly_scale(acc, -0.5), poly_scale(p, N * N / 4.0))


def ambient_laplacian(p: Poly, N: int) -> Poly:
    """Flat Laplacian 4 sum_j d2/dzeta_j dzbar_j on C^{N+1}; zero iff harmonic."""
    acc: Poly = {}
    for j in range(N + 1):
        acc = poly_add(acc, d_zbar(d_zeta(p, j), j), coeff=4.0)
    return acc


def poly_eval(p: Poly, zeta: np.ndarray) -> np.ndarray:
    """Evaluate at points of shape (..., N+1)."""
    zeta = np.asarray(zeta, dtype=np.complex128)
    zb = np.conj(zeta)
    out = np.zeros(zeta.shape[:-1], dtype=np.complex128)
    for (alpha, beta), c in p.items():
        term = np.full(zeta.shape[:-1], c, dtype=np.complex128)
        for j, a in enumerate(alpha):
            if a:
                term = term * zeta[..., j] ** a
        for j, b in enumerate(beta):
            if b:
                term = term * zb[..., j] ** b
        out += term
    return out


def bidegree_of(key: Tuple[Multi, Multi]) -> Tuple[int, int]:
    alpha, beta = key
    return sum(alpha), sum(beta)
