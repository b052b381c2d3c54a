"""Lattices, the deformation into unimodular position, the grid map and shapes.

Bases are stored column-wise. For a lattice L with basis B and a primitive
integer vector c with B c on the line of 1-bar, the deformation is

    g = e^{t/(n-1)} (I - P) + e^{-t} P,   P = 1bar u^T / <u, 1bar>,

applied to cov(L)^{-1/n} B, where E = u^perp and
t = ln(cov^{-1/n} |1bar|). The grid of the deformed lattice Lambda is
(Lambda^* cap 1bar^perp) + P_{V0}(u(Lambda)), with u(Lambda) the dual
vector pairing to 1 with the unit generator of Lambda on the line.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import log, sqrt

import numpy as np

from .batch import break_ties_batch
from .exact_linalg import (
    check_conditioning,
    cross_product,
    gauss_reduce_2d,
    kernel_and_complement,
    lll_reduce,
    orth_project,
    sign_normalize,
)
from .fields import one_bar_vector

NORM_MODES = ("one_bar", "sqrt_n")


@dataclass(frozen=True)
class EmbeddedLattice:
    basis: np.ndarray
    one_coords: tuple[int, ...]
    signature: tuple[int, int]
    provenance: str = ""
    embedding: str = "plain"

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def one_bar(self) -> np.ndarray:
        return one_bar_vector(self.signature, self.embedding)

    def generator(self) -> np.ndarray:
        return self.basis @ np.asarray(self.one_coords, dtype=float)


@dataclass(frozen=True)
class DeformationParams:
    u: np.ndarray
    t: float | None = None
    norm_one_bar: float | None = None
    norm_mode: str = "one_bar"


@dataclass
class GridPoint:
    lat_basis: np.ndarray  # (n, n-1) canonical reduced basis, columns in V0
    translation: np.ndarray  # reduced translation in V0
    translation_raw: np.ndarray  # P_{V0}(u(Lambda)) before reduction
    coords: np.ndarray  # coordinates of translation in [0, 1)^{n-1}
    torsion: int | None = None


@dataclass(frozen=True)
class ShapePoint:
    gram: np.ndarray
    tau: tuple[float, float] | None = None


@dataclass
class ConsistencyWitness:
    betas: np.ndarray  # (n, n-1)
    tau_v: np.ndarray
    c_coeffs: np.ndarray
    D_v: float
    lambda_v: float
    alpha0: np.ndarray = field(repr=False, default=None)
    residuals: dict = field(default_factory=dict)


def covolume(L) -> float:
    B = L.basis if isinstance(L, EmbeddedLattice) else np.asarray(L, dtype=float)
    d = abs(float(np.linalg.det(B)))
    if d == 0.0:
        raise ValueError("singular basis")
    check_conditioning(B, 1e14)
    return d


def rescale_unimodular(L: EmbeddedLattice) -> EmbeddedLattice:
    c = covolume(L) ** (-1.0 / L.n)
    return replace(L, basis=c * L.basis)


def normalization_matrix(E1, E2, t: float) -> np.ndarray:
    """Matrix of g^t_{E1,E2}: e^{t/dim E1} on E1 and e^{-t/dim E2} on E2.

    E1, E2 are given by spanning vectors (rows).
    """
    E1 = np.atleast_2d(np.asarray(E1, dtype=float))
    E2 = np.atleast_2d(np.asarray(E2, dtype=float))
    S = np.column_stack([*E1, *E2])
    n = S.shape[0]
    if S.shape[1] != n or np.linalg.matrix_rank(S) < n:
        raise ValueError("E1 + E2 is not a direct sum decomposition of R^n")
    k1, k2 = len(E1), len(E2)
    scale = np.array([np.exp(t / k1)] * k1 + [np.exp(-t / k2)] * k2)
    return S @ np.diag(scale) @ np.linalg.inv(S)


def apply_normalization(L: EmbeddedLattice, E1, E2, t: float) -> EmbeddedLattice:
    return replace(L, basis=normalization_matrix(E1, E2, t) @ L.basis)


def flow_matrix(u, one_bar, t: float) -> np.ndarray:
    """g^t for E = u^perp expanding and the line of 1-bar contracting."""
    u = np.asarray(u, dtype=float)
    n = len(one_bar)
    ub = float(u @ one_bar)
    if abs(ub) < 1e-14 * np.linalg.norm(u) * np.linalg.norm(one_bar):
        raise ValueError("<u, 1bar> = 0: u^perp contains 1bar")
    P = np.outer(one_bar, u) / ub
    return np.exp(t / (n - 1)) * (np.eye(n) - P) + np.exp(-t) * P


def flow_time(cov: float, n: int, one_bar: np.ndarray, norm_mode: str = "one_bar") -> float:
    if norm_mode == "one_bar":
        norm = float(np.linalg.norm(one_bar))
    elif norm_mode == "sqrt_n":
        norm = sqrt(n)
    else:
        raise ValueError(f"norm_mode must be one of {NORM_MODES}")
    return log(cov ** (-1.0 / n) * norm)


def deform_to_Y1(L: EmbeddedLattice, params: DeformationParams) -> tuple[EmbeddedLattice, float]:
    cov = covolume(L)
    one_bar = L.one_bar
    t = params.t if params.t is not None else flow_time(cov, L.n, one_bar, params.norm_mode)
    g = flow_matrix(params.u, one_bar, t)
    return replace(L, basis=g @ (cov ** (-1.0 / L.n) * L.basis)), t


def dual_lattice(L) -> np.ndarray:
    B = L.basis if isinstance(L, EmbeddedLattice) else np.asarray(L, dtype=float)
    check_conditioning(B, 1e14)
    return np.linalg.inv(B).T


def canonical_basis(W: np.ndarray) -> np.ndarray:
    """Deterministic reduced basis of the lattice spanned by the columns of W."""
    k = W.shape[1]
    if k == 1:
        return sign_normalize(W[:, 0])[0][:, None]
    if k == 2:
        b1, b2 = gauss_reduce_2d(W[:, 0], W[:, 1])
        c1, c2 = break_ties_batch(b1[None, :], b2[None, :])
        return np.column_stack([c1[0], c2[0]])
    return lll_reduce(W).basis


def lattice_coords(W: np.ndarray, x: np.ndarray) -> np.ndarray:
    G = W.T @ W
    return np.linalg.solve(G, W.T @ x)


def grid_of(L: EmbeddedLattice, tol: float = 1e-9) -> GridPoint:
    c = np.asarray(L.one_coords)
    gen = L.generator()
    if abs(np.linalg.norm(gen) - 1.0) > tol:
        raise ValueError(f"generator on the line has norm {np.linalg.norm(gen):.12g}, expected 1")
    K, k0 = kernel_and_complement(L.one_coords)
    Bs = dual_lattice(L)
    lat = Bs @ np.array(K, dtype=float).T
    u = Bs @ np.array(k0, dtype=float)
    one_bar = L.one_bar
    if u @ one_bar < 0:
        u = -u
    raw = orth_project(u, one_bar)
    W = canonical_basis(lat)
    x = lattice_coords(W, raw)
    x = x - np.floor(x)
    x[x >= 1.0] = 0.0
    return GridPoint(W, W @ x, raw, x)


def torsion_order_coords(W: np.ndarray, x: np.ndarray, m_max: int = 12, tol: float = 1e-6) -> int | None:
    for m in range(1, m_max + 1):
        r = m * x - np.round(m * x)
        if np.linalg.norm(W @ r) < tol:
            return m
    return None


def torsion_order(G: GridPoint, m_max: int = 12, tol: float = 1e-6) -> int | None:
    return torsion_order_coords(G.lat_basis, G.coords, m_max, tol)


def shape_from_gram(G: np.ndarray) -> ShapePoint:
    """Shape of a lattice with Gram matrix G, normalized to determinant 1."""
    G = np.asarray(G, dtype=float)
    k = G.shape[0]
    det = float(np.linalg.det(G))
    if det <= 0:
        raise ValueError("rank deficient lattice")
    G = G / det ** (1.0 / k)
    if k == 1:
        return ShapePoint(np.ones((1, 1)))
    if k == 2:
        a, b, c = G[0, 0], G[0, 1], G[1, 1]
        for _ in range(200):
            q = round(b / a)
            if q:
                c = c - 2 * q * b + q * q * a
                b = b - q * a
            if c < a:
                a, c = c, a
                continue
            break
        b = abs(b)
        y = sqrt(max(a * c - b * b, 0.0)) / a
        return ShapePoint(np.array([[a, b], [b, c]]), (b / a, y))
    L = np.linalg.cholesky(G).T
    R = lll_reduce(L).basis
    return ShapePoint(R.T @ R)


def shape_point(obj) -> ShapePoint:
    """Shape of P_{V0}(L) for an EmbeddedLattice, or of the lattice part of a GridPoint."""
    if isinstance(obj, GridPoint):
        W = obj.lat_basis
        return shape_from_gram(W.T @ W)
    if isinstance(obj, EmbeddedLattice):
        W = projected_basis(obj)
        return shape_from_gram(W.T @ W)
    W = np.asarray(obj, dtype=float)
    return shape_from_gram(W.T @ W)


def projected_basis(L: EmbeddedLattice) -> np.ndarray:
    """Basis of P_{V0}(L): projections of a unimodular completion of the generator."""
    U = unimodular_completion(L.one_coords)
    return np.column_stack([orth_project(L.basis @ U[:, j], L.one_bar) for j in range(1, L.n)])


def unimodular_completion(c) -> np.ndarray:
    """Integer matrix with first column c and determinant +-1."""
    K, k0 = kernel_and_complement(c)
    M = np.array(K + [k0], dtype=np.int64)  # M c = e_n
    U = np.round(np.linalg.inv(M)).astype(np.int64)
    return np.column_stack([U[:, -1], U[:, :-1]])


def dual_in_subspace(W: np.ndarray) -> np.ndarray:
    """Basis of the dual of the lattice spanned by W inside span(W)."""
    return W @ np.linalg.inv(W.T @ W)


def pi1_pi2_consistency(L: EmbeddedLattice, u, tol: float = 1e-9, norm_mode: str = "one_bar") -> bool:
    s1 = shape_point(L)
    Ld, _ = deform_to_Y1(L, DeformationParams(np.asarray(u, dtype=float), norm_mode=norm_mode))
    G = grid_of(Ld, tol=1e-6 if norm_mode != "one_bar" else 1e-9)
    s2 = shape_point(dual_in_subspace(G.lat_basis))
    return shape_distance(s1, s2) < tol


def shape_distance(s1: ShapePoint, s2: ShapePoint) -> float:
    if s1.tau is not None and s2.tau is not None:
        return float(np.hypot(s1.tau[0] - s2.tau[0], s1.tau[1] - s2.tau[1]))
    return float(np.max(np.abs(s1.gram - s2.gram)))


def consistency_witness(L: EmbeddedLattice, u, norm_mode: str = "one_bar") -> ConsistencyWitness:
    """Explicit dual basis of the deformed lattice built from cross products.

    ``L`` must have basis columns (1bar, alpha_1, ..., alpha_{n-1}).
    Residuals reported:
      pairing     max_ij | |<beta_i, alpha_j^0>| - delta_ij |
      signs       sign of <beta_i, alpha_i^0> for each i
      in_v0       max_i |<beta_i, 1bar>|
      shift_id    distance of grid translation - (P(u)/<u, 1bar/|1bar|> + sum c_i beta_i) to the grid lattice
      shift_id_literal  same with <u, 1bar> in the denominator
      dual        max entry of [beta_1..beta_{n-1}, tau_v]^T [alpha^0_1..alpha^0_{n-1}, lambda D 1bar] - I (up to the signs)
    """
    if tuple(L.one_coords) != (1,) + (0,) * (L.n - 1):
        raise ValueError("witness expects 1bar as the first basis column")
    u = np.asarray(u, dtype=float)
    n = L.n
    one = L.one_bar
    if np.max(np.abs(L.basis[:, 0] - one)) > 1e-9:
        raise ValueError("first basis column is not 1bar")
    ub = float(u @ one)
    if abs(ub) < 1e-14:
        raise ValueError("<u, 1bar> = 0")
    alphas = L.basis[:, 1:]
    cov = covolume(L)
    Dv = cov ** (-1.0 / n)
    norm = float(np.linalg.norm(one)) if norm_mode == "one_bar" else sqrt(n)
    lam = 1.0 / (norm * Dv)
    c = (u @ alphas) / ub
    perp = alphas - np.outer(one, c)
    alpha0 = lam ** (-1.0 / (n - 1)) * Dv * perp + np.outer(one, c * Dv * lam)
    vecs = [perp[:, i] for i in range(n - 1)]
    denom = Dv * float(cross_product(*vecs) @ one)
    betas = np.empty((n, n - 1))
    for i in range(n - 1):
        v = list(vecs)
        v[i] = one
        betas[:, i] = lam ** (1.0 / (n - 1)) * cross_product(*v) / denom
    cr = cross_product(*[alpha0[:, i] for i in range(n - 1)])
    tau_v = cr / float(cr @ (Dv * lam * one))
    W = ConsistencyWitness(betas, tau_v, c, Dv, lam, alpha0)

    pair = betas.T @ alpha0
    W.residuals["pairing"] = float(np.max(np.abs(np.abs(pair) - np.eye(n - 1))))
    W.residuals["signs"] = [int(np.sign(pair[i, i])) for i in range(n - 1)]
    W.residuals["in_v0"] = float(np.max(np.abs(one @ betas)))
    full = np.column_stack([alpha0, Dv * lam * one])
    dual = np.column_stack([betas, tau_v])
    W.residuals["dual"] = float(np.max(np.abs(np.abs(dual.T @ full) - np.eye(n))))

    G = grid_of(replace(L, basis=full, one_coords=(0,) * (n - 1) + (1,)), tol=1e-6 if norm_mode != "one_bar" else 1e-9)
    base = orth_project(u, one)
    for key, scale in (("shift_id", norm), ("shift_id_literal", 1.0)):
        pred = scale * base / ub + betas @ c
        W.residuals[key] = _dist_mod_lattice(G.lat_basis, G.translation - pred)
    W.residuals["unimodular"] = abs(sqrt(float(np.linalg.det(G.lat_basis.T @ G.lat_basis))) - 1.0)
    return W


def _dist_mod_lattice(W: np.ndarray, v: np.ndarray) -> float:
    x = lattice_coords(W, v)
    best = np.inf
    base = np.floor(x)
    k = len(x)
    for off in np.ndindex(*([2] * k)):
        r = x - (base + np.array(off))
        best = min(best, float(np.linalg.norm(W @ r)))
    return best
