"""Vectorized grid computation for stacks of embedded bases.

Every input basis has shape (n, n) with the first column equal to 1-bar, so
the generator coordinates are e_1 and the lattice part of the grid is spanned
by the remaining dual basis vectors. Results agree with the per-object
functions in :mod:`nfgrids.lattice` (same reduction and sign rules).
"""

from __future__ import annotations

import numpy as np

from .exact_linalg import batched_cross, lll_reduce


def sign_normalize_rows(V: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Flip each vector in (N, n) so its last coordinate above tol*max is positive."""
    scale = np.max(np.abs(V), axis=1, keepdims=True)
    big = np.abs(V) > tol * np.maximum(scale, 1e-300)
    last = V.shape[1] - 1 - np.argmax(big[:, ::-1], axis=1)
    s = np.sign(V[np.arange(len(V)), last])
    s[s == 0] = 1
    return V * s[:, None]


def gauss_reduce_batch(b1: np.ndarray, b2: np.ndarray, max_iter: int = 500) -> tuple[np.ndarray, np.ndarray]:
    b1, b2 = b1.copy(), b2.copy()
    sw = np.einsum("ij,ij->i", b1, b1) > np.einsum("ij,ij->i", b2, b2)
    b1[sw], b2[sw] = b2[sw], b1[sw].copy()
    active = np.ones(len(b1), dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if len(idx) == 0:
            break
        x1, x2 = b1[idx], b2[idx]
        n1 = np.einsum("ij,ij->i", x1, x1)
        q = np.round(np.einsum("ij,ij->i", x1, x2) / n1)
        x2 = x2 - q[:, None] * x1
        n2 = np.einsum("ij,ij->i", x2, x2)
        sw = n2 < n1
        y1 = np.where(sw[:, None], x2, x1)
        y2 = np.where(sw[:, None], x1, x2)
        b1[idx], b2[idx] = y1, y2
        active[idx] = sw
    return b1, b2


# ordered pairs from (b1, b2, b1+b2, b1-b2) that are bases of the lattice
_PAIRS = [(i, j) for i in range(4) for j in range(4) if i != j and {i, j} != {2, 3}]


def _lex_less(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    diff = A != B
    first = np.argmax(diff, axis=1)
    r = np.arange(len(A))
    return diff.any(axis=1) & (A[r, first] < B[r, first])


def break_ties_batch(b1: np.ndarray, b2: np.ndarray, rtol: float = 1e-9, decimals: int = 9) -> tuple[np.ndarray, np.ndarray]:
    """Pick one representative among the equally reduced bases of each rank 2 lattice.

    A Gauss-reduced basis is unique up to signs except when |b1| = |b2| or
    2|<b1,b2>| = |b1|^2, where rounding noise decides the outcome. All reduced
    bases built from b1, b2, b1 +- b2 are sign normalized and the
    lexicographically smallest (coordinates rounded to ``decimals``) is kept.
    """
    cand = [sign_normalize_rows(v) for v in (b1, b2, b1 + b2, b1 - b2)]
    norms = [np.einsum("ij,ij->i", v, v) for v in cand]
    n1, n2 = norms[0], norms[1]
    tol1, tol2 = rtol * n1, rtol * n2
    best1, best2 = cand[0].copy(), cand[1].copy()
    key = np.round(np.concatenate([best1, best2], axis=1), decimals)
    for i, j in _PAIRS[1:]:
        v, w = cand[i], cand[j]
        ok = (np.abs(norms[i] - n1) <= tol1) & (np.abs(norms[j] - n2) <= tol2)
        ok &= 2 * np.abs(np.einsum("ij,ij->i", v, w)) <= norms[i] + tol1
        k = np.round(np.concatenate([v, w], axis=1), decimals)
        take = ok & _lex_less(k, key)
        best1[take], best2[take], key[take] = v[take], w[take], k[take]
    return best1, best2


def gram_shape_batch(a: np.ndarray, b: np.ndarray, c: np.ndarray, max_iter: int = 500) -> tuple[np.ndarray, np.ndarray]:
    """Reduce binary quadratic forms [[a, b], [b, c]] (det 1) and return tau = (|b|/a, 1/a)."""
    a, b, c = a.copy(), b.copy(), c.copy()
    det = a * c - b * b
    s = 1.0 / np.sqrt(det)
    a, b, c = a * s, b * s, c * s
    for _ in range(max_iter):
        q = np.round(b / a)
        c = c - 2 * q * b + q * q * a
        b = b - q * a
        sw = c < a
        if not sw.any() and not np.any(q):
            break
        a, c = np.where(sw, c, a), np.where(sw, a, c)
    b = np.abs(b)
    return b / a, np.sqrt(np.maximum(a * c - b * b, 0)) / a


def grid_batch(
    B: np.ndarray,
    one_bar: np.ndarray,
    u: np.ndarray,
    norm_mode: str = "one_bar",
    m_max: int = 12,
    torsion_tol: float = 1e-6,
    with_shape: bool = True,
    with_witness: bool = False,
) -> dict[str, np.ndarray]:
    """Grids of the deformed lattices g^t <B> for a stack of bases B (N, n, n)."""
    B = np.asarray(B, dtype=float)
    N, n, _ = B.shape
    out: dict[str, np.ndarray] = {}
    u = np.asarray(u, dtype=float)
    one = np.asarray(one_bar, dtype=float)
    nrm = float(np.linalg.norm(one)) if norm_mode == "one_bar" else float(np.sqrt(n))
    ub = float(u @ one)
    if abs(ub) < 1e-14 * np.linalg.norm(u) * np.linalg.norm(one):
        raise ValueError("<u, 1bar> = 0")
    P = np.outer(one, u) / ub
    detB = np.linalg.det(B)
    cov = np.abs(detB)
    Dv = cov ** (-1.0 / n)
    t = np.log(Dv * nrm)
    PB = np.einsum("ij,njk->nik", P, B)
    QB = B - PB
    Ld = (Dv * np.exp(t / (n - 1)))[:, None, None] * QB + (Dv * np.exp(-t))[:, None, None] * PB
    with np.errstate(all="ignore"):
        Bs = np.transpose(np.linalg.inv(Ld), (0, 2, 1))
    uvec = Bs[:, :, 0]
    flip = uvec @ one < 0
    uvec[flip] *= -1
    lat = Bs[:, :, 1:]
    raw = uvec - np.outer(uvec @ one / (one @ one), one)
    k = n - 1
    if k == 1:
        W = sign_normalize_rows(lat[:, :, 0])[:, :, None]
    elif k == 2:
        b1, b2 = gauss_reduce_batch(lat[:, :, 0], lat[:, :, 1])
        W = np.stack(break_ties_batch(b1, b2), axis=2)
    else:
        W = np.empty_like(lat)
        for i in range(N):
            W[i] = lll_reduce(lat[i]).basis
    G = np.einsum("nik,nil->nkl", W, W)
    rhs = np.einsum("nik,ni->nk", W, raw)
    x = np.linalg.solve(G, rhs[:, :, None])[:, :, 0]
    x = x - np.floor(x)
    x[x >= 1.0] = 0.0
    out["t"] = t
    out["cov"] = cov
    out["lat"] = W
    out["coords"] = x
    out["translation"] = np.einsum("nik,nk->ni", W, x)
    out["unimodular"] = np.abs(np.sqrt(np.linalg.det(G)) - 1.0)
    gen = Ld[:, :, 0]
    out["gen_norm_err"] = np.abs(np.linalg.norm(gen, axis=1) - 1.0)
    order = np.zeros(N, dtype=np.int64)
    for m in range(m_max, 0, -1):
        r = m * x - np.round(m * x)
        d = np.linalg.norm(np.einsum("nik,nk->ni", W, r), axis=1)
        order[d < torsion_tol] = m
    out["torsion"] = order  # 0 means unclassified
    ok = np.isfinite(x).all(axis=1) & np.isfinite(W).all(axis=(1, 2))
    out["ok"] = ok

    if with_shape and k == 2:
        alphas = B[:, :, 1:]
        proj = alphas - np.einsum("ni,j->nji", alphas.transpose(0, 2, 1) @ one / (one @ one), one)
        Gp = np.einsum("nik,nil->nkl", proj, proj)
        sx, sy = gram_shape_batch(Gp[:, 0, 0], Gp[:, 0, 1], Gp[:, 1, 1])
        out["shape_x"], out["shape_y"] = sx, sy
        Gi = np.linalg.inv(G)  # Gram of the dual of the lattice part inside V0
        tx, ty = gram_shape_batch(Gi[:, 0, 0], Gi[:, 0, 1], Gi[:, 1, 1])
        out["shape_consistency"] = np.hypot(sx - tx, sy - ty)

    if with_witness:
        out.update(_witness_batch(B, one, u, ub, nrm, Dv, W, out["translation"]))
    return out


def _cross_stack(V: np.ndarray) -> np.ndarray:
    """Cross products of (N, n, n-1) column stacks."""
    N, n, k = V.shape
    if n == 2:
        return np.stack([-V[:, 1, 0], V[:, 0, 0]], axis=1)
    if n == 3:
        return np.cross(V[:, :, 0], V[:, :, 1])
    return batched_cross(np.transpose(V, (0, 2, 1)))


def _witness_batch(B, one, u, ub, nrm, Dv, W, translation) -> dict[str, np.ndarray]:
    N, n, _ = B.shape
    k = n - 1
    alphas = B[:, :, 1:]
    c = np.einsum("i,nik->nk", u, alphas) / ub
    perp = alphas - one[None, :, None] * c[:, None, :]
    lam = 1.0 / (nrm * Dv)
    alpha0 = (lam ** (-1.0 / k) * Dv)[:, None, None] * perp + one[None, :, None] * (c * (Dv * lam)[:, None])[:, None, :]
    denom = Dv * (_cross_stack(perp) @ one)
    betas = np.empty((N, n, k))
    for i in range(k):
        V = perp.copy()
        V[:, :, i] = one
        betas[:, :, i] = (lam ** (1.0 / k) / denom)[:, None] * _cross_stack(V)
    pair = np.einsum("nik,nil->nkl", betas, alpha0)
    res = {}
    res["w_pairing"] = np.max(np.abs(np.abs(pair) - np.eye(k)[None]), axis=(1, 2))
    res["w_signs"] = np.sign(np.einsum("nkk->nk", pair)).astype(np.int64)
    res["w_in_v0"] = np.max(np.abs(np.einsum("i,nik->nk", one, betas)), axis=1)
    base = u - (u @ one) / (one @ one) * one
    G = np.einsum("nik,nil->nkl", W, W)
    for key, scale in (("w_shift_id", nrm), ("w_shift_id_literal", 1.0)):
        pred = scale * base[None, :] / ub + np.einsum("nik,nk->ni", betas, c)
        v = translation - pred
        x = np.linalg.solve(G, np.einsum("nik,ni->nk", W, v)[:, :, None])[:, :, 0]
        best = np.full(N, np.inf)
        fl = np.floor(x)
        for off in np.ndindex(*([2] * k)):
            r = x - (fl + np.array(off))
            best = np.minimum(best, np.linalg.norm(np.einsum("nik,nk->ni", W, r), axis=1))
        res[key] = best
    return res
