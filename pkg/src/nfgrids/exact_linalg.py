"""Integer and floating point linear algebra primitives.

Integer inputs (Python ints, nested lists, or numpy integer / object arrays)
are handled exactly. Float inputs go through numpy and are guarded by a
condition-number check so that ill-conditioned work fails loudly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import numpy as np

COND_BUDGET = 1e10


class IllConditionedError(ArithmeticError):
    """Raised when a float operation would exceed the tolerance budget."""


def _is_integral(M) -> bool:
    arr = np.asarray(M, dtype=object)
    return all(isinstance(x, (int, np.integer)) and not isinstance(x, bool) for x in arr.ravel())


def as_int_matrix(M) -> list[list[int]]:
    """Copy ``M`` into a list of lists of Python ints (exact)."""
    arr = np.asarray(M, dtype=object)
    if arr.ndim != 2:
        raise ValueError("expected a 2-d array")
    return [[int(x) for x in row] for row in arr]


def condition_number(M) -> float:
    return float(np.linalg.cond(np.asarray(M, dtype=float)))


def check_conditioning(M, budget: float = COND_BUDGET) -> float:
    """Return cond(M), raising IllConditionedError if it exceeds ``budget``."""
    k = condition_number(M)
    if not np.isfinite(k) or k > budget:
        raise IllConditionedError(f"condition number {k:.3g} exceeds budget {budget:.3g}")
    return k


def _bareiss_det(A: list[list[int]]) -> int:
    n = len(A)
    A = [row[:] for row in A]
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            for i in range(k + 1, n):
                if A[i][k] != 0:
                    A[k], A[i] = A[i], A[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


def det(M, budget: float = COND_BUDGET):
    """Determinant of a square matrix.

    Exact (Bareiss, fraction free) for integer input. For float input the
    numpy LU determinant is returned after a conditioning check.
    """
    arr = np.asarray(M, dtype=object)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise ValueError(f"det needs a non-empty square matrix, got shape {arr.shape}")
    if _is_integral(arr):
        return _bareiss_det(as_int_matrix(arr))
    F = np.asarray(M, dtype=float)
    d = float(np.linalg.det(F))
    if d != 0.0:
        check_conditioning(F, budget)
    return d


def _egcd(a: int, b: int) -> tuple[int, int, int]:
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def _bezout(x: int, y: int) -> tuple[int, int, int]:
    """g = gcd(x, y) > 0 and (s, t) with s*x + t*y = g, chosen with minimal (|t|, |s|)."""
    g, s, t = _egcd(abs(x), abs(y))
    if x < 0:
        s = -s
    if y < 0:
        t = -t
    if g == 0:
        return 0, 0, 0
    # shift along the solution line (s + k*y/g, t - k*x/g)
    dx, dy = x // g, y // g
    best = None
    if dx != 0:
        k0 = Fraction(t, dx)
        cands = {int(k0) + j for j in (-2, -1, 0, 1, 2)}
    elif dy != 0:
        k0 = Fraction(-s, dy)
        cands = {int(k0) + j for j in (-2, -1, 0, 1, 2)}
    else:
        cands = {0}
    for k in sorted(cands):
        s2, t2 = s + k * dy, t - k * dx
        key = (abs(t2), abs(s2), -t2, -s2)
        if best is None or key < best[0]:
            best = (key, s2, t2)
    return g, best[1], best[2]


def kernel_and_complement(c) -> tuple[list[list[int]], list[int]]:
    """Integer basis of {k : <k, c> = 0} together with k0 such that <k0, c> = 1.

    The columns are reduced right to left with 2x2 unimodular steps from
    the extended gcd, so the stacked [K; k0] always has determinant +-1.
    """
    c = [int(x) for x in c]
    n = len(c)
    if n < 1:
        raise ValueError("empty vector")
    g_all = 0
    for x in c:
        g_all = gcd(g_all, x)
    if g_all != 1:
        raise ValueError(f"vector {c} is not primitive (gcd {g_all})")
    carrier = [0] * n
    carrier[-1] = 1
    val = c[-1]
    kernel = []
    for j in range(n - 2, -1, -1):
        ej = [0] * n
        ej[j] = 1
        x, y = c[j], val
        if x == 0 and y == 0:
            kernel.append(ej)
            continue
        g, s, t = _bezout(x, y)
        new_carrier = [s * ej[i] + t * carrier[i] for i in range(n)]
        kvec = [(y // g) * ej[i] - (x // g) * carrier[i] for i in range(n)]
        kernel.append(kvec)
        carrier, val = new_carrier, g
    if val < 0:
        carrier = [-x for x in carrier]
    kernel.reverse()
    return kernel, carrier


def cross_product(*vectors) -> np.ndarray:
    """Generalized cross product of n-1 vectors in R^n.

    Defined by <u_1 x ... x u_{n-1}, w> = det(u_1, ..., u_{n-1}, w).
    """
    U = np.array(vectors, dtype=float)
    if U.ndim != 2:
        raise ValueError("expected a list of vectors")
    k, n = U.shape
    if n < 2 or k != n - 1:
        raise ValueError(f"need n-1 vectors in R^n, got {k} vectors of length {n}")
    out = np.empty(n)
    for j in range(n):
        minor = np.delete(U, j, axis=1)
        out[j] = (-1) ** (n - 1 + j) * (np.linalg.det(minor) if k else 1.0)
    return out


def batched_cross(U: np.ndarray) -> np.ndarray:
    """Cross products for a stack of shape (N, n-1, n)."""
    N, k, n = U.shape
    out = np.empty((N, n))
    for j in range(n):
        minor = np.delete(U, j, axis=2)
        out[:, j] = (-1) ** (n - 1 + j) * np.linalg.det(minor)
    return out


def orth_project(x, u) -> np.ndarray:
    """Orthogonal projection of ``x`` onto the hyperplane u^perp."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    uu = float(u @ u)
    if uu == 0.0:
        raise ValueError("cannot project along the zero vector")
    return x - (x @ u / uu) * u


def sign_normalize(v: np.ndarray, tol: float = 1e-12) -> tuple[np.ndarray, int]:
    """Flip ``v`` so that its last coordinate of size > tol*|v| is positive."""
    scale = max(float(np.max(np.abs(v))), 1e-300)
    nz = np.flatnonzero(np.abs(v) > tol * scale)
    if len(nz) and v[nz[-1]] < 0:
        return -v, -1
    return v, 1


@dataclass(frozen=True)
class LLLResult:
    basis: np.ndarray  # columns
    transform: np.ndarray  # integer matrix U (object dtype), basis = B @ U


def lll_reduce(B, delta: float = 0.99, normalize_signs: bool = True) -> LLLResult:
    """LLL-reduce the columns of ``B`` (ambient dim >= rank).

    The unimodular change of basis is tracked exactly as Python ints.
    Every output vector is sign normalized (last significant coordinate
    positive) so equal lattices give equal bases in generic position.
    """
    B = np.array(B, dtype=float)
    if B.ndim != 2:
        raise ValueError("basis must be a 2-d array")
    m, k = B.shape
    if k == 0 or np.linalg.matrix_rank(B) < k:
        raise ValueError("basis is rank deficient")
    b = [B[:, i].copy() for i in range(k)]
    U = [[1 if i == j else 0 for j in range(k)] for i in range(k)]  # U[col] = coefficients

    def gso():
        bs, mu = [], np.zeros((k, k))
        for i in range(k):
            v = b[i].copy()
            for j in range(i):
                mu[i, j] = (b[i] @ bs[j]) / (bs[j] @ bs[j])
                v -= mu[i, j] * bs[j]
            bs.append(v)
        return bs, mu

    bs, mu = gso()
    i = 1
    guard = 0
    while i < k:
        guard += 1
        if guard > 100000:
            raise RuntimeError("LLL failed to terminate")
        for j in range(i - 1, -1, -1):
            q = int(round(mu[i, j]))
            if q:
                b[i] = b[i] - q * b[j]
                U[i] = [U[i][t] - q * U[j][t] for t in range(k)]
                bs, mu = gso()
        if bs[i] @ bs[i] >= (delta - mu[i, i - 1] ** 2) * (bs[i - 1] @ bs[i - 1]):
            i += 1
        else:
            b[i], b[i - 1] = b[i - 1], b[i]
            U[i], U[i - 1] = U[i - 1], U[i]
            bs, mu = gso()
            i = max(i - 1, 1)
    if normalize_signs:
        for i in range(k):
            b[i], s = sign_normalize(b[i])
            if s < 0:
                U[i] = [-x for x in U[i]]
    T = np.array([[U[col][row] for col in range(k)] for row in range(k)], dtype=object)
    return LLLResult(np.column_stack(b), T)


def gauss_reduce_2d(b1: np.ndarray, b2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lagrange-Gauss reduction of a rank 2 lattice: |b1| <= |b2|, |mu| <= 1/2."""
    b1, b2 = np.array(b1, dtype=float), np.array(b2, dtype=float)
    if b1 @ b1 > b2 @ b2:
        b1, b2 = b2, b1
    for _ in range(200):
        q = round((b1 @ b2) / (b1 @ b1))
        b2 = b2 - q * b1
        if b2 @ b2 < b1 @ b1:
            b1, b2 = b2, b1
        else:
            break
    return b1, b2
