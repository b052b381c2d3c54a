"""Binary cubic forms: reduction, class enumeration and the S3 / maximality filters.

A form (a, b, c, d) is a x^3 + b x^2 y + c x y^2 + d y^3. GL2(Z) acts by the
twisted substitution (gamma . f)(x, y) = det(gamma)^{-1} f((x, y) gamma), with
gamma = (p, q, r, s) standing for the matrix [[p, q], [r, s]], so that
(x, y) gamma = (p x + r y, q x + s y). Classes are GL2(Z)-orbits; -I maps f
to -f.

Reduced representatives
    disc > 0: a Hessian (P, Q, R) = (b^2 - 3ac, bc - 9ad, c^2 - 3bd) with
        0 <= Q <= P <= R, and the first nonzero coefficient positive.
    disc < 0: the upper half plane root zeta = u + iv of the quadratic factor
        satisfies 0 <= u <= 1/2 and |zeta| >= 1, first nonzero coefficient positive.
Ties on the boundary are broken by taking the lexicographically smallest
reduced form in the orbit.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import ceil, floor, isqrt, sqrt

import numpy as np

from .arith import is_perfect_square, smallest_prime_factor, square_prime_divisors


def disc_form(a, b, c, d) -> int:
    a, b, c, d = int(a), int(b), int(c), int(d)
    return b * b * c * c - 4 * a * c**3 - 4 * b**3 * d - 27 * a * a * d * d + 18 * a * b * c * d


def disc_forms(F: np.ndarray) -> np.ndarray:
    """Vectorized discriminant of an (N, 4) int64 array (no overflow for moderate coefficients)."""
    a, b, c, d = (F[:, i].astype(np.int64) for i in range(4))
    return b * b * c * c - 4 * a * c**3 - 4 * b**3 * d - 27 * a * a * d * d + 18 * a * b * c * d


def hessian(f) -> tuple[int, int, int]:
    a, b, c, d = (int(x) for x in f)
    return b * b - 3 * a * c, b * c - 9 * a * d, c * c - 3 * b * d


@dataclass(frozen=True)
class BinaryCubicForm:
    a: int
    b: int
    c: int
    d: int

    @property
    def disc(self) -> int:
        return disc_form(self.a, self.b, self.c, self.d)

    def coeffs(self) -> tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)


@dataclass(frozen=True)
class EnumerationWindow:
    X: int
    signature_filter: str = "both"  # "3,0" | "1,1" | "both"

    def __post_init__(self):
        if self.X < 1:
            raise ValueError("X must be at least 1")
        if self.signature_filter not in ("3,0", "1,1", "both"):
            raise ValueError(f"bad signature filter {self.signature_filter!r}")


def _mul(p1, p2):
    out = [0] * (len(p1) + len(p2) - 1)
    for i, x in enumerate(p1):
        for j, y in enumerate(p2):
            out[i + j] += x * y
    return out


def transform(f, gamma) -> tuple[int, int, int, int]:
    """Twisted GL2(Z) action det(gamma)^{-1} f(p x + r y, q x + s y)."""
    p, q, r, s = (int(x) for x in gamma)
    det = p * s - q * r
    if det not in (1, -1):
        raise ValueError(f"{gamma} is not in GL2(Z)")
    a, b, c, d = (int(x) for x in f)
    A = ((a * p + b * q) * p + c * q * q) * p + d * q**3
    D = ((a * r + b * s) * r + c * s * s) * r + d * s**3
    B = 3 * a * p * p * r + b * (p * p * s + 2 * p * q * r) + c * (q * q * r + 2 * p * q * s) + 3 * d * q * q * s
    C = 3 * a * p * r * r + b * (r * r * q + 2 * p * r * s) + c * (p * s * s + 2 * q * r * s) + 3 * d * q * s * s
    return (det * A, det * B, det * C, det * D)


def _transform_slow(f, gamma) -> tuple[int, int, int, int]:
    """Reference implementation of :func:`transform` by polynomial expansion."""
    p, q, r, s = (int(x) for x in gamma)
    det = p * s - q * r
    X, Y = [p, r], [q, s]
    total = [0, 0, 0, 0]
    for k, coef in enumerate(f):
        term = [1]
        for _ in range(3 - k):
            term = _mul(term, X)
        for _ in range(k):
            term = _mul(term, Y)
        for i in range(4):
            total[i] += coef * term[i]
    return tuple(det * x for x in total)


def sign_normalize(f) -> tuple[int, int, int, int]:
    for x in f:
        if x != 0:
            return tuple(f) if x > 0 else tuple(-y for y in f)
    return tuple(f)


_SMALL = [
    g
    for g in itertools.product((-1, 0, 1), repeat=4)
    if g[0] * g[3] - g[1] * g[2] in (1, -1)
]


def _upper_root(f, dps: int = 60):
    """Upper half plane root of the quadratic factor of a form with disc < 0 (mpmath)."""
    import mpmath

    a, b, c, d = f
    with mpmath.workdps(dps):
        if a == 0:
            rts = mpmath.polyroots([b, c, d], maxsteps=200, extraprec=2 * dps)
        else:
            rts = mpmath.polyroots([a, b, c, d], maxsteps=200, extraprec=2 * dps)
        z = max(rts, key=lambda w: mpmath.im(w))
        return mpmath.mpf(mpmath.re(z)), mpmath.mpf(mpmath.im(z))


def rational_root(f) -> tuple[int, int] | None:
    """A root (p : q) of f with gcd(p, q) = 1 and q >= 0, or None if f is irreducible over Q."""
    from math import gcd

    a, b, c, d = (int(x) for x in f)
    if a == 0:
        return (1, 0)
    if d == 0:
        return (0, 1)
    z = np.roots([a, b, c, d])
    for zr in z:
        if abs(zr.imag) > 1e-6 * max(1.0, abs(zr)):
            continue
        for q in range(1, abs(a) + 1):
            if a % q:
                continue
            for p in {int(np.floor(zr.real * q)), int(np.ceil(zr.real * q))}:
                if ((a * p + b * q) * p + c * q * q) * p + d * q**3 == 0 and gcd(p, q) == 1:
                    return (p, q)
    return None


def quadratic_cofactor(f, root) -> tuple[int, int, int]:
    """(A, B, C) with f = (q x - p y)(A x^2 + B x y + C y^2) for a root (p : q) of f."""
    a, b, c, d = (int(x) for x in f)
    p, q = root
    if q == 0:  # f = y (b x^2 + c x y + d y^2) up to the sign of p
        if p not in (1, -1) or a != 0:
            raise ValueError(f"{root} is not a root of {f}")
        return (-b * p, -c * p, -d * p)
    # synthetic division by (q x - p y)
    A = a // q
    B = (b + A * p) // q
    C = (c + B * p) // q
    if A * q != a or B * q - A * p != b or C * q - B * p != c or -C * p != d:
        raise ValueError(f"{root} is not a root of {f}")
    return A, B, C


def _map_root(root, gamma) -> tuple[int, int]:
    """Root of f o gamma given a root (p : q) of f."""
    from math import gcd

    p0, q0 = root
    p, q, r, s = gamma
    det = p * s - q * r
    x, y = det * (p0 * s - q0 * r), det * (q0 * p - p0 * q)
    g = gcd(x, y)
    x, y = x // g, y // g
    if y < 0 or (y == 0 and x < 0):
        x, y = -x, -y
    return x, y


def _neg_status(f, root=None) -> tuple[bool, bool]:
    """(reduced, on_boundary) for a form with disc < 0, decided exactly.

    ``root`` may pass a known rational root; ``False`` asserts irreducibility.
    """
    from fractions import Fraction

    rt = rational_root(f) if root is None else (root or None)
    if rt is not None:
        A, B, C = quadratic_cofactor(f, rt)
        if A < 0:
            A, B, C = -A, -B, -C
        u = Fraction(-B, 2 * A)
        z2 = Fraction(C, A)
        inside = 0 <= u <= Fraction(1, 2) and z2 >= 1
        return inside, inside and (u == 0 or u == Fraction(1, 2) or z2 == 1)
    import mpmath

    u, v = _upper_root(f)
    return bool(u >= 0 and u <= mpmath.mpf(1) / 2 and u * u + v * v >= 1), False


def is_reduced(f) -> bool:
    """Exact membership of the reduced domain (boundary included), sign normalized."""
    f = tuple(int(x) for x in f)
    if sign_normalize(f) != f:
        return False
    D = disc_form(*f)
    if D > 0:
        P, Q, R = hessian(f)
        return 0 <= Q <= P <= R
    if D < 0:
        return _neg_status(f)[0]
    raise ValueError("disc 0 form")


def _float_upper_root(f) -> tuple[float, float]:
    a, b, c, d = f
    z = np.roots([b, c, d] if a == 0 else [a, b, c, d])
    z = z[np.argmax(z.imag)]
    return float(z.real), float(z.imag)


def _reduce_once(f):
    """Move f into (or onto the boundary of) the reduced domain; returns the new form."""
    f = tuple(int(x) for x in f)
    D = disc_form(*f)
    if D == 0:
        raise ValueError("disc 0 form")
    for _ in range(10000):
        if D > 0:
            P, Q, R = hessian(f)
            k = -((Q + P) // (2 * P))  # Q + 2kP in [-P, P)
            if k:
                f = transform(f, (1, 0, k, 1))
                continue
            if R < P:
                f = transform(f, (0, 1, 1, 0))
                continue
            if Q < 0:
                f = transform(f, (1, 0, 0, -1))
            break
        else:
            u, v = _float_upper_root(f)
            k = 0 if abs(u) <= 0.5 + 1e-9 else floor(u + 0.5)
            if k:
                f = transform(f, (1, 0, k, 1))  # theta -> theta - k
                continue
            if u * u + v * v < 1 - 1e-9:
                f = transform(f, (0, 1, 1, 0))  # zeta -> 1 / conj(zeta)
                continue
            if u < 0:
                f = transform(f, (1, 0, 0, -1))
            break
    else:
        raise RuntimeError(f"reduction did not terminate for {f}")
    return sign_normalize(f)


def canonicalize(f) -> tuple[int, int, int, int]:
    """The unique reduced representative of the GL2(Z)-class of f."""
    f = tuple(int(x) for x in f)
    D = disc_form(*f)
    f1 = f if is_reduced(f) else _reduce_once(f)
    if D > 0:
        ok = lambda h, g: 0 <= hessian(h)[1] <= hessian(h)[0] <= hessian(h)[2]  # noqa: E731
    else:
        root = rational_root(f1)
        if root is None:
            # no boundary ties are possible for irreducible forms with disc < 0
            if _neg_status(f1, False)[0]:
                return f1
            ok = lambda h, g: _neg_status(h, False)[0]  # noqa: E731
        else:
            ok = lambda h, g: _neg_status(h, _map_root(root, g))[0]  # noqa: E731
    best = None
    for g in _SMALL:
        h0 = transform(f1, g)
        h = sign_normalize(h0)
        if (best is None or h < best) and ok(h, g):
            best = h
    if best is None:
        raise RuntimeError(f"canonicalization failed for {f}")
    return best


def random_gl2(rng, steps: int = 6) -> tuple[int, int, int, int]:
    gens = [(1, 0, 1, 1), (1, 0, -1, 1), (0, 1, 1, 0), (1, 0, 0, -1), (1, 1, 0, 1), (-1, 0, 0, -1)]
    M = np.eye(2, dtype=np.int64)
    for _ in range(steps):
        g = gens[rng.integers(len(gens))]
        M = M @ np.array([[g[0], g[1]], [g[2], g[3]]], dtype=np.int64)
    return int(M[0, 0]), int(M[0, 1]), int(M[1, 0]), int(M[1, 1])


# ----------------------------------------------------------------------------- enumeration


def _expand_ranges(lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """For integer intervals [lo_i, hi_i], return (index i, value) pairs for every member."""
    cnt = np.maximum(hi - lo + 1, 0)
    idx = np.repeat(np.arange(len(lo)), cnt)
    start = np.repeat(lo - np.concatenate(([0], np.cumsum(cnt)[:-1])), cnt)
    return idx, start + np.arange(len(idx))


def _positive_candidates(X: int, irreducible_only: bool = False) -> np.ndarray:
    out = []
    Pmax = isqrt(X)
    amax = int(sqrt(4 * sqrt(X) / 27)) + 1
    for a in range(1, amax + 1):
        P = np.arange(1, Pmax + 1, dtype=np.int64)
        rP = np.sqrt(P)
        blo = np.ceil(-rP).astype(np.int64)
        bhi = np.floor(1.5 * a + rP).astype(np.int64)
        i, b = _expand_ranges(blo, bhi)
        P = P[i]
        keep = (b * b - P) % (3 * a) == 0
        b, P = b[keep], P[keep]
        c = (b * b - P) // (3 * a)
        dlo = -((P - b * c) // (9 * a))  # ceil((bc - P) / 9a)
        dhi = (b * c) // (9 * a)
        j, d = _expand_ranges(dlo, dhi)
        F = np.stack([np.full(len(j), a, dtype=np.int64), b[j], c[j], d], axis=1)
        out.append(F)
    # a = 0: b > 0, 0 <= c <= b, disc = b^2 (c^2 - 4bd)
    for b in range(1, int(X**0.25) + 2):
        for c in range(0, b + 1):
            lo = ceil((c * c - X / (b * b)) / (4 * b)) - 1
            hi = (c * c - b * b) // (3 * b) + 1
            if hi >= lo:
                d = np.arange(lo, hi + 1, dtype=np.int64)
                out.append(np.stack([np.zeros_like(d), np.full_like(d, b), np.full_like(d, c), d], axis=1))
    F = np.concatenate(out) if out else np.zeros((0, 4), dtype=np.int64)
    P = F[:, 1] ** 2 - 3 * F[:, 0] * F[:, 2]
    Q = F[:, 1] * F[:, 2] - 9 * F[:, 0] * F[:, 3]
    R = F[:, 2] ** 2 - 3 * F[:, 1] * F[:, 3]
    D = disc_forms(F)
    ok = (D > 0) & (D <= X) & (Q >= 0) & (Q <= P) & (P <= R)
    F, P, Q, R = F[ok], P[ok], Q[ok], R[ok]
    if irreducible_only:
        irr = ~has_rational_root_mask(F)
        F, P, Q, R = F[irr], P[irr], Q[irr], R[irr]
    tie = (Q == 0) | (Q == P) | (P == R)
    keep = ~tie
    for k in np.flatnonzero(tie):
        f = tuple(int(x) for x in F[k])
        keep[k] = canonicalize(f) == f
    return F[keep]


def _real_root_neg(F: np.ndarray) -> np.ndarray:
    """The real root of a x^3 + b x^2 + c x + d (a > 0, disc < 0), Cardano plus Newton."""
    a, b, c, d = (F[:, i].astype(float) for i in range(4))
    B, C, E = b / a, c / a, d / a
    p = C - B * B / 3
    q = 2 * B**3 / 27 - B * C / 3 + E
    delta = np.maximum((q / 2) ** 2 + (p / 3) ** 3, 0)
    A = -np.sign(q) * np.cbrt(np.abs(q) / 2 + np.sqrt(delta))
    A = np.where(q == 0, np.cbrt(np.sqrt(delta)), A)
    t = np.where(A != 0, A - p / (3 * np.where(A != 0, A, 1)), 0.0)
    x = t - B / 3
    for _ in range(3):
        fx = ((a * x + b) * x + c) * x + d
        dfx = (3 * a * x + 2 * b) * x + c
        x = x - np.where(dfx != 0, fx / np.where(dfx != 0, dfx, 1), 0)
    return x


def zeta_neg(F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(u, |zeta|^2) for forms with disc < 0 and a > 0."""
    a, b, c = (F[:, i].astype(float) for i in range(3))
    th = _real_root_neg(F)
    e1 = b + a * th
    e0 = c + th * e1
    return -e1 / (2 * a), e0 / a


def _negative_candidates(X: int, margin: float = 1e-7, irreducible_only: bool = False) -> np.ndarray:
    out = []
    amax = int((16 * X / 27) ** 0.25) + 1
    rho = (X / 3) ** 0.25
    for a in range(1, amax + 1):
        vmax2 = (X / (4 * a**4)) ** (1 / 3)
        if vmax2 < 0.75 - 1e-9:
            continue
        b = np.arange(floor(-1.5 * a - rho) - 1, ceil(rho) + 2, dtype=np.int64)
        clo = np.minimum(a, -b) - 1
        chi = np.floor(a * (0.25 + vmax2) + np.where(b < 0, b * b / (4.0 * a), 0.0)).astype(np.int64) + 1
        i, c = _expand_ranges(clo, chi)
        b = b[i]
        A2 = 27.0 * a * a
        B1 = 18.0 * a * b * c - 4.0 * b.astype(float) ** 3
        C0 = (b * b).astype(float) * c * c - 4.0 * a * c.astype(float) ** 3
        disc1 = B1 * B1 + 4 * A2 * (C0 + X)
        ok = disc1 >= 0
        b, c, B1, C0, disc1 = b[ok], c[ok], B1[ok], C0[ok], disc1[ok]
        s1 = np.sqrt(disc1)
        d1 = np.floor((B1 - s1) / (2 * A2)).astype(np.int64) - 1
        d2 = np.ceil((B1 + s1) / (2 * A2)).astype(np.int64) + 1
        disc0 = B1 * B1 + 4 * A2 * C0
        has_gap = disc0 > 0
        s0 = np.sqrt(np.where(has_gap, disc0, 0))
        e1 = np.where(has_gap, np.ceil((B1 - s0) / (2 * A2)).astype(np.int64) + 1, d2)
        e2 = np.where(has_gap, np.floor((B1 + s0) / (2 * A2)).astype(np.int64) - 1, d2 + 1)
        e1 = np.minimum(e1, d2)
        e2 = np.maximum(e2, e1 + 1)
        for lo, hi in ((d1, e1), (e2, d2)):
            j, d = _expand_ranges(lo, hi)
            F = np.stack([np.full(len(j), a, dtype=np.int64), b[j], c[j], d], axis=1)
            D = disc_forms(F)
            F = F[(D < 0) & (D >= -X)]
            if len(F):
                out.append(F)
    F = np.concatenate(out) if out else np.zeros((0, 4), dtype=np.int64)
    F = np.unique(F, axis=0)
    if irreducible_only:
        F = F[~has_rational_root_mask(F)]
    u, z2 = zeta_neg(F)
    inside = (u > margin) & (u < 0.5 - margin) & (z2 > 1 + margin)
    near = ~inside & (u > -margin) & (u < 0.5 + margin) & (z2 > 1 - margin)
    keep = inside.copy()
    for k in np.flatnonzero(near):
        f = tuple(int(x) for x in F[k])
        red, tie = _neg_status(f)
        keep[k] = red and (not tie or canonicalize(f) == f)
    res = [F[keep]]
    if irreducible_only:
        return res[0]
    # a = 0: b > 0, -b <= c <= 0, d >= b, disc = b^2 (c^2 - 4bd)
    for b in range(1, int((X / 3) ** 0.25) + 2):
        for c in range(-b, 1):
            hi = (X // (b * b) + c * c) // (4 * b)
            d = np.arange(b, hi + 1, dtype=np.int64)
            if len(d) == 0:
                continue
            G = np.stack([np.zeros_like(d), np.full_like(d, b), np.full_like(d, c), d], axis=1)
            D = disc_forms(G)
            G = G[(D < 0) & (D >= -X)]
            tie = (G[:, 2] == 0) | (G[:, 2] == -G[:, 1]) | (G[:, 3] == G[:, 1])
            keep0 = ~tie
            for k in np.flatnonzero(tie):
                f = tuple(int(x) for x in G[k])
                keep0[k] = canonicalize(f) == f
            res.append(G[keep0])
    return np.concatenate(res)


def sort_forms(F: np.ndarray) -> np.ndarray:
    D = np.abs(disc_forms(F))
    order = np.lexsort((F[:, 3], F[:, 2], F[:, 1], F[:, 0], D))
    return F[order]


def enumerate_classes(X: int, sign: int, irreducible_only: bool = False) -> np.ndarray:
    """One reduced form per GL2(Z)-class with 0 < sign*disc <= X, as an (N, 4) int64 array.

    Rows are sorted by |disc| then lexicographically. Reducible classes are
    included unless ``irreducible_only`` is set.
    """
    if sign > 0:
        F = _positive_candidates(int(X), irreducible_only)
    elif sign < 0:
        F = _negative_candidates(int(X), irreducible_only=irreducible_only)
    else:
        raise ValueError("sign must be +1 or -1")
    return sort_forms(F)


# ----------------------------------------------------------------------------- filters


def has_rational_root_mask(F: np.ndarray) -> np.ndarray:
    """True where f(x, y) has a linear factor over Q (the root at infinity included)."""
    F = np.asarray(F, dtype=np.int64)
    out = (F[:, 0] == 0) | (F[:, 3] == 0)
    idx = np.flatnonzero(~out)
    if len(idx) == 0:
        return out
    G = F[idx]
    comp = np.zeros((len(G), 3, 3))
    comp[:, 0, :] = -G[:, 1:] / G[:, :1]
    comp[:, 1, 0] = comp[:, 2, 1] = 1.0
    z = np.linalg.eigvals(comp)
    hit = np.zeros(len(G), dtype=bool)
    amax = int(np.max(np.abs(G[:, 0])))
    for q in range(1, amax + 1):
        dv = G[:, 0] % q == 0
        if not dv.any():
            continue
        for k in range(3):
            zr = z[:, k]
            cand = dv & (np.abs(zr.imag) < 1e-6 * np.maximum(1, np.abs(zr)))
            p = np.rint(zr.real * q).astype(np.int64)
            val = ((G[:, 0] * p + G[:, 1] * q) * p + G[:, 2] * q * q) * p + G[:, 3] * q**3
            hit |= cand & (val == 0)
    out[idx] = hit
    return out


def is_irreducible_s3(f) -> bool:
    f = tuple(int(x) for x in f)
    D = disc_form(*f)
    if D == 0:
        raise ValueError("disc 0 form")
    if is_perfect_square(D):
        return False
    return not bool(has_rational_root_mask(np.array([f], dtype=np.int64))[0])


def irreducible_s3_mask(F: np.ndarray) -> np.ndarray:
    D = disc_forms(F)
    sq = np.zeros(len(F), dtype=bool)
    pos = D > 0
    r = np.rint(np.sqrt(np.where(pos, D, 0).astype(float))).astype(np.int64)
    for k in (-1, 0, 1):
        sq |= pos & ((r + k) ** 2 == D)
    return ~sq & ~has_rational_root_mask(F)


def is_p_maximal(f, p: int) -> bool:
    a, b, c, d = (int(x) for x in f)
    if a % p == 0 and b % p == 0 and c % p == 0 and d % p == 0:
        return False
    # double root at infinity: swapping x and y moves it to 0, then c' = b and d' = a
    if a % p == 0 and b % p == 0 and a % (p * p) == 0:
        return False
    r = np.arange(p, dtype=np.int64)
    fv = ((a * r + b) * r + c) * r + d
    dv = (3 * a * r + 2 * b) * r + c
    for rr in np.flatnonzero((fv % p == 0) & (dv % p == 0)):
        rr = int(rr)
        cp = 3 * a * rr * rr + 2 * b * rr + c
        dp = ((a * rr + b) * rr + c) * rr + d
        if cp % p == 0 and dp % (p * p) == 0:
            return False
    return True


def is_maximal(f, spf: np.ndarray | None = None) -> bool:
    D = disc_form(*f)
    if D == 0:
        raise ValueError("disc 0 form")
    return all(is_p_maximal(f, p) for p in square_prime_divisors(D, spf))


def maximal_mask(F: np.ndarray, X: int | None = None) -> np.ndarray:
    D = np.abs(disc_forms(F))
    spf = smallest_prime_factor(int(X if X is not None else D.max(initial=1)))
    out = np.ones(len(F), dtype=bool)
    for k in range(len(F)):
        out[k] = is_maximal(tuple(int(x) for x in F[k]), spf)
    return out


def field_forms(window: EnumerationWindow) -> dict[str, np.ndarray]:
    """Reduced forms of maximal S3 cubic rings, keyed by signature "3,0" / "1,1"."""
    out = {}
    for sig, sign in (("3,0", 1), ("1,1", -1)):
        if window.signature_filter not in (sig, "both"):
            continue
        F = enumerate_classes(window.X, sign, irreducible_only=True)
        F = F[irreducible_s3_mask(F)]
        F = F[maximal_mask(F, window.X)]
        out[sig] = F
    return out


def field_stream(window: EnumerationWindow, precision: int = 53):
    """Yield (CubicRing, disc) ordered by |disc|, ties broken lexicographically on (a, b, c, d)."""
    from .fields import cubic_ring_from_form

    parts = field_forms(window)
    F = sort_forms(np.concatenate(list(parts.values()))) if parts else np.zeros((0, 4), dtype=np.int64)
    for row in F:
        f = tuple(int(x) for x in row)
        yield cubic_ring_from_form(f, precision), disc_form(*f)
