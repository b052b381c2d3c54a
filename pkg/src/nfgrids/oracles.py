"""Independent oracles for enumeration and counting.

None of these share code with the enumeration, reduction or sieve routines
they check; they exist so that the verification suite can compare against
something computed another way.
"""

from __future__ import annotations

import itertools
from math import isqrt, sqrt

import numpy as np


# ---------------------------------------------------------------- cubic forms


def _disc(a, b, c, d):
    return b * b * c * c - 4 * a * c**3 - 4 * b**3 * d - 27 * a * a * d * d + 18 * a * b * c * d


def _act(F, p, q, r, s):
    """Twisted action det * f(p x + r y, q x + s y), by direct polynomial expansion."""
    a, b, c, d = F.T
    det = p * s - q * r
    # coefficients of (p x + r y)^i (q x + s y)^(3-i) for f = sum coef_i x^i y^(3-i)
    out = np.zeros_like(F)
    coefs = [d, c, b, a]  # y^3, x y^2, x^2 y, x^3 weights for powers of X=(px+ry)
    for i, w in enumerate(coefs):
        # X^i Y^(3-i) with X = p x + r y, Y = q x + s y
        poly = np.array([1])
        for _ in range(i):
            poly = np.convolve(poly, [r, p])  # ascending in x: r y + p x
        for _ in range(3 - i):
            poly = np.convolve(poly, [s, q])
        # poly[k] is coefficient of x^k y^(3-k); form order (a,b,c,d) = x^3..y^3
        for k in range(4):
            out[:, 3 - k] += w * poly[k]
    return det * out


def brute_force_classes(X: int, box: int = 12, mat_bound: int = 2) -> list[list[tuple[int, int, int, int]]]:
    """GL2(Z)-classes of forms with 0 < |disc| <= X found inside a coefficient box.

    Forms in the box are joined whenever a unimodular matrix with entries of
    size <= mat_bound maps one to the other. Returns the components.
    """
    rng = np.arange(-box, box + 1)
    F = np.array(np.meshgrid(rng, rng, rng, rng, indexing="ij")).reshape(4, -1).T.astype(np.int64)
    # reducible classes contain forms y (b x^2 + c x y + d y^2) with b^2 | disc,
    # |c| <= |b| after x -> x + k y, and |d| <= (c^2 + X) / 4|b|
    bm = isqrt(X) + 1
    sb = np.arange(-bm, bm + 1)
    sc = np.arange(-bm - 1, bm + 2)
    sd = np.arange(-(bm * bm + X) // 4 - 1, (bm * bm + X) // 4 + 2)
    S = np.array(np.meshgrid([0], sb, sc, sd, indexing="ij")).reshape(4, -1).T.astype(np.int64)
    F = np.unique(np.vstack([F, S]), axis=0)
    D = _disc(*F.T)
    F = F[(D != 0) & (np.abs(D) <= X)]
    box = int(np.abs(F).max())
    base = 2 * box + 1

    def key(G):
        G = G + box
        return ((G[:, 0] * base + G[:, 1]) * base + G[:, 2]) * base + G[:, 3]

    keys = key(F)
    order = np.argsort(keys)
    skeys = keys[order]
    parent = np.arange(len(F))

    def find(i):
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    ent = range(-mat_bound, mat_bound + 1)
    mats = [m for m in itertools.product(ent, repeat=4) if abs(m[0] * m[3] - m[1] * m[2]) == 1]
    for m in mats:
        G = _act(F, *m)
        ok = np.all(np.abs(G) <= box, axis=1)
        idx = np.flatnonzero(ok)
        kg = key(G[idx])
        pos = np.minimum(np.searchsorted(skeys, kg), len(skeys) - 1)
        hit = skeys[pos] == kg
        for i, j in zip(idx[hit].tolist(), order[pos[hit]].tolist()):
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[ri] = rj
    comps: dict[int, list] = {}
    for i, f in enumerate(F.tolist()):
        comps.setdefault(find(i), []).append(tuple(f))
    return list(comps.values())


# ---------------------------------------------------------------- Hunter search


def _split_type(coeffs, p):
    """Degrees of the irreducible factors of a monic cubic mod p (sorted)."""
    roots = [x for x in range(p) if (x**3 + coeffs[0] * x * x + coeffs[1] * x + coeffs[2]) % p == 0]
    if len(roots) == 0:
        return (3,)
    if len(roots) == 1:
        # either a linear times irreducible quadratic, or a triple/double root
        r = roots[0]
        a1 = coeffs[0] + r
        a2 = coeffs[1] + r * a1
        q0, q1 = a2 % p, a1 % p  # cofactor x^2 + q1 x + q0
        if (r * r + q1 * r + q0) % p == 0:
            return (1, 1, 1)
        return (1, 2)
    return (1, 1, 1)


def hunter_cubic_fields(X: int, primes: int = 30) -> dict[int, int]:
    """Number of cubic fields (S3 only) per discriminant with |disc| <= X.

    Every cubic field has a generator with minimal polynomial
    x^3 + a1 x^2 + a2 x + a3, a1 in {0, 1}, whose roots satisfy
    T2 <= a1^2/3 + sqrt(4/3) sqrt(|d|/3). Field discriminants come from
    the round-two algorithm; isomorphic fields are merged by disc plus
    splitting types at small primes not dividing the polynomial discriminant.
    """
    import sympy
    from sympy.polys.numberfields.basis import round_two

    x = sympy.symbols("x")
    small_primes = list(sympy.primerange(5, 400))
    found: dict[int, list[dict[int, tuple]]] = {}
    for a1 in (0, 1):
        B = a1 * a1 / 3 + sqrt(4 / 3) * sqrt(X / 3)
        a2_lo = int(np.floor((a1 * a1 - B) / 2))
        a2_hi = int(np.ceil(B)) + 1  # |a2| <= sum_{i<j} |theta_i theta_j| <= T2
        a3_max = int((B / 3) ** 1.5) + 1
        for a2 in range(a2_lo, a2_hi + 1):
            for a3 in range(-a3_max, a3_max + 1):
                if a3 == 0:
                    continue
                z = np.roots([1, a1, a2, a3])
                if np.sum(np.abs(z) ** 2) > B + 1e-9:
                    continue
                pd = int(_disc(1, a1, a2, a3))
                if pd == 0 or (pd > 0 and isqrt(pd) ** 2 == pd):
                    continue
                if any(abs(r.imag) < 1e-9 and abs(r.real - round(r.real)) < 1e-9 and round(r.real) ** 3 + a1 * round(r.real) ** 2 + a2 * round(r.real) + a3 == 0 for r in z):
                    continue
                fd = int(round_two(sympy.Poly(x**3 + a1 * x**2 + a2 * x + a3, x))[1])
                if abs(fd) > X:
                    continue
                types = {}
                for p in small_primes:
                    if pd % p:
                        types[p] = _split_type((a1, a2, a3), p)
                    if len(types) >= primes:
                        break
                bucket = found.setdefault(fd, [])
                for other in bucket:
                    common = set(other) & set(types)
                    if all(other[p] == types[p] for p in common):
                        break
                else:
                    bucket.append(types)
    return {d: len(v) for d, v in sorted(found.items(), key=lambda kv: (abs(kv[0]), kv[0]))}


# ---------------------------------------------------------------- squarefree counts


def quadratic_counts(T: int) -> dict[str, int]:
    """Counts of quadratic fields with |disc| <= T split by D mod 4 and sign.

    Uses a Moebius sum for squarefree counts in residue classes, independent
    of any sieve in the package.
    """
    mu = _mobius(isqrt(T) + 1)

    def sf_count(N, mod, res):
        # #{1 <= k <= N : k squarefree, k = res mod `mod`}, odd squares only matter for mod 4
        tot = 0
        for d in range(1, isqrt(N) + 1):
            if mu[d] == 0:
                continue
            d2 = d * d
            # count m <= N/d2 with d2*m = res (mod mod)
            M = N // d2
            cnt = 0
            for m0 in range(mod):
                if (d2 * m0 - res) % mod == 0:
                    cnt += (M - m0) // mod + 1 if m0 <= M and m0 > 0 else (M // mod if m0 == 0 else 0)
            tot += mu[d] * cnt
        return tot

    out = {}
    # real fields: D > 1 squarefree
    out["real_1mod4"] = sf_count(T, 4, 1) - 1  # drop D = 1
    out["real_other"] = sf_count(T // 4, 4, 2) + sf_count(T // 4, 4, 3)
    # imaginary: D < 0 with -D = k; D = 1 mod 4 iff k = 3 mod 4
    out["imag_1mod4"] = sf_count(T, 4, 3)
    out["imag_other"] = sf_count(T // 4, 4, 1) + sf_count(T // 4, 4, 2)
    return out


def _mobius(N: int) -> list[int]:
    mu = [1] * (N + 1)
    is_comp = [False] * (N + 1)
    primes = []
    mu[0] = 0
    for i in range(2, N + 1):
        if not is_comp[i]:
            primes.append(i)
            mu[i] = -1
        for p in primes:
            if i * p > N:
                break
            is_comp[i * p] = True
            if i % p == 0:
                mu[i * p] = 0
                break
            mu[i * p] = -mu[i]
    return mu
