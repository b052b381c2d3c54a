"""Small sieves and integer helpers shared by the field modules."""

from __future__ import annotations

from math import isqrt

import numpy as np


def squarefree_mask(N: int) -> np.ndarray:
    """Boolean array m of length N+1 with m[k] true iff k is squarefree (k >= 1)."""
    m = np.ones(N + 1, dtype=bool)
    m[0] = False
    for p in primes_upto(isqrt(N)):
        m[p * p :: p * p] = False
    return m


def primes_upto(N: int) -> np.ndarray:
    if N < 2:
        return np.zeros(0, dtype=np.int64)
    s = np.ones(N + 1, dtype=bool)
    s[:2] = False
    for p in range(2, isqrt(N) + 1):
        if s[p]:
            s[p * p :: p] = False
    return np.flatnonzero(s)


def smallest_prime_factor(N: int) -> np.ndarray:
    spf = np.zeros(N + 1, dtype=np.int64)
    for p in primes_upto(isqrt(N)):
        blk = spf[p * p :: p]
        blk[blk == 0] = p
    idx = np.flatnonzero(spf == 0)
    spf[idx] = idx
    return spf


def is_squarefree(n: int) -> bool:
    n = abs(int(n))
    if n == 0:
        return False
    p = 2
    while p * p <= n:
        if n % (p * p) == 0:
            return False
        if n % p == 0:
            n //= p
        p += 1
    return True


def square_prime_divisors(n: int, spf: np.ndarray | None = None) -> list[int]:
    """Primes p with p^2 | n."""
    n = abs(int(n))
    out = []
    if spf is not None and n < len(spf):
        while n > 1:
            p = int(spf[n])
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            if e >= 2:
                out.append(p)
        return out
    p = 2
    while p * p <= n:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            if e >= 2:
                out.append(p)
        p += 1 if p == 2 else 2
    return out


def is_perfect_square(n: int) -> bool:
    return n >= 0 and isqrt(n) ** 2 == n


def fundamental_quadratic_D(max_abs_disc: int, sign: int) -> np.ndarray:
    """Squarefree D != 0, 1 of the given sign with |disc(Q(sqrt D))| <= max_abs_disc, sorted by |disc|."""
    sf = squarefree_mask(max_abs_disc)
    k = np.arange(max_abs_disc + 1)
    D = k * sign
    mod4 = D % 4
    disc = np.where(mod4 == 1, np.abs(D), 4 * np.abs(D))
    keep = sf & (disc <= max_abs_disc) & (D != 1) & (D != 0)
    D, disc = D[keep], disc[keep]
    order = np.lexsort((np.abs(D), disc))
    return D[order]
