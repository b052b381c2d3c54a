"""Sanity checks for the independent oracles used by the acceptance suite."""

from __future__ import annotations

from nfgrids.oracles import brute_force_classes, hunter_cubic_fields, quadratic_counts

# cubic field discriminants with |d| <= 200 from standard tables
KNOWN_COMPLEX = [-23, -31, -44, -59, -76, -83, -87, -104, -107, -108, -116, -135, -139, -140, -152, -172, -175, -199, -200]
KNOWN_REAL = [148]


def _sqfree(n):
    n = abs(n)
    return all(n % (p * p) for p in range(2, int(n**0.5) + 1))


def test_hunter_matches_tables():
    h = hunter_cubic_fields(200)
    assert sorted(h) == sorted(KNOWN_COMPLEX + KNOWN_REAL)
    assert set(h.values()) == {1}


def test_quadratic_counts_trial_division():
    T = 1000
    want = {"real_1mod4": 0, "real_other": 0, "imag_1mod4": 0, "imag_other": 0}
    for D in range(-T, T + 1):
        if D in (0, 1) or not _sqfree(D):
            continue
        d = D if D % 4 == 1 else 4 * D
        if abs(d) > T:
            continue
        key = ("real_" if D > 0 else "imag_") + ("1mod4" if D % 4 == 1 else "other")
        want[key] += 1
    assert quadratic_counts(T) == want


def test_brute_force_classes_small():
    classes = brute_force_classes(30)
    discs = {_d(c[0]) for c in classes}
    assert -23 in discs and 0 not in discs
    # every member of a class has the class discriminant
    for cls in classes:
        assert len({_d(f) for f in cls}) == 1


def _d(f):
    a, b, c, d = f
    return b * b * c * c - 4 * a * c**3 - 4 * b**3 * d - 27 * a * a * d * d + 18 * a * b * c * d
