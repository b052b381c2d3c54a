from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nfgrids.exact_linalg import (
    IllConditionedError,
    cross_product,
    det,
    gauss_reduce_2d,
    kernel_and_complement,
    lll_reduce,
    orth_project,
)


def _cofactor_det(M):
    M = [list(r) for r in M]
    if len(M) == 1:
        return M[0][0]
    return sum((-1) ** j * M[0][j] * _cofactor_det([r[:j] + r[j + 1 :] for r in M[1:]]) for j in range(len(M)))


def test_det_examples():
    assert det(np.eye(3, dtype=int)) == 1
    assert det([[2, 1], [1, 1]]) == 1
    assert det([[0, 1], [1, 0]]) == -1


def test_det_is_exact_python_int():
    d = det([[10**12, 1], [1, 10**12]])
    assert isinstance(d, int)
    assert d == 10**24 - 1


@given(st.lists(st.integers(-9, 9), min_size=16, max_size=16))
def test_det_matches_cofactor_expansion(entries):
    M = [entries[4 * i : 4 * i + 4] for i in range(4)]
    assert det(M) == _cofactor_det(M)


def test_det_real_ill_conditioned_signals():
    with pytest.raises(IllConditionedError):
        det(np.array([[1.0, 1.0], [1.0, 1.0 + 1e-14]]))


@pytest.mark.parametrize(
    "c, K_expected, k0_expected",
    [
        ((0, 0, 1), [(1, 0, 0), (0, 1, 0)], (0, 0, 1)),
        ((2, 3), [(3, -2)], (-1, 1)),
        ((1, 1, 1), [(1, -1, 0), (0, 1, -1)], (1, 0, 0)),
    ],
)
def test_kernel_examples(c, K_expected, k0_expected):
    K, k0 = kernel_and_complement(c)
    assert sum(a * b for a, b in zip(k0, c)) == 1
    for k in K:
        assert sum(a * b for a, b in zip(k, c)) == 0
    # same lattice as the expected kernel basis: unimodular change of basis
    M = np.array(K, dtype=float)
    Me = np.array(K_expected, dtype=float)
    X = np.linalg.lstsq(Me.T, M.T, rcond=None)[0]
    assert np.allclose(X, np.round(X)) and abs(abs(np.linalg.det(np.round(X))) - 1) < 1e-12


@given(st.lists(st.integers(-50, 50), min_size=2, max_size=5))
def test_kernel_and_complement_unimodular(c):
    from math import gcd

    g = 0
    for x in c:
        g = gcd(g, x)
    if g != 1:
        with pytest.raises(ValueError):
            kernel_and_complement(c)
        return
    K, k0 = kernel_and_complement(c)
    assert len(K) == len(c) - 1
    assert sum(a * b for a, b in zip(k0, c)) == 1
    assert all(sum(a * b for a, b in zip(k, c)) == 0 for k in K)
    assert abs(det(K + [list(k0)])) == 1


def test_cross_product_examples():
    e = np.eye(4)
    assert np.allclose(cross_product(*np.eye(3)[:2]), [0, 0, 1])
    assert np.allclose(cross_product(e[0], e[1], e[2]), e[3])
    assert np.allclose(cross_product(np.array([1.0, 2, 3]), np.array([1.0, 2, 3])), 0)


@settings(max_examples=50)
@given(st.lists(st.floats(-5, 5), min_size=12, max_size=12))
def test_cross_product_is_orthogonal_and_cofactor(xs):
    V = np.array(xs).reshape(3, 4)
    w = cross_product(*V)
    assert np.allclose(V @ w, 0, atol=1e-9)
    y = np.array([0.3, -1.1, 0.7, 2.0])
    assert np.isclose(w @ y, np.linalg.det(np.vstack([V, y])), atol=1e-8)


def test_orth_project_examples():
    u = np.array([1.0, 1.0])
    assert np.allclose(orth_project(u, u), 0)
    assert np.allclose(orth_project(np.array([1.0, -1.0]), u), [1, -1])
    assert np.allclose(orth_project(np.array([1.0, 0.0]), u), [0.5, -0.5])


def _shortest_norm(B, R=4):
    best = np.inf
    for c in itertools.product(range(-R, R + 1), repeat=B.shape[1]):
        if any(c):
            best = min(best, float(np.linalg.norm(B @ np.array(c))))
    return best


def test_lll_examples():
    assert np.allclose(np.abs(lll_reduce(np.eye(3)).basis), np.eye(3))
    R = lll_reduce(np.array([[1.0, 0.0], [100.0, 1.0]])).basis
    # the two unit vectors are tied in norm, so compare as a set up to sign
    assert sorted(map(tuple, np.abs(R).T)) == [(0.0, 1.0), (1.0, 0.0)]


@settings(max_examples=40)
@given(st.lists(st.integers(-20, 20), min_size=9, max_size=9))
def test_lll_size_reduced_and_same_lattice(xs):
    B = np.array(xs, dtype=float).reshape(3, 3)
    if abs(np.linalg.det(B)) < 0.5:
        return
    res = lll_reduce(B)
    R = res.basis
    U = np.array(res.transform, dtype=float)
    assert np.allclose(B @ U, R)
    assert abs(abs(np.linalg.det(U)) - 1) < 1e-9
    Q, Rr = np.linalg.qr(R)
    mu = Rr / np.diag(Rr)[:, None]
    assert np.all(np.abs(np.triu(mu, 1)) <= 0.5 + 1e-9)
    assert np.linalg.norm(R[:, 0]) <= 2 * _shortest_norm(B, 3) + 1e-9


def test_gauss_reduce_2d_is_reduced():
    b1, b2 = gauss_reduce_2d(np.array([1.0, 0.0, 0.0]), np.array([57.3, 1.0, 0.0]))
    assert b1 @ b1 <= b2 @ b2 + 1e-12
    assert abs(b1 @ b2) <= 0.5 * (b1 @ b1) + 1e-12
