from __future__ import annotations

from math import log, sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nfgrids.batch import grid_batch
from nfgrids.fields import QuadraticField, cubic_ring_from_form, minkowski_embed, one_bar_vector, orderings
from nfgrids.lattice import (
    DeformationParams,
    EmbeddedLattice,
    GridPoint,
    apply_normalization,
    canonical_basis,
    consistency_witness,
    covolume,
    deform_to_Y1,
    dual_lattice,
    flow_matrix,
    grid_of,
    normalization_matrix,
    pi1_pi2_consistency,
    rescale_unimodular,
    shape_from_gram,
    shape_point,
    torsion_order,
)

SQRT5 = sqrt(5)
PHI = (1 + SQRT5) / 2


def _std(n):
    return EmbeddedLattice(np.eye(n), (0,) * (n - 1) + (1,), (n, 0))


def _q5():
    return minkowski_embed(QuadraticField(5))


def _c23():
    return minkowski_embed(cubic_ring_from_form((1, 0, -1, -1)))


def _grid(L, E):
    u = one_bar_vector(L.signature) if isinstance(E, str) else np.asarray(E, dtype=float)
    Ld, _ = deform_to_Y1(L, DeformationParams(u))
    return grid_of(Ld)


def test_covolume_examples():
    assert covolume(_std(3)) == pytest.approx(1.0)
    assert covolume(_q5()) == pytest.approx(2.2360680, abs=1e-7)


@settings(max_examples=30)
@given(st.floats(0.2, 5.0), st.integers(0, 10_000))
def test_covolume_scaling(c, seed):
    B = np.random.default_rng(seed).normal(size=(3, 3)) + 3 * np.eye(3)
    assert covolume(c * B) == pytest.approx(c**3 * covolume(B), rel=1e-10)


def test_rescale_unimodular():
    L = _std(2)
    assert np.allclose(rescale_unimodular(L).basis, L.basis)
    L2 = EmbeddedLattice(2 * np.eye(2), (0, 1), (2, 0))
    assert covolume(L2) == pytest.approx(4.0)
    assert np.allclose(rescale_unimodular(L2).basis, np.eye(2))
    assert covolume(rescale_unimodular(_q5())) == pytest.approx(1.0, abs=1e-12)


def test_normalization_examples():
    L = _std(2)
    assert np.allclose(apply_normalization(L, [[0, 1]], [[1, 1]], 0.0).basis, L.basis)
    g = normalization_matrix([[0, 1]], [[1, 1]], log(2))
    assert np.allclose(g @ [1, 1], [0.5, 0.5])
    assert np.allclose(g @ [0, 1], [0, 2])


@settings(max_examples=30)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_flow_group_law(s, t):
    u = np.array([1.0, 2.0, 3.0])
    one = np.ones(3)
    assert np.allclose(flow_matrix(u, one, s) @ flow_matrix(u, one, t), flow_matrix(u, one, s + t), atol=1e-9)
    assert np.linalg.det(flow_matrix(u, one, t)) == pytest.approx(1.0)


def test_deform_t_quadratic():
    _, t = deform_to_Y1(_q5(), DeformationParams(np.array([1.0, 0.0])))
    # ln(|1bar| cov^{-1/n}) with |1bar| = sqrt 2, cov = sqrt 5
    assert t == pytest.approx(log(sqrt(2) * 5 ** (-0.25)), abs=1e-12)
    assert t == pytest.approx(-0.05579, abs=1e-5)


def test_deform_t_cubic_229_generator_unit():
    L = minkowski_embed(cubic_ring_from_form((1, 0, -4, -1)))
    assert covolume(L) ** 2 == pytest.approx(229, rel=1e-9)
    Ld, t = deform_to_Y1(L, DeformationParams(np.array([1.0, 2.0, 3.0])))
    assert t == pytest.approx(log(sqrt(3) * 229 ** (-1 / 6)), abs=1e-12)
    assert t == pytest.approx(-0.3565, abs=5e-4)
    assert np.linalg.norm(Ld.generator()) == pytest.approx(1.0, abs=1e-12)
    assert covolume(Ld) == pytest.approx(1.0, abs=1e-12)


def test_deform_already_in_Y1():
    # cov = |1bar|^n, so rescaling alone makes the generator a unit vector
    L = EmbeddedLattice(np.array([[1.0, -1.0], [1.0, 1.0]]), (1, 0), (2, 0))
    Ld, t = deform_to_Y1(L, DeformationParams(np.array([1.0, 0.0])))
    assert t == pytest.approx(0.0, abs=1e-15)
    assert np.allclose(Ld.basis, L.basis / sqrt(2))


@settings(max_examples=30)
@given(st.integers(0, 10_000), st.floats(0.3, 3.0))
def test_dual_properties(seed, c):
    B = np.random.default_rng(seed).normal(size=(3, 3)) + 3 * np.eye(3)
    assert np.allclose(dual_lattice(np.eye(3)), np.eye(3))
    assert np.allclose(dual_lattice(c * B), dual_lattice(B) / c)
    assert np.allclose(dual_lattice(dual_lattice(B)), B, atol=1e-9)


def test_grid_of_standard_lattice():
    # orthonormal lattice whose last basis vector spans the line of 1bar
    Q, _ = np.linalg.qr(np.array([[1.0, 1.0, 1.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).T)
    Q = Q[:, [1, 2, 0]]
    Q[:, 2] *= np.sign(Q[0, 2])
    G = grid_of(EmbeddedLattice(Q, (0, 0, 1), (3, 0)))
    assert np.allclose(G.coords, 0)
    assert np.allclose(G.lat_basis.T @ G.lat_basis, np.eye(2), atol=1e-12)


def test_grid_q5_examples():
    assert _grid(_q5(), (1.0, 0.0)).coords[0] == pytest.approx(PHI - 1, abs=1e-12)
    assert _grid(_q5(), "V0").coords[0] == pytest.approx(0.5, abs=1e-12)


def test_grid_lattice_part_unimodular():
    G = _grid(_c23(), (1.0, 2.0, 3.0))
    W = G.lat_basis
    assert sqrt(np.linalg.det(W.T @ W)) == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(W.T @ np.array([1.0, 1.0, 0.0]), 0, atol=1e-12)


@pytest.mark.parametrize("coords, order", [((0.0, 0.0), 1), ((0.5, 0.0), 2), ((1 / 3, 2 / 3), 3)])
def test_torsion_examples(coords, order):
    W = np.eye(2)
    x = np.array(coords)
    assert torsion_order(GridPoint(W, W @ x, W @ x, x)) == order


def test_torsion_unclassified():
    x = np.array([sqrt(2) % 1, 0.1])
    assert torsion_order(GridPoint(np.eye(2), x, x, x), m_max=12) is None


def test_shape_examples():
    assert shape_from_gram(np.eye(2)).tau == pytest.approx((0.0, 1.0))
    hexg = np.array([[1.0, 0.5], [0.5, 1.0]])
    assert shape_from_gram(hexg).tau == pytest.approx((0.5, sqrt(3) / 2))


@settings(max_examples=40)
@given(st.floats(0, 2 * np.pi), st.booleans(), st.integers(0, 10_000))
def test_shape_invariant_under_O2(theta, reflect, seed):
    W = np.random.default_rng(seed).normal(size=(2, 2)) + 2 * np.eye(2)
    R = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    if reflect:
        R = R @ np.diag([1.0, -1.0])
    s1, s2 = shape_point(W), shape_point(R @ W)
    assert s1.tau == pytest.approx(s2.tau, abs=1e-9)
    x, y = s1.tau
    assert -1e-9 <= x <= 0.5 + 1e-9 and x * x + y * y >= 1 - 1e-9


@settings(max_examples=60)
@given(st.sampled_from(["square", "hex", "random"]), st.integers(-3, 3), st.integers(-3, 3), st.floats(0, 2 * np.pi))
def test_canonical_basis_independent_of_input_basis(kind, p, q, theta):
    """Equal lattices, including ones with norm ties, give entrywise equal bases."""
    base = {"square": np.eye(2), "hex": np.array([[1.0, 0.5], [0.0, sqrt(3) / 2]]), "random": np.array([[1.0, 0.37], [0.0, 1.21]])}[kind]
    R = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)], [0.3, 0.7]])
    W = R @ base
    U = np.array([[1, p], [0, 1]]) @ np.array([[1, 0], [q, 1]])
    assert np.allclose(canonical_basis(W), canonical_basis(W @ U), atol=1e-9)


def test_pi1_pi2_consistency():
    assert pi1_pi2_consistency(_q5(), np.array([1.0, 0.0]))
    assert pi1_pi2_consistency(_c23(), np.array([1.0, 2.0, 3.0]))


# (1,6,0,-2) and (1,0,-6,-2) have projected lattices with exact reduction ties
@pytest.mark.parametrize("form", [(1, 0, -4, -1), (1, 6, 0, -2), (1, 0, -6, -2), (1, 0, -1, -1)])
def test_lattice_part_same_across_E(form):
    ring = cubic_ring_from_form(form)
    for perm in orderings(ring.signature):
        L = minkowski_embed(ring, perm)
        Ws = [_grid(L, E).lat_basis for E in ((1.0, 2.0, 3.0), (1.0, 0.0, 2.0), "V0")]
        assert np.allclose(Ws[0], Ws[1], atol=1e-9) and np.allclose(Ws[0], Ws[2], atol=1e-9)


def test_witness_residuals_cubic():
    W = consistency_witness(_c23(), np.array([1.0, 2.0, 3.0]))
    r = W.residuals
    assert r["pairing"] < 1e-9
    assert r["in_v0"] < 1e-9
    assert r["dual"] < 1e-9
    assert r["shift_id"] < 1e-9
    assert r["unimodular"] < 1e-9


def test_witness_pairing_signs_are_minus_delta():
    # Replaying the cross-product computation gives <beta_i, alpha_i^0> = -1 for
    # every i, not the alternating (-1)^i pattern; both signatures agree.
    for form in ((1, 0, -1, -1), (1, 0, -4, -1)):
        assert consistency_witness(minkowski_embed(cubic_ring_from_form(form)), np.array([1.0, 2.0, 3.0])).residuals["signs"] == [-1, -1]


def test_witness_shift_id_needs_unit_generator_reading():
    r = consistency_witness(_c23(), np.array([1.0, 2.0, 3.0])).residuals
    assert r["shift_id"] < 1e-9
    assert r["shift_id_literal"] > 1e-3


def test_witness_quadratic_translation_matches_closed_form():
    L = _q5()
    W = consistency_witness(L, np.array([1.0, 0.0]))
    assert W.residuals["shift_id"] < 1e-9
    assert _grid(L, (1.0, 0.0)).coords[0] == pytest.approx((1 + SQRT5) / 2 % 1, abs=1e-12)


def test_batch_matches_per_object():
    forms = [(1, 0, -1, -1), (1, 0, -4, -1), (1, 1, -3, -1), (1, -1, -2, 1), (2, 1, -2, -2)]
    for f in forms:
        ring = cubic_ring_from_form(f)
        sig = ring.signature
        one = one_bar_vector(sig)
        u = np.array([1.0, 2.0, 3.0])
        for perm in orderings(sig):
            L = minkowski_embed(ring, perm)
            G = _grid(L, u)
            out = grid_batch(L.basis[None], one, u)
            assert np.allclose(out["lat"][0], G.lat_basis, atol=1e-12)
            assert np.allclose(out["coords"][0], G.coords, atol=1e-12)
