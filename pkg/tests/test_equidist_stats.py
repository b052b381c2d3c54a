from __future__ import annotations

from math import sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from nfgrids.stats import (
    ShapeBins,
    WeylAccumulator,
    convergence_report,
    frequencies,
    joint_independence_chi2,
    sample_reference_shapes,
    shape_chi2,
    shape_torus_table,
    torsion_census,
    two_atom_fit,
    weyl_sums,
)


def test_frequency_set_size():
    assert len(frequencies(2, 3)) == 48
    assert len(frequencies(1, 3)) == 6


def test_weyl_single_point():
    r = weyl_sums(np.tile([[0.3, 0.71]], (50, 1)))
    assert np.allclose(r.magnitudes, 1.0)


@pytest.mark.parametrize("m", [2, 3, 5, 7])
def test_weyl_regular_grid(m):
    g = np.arange(m) / m
    pts = np.array([(a, b) for a in g for b in g])
    r = weyl_sums(pts)
    for k, s in zip(r.frequencies, r.magnitudes):
        if np.all(k % m == 0):
            assert s == pytest.approx(1.0)
        else:
            assert s < 1e-12


def test_weyl_uniform_sample_seeded():
    x = np.random.default_rng(20240611).random((10**6, 2))
    assert weyl_sums(x).max() < 0.005


def test_weyl_empty_raises():
    with pytest.raises(ValueError):
        weyl_sums(np.zeros((0, 2)))


@settings(max_examples=25)
@given(st.integers(0, 10_000))
def test_weyl_permutation_invariant_and_mergeable(seed):
    rng = np.random.default_rng(seed)
    x = rng.random((300, 2))
    r1 = weyl_sums(x)
    r2 = weyl_sums(rng.permutation(x))
    assert np.allclose(r1.magnitudes, r2.magnitudes, atol=1e-12)
    a, b, c = (WeylAccumulator(2).add(x[s]) for s in (slice(0, 100), slice(100, 170), slice(170, 300)))
    left = a.merge(b).merge(c).report()
    right = c.merge(a.merge(b)).report()
    assert np.allclose(left.magnitudes, r1.magnitudes, atol=1e-12)
    assert np.allclose(right.magnitudes, r1.magnitudes, atol=1e-12)
    assert 0 <= r1.magnitudes.min() and r1.magnitudes.max() <= 1 + 1e-12


def test_torsion_census_examples():
    h = torsion_census(np.ones(10, dtype=int))
    assert h.counts[1] == 10 and h.support() == [1]
    h = torsion_census([1, 3, 3, None, 2])
    assert h.unclassified == 1
    assert sum(h.counts.values()) + h.unclassified == h.N == 5
    assert h.fraction_in({1, 3}) == pytest.approx(0.6)


def test_two_atom_examples():
    assert two_atom_fit(np.full(10, 0.5)) == (0.0, 1.0, 0)
    N = 1000
    x = np.concatenate([np.zeros(300), np.full(700, 0.5)])
    m0, m5, out = two_atom_fit(x)
    assert abs(m0 - 0.3) <= 1 / N and abs(m5 - 0.7) <= 1 / N and out == 0
    # 1 - 1e-12 is within tol of 0 on the circle
    assert two_atom_fit([1 - 1e-12, 0.5 + 1e-3]) == (0.5, 0.0, 1)


@settings(max_examples=25)
@given(st.integers(0, 10_000))
def test_two_atom_monotone_in_tol(seed):
    x = np.random.default_rng(seed).choice([0.0, 0.5], 200) + np.random.default_rng(seed + 1).normal(0, 1e-3, 200)
    prev = None
    for tol in (1e-1, 1e-2, 1e-3, 1e-4):
        m0, m5, _ = two_atom_fit(x, tol=tol)
        if prev is not None:
            assert m0 <= prev[0] and m5 <= prev[1]
        prev = (m0, m5)


def _bin_mass_numeric(x0, x1, y_lo_fn, y_hi_fn):
    v, _ = integrate.dblquad(lambda y, x: 1.0 / y**2, x0, x1, y_lo_fn, y_hi_fn, epsabs=1e-12)
    return v


def test_shape_masses_against_quadrature():
    bins = ShapeBins.default()
    area = bins.capped_area()
    m = bins.masses()
    assert m.sum() == pytest.approx(1.0, abs=1e-12)
    nx, nw = len(bins.x_edges) - 1, len(bins.w_edges) - 1
    for i in range(nx):
        for j in range(nw):
            x0, x1 = bins.x_edges[i], bins.x_edges[i + 1]
            w0, w1 = bins.w_edges[j], bins.w_edges[j + 1]
            v = _bin_mass_numeric(x0, x1, lambda x, w1=w1: 1 / w1, lambda x, w0=w0: 1 / w0)
            assert m[i * nw + j] == pytest.approx(v / area, abs=1e-9)
    v = _bin_mass_numeric(0, 0.5, lambda x: sqrt(1 - x * x), lambda x: 1.0)
    assert m[-1] == pytest.approx(v / area, abs=1e-9)
    # cusp: the region y > y_cap has hyperbolic area 0.5 / y_cap
    assert bins.cusp_mass() == pytest.approx((0.5 / 10) / (np.pi / 6))


def test_shape_masses_refine_then_aggregate():
    coarse = ShapeBins.default(4, 5, 1).masses()
    fine = ShapeBins.default(8, 10, 2).masses()
    rect = fine[:80].reshape(8, 10)
    agg = rect.reshape(4, 2, 5, 2).sum(axis=(1, 3)).ravel()
    assert np.allclose(agg, coarse[:20], atol=1e-12)
    assert fine[80:].sum() == pytest.approx(coarse[20], abs=1e-12)


def test_reference_sample_tv_small():
    x, y = sample_reference_shapes(10**5, np.random.default_rng(7))
    sc = shape_chi2(x, y)
    assert sc.tv < 0.02
    assert sc.cusp_observed == 0.0


def test_point_mass_tv_near_one():
    sc = shape_chi2(np.zeros(10**5), np.ones(10**5), min_expected=0)
    assert sc.tv > 0.9


def test_shape_chi2_undersized():
    with pytest.raises(ValueError, match="undersized"):
        shape_chi2(np.zeros(100), np.ones(100))


def test_independence_null_and_correlated():
    rng = np.random.default_rng(3)
    a, b = rng.integers(0, 4, 20_000), rng.integers(0, 3, 20_000)
    T = np.zeros((4, 3))
    np.add.at(T, (a, b), 1)
    r = joint_independence_chi2(T)
    assert r.dof == 6 and r.chi2 < 30 and r.p_value > 0.001
    C = np.diag([5000.0, 5000, 5000]) + 30
    assert joint_independence_chi2(C).chi2 > 100 * 4


def test_independence_undersized():
    with pytest.raises(ValueError):
        joint_independence_chi2(np.array([[1, 2], [3, 4]]))


def test_shape_torus_table_shape():
    rng = np.random.default_rng(0)
    x, y = sample_reference_shapes(5000, rng)
    idx = ShapeBins.default().assign(x, y)
    T = shape_torus_table(idx, rng.random((5000, 2)), n_shape_bins=21)
    assert T.sum() == 5000


def test_convergence_report():
    rep = convergence_report([10**4, 10**5, 10**6], {"c": [0.2, 0.2, 0.2], "d": [0.3, 0.1, 0.05]})
    assert rep.diffs["c"] == [0.0, 0.0]
    assert rep.decreasing_steps["d"] == 2
    assert len(rep.rows()) == 6
    with pytest.raises(ValueError):
        convergence_report([1], {"c": [0.0]})
