"""Equidistribution statistics for torus coordinates, torsion orders and shapes.

Shapes of planar lattices live in the reflected fundamental domain
0 <= x <= 1/2, x^2 + y^2 >= 1. In the coordinates (x, w = 1/y) the hyperbolic
measure dx dy / y^2 becomes Lebesgue measure dx dw, and the domain is
{0 <= x <= 1/2, 0 < w <= 1/sqrt(1 - x^2)}. Capping at y <= y_cap removes the
strip w < 1/y_cap, whose mass is reported as the cusp mass.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import asin, pi, sqrt

import numpy as np
from scipy import stats as sps

# representative frequencies tracked across checkpoints in dimension 2
TRACKED_2D = ((1, 0), (0, 1), (1, 1), (1, -1), (2, 0), (0, 2), (2, 1), (1, 2))


# ----------------------------------------------------------------------------- Weyl sums


def frequencies(dim: int, K: int = 3) -> np.ndarray:
    """All integer k with 0 < |k|_inf <= K, lexicographic order."""
    ks = [k for k in itertools.product(range(-K, K + 1), repeat=dim) if any(k)]
    return np.array(ks, dtype=np.int64).reshape(-1, dim)


@dataclass
class WeylSumReport:
    frequencies: np.ndarray
    magnitudes: np.ndarray
    N: int

    def max(self) -> float:
        return float(self.magnitudes.max()) if len(self.magnitudes) else 0.0

    def get(self, k) -> float:
        k = np.asarray(k)
        hit = np.flatnonzero(np.all(self.frequencies == k, axis=1))
        if len(hit) == 0:
            raise KeyError(tuple(k))
        return float(self.magnitudes[hit[0]])


class WeylAccumulator:
    """Running sums of exp(2 pi i <k, x>); merge() is associative and commutative."""

    def __init__(self, dim: int, K: int = 3):
        self.dim = dim
        self.K = K
        self.freqs = frequencies(dim, K)
        self.sums = np.zeros(len(self.freqs), dtype=complex)
        self.N = 0

    def add(self, points, chunk: int = 200_000) -> "WeylAccumulator":
        X = np.asarray(points, dtype=float).reshape(-1, self.dim)
        for s in range(0, len(X), chunk):
            ph = X[s : s + chunk] @ self.freqs.T.astype(float)
            self.sums += np.exp(2j * pi * ph).sum(axis=0)
        self.N += len(X)
        return self

    def merge(self, other: "WeylAccumulator") -> "WeylAccumulator":
        if (other.dim, other.K) != (self.dim, self.K):
            raise ValueError("incompatible accumulators")
        out = WeylAccumulator(self.dim, self.K)
        out.sums = self.sums + other.sums
        out.N = self.N + other.N
        return out

    def report(self) -> WeylSumReport:
        if self.N == 0:
            raise ValueError("empty sample")
        return WeylSumReport(self.freqs, np.abs(self.sums) / self.N, self.N)


def weyl_sums(points, K: int = 3) -> WeylSumReport:
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if len(X) == 0:
        raise ValueError("empty sample")
    return WeylAccumulator(X.shape[1], K).add(X).report()


# ----------------------------------------------------------------------------- torsion


@dataclass
class TorsionHistogram:
    counts: dict[int, int]
    unclassified: int
    N: int

    def fraction_in(self, allowed) -> float:
        return sum(self.counts.get(m, 0) for m in allowed) / self.N if self.N else 1.0

    def support(self) -> list[int]:
        return sorted(m for m, c in self.counts.items() if c)


def torsion_census(orders, m_max: int = 12) -> TorsionHistogram:
    """Tally torsion orders; 0 or None marks an unclassified grid."""
    o = np.array([0 if v is None else int(v) for v in orders], dtype=np.int64) if not isinstance(orders, np.ndarray) else orders.astype(np.int64)
    bc = np.bincount(o, minlength=m_max + 1)
    counts = {m: int(bc[m]) for m in range(1, m_max + 1)}
    return TorsionHistogram(counts, int(bc[0]) + int(bc[m_max + 1 :].sum()), len(o))


def two_atom_fit(points, atoms=(0.0, 0.5), tol: float = 1e-9) -> tuple[float, float, int]:
    """Fractions of points within tol (mod 1) of each atom, and the number of outliers."""
    x = np.asarray(points, dtype=float).ravel()
    if len(x) == 0:
        return 0.0, 0.0, 0
    near = []
    for a in atoms:
        d = np.abs((x - a + 0.5) % 1.0 - 0.5)
        near.append(d <= tol)
    m1 = near[0]
    m2 = near[1] & ~m1
    out = int((~(m1 | m2)).sum())
    return float(m1.mean()), float(m2.mean()), out


# ----------------------------------------------------------------------------- shapes


def _edge_w(x):
    return 1.0 / np.sqrt(1.0 - np.asarray(x, dtype=float) ** 2)


@dataclass
class ShapeBins:
    """Rectangular cells in (x, w) plus top cells reaching the arc w = 1/sqrt(1 - x^2).

    The rectangles tile [0, 1/2] x [1/y_cap, 1]; since the arc lies above w = 1,
    each x-interval of the top row is bounded by the arc.
    """

    x_edges: np.ndarray
    w_edges: np.ndarray
    top_x_edges: np.ndarray
    y_cap: float = 10.0

    @classmethod
    def default(cls, nx: int = 4, nw: int = 5, ntop: int = 1, y_cap: float = 10.0) -> "ShapeBins":
        return cls(np.linspace(0, 0.5, nx + 1), np.linspace(1.0 / y_cap, 1.0, nw + 1), np.linspace(0, 0.5, ntop + 1), y_cap)

    @property
    def n_bins(self) -> int:
        return (len(self.x_edges) - 1) * (len(self.w_edges) - 1) + len(self.top_x_edges) - 1

    def masses(self) -> np.ndarray:
        """Hyperbolic masses of the bins, normalized over the capped domain."""
        dx = np.diff(self.x_edges)
        dw = np.diff(self.w_edges)
        rect = np.outer(dx, dw).ravel()
        t = self.top_x_edges
        top = np.array([asin(t[i + 1]) - asin(t[i]) - (t[i + 1] - t[i]) * self.w_edges[-1] for i in range(len(t) - 1)])
        m = np.concatenate([rect, top])
        return m / self.capped_area()

    def capped_area(self) -> float:
        return pi / 6 - 0.5 / self.y_cap

    def cusp_mass(self) -> float:
        """Mass of y > y_cap relative to the whole domain."""
        return (0.5 / self.y_cap) / (pi / 6)

    def assign(self, x, y) -> np.ndarray:
        """Bin index for each shape point, -1 for points in the cusp."""
        x = np.clip(np.asarray(x, dtype=float), 0.0, 0.5)
        w = 1.0 / np.asarray(y, dtype=float)
        nx, nw = len(self.x_edges) - 1, len(self.w_edges) - 1
        ix = np.clip(np.searchsorted(self.x_edges, x, side="right") - 1, 0, nx - 1)
        iw = np.searchsorted(self.w_edges, w, side="right") - 1
        it = np.clip(np.searchsorted(self.top_x_edges, x, side="right") - 1, 0, len(self.top_x_edges) - 2)
        out = np.where(iw >= nw, nx * nw + it, ix * nw + np.clip(iw, 0, nw - 1))
        return np.where(w < self.w_edges[0], -1, out)


@dataclass
class ShapeChi2:
    chi2: float
    dof: int
    p_value: float
    tv: float
    observed: np.ndarray
    expected: np.ndarray
    cusp_observed: float
    cusp_expected: float
    n: int


def shape_chi2(x, y, bins: ShapeBins | None = None, min_expected: float = 50.0) -> ShapeChi2:
    """Chi-square and total variation of shape points against the hyperbolic density."""
    bins = bins or ShapeBins.default()
    idx = bins.assign(x, y)
    inside = idx >= 0
    n = int(inside.sum())
    p = bins.masses()
    exp = p * n
    if n == 0 or exp.min() < min_expected:
        raise ValueError(f"undersized sample: min expected count {exp.min() if n else 0:.1f} < {min_expected}")
    obs = np.bincount(idx[inside], minlength=bins.n_bins).astype(float)
    chi2, pv = sps.chisquare(obs, exp)
    tv = 0.5 * float(np.abs(obs / n - p).sum())
    return ShapeChi2(float(chi2), bins.n_bins - 1, float(pv), tv, obs, exp, float(1 - inside.mean()), bins.cusp_mass(), n)


def sample_reference_shapes(N: int, rng: np.random.Generator, y_cap: float = 10.0) -> tuple[np.ndarray, np.ndarray]:
    """N shapes from dx dy / y^2 on the capped domain, by rejection in (x, w)."""
    xs, ys = [], []
    got = 0
    wmax = 2 / sqrt(3)
    while got < N:
        m = int(1.3 * (N - got)) + 16
        x = rng.uniform(0, 0.5, m)
        w = rng.uniform(1.0 / y_cap, wmax, m)
        ok = w <= _edge_w(x)
        xs.append(x[ok])
        ys.append(1.0 / w[ok])
        got += int(ok.sum())
    return np.concatenate(xs)[:N], np.concatenate(ys)[:N]


# ----------------------------------------------------------------------------- joint test


@dataclass
class IndependenceResult:
    chi2: float
    dof: int
    p_value: float
    table: np.ndarray


def joint_independence_chi2(table, min_expected: float = 20.0) -> IndependenceResult:
    T = np.asarray(table, dtype=float)
    if T.ndim != 2 or min(T.shape) < 2:
        raise ValueError("need a 2-d contingency table with at least two rows and columns")
    exp = np.outer(T.sum(1), T.sum(0)) / T.sum()
    if exp.min() < min_expected:
        raise ValueError(f"undersized cells: min expected {exp.min():.1f} < {min_expected}")
    chi2, pv, dof, _ = sps.chi2_contingency(T, correction=False)
    return IndependenceResult(float(chi2), int(dof), float(pv), T)


def shape_torus_table(shape_idx, coords, n_shape_groups: int = 4, torus_bins: int = 3, n_shape_bins: int | None = None) -> np.ndarray:
    """Contingency table of (grouped shape bin) x (torus cell).

    Shape bins are merged into ``n_shape_groups`` consecutive groups; the torus
    [0,1)^d is cut into torus_bins^d cubes.
    """
    shape_idx = np.asarray(shape_idx)
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1:
        coords = coords[:, None]
    keep = shape_idx >= 0
    shape_idx, coords = shape_idx[keep], coords[keep]
    nb = n_shape_bins or int(shape_idx.max()) + 1
    g = shape_idx * n_shape_groups // nb
    cell = np.zeros(len(coords), dtype=np.int64)
    for j in range(coords.shape[1]):
        cell = cell * torus_bins + np.clip((coords[:, j] * torus_bins).astype(np.int64), 0, torus_bins - 1)
    T = np.zeros((n_shape_groups, torus_bins ** coords.shape[1]), dtype=np.int64)
    np.add.at(T, (g, cell), 1)
    return T


# ----------------------------------------------------------------------------- convergence


@dataclass
class ConvergenceReport:
    checkpoints: list
    values: dict[str, list[float]]
    diffs: dict[str, list[float]] = field(default_factory=dict)
    decreasing_steps: dict[str, int] = field(default_factory=dict)

    def rows(self) -> list[dict]:
        out = []
        for name, vals in self.values.items():
            for T, v in zip(self.checkpoints, vals):
                out.append({"statistic": name, "T": T, "value": v})
        return out


def convergence_report(checkpoints, values: dict[str, list[float]]) -> ConvergenceReport:
    """Per-checkpoint values with successive differences and a count of decreasing steps."""
    cps = list(checkpoints)
    if len(cps) < 2:
        raise ValueError("need at least two checkpoints")
    if any(b <= a for a, b in zip(cps, cps[1:])):
        raise ValueError("checkpoints must increase")
    rep = ConvergenceReport(cps, {k: [float(x) for x in v] for k, v in values.items()})
    for k, v in rep.values.items():
        if len(v) != len(cps):
            raise ValueError(f"statistic {k} has {len(v)} values for {len(cps)} checkpoints")
        d = [b - a for a, b in zip(v, v[1:])]
        rep.diffs[k] = d
        rep.decreasing_steps[k] = sum(x < 0 for x in d)
    return rep
