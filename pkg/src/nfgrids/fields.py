"""Rings of integers of quadratic, cubic and ingested number fields, and their Minkowski lattices.

Conventions
-----------
* Real embeddings come first, sorted ascending; each complex pair is
  represented by the root with positive imaginary part and stored as a
  (Re, Im) coordinate pair.
* The ``"plain"`` embedding uses the bare (Re, Im) identification, so
  1-bar = (1, ..., 1, 1, 0, ..., 1, 0) and |1-bar|^2 = r + s. The
  ``"trace"`` embedding scales complex coordinates by sqrt(2), which turns
  the Euclidean form into the trace form (|1-bar|^2 = n).
* Cubic rings use alpha1 = -a*theta and alpha2 = -a*theta^2 - b*theta - c.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, isqrt, sqrt

import numpy as np

from .arith import is_squarefree

ALPHA_CONVENTION = "alpha1=-a*theta;alpha2=-a*theta^2-b*theta-c"
EMBEDDINGS = ("plain", "trace")


def one_bar_vector(signature: tuple[int, int], embedding: str = "plain") -> np.ndarray:
    r, s = signature
    w = sqrt(2.0) if embedding == "trace" else 1.0
    return np.array([1.0] * r + [w, 0.0] * s)


def orderings(signature: tuple[int, int]) -> list[tuple[int, ...]]:
    """All embedding orderings in S_r x S_s, as permutations of coordinate blocks.

    Each ordering is a tuple of length r + s listing which real embedding
    (first r entries) and which complex pair (last s entries) goes where.
    """
    r, s = signature
    out = []
    for pr in itertools.permutations(range(r)):
        for ps in itertools.permutations(range(s)):
            out.append(tuple(pr) + tuple(r + j for j in ps))
    return out


def ordering_rows(signature: tuple[int, int], perm: tuple[int, ...]) -> list[int]:
    """Row permutation of the R^n coordinates induced by an embedding ordering."""
    r, s = signature
    rows = []
    for k, src in enumerate(perm):
        if k < r:
            rows.append(src)
        else:
            j = src - r
            rows += [r + 2 * j, r + 2 * j + 1]
    return rows


def _embed_rows(real_vals, complex_vals, embedding):
    """Stack values at embeddings into R^n coordinates. Works on arrays with a trailing basis axis."""
    w = sqrt(2.0) if embedding == "trace" else 1.0
    rows = list(real_vals)
    for z in complex_vals:
        rows += [w * np.real(z), w * np.imag(z)]
    return np.stack(rows, axis=-2)


# ----------------------------------------------------------------------------- quadratic


@dataclass(frozen=True)
class QuadraticField:
    D: int

    def __post_init__(self):
        if self.D in (0, 1) or not is_squarefree(self.D):
            raise ValueError(f"D = {self.D} is not a squarefree integer other than 0, 1")

    @property
    def disc(self) -> int:
        return self.D if self.D % 4 == 1 else 4 * self.D

    @property
    def signature(self) -> tuple[int, int]:
        return (2, 0) if self.D > 0 else (0, 1)

    @property
    def degree(self) -> int:
        return 2


def quadratic_basis(D: int) -> tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]:
    """Ring basis {1, omega}, each element written as x + y*sqrt(D)."""
    QuadraticField(D)
    if D % 4 == 1:
        return (Fraction(1), Fraction(0)), (Fraction(1, 2), Fraction(1, 2))
    return (Fraction(1), Fraction(0)), (Fraction(0), Fraction(1))


def quadratic_bases(Ds, embedding: str = "plain") -> np.ndarray:
    """Embedded bases, shape (N, 2, 2), columns (1, omega), first ordering.

    All entries of ``Ds`` must share a sign.
    """
    Ds = np.asarray(Ds, dtype=np.int64)
    half = (Ds % 4 == 1).astype(float)
    rt = np.sqrt(np.abs(Ds).astype(float))
    coef = np.where(half == 1, 0.5, 1.0)
    N = len(Ds)
    B = np.zeros((N, 2, 2))
    if N == 0:
        return B
    if np.all(Ds > 0):
        B[:, :, 0] = 1.0
        B[:, 0, 1] = 0.5 * half + coef * rt
        B[:, 1, 1] = 0.5 * half - coef * rt
    elif np.all(Ds < 0):
        w = sqrt(2.0) if embedding == "trace" else 1.0
        B[:, 0, 0] = w
        B[:, 0, 1] = w * 0.5 * half
        B[:, 1, 1] = w * coef * rt
    else:
        raise ValueError("mixed signs in a quadratic batch")
    return B


def closed_form_quadratic(D: int, u_param: float) -> float:
    """Torus coordinate of the grid for E = (1, u)^perp, real quadratic field, first ordering.

    For D = 1 mod 4 this is (1 + u + (1 - u) sqrt D) / (2 (1 + u)) mod 1.
    For D = 2, 3 mod 4 the same computation with basis {1, sqrt D} gives
    (1 - u) sqrt D / (1 + u) mod 1.
    """
    if u_param == -1:
        raise ValueError("u = -1 makes E the line of 1-bar")
    QuadraticField(D)
    if D <= 0:
        raise ValueError("closed form is for real quadratic fields")
    rt = sqrt(D)
    if D % 4 == 1:
        val = (1 + u_param + (1 - u_param) * rt) / (2 * (1 + u_param))
    else:
        val = (1 - u_param) * rt / (1 + u_param)
    return float(val % 1.0)


def grid_coordinate_quadratic(D: int, u_param: float) -> float:
    """Coordinate the grid map actually produces for E = (1, u)^perp.

    Differs from :func:`closed_form_quadratic` by the constant -(1-u)/(1+u),
    which is an integer (hence invisible mod 1) only when 2/(1+u) is an integer.
    """
    cf = closed_form_quadratic(D, u_param)
    return float((cf - (1 - u_param) / (1 + u_param)) % 1.0)


# ----------------------------------------------------------------------------- roots


def polish_roots(coeffs: np.ndarray, roots: np.ndarray, iters: int = 3) -> np.ndarray:
    """Newton refinement. ``coeffs`` (N, n+1) highest degree first, ``roots`` (N, n) complex."""
    c = coeffs.astype(complex)[:, :, None]
    z = roots.astype(complex).copy()
    deg = coeffs.shape[1] - 1
    for _ in range(iters):
        p = np.zeros_like(z)
        dp = np.zeros_like(z)
        for k in range(deg + 1):
            dp = dp * z + p
            p = p * z + c[:, k]
        ok = dp != 0
        step = np.where(ok, p / np.where(ok, dp, 1), 0)
        z = z - step
    return z


def root_residual(coeffs: np.ndarray, roots: np.ndarray) -> np.ndarray:
    """Relative residual |f(z)| / sum |c_k| |z|^k, shape (N, n)."""
    deg = coeffs.shape[1] - 1
    p = np.zeros(roots.shape, dtype=complex)
    scale = np.zeros(roots.shape)
    az = np.abs(roots)
    for k in range(deg + 1):
        p = p * roots + coeffs[:, k, None]
        scale = scale * az + np.abs(coeffs[:, k, None])
    return np.abs(p) / np.maximum(scale, 1e-300)


def poly_roots(coeffs: np.ndarray, precision: int = 53) -> np.ndarray:
    """Complex roots of a batch of polynomials (highest degree first), polished."""
    coeffs = np.asarray(coeffs, dtype=float)
    if precision > 53:
        import mpmath

        out = []
        with mpmath.workprec(precision):
            for row in coeffs:
                rs = mpmath.polyroots([mpmath.mpf(x) for x in row], maxsteps=200, extraprec=precision)
                out.append([complex(x) for x in rs])
        return np.array(out)
    lead = coeffs[:, :1]
    monic = coeffs / lead
    n = coeffs.shape[1] - 1
    comp = np.zeros((len(coeffs), n, n))
    comp[:, 0, :] = -monic[:, 1:]
    if n > 1:
        comp[:, np.arange(1, n), np.arange(n - 1)] = 1.0
    z = np.linalg.eigvals(comp)
    return polish_roots(monic, z)


def split_roots(roots: np.ndarray, r: int) -> tuple[np.ndarray, np.ndarray]:
    """Real roots ascending (N, r) and upper half plane representatives (N, s) sorted by real part."""
    N, n = roots.shape
    s = (n - r) // 2
    order = np.argsort(np.abs(roots.imag), axis=1, kind="stable")
    srt = np.take_along_axis(roots, order, axis=1)
    real = np.sort(srt[:, :r].real, axis=1)
    if s == 0:
        return real, np.zeros((N, 0), dtype=complex)
    rest = srt[:, r:]
    upper = np.take_along_axis(rest, np.argsort(-rest.imag, axis=1, kind="stable")[:, :s], axis=1)
    upper = np.take_along_axis(upper, np.argsort(upper.real, axis=1, kind="stable"), axis=1)
    return real, upper


# ----------------------------------------------------------------------------- cubic


@dataclass(frozen=True)
class CubicRing:
    form: tuple[int, int, int, int]
    disc: int
    signature: tuple[int, int]
    real_roots: tuple[float, ...]
    complex_roots: tuple[complex, ...]
    transform: tuple[int, int, int, int] = (1, 0, 0, 1)

    @property
    def degree(self) -> int:
        return 3

    @property
    def theta_roots(self) -> tuple:
        return self.real_roots + self.complex_roots

    def alpha_values(self, z):
        a, b, c, d = self.form
        return -a * z, -a * z * z - b * z - c

    def mt3_residuals(self) -> np.ndarray:
        """Scaled residuals of the three multiplication-table identities at every root."""
        return mt3_residuals(np.array([self.form]), np.array([list(self.theta_roots)]))[0]


def alpha_exprs(form) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """alpha_i as integer coefficient lists in theta, constant term first."""
    a, b, c, d = form
    return (0, -a), (-c, -b, -a)


def mt3_residuals(forms: np.ndarray, roots: np.ndarray, alpha2_sign: float = 1.0) -> np.ndarray:
    """Max over the three identities, per root; shape (N, k).

    The residual of each identity lhs = rhs is |lhs - rhs| / max(1, sum of |terms|).
    ``alpha2_sign=-1`` flips the sign convention of alpha2 (a negative control).
    """
    a, b, c, d = (forms[:, i, None].astype(float) for i in range(4))
    z = roots
    a1 = -a * z
    a2 = alpha2_sign * (-a * z * z - b * z - c)
    res = []
    lhs, rhs = a1 * a2, -a * d + 0 * z
    res.append(np.abs(lhs - rhs) / np.maximum(1, np.abs(lhs) + np.abs(rhs)))
    lhs = a1 * a1
    t = [-a * c + 0 * z, b * a1, -a * a2]
    res.append(np.abs(lhs - sum(t)) / np.maximum(1, np.abs(lhs) + sum(np.abs(x) for x in t)))
    lhs = a2 * a2
    t = [-b * d + 0 * z, d * a1, -c * a2]
    res.append(np.abs(lhs - sum(t)) / np.maximum(1, np.abs(lhs) + sum(np.abs(x) for x in t)))
    return np.max(np.stack(res), axis=0)


def cubic_roots(forms: np.ndarray, precision: int = 53) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Roots for forms with a != 0 and a common sign of disc.

    Returns (real roots (N, r), complex roots (N, s), signature r).
    """
    forms = np.asarray(forms, dtype=np.int64)
    from .cubic_forms import disc_forms

    D = disc_forms(forms)
    if np.any(forms[:, 0] == 0):
        raise ValueError("leading coefficient must be nonzero")
    if np.all(D > 0):
        r = 3
    elif np.all(D < 0):
        r = 1
    else:
        raise ValueError("mixed or zero discriminants in batch")
    z = poly_roots(forms.astype(float), precision)
    real, cplx = split_roots(z, r)
    return real, cplx, r


def cubic_bases(forms: np.ndarray, real: np.ndarray, cplx: np.ndarray, embedding: str = "plain") -> np.ndarray:
    """Embedded bases (N, 3, 3) with columns (1, alpha1, alpha2), first ordering."""
    a, b, c = (forms[:, i, None].astype(float) for i in range(3))

    def vals(z):
        one = np.ones_like(z)
        return np.stack([one, -a * z, -a * z * z - b * z - c], axis=-1)

    rv = vals(real)  # (N, r, 3)
    cv = vals(cplx)  # (N, s, 3)
    return _embed_rows([rv[:, k, :] for k in range(rv.shape[1])], [cv[:, k, :] for k in range(cv.shape[1])], embedding)


def _make_leading_nonzero(form):
    from .cubic_forms import transform

    a, b, c, d = form
    if a != 0:
        return tuple(form), (1, 0, 0, 1)
    for k in range(4):
        gamma = (1, 0, k, 1) if k else (0, 1, 1, 0)
        g = transform(form, gamma)
        if g[0] != 0:
            return g, gamma
    raise ValueError("form vanishes identically")


def cubic_ring_from_form(form, precision: int = 53) -> CubicRing:
    from .cubic_forms import disc_form

    D = disc_form(*form)
    if D == 0:
        raise ValueError(f"degenerate form {tuple(form)} (disc 0)")
    f, gamma = _make_leading_nonzero(tuple(int(x) for x in form))
    real, cplx, r = cubic_roots(np.array([f]), precision)
    return CubicRing(
        form=f,
        disc=D,
        signature=(r, (3 - r) // 2),
        real_roots=tuple(float(x) for x in real[0]),
        complex_roots=tuple(complex(x) for x in cplx[0]),
        transform=gamma,
    )


# ----------------------------------------------------------------------------- external


class IngestError(ValueError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


@dataclass(frozen=True)
class ExternalField:
    degree: int
    signature: tuple[int, int]
    disc: int
    poly: tuple[int, ...]  # c0 .. cn, monic
    basis: tuple[tuple[Fraction, ...], ...]  # coefficients in theta, constant first
    ident: str = ""
    one_coords: tuple[int, ...] = field(default=())

    def roots(self, precision: int = 53) -> tuple[np.ndarray, np.ndarray]:
        z = poly_roots(np.array([self.poly[::-1]], dtype=float), precision)
        real, cplx = split_roots(z, self.signature[0])
        return real[0], cplx[0]

    def basis_matrix(self, embedding: str = "plain", precision: int = 53) -> np.ndarray:
        real, cplx = self.roots(precision)
        coeffs = np.array([[float(x) for x in b] + [0.0] * (self.degree - len(b)) for b in self.basis])

        def vals(z):
            pw = np.stack([z**k for k in range(self.degree)], axis=-1)
            return pw @ coeffs.T

        return _embed_rows([vals(x) for x in real], [vals(z) for z in cplx], embedding)


def _parse_rational(x) -> Fraction:
    if isinstance(x, bool):
        raise ValueError("boolean is not a rational")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise ValueError(f"bad rational {x!r}")


def _one_coords(basis, n) -> tuple[int, ...]:
    """Integer c with sum c_i basis_i = 1, by exact elimination."""
    M = [[Fraction(0)] * n for _ in range(n)]
    for i, b in enumerate(basis):
        for k, x in enumerate(b):
            M[k][i] = x
    rhs = [Fraction(1)] + [Fraction(0)] * (n - 1)
    A = [row[:] + [rhs[k]] for k, row in enumerate(M)]
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col] != 0), None)
        if piv is None:
            raise ValueError("basis is linearly dependent")
        A[col], A[piv] = A[piv], A[col]
        for r in range(n):
            if r != col and A[r][col] != 0:
                f = A[r][col] / A[col][col]
                A[r] = [A[r][k] - f * A[col][k] for k in range(n + 1)]
    sol = [A[k][n] / A[k][k] for k in range(n)]
    if any(x.denominator != 1 for x in sol):
        raise ValueError("1 is not an integral combination of the basis")
    c = tuple(int(x) for x in sol)
    g = 0
    for x in c:
        g = gcd(g, x)
    if g != 1:
        raise ValueError("coordinates of 1 are not primitive")
    return c


def ingest_external_field(record, line: int | None = None, rel_tol: float = 1e-6) -> ExternalField:
    """Validate one ingestion record (JSON text or dict) and build an ExternalField."""
    try:
        rec = json.loads(record) if isinstance(record, str) else dict(record)
    except (json.JSONDecodeError, TypeError, ValueError) as e:
        raise IngestError(f"not a JSON object: {e}", line) from None
    for key in ("degree", "signature", "disc", "poly", "basis"):
        if key not in rec:
            raise IngestError(f"missing field {key!r}", line)
    try:
        n = int(rec["degree"])
        r, s = (int(x) for x in rec["signature"])
        disc = int(rec["disc"])
        poly = tuple(int(x) for x in rec["poly"])
        basis = tuple(tuple(_parse_rational(x) for x in b) for b in rec["basis"])
    except (TypeError, ValueError, ZeroDivisionError) as e:
        raise IngestError(f"schema violation: {e}", line) from None
    if n not in (2, 3, 4, 5):
        raise IngestError(f"unsupported degree {n}", line)
    if r + 2 * s != n or r < 0 or s < 0:
        raise IngestError(f"signature {(r, s)} incompatible with degree {n}", line)
    if len(poly) != n + 1 or poly[-1] != 1:
        raise IngestError("poly must list c0..cn of a monic degree-n polynomial", line)
    if len(basis) != n or any(len(b) == 0 or len(b) > n for b in basis):
        raise IngestError("basis must hold n coefficient lists of length <= n", line)
    if disc == 0 or (disc > 0) != (s % 2 == 0):
        raise IngestError(f"disc sign inconsistent with signature {(r, s)}", line)
    # irreducibility screen: distinct roots and no rational (hence integer) root
    c0 = poly[0]
    if c0 == 0:
        raise IngestError("polynomial has the root 0", line)
    for q in _divisors(abs(c0)):
        for cand in (q, -q):
            if sum(ck * cand**k for k, ck in enumerate(poly)) == 0:
                raise IngestError(f"polynomial has the rational root {cand}", line)
    z = poly_roots(np.array([poly[::-1]], dtype=float))[0]
    if np.min([abs(z[i] - z[j]) for i in range(n) for j in range(i)]) < 1e-9:
        raise IngestError("polynomial has (numerically) repeated roots", line)
    nreal = int(np.sum(np.abs(z.imag) < 1e-9 * np.maximum(1, np.abs(z))))
    if nreal != r:
        raise IngestError(f"polynomial has {nreal} real roots, signature says {r}", line)
    try:
        oc = _one_coords(basis, n)
    except ValueError as e:
        raise IngestError(str(e), line) from None
    fld = ExternalField(n, (r, s), disc, poly, basis, str(rec.get("id", line if line is not None else "")), oc)
    B = fld.basis_matrix("plain")
    cov = abs(np.linalg.det(B))
    expect = 2.0 ** (-s) * sqrt(abs(disc))
    if abs(cov - expect) > rel_tol * expect:
        raise IngestError(f"Gram determinant gives |disc| = {cov**2 * 4**s:.6g}, record claims {abs(disc)}", line)
    return fld


def _divisors(n: int) -> list[int]:
    out = []
    for k in range(1, isqrt(n) + 1):
        if n % k == 0:
            out += [k, n // k]
    return sorted(set(out))


# ----------------------------------------------------------------------------- embedding


def minkowski_embed(fld, perm: tuple[int, ...] | None = None, embedding: str = "plain", precision: int = 53):
    """EmbeddedLattice of a quadratic, cubic or external field for one embedding ordering."""
    from .lattice import EmbeddedLattice

    if isinstance(fld, QuadraticField):
        B = quadratic_bases([fld.D], embedding)[0]
        oc = (1, 0)
        tag = f"quadratic:{fld.D}"
    elif isinstance(fld, CubicRing):
        B = cubic_bases(
            np.array([fld.form]), np.array([fld.real_roots]), np.array([fld.complex_roots], dtype=complex).reshape(1, -1), embedding
        )[0]
        oc = (1, 0, 0)
        tag = "cubic:" + ",".join(map(str, fld.form))
    elif isinstance(fld, ExternalField):
        B = fld.basis_matrix(embedding, precision)
        oc = fld.one_coords
        tag = f"external:{fld.ident}"
    else:
        raise TypeError(f"unsupported field object {type(fld).__name__}")
    sig = fld.signature
    if perm is None:
        perm = tuple(range(sig[0] + sig[1]))
    if sorted(perm[: sig[0]]) != list(range(sig[0])) or sorted(perm[sig[0] :]) != list(range(sig[0], sig[0] + sig[1])):
        raise ValueError(f"{perm} is not an ordering in S_r x S_s for signature {sig}")
    B = B[ordering_rows(sig, perm)]
    return EmbeddedLattice(B, oc, sig, f"{tag};pi={perm}", embedding)
