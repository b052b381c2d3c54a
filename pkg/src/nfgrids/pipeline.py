"""Field families, batched grid computation, caching and reports.

The functions here are what the command line drives; they are also used
directly by the test suite so that every table in a report can be
reproduced from Python.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .arith import fundamental_quadratic_D
from .batch import grid_batch
from .cubic_forms import EnumerationWindow, disc_forms, field_forms
from .fields import (
    ALPHA_CONVENTION,
    EMBEDDINGS,
    ExternalField,
    IngestError,
    ingest_external_field,
    cubic_bases,
    cubic_roots,
    mt3_residuals,
    one_bar_vector,
    ordering_rows,
    orderings,
    quadratic_bases,
)
from .lattice import NORM_MODES, unimodular_completion
from .stats import (
    TRACKED_2D,
    ShapeBins,
    WeylAccumulator,
    convergence_report,
    joint_independence_chi2,
    shape_chi2,
    shape_torus_table,
    torsion_census,
    two_atom_fit,
)

log = logging.getLogger("nfgrids")

SCHEMA_VERSION = 1
ENV_PREFIX = "NFGRIDS_"
SIGNATURES = {2: ("2,0", "0,1"), 3: ("3,0", "1,1"), 4: ("4,0", "2,1", "0,2"), 5: ("5,0", "3,1", "1,2")}


class ConfigError(ValueError):
    pass


def parse_signature(sig: str) -> tuple[int, int]:
    r, s = (int(x) for x in sig.split(","))
    return r, s


def parse_E(spec) -> str | tuple[float, ...]:
    """'V0' or a vector written as '(1,2,3)' / '1,2,3' / a sequence."""
    if isinstance(spec, str):
        t = spec.strip()
        if t.upper() == "V0":
            return "V0"
        t = t.strip("()[] ")
        try:
            return tuple(float(x) for x in t.split(","))
        except ValueError:
            raise ConfigError(f"cannot parse E specification {spec!r}") from None
    return tuple(float(x) for x in spec)


def E_tag(E) -> str:
    return "V0" if E == "V0" else "u=" + ",".join(f"{x:g}" for x in E)


def resolve_u(E, signature: tuple[int, int], embedding: str = "plain") -> np.ndarray:
    """Normal vector u of E = u^perp, validated against 1-bar."""
    one = one_bar_vector(signature, embedding)
    if E == "V0":
        return one
    u = np.asarray(E, dtype=float)
    n = signature[0] + 2 * signature[1]
    if u.shape != (n,):
        raise ConfigError(f"E needs {n} components for signature {signature}, got {len(u)}")
    if not np.any(u):
        raise ConfigError("u must be nonzero")
    if abs(u @ one) < 1e-12 * np.linalg.norm(u) * np.linalg.norm(one):
        raise ConfigError(f"<u, 1bar> = 0 for u = {tuple(float(x) for x in u)}: E contains the line of 1bar")
    return u


# ----------------------------------------------------------------------------- configuration


@dataclass(frozen=True)
class RunConfig:
    degree: int = 3
    signature: str = "all"
    max_disc: int = 10_000
    checkpoints: tuple[int, ...] = ()
    E: str | tuple[float, ...] | None = None  # None means u = (1, 2, ..., n)
    orderings: str = "all"
    precision: int = 53
    tol: float = 1e-9
    torsion_tol: float = 1e-6
    m_max: int = 12
    norm_mode: str = "one_bar"
    embedding: str = "plain"
    cache_dir: str = "nfgrids-cache"
    out: str = "nfgrids-out"
    fmt: str = "csv"
    chunk: int = 200_000

    def __post_init__(self):
        if self.degree not in (2, 3, 4, 5):
            raise ConfigError(f"degree must be 2..5, got {self.degree}")
        if self.E is None:
            object.__setattr__(self, "E", tuple(float(k) for k in range(1, self.degree + 1)))
        allowed = SIGNATURES[self.degree] + ("all",)
        if self.signature not in allowed:
            raise ConfigError(f"signature {self.signature!r} not valid for degree {self.degree}; choose from {allowed}")
        if self.max_disc < 1:
            raise ConfigError("max_disc must be positive")
        if any(c > self.max_disc or c < 1 for c in self.checkpoints):
            raise ConfigError("checkpoints must lie in [1, max_disc]")
        if self.orderings not in ("all", "first"):
            raise ConfigError("orderings must be 'all' or 'first'")
        if self.norm_mode not in NORM_MODES:
            raise ConfigError(f"norm_mode must be one of {NORM_MODES}")
        if self.embedding not in EMBEDDINGS:
            raise ConfigError(f"embedding must be one of {EMBEDDINGS}")
        if self.fmt not in ("csv", "json"):
            raise ConfigError("fmt must be csv or json")
        if self.precision < 53:
            raise ConfigError("precision below 53 bits is not supported")
        for sig in self.signatures():
            resolve_u(self.E, parse_signature(sig), self.embedding)

    def signatures(self) -> tuple[str, ...]:
        return SIGNATURES[self.degree] if self.signature == "all" else (self.signature,)

    def all_checkpoints(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.checkpoints) | {self.max_disc}))

    @classmethod
    def from_sources(cls, overrides: dict | None = None, environ=None) -> "RunConfig":
        """Defaults, then NFGRIDS_* environment variables, then explicit overrides."""
        environ = os.environ if environ is None else environ
        vals: dict = {}
        for f in fields(cls):
            key = ENV_PREFIX + f.name.upper()
            if key in environ:
                vals[f.name] = _coerce(f.name, environ[key])
        for k, v in (overrides or {}).items():
            if v is not None:
                vals[k] = _coerce(k, v)
        try:
            return cls(**vals)
        except TypeError as e:
            raise ConfigError(str(e)) from None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["E"] = E_tag(self.E)
        return d


def _coerce(name: str, v):
    try:
        if name in ("degree", "max_disc", "precision", "m_max", "chunk"):
            return int(float(v)) if isinstance(v, str) else int(v)
        if name in ("tol", "torsion_tol"):
            return float(v)
        if name == "checkpoints":
            if isinstance(v, str):
                return tuple(int(float(x)) for x in v.split(",") if x.strip())
            return tuple(int(x) for x in v)
        if name == "E":
            return parse_E(v)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {v!r}") from None
    return v


# ----------------------------------------------------------------------------- field families


@dataclass
class FieldSet:
    """Fields of one degree and signature, ordered by |disc| then source."""

    degree: int
    signature: tuple[int, int]
    discs: np.ndarray
    source: np.ndarray  # D values (quadratic) or (N, 4) forms (cubic)
    external: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.discs)

    def source_strings(self) -> list[str]:
        if self.external:
            return [f"external:{f.ident}" for f in self.external]
        if self.degree == 2:
            return [f"quadratic:{int(D)}" for D in self.source]
        return ["cubic:" + ",".join(str(int(x)) for x in row) for row in self.source]

    def prefix(self, T: int) -> "FieldSet":
        k = int(np.searchsorted(np.abs(self.discs), T, side="right"))
        return FieldSet(self.degree, self.signature, self.discs[:k], self.source[:k], self.external[:k])

    def bases(self, lo: int = 0, hi: int | None = None, embedding: str = "plain", precision: int = 53) -> np.ndarray:
        """Embedded bases with columns (1bar, alpha_1, ...), first ordering."""
        hi = len(self) if hi is None else hi
        if self.external:
            # change basis so the first column is 1bar, as the batch grid code expects
            return np.stack([f.basis_matrix(embedding, precision) @ unimodular_completion(f.one_coords) for f in self.external[lo:hi]])
        if self.degree == 2:
            return quadratic_bases(self.source[lo:hi], embedding)
        F = self.source[lo:hi]
        real, cplx, _ = cubic_roots(F, precision)
        return cubic_bases(F, real, cplx, embedding)

    def mt3(self, lo: int = 0, hi: int | None = None, precision: int = 53, alpha2_sign: float = 1.0) -> np.ndarray:
        """Worst MT3 residual per field (zero for non-cubic fields)."""
        hi = len(self) if hi is None else hi
        if self.degree != 3 or self.external:
            return np.zeros(hi - lo)
        F = self.source[lo:hi]
        real, cplx, _ = cubic_roots(F, precision)
        return mt3_residuals(F, np.concatenate([real, cplx], axis=1), alpha2_sign).max(axis=1)


def quadratic_fields(T: int, signature: str) -> FieldSet:
    sign = 1 if signature == "2,0" else -1
    D = fundamental_quadratic_D(T, sign)
    disc = np.where(D % 4 == 1, D, 4 * D)
    return FieldSet(2, parse_signature(signature), disc, D)


def cubic_fields(T: int, signature: str) -> FieldSet:
    F = field_forms(EnumerationWindow(T, signature))[signature]
    return FieldSet(3, parse_signature(signature), disc_forms(F), F)


def external_fields(records: list[ExternalField], signature: tuple[int, int]) -> FieldSet:
    recs = sorted((f for f in records if f.signature == signature), key=lambda f: (abs(f.disc), f.poly))
    return FieldSet(recs[0].degree if recs else 0, signature, np.array([f.disc for f in recs], dtype=np.int64), np.arange(len(recs)), recs)


def load_fields(degree: int, signature: str, T: int) -> FieldSet:
    if degree == 2:
        return quadratic_fields(T, signature)
    if degree == 3:
        return cubic_fields(T, signature)
    raise ConfigError(f"degree {degree} fields come only from ingestion")


# ----------------------------------------------------------------------------- grids


@dataclass
class GridTable:
    """Grid outputs for every (field, ordering) pair of a FieldSet."""

    field_index: np.ndarray
    ordering: np.ndarray
    data: dict[str, np.ndarray]
    quarantined: np.ndarray  # boolean, per row
    reasons: list[tuple[int, int, str]]
    signature: tuple[int, int]
    E: object

    def __len__(self) -> int:
        return len(self.field_index)

    def select(self, mask) -> "GridTable":
        mask = np.asarray(mask)
        d = {k: v[mask] for k, v in self.data.items()}
        return replace(self, field_index=self.field_index[mask], ordering=self.ordering[mask], data=d, quarantined=self.quarantined[mask])


def compute_grids(
    fs: FieldSet,
    E,
    ordering_mode: str = "all",
    norm_mode: str = "one_bar",
    embedding: str = "plain",
    precision: int = 53,
    tol: float = 1e-9,
    torsion_tol: float = 1e-6,
    m_max: int = 12,
    witness: bool = True,
    chunk: int = 200_000,
) -> GridTable:
    """Grids of q_E(F) for every field in ``fs`` and every requested ordering.

    Rows failing the unit-generator, unimodularity or finiteness checks are
    quarantined (kept, flagged and listed) rather than dropped.
    """
    sig = fs.signature
    n = sig[0] + 2 * sig[1]
    one = one_bar_vector(sig, embedding)
    u = resolve_u(E, sig, embedding)
    perms = orderings(sig) if ordering_mode == "all" else orderings(sig)[:1]
    fi_parts, ord_parts, data_parts = [], [], []
    per = max(1, chunk // len(perms))
    for lo in range(0, len(fs), per):
        hi = min(len(fs), lo + per)
        B0 = fs.bases(lo, hi, embedding, precision)
        mt3 = fs.mt3(lo, hi, precision) if witness else None
        for k, p in enumerate(perms):
            B = B0[:, ordering_rows(sig, p), :]
            out = grid_batch(B, one, u, norm_mode=norm_mode, m_max=m_max, torsion_tol=torsion_tol, with_shape=(n == 3), with_witness=witness)
            if mt3 is not None:
                out["mt3"] = mt3
            out["lat"] = out["lat"].reshape(len(B), -1)
            fi_parts.append(np.arange(lo, hi))
            ord_parts.append(np.full(hi - lo, k))
            data_parts.append(out)
    if not data_parts:
        return GridTable(np.zeros(0, int), np.zeros(0, int), {}, np.zeros(0, bool), [], sig, E)
    data = {key: np.concatenate([d[key] for d in data_parts]) for key in data_parts[0]}
    fidx = np.concatenate(fi_parts)
    oidx = np.concatenate(ord_parts)
    order = np.lexsort((oidx, fidx))
    fidx, oidx = fidx[order], oidx[order]
    data = {k: v[order] for k, v in data.items()}
    gen_tol = tol if norm_mode == "one_bar" else np.inf
    bad = ~data["ok"] | (data["gen_norm_err"] > gen_tol) | (data["unimodular"] > tol)
    reasons = []
    for i in np.flatnonzero(bad):
        why = []
        if not data["ok"][i]:
            why.append("non-finite")
        if data["gen_norm_err"][i] > gen_tol:
            why.append(f"generator norm off by {data['gen_norm_err'][i]:.3g}")
        if data["unimodular"][i] > tol:
            why.append(f"lattice covolume off by {data['unimodular'][i]:.3g}")
        reasons.append((int(fidx[i]), int(oidx[i]), "; ".join(why)))
    for i, fi, oi, why in reasons[:20]:
        log.warning("quarantined field %d ordering %d: %s", fi, oi, why)
    return GridTable(fidx, oidx, data, bad, reasons, sig, E)


# ----------------------------------------------------------------------------- statistics


def weyl_by_checkpoint(fs: FieldSet, gt: GridTable, checkpoints, K: int = 3) -> dict[int, WeylAccumulator]:
    """Weyl accumulators over non-quarantined rows with |disc| <= T for each T."""
    absd = np.abs(fs.discs)[gt.field_index]
    x = gt.data["coords"]
    good = ~gt.quarantined
    out = {}
    acc = WeylAccumulator(x.shape[1], K)
    prev = 0
    for T in sorted(checkpoints):
        sel = good & (absd > prev) & (absd <= T)
        acc = acc.merge(WeylAccumulator(x.shape[1], K).add(x[sel]))
        out[T] = acc
        prev = T
    return out


@dataclass
class EquidistReport:
    run_id: str
    meta: dict
    sections: dict = field(default_factory=dict)
    tables: dict[str, list[dict]] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"run_id": self.run_id, "meta": self.meta, "sections": self.sections}, indent=2, sort_keys=True, default=_json_default)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def run_statistics(cfg: RunConfig, fs: FieldSet, gt: GridTable) -> EquidistReport:
    """All statistics that make sense for one (degree, signature, E) run."""
    sig = ",".join(map(str, fs.signature))
    meta = {
        "degree": fs.degree,
        "signature": sig,
        "E": E_tag(cfg.E),
        "checkpoints": list(cfg.all_checkpoints()),
        "orderings": cfg.orderings,
        "n_fields": len(fs),
        "n_grids": int((~gt.quarantined).sum()),
        "n_quarantined": int(gt.quarantined.sum()),
        "alpha_convention": ALPHA_CONVENTION,
        "embedding": cfg.embedding,
        "norm_mode": cfg.norm_mode,
        "version": __version__,
    }
    run_id = hashlib.sha256(json.dumps(meta, sort_keys=True).encode()).hexdigest()[:16]
    rep = EquidistReport(run_id, meta)
    good = ~gt.quarantined
    x = gt.data["coords"][good]
    if len(x) == 0:
        rep.sections["warning"] = "no grids"
        return rep
    cps = [T for T in cfg.all_checkpoints() if T <= cfg.max_disc]
    accs = weyl_by_checkpoint(fs, gt, cps)
    weyl_rows = []
    for T, acc in accs.items():
        if acc.N == 0:
            continue
        r = acc.report()
        for k, m in zip(r.frequencies.tolist(), r.magnitudes.tolist()):
            weyl_rows.append({"run_id": run_id, "T": T, "k": " ".join(map(str, k)), "abs_S": m, "N": r.N})
    rep.tables["weyl"] = weyl_rows
    final = accs[cps[-1]].report()
    rep.sections["weyl"] = {"N": final.N, "max_abs_S": final.max(), "argmax_k": final.frequencies[int(np.argmax(final.magnitudes))].tolist()}

    tors = torsion_census(gt.data["torsion"][good], cfg.m_max)
    rep.sections["torsion"] = {"counts": tors.counts, "unclassified": tors.unclassified, "N": tors.N, "support": tors.support()}
    rep.tables["torsion"] = [{"run_id": run_id, "order": m, "count": c} for m, c in tors.counts.items()] + [
        {"run_id": run_id, "order": "unclassified", "count": tors.unclassified}
    ]
    if x.shape[1] == 1:
        m0, m5, outl = two_atom_fit(x[:, 0], tol=cfg.tol)
        rep.sections["two_atom"] = {"mass_0": m0, "mass_half": m5, "outliers": outl, "tol": cfg.tol}
    if "shape_x" in gt.data:
        sx, sy = gt.data["shape_x"][good], gt.data["shape_y"][good]
        first = gt.ordering[good] == 0
        bins = ShapeBins.default()
        try:
            sc = shape_chi2(sx[first], sy[first], bins)
            rep.sections["shape"] = {
                "tv": sc.tv,
                "chi2": sc.chi2,
                "dof": sc.dof,
                "p_value": sc.p_value,
                "cusp_observed": sc.cusp_observed,
                "cusp_expected": sc.cusp_expected,
                "n": sc.n,
            }
            rep.tables["shape"] = [
                {"run_id": run_id, "bin": i, "observed": int(o), "expected": float(e)} for i, (o, e) in enumerate(zip(sc.observed, sc.expected))
            ]
            table = shape_torus_table(bins.assign(sx[first], sy[first]), x[first], n_shape_bins=bins.n_bins)
            ind = joint_independence_chi2(table)
            rep.sections["joint"] = {"chi2": ind.chi2, "dof": ind.dof, "p_value": ind.p_value}
        except ValueError as e:
            rep.sections["shape"] = {"undersized": str(e)}
    if len(cps) >= 2 and x.shape[1] == 2:
        vals = {}
        for k in TRACKED_2D:
            vals[f"S{k}"] = [accs[T].report().get(k) if accs[T].N else float("nan") for T in cps]
        cr = convergence_report(cps, vals)
        rep.tables["convergence"] = [dict(run_id=run_id, **row) for row in cr.rows()]
        rep.sections["convergence"] = {"decreasing_first_to_last": {k: v[-1] < v[0] for k, v in vals.items()}}
    return rep


# ----------------------------------------------------------------------------- cache


GRID_COLUMNS_BASE = ["disc", "source", "ordering", "quarantined", "torsion"]


def _header(kind: str, cfg: RunConfig, extra: dict | None = None) -> str:
    meta = {
        "schema": SCHEMA_VERSION,
        "kind": kind,
        "precision": cfg.precision,
        "alpha_convention": ALPHA_CONVENTION,
        "embedding": cfg.embedding,
        "norm_mode": cfg.norm_mode,
    }
    meta.update(extra or {})
    return "# " + json.dumps(meta, sort_keys=True) + "\n"


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


class FieldCache:
    """Append-only CSV of fields per (degree, signature), with a JSON sidecar.

    Extending to a larger bound appends only the new rows, so the file for a
    smaller bound is always a prefix of the file for a larger one.
    """

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.root = Path(cfg.cache_dir)

    def path(self, signature: str) -> Path:
        return self.root / f"fields_n{self.cfg.degree}_s{signature.replace(',', '-')}.csv"

    def sidecar(self, signature: str) -> Path:
        return self.path(signature).with_suffix(".json")

    def covered(self, signature: str) -> int:
        sc = self.sidecar(signature)
        if not sc.exists():
            return 0
        return int(json.loads(sc.read_text())["max_disc"])

    def populate(self, signature: str, T: int) -> int:
        """Ensure fields with |disc| <= T are cached; returns the number of rows appended."""
        have = self.covered(signature)
        if have >= T:
            return 0
        fs = load_fields(self.cfg.degree, signature, T)
        keep = np.abs(fs.discs) > have
        src = fs.source_strings()
        p = self.path(signature)
        self.root.mkdir(parents=True, exist_ok=True)
        new_file = not p.exists()
        with p.open("a", newline="") as fh:
            if new_file:
                fh.write(_header("fields", self.cfg, {"degree": self.cfg.degree, "signature": signature}))
                fh.write("degree,signature,disc,source\n")
            w = csv.writer(fh, lineterminator="\n")
            for i in np.flatnonzero(keep):
                w.writerow([self.cfg.degree, signature, int(fs.discs[i]), src[i]])
        n_total = int(len(fs))
        self.sidecar(signature).write_text(json.dumps({"max_disc": int(T), "rows": n_total, "schema": SCHEMA_VERSION}, sort_keys=True) + "\n")
        return int(keep.sum())

    def load(self, signature: str, T: int) -> FieldSet:
        if self.covered(signature) < T:
            raise FileNotFoundError(f"cache {self.path(signature)} does not cover |disc| <= {T}")
        discs, srcs = [], []
        with self.path(signature).open() as fh:
            for row in csv.reader(line for line in fh if not line.startswith("#")):
                if row[0] == "degree":
                    continue
                d = int(row[2])
                if abs(d) > T:
                    break
                discs.append(d)
                srcs.append(row[3])
        sig = parse_signature(signature)
        if self.cfg.degree == 2:
            src = np.array([int(s.split(":")[1]) for s in srcs], dtype=np.int64)
        else:
            src = np.array([[int(x) for x in s.split(":")[1].split(",")] for s in srcs], dtype=np.int64).reshape(-1, 4)
        return FieldSet(self.cfg.degree, sig, np.array(discs, dtype=np.int64), src)


def external_record(f: ExternalField) -> dict:
    """Normalized ingestion record (rationals as 'p/q' strings) for an accepted field."""
    return {
        "id": f.ident,
        "degree": f.degree,
        "signature": list(f.signature),
        "disc": f.disc,
        "poly": list(f.poly),
        "basis": [[str(x) for x in b] for b in f.basis],
    }


class ExternalStore:
    """Line-delimited JSON store of validated external fields, one file per degree."""

    def __init__(self, cache_dir, degree: int):
        self.degree = degree
        self.path = Path(cache_dir) / f"external_n{degree}.jsonl"

    def records(self) -> list[dict]:
        if not self.path.exists():
            return []
        return [json.loads(line) for line in self.path.read_text().splitlines() if line.strip()]

    def add(self, fields_: list[ExternalField]) -> tuple[int, int]:
        """Append fields not already stored (same poly and basis); returns (added, duplicates)."""
        have = {(tuple(r["poly"]), json.dumps(r["basis"])) for r in self.records()}
        new = []
        for f in fields_:
            rec = external_record(f)
            key = (tuple(rec["poly"]), json.dumps(rec["basis"]))
            if key in have:
                continue
            have.add(key)
            new.append(rec)
        if new:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a") as fh:
                for rec in new:
                    fh.write(json.dumps(rec, sort_keys=True) + "\n")
        return len(new), len(fields_) - len(new)

    def load(self, signature: str, T: int) -> FieldSet:
        if not self.path.exists():
            raise FileNotFoundError(f"no ingested degree {self.degree} fields at {self.path}; run 'nfgrids ingest' first")
        flds = [ingest_external_field(r, line=i + 1) for i, r in enumerate(self.records())]
        sig = parse_signature(signature)
        fs = external_fields([f for f in flds if abs(f.disc) <= T], sig)
        fs.degree = self.degree
        return fs


def load_cached_fields(cfg: RunConfig, signature: str, T: int | None = None) -> FieldSet:
    T = cfg.max_disc if T is None else T
    if cfg.degree >= 4:
        return ExternalStore(cfg.cache_dir, cfg.degree).load(signature, T)
    return FieldCache(cfg).load(signature, T)


def ingest_file(path, cache_dir) -> tuple[dict[int, tuple[int, int]], list[IngestError]]:
    """Validate every line of a JSONL file; accepted fields go to the per-degree stores.

    Returns {degree: (added, duplicates)} and the list of rejections (with line numbers).
    """
    accepted: dict[int, list[ExternalField]] = {}
    errors: list[IngestError] = []
    with open(path) as fh:
        for i, line in enumerate(fh, start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            try:
                f = ingest_external_field(line, line=i)
            except IngestError as e:
                errors.append(e)
                continue
            accepted.setdefault(f.degree, []).append(f)
    summary = {d: ExternalStore(cache_dir, d).add(fl) for d, fl in sorted(accepted.items())}
    return summary, errors


def grid_rows(fs: FieldSet, gt: GridTable) -> tuple[list[str], list[list]]:
    src = fs.source_strings()
    d = gt.data
    k = d["coords"].shape[1]
    cols = GRID_COLUMNS_BASE + [f"x{j}" for j in range(k)] + [f"lat{j}" for j in range(d["lat"].shape[1])]
    extra = [c for c in ("shape_x", "shape_y", "shape_consistency", "w_pairing", "w_in_v0", "w_shift_id", "w_shift_id_literal", "mt3", "unimodular") if c in d]
    cols += extra
    rows = []
    for i in range(len(gt)):
        fi = gt.field_index[i]
        t = int(d["torsion"][i])
        row = [int(fs.discs[fi]), src[fi], int(gt.ordering[i]), int(gt.quarantined[i]), t if t else ""]
        row += [_fmt(v) for v in d["coords"][i]] + [_fmt(v) for v in d["lat"][i]] + [_fmt(d[c][i]) for c in extra]
        rows.append(row)
    return cols, rows


def grid_cache_path(cfg: RunConfig, signature: str) -> Path:
    tag = E_tag(cfg.E).replace("=", "").replace(",", "_")
    return Path(cfg.cache_dir) / f"grids_n{cfg.degree}_s{signature.replace(',', '-')}_{tag}_{cfg.orderings}.csv"


def write_grid_cache(cfg: RunConfig, signature: str, fs: FieldSet, gt: GridTable) -> Path:
    root = Path(cfg.cache_dir)
    root.mkdir(parents=True, exist_ok=True)
    p = grid_cache_path(cfg, signature)
    cols, rows = grid_rows(fs, gt)
    buf = io.StringIO()
    buf.write(_header("grids", cfg, {"E": E_tag(cfg.E), "orderings": cfg.orderings, "signature": signature}))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    w.writerows(rows)
    p.write_text(buf.getvalue())
    meta = {"max_disc": cfg.max_disc, "rows": len(rows), "quarantined": int(gt.quarantined.sum()), "fields": len(fs)}
    p.with_suffix(".json").write_text(json.dumps(meta, sort_keys=True) + "\n")
    q = root / (p.stem + "_quarantine.csv")
    with q.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["disc", "source", "ordering", "reason"])
        src = fs.source_strings()
        for fi, oi, why in gt.reasons:
            w.writerow([int(fs.discs[fi]), src[fi], oi, why])
    return p


def load_grid_cache(cfg: RunConfig, signature: str, fs: FieldSet) -> GridTable:
    """Read grid rows written by :func:`write_grid_cache` back into a GridTable."""
    p = grid_cache_path(cfg, signature)
    if not p.exists():
        raise FileNotFoundError(f"no grid cache at {p}; run 'nfgrids grids' first")
    with p.open() as fh:
        meta = json.loads(fh.readline()[1:])
        want = {"precision": cfg.precision, "embedding": cfg.embedding, "norm_mode": cfg.norm_mode, "E": E_tag(cfg.E)}
        for k, v in want.items():
            if meta.get(k) != v:
                raise ConfigError(f"grid cache {p} was built with {k}={meta.get(k)!r}, config asks for {v!r}")
        reader = csv.reader(fh)
        cols = next(reader)
        rows = [r for r in reader]
    index = {src: i for i, src in enumerate(fs.source_strings())}
    col = {c: j for j, c in enumerate(cols)}
    rows = [r for r in rows if r[col["source"]] in index]
    fidx = np.array([index[r[col["source"]]] for r in rows], dtype=np.int64)
    oidx = np.array([int(r[col["ordering"]]) for r in rows], dtype=np.int64)
    quar = np.array([r[col["quarantined"]] == "1" for r in rows], dtype=bool)

    def block(prefix):
        names = [c for c in cols if c.startswith(prefix) and c[len(prefix) :].isdigit()]
        return np.array([[float(r[col[c]]) for c in names] for r in rows], dtype=float).reshape(len(rows), len(names))

    data = {
        "coords": block("x"),
        "lat": block("lat"),
        "torsion": np.array([int(r[col["torsion"]] or 0) for r in rows], dtype=np.int64),
    }
    for c in ("shape_x", "shape_y"):
        if c in col:
            data[c] = np.array([float(r[col[c]]) for r in rows])
    return GridTable(fidx, oidx, data, quar, [], fs.signature, cfg.E)


def write_report(cfg: RunConfig, reports: list[EquidistReport]) -> list[Path]:
    """JSON (or flat CSV) reports plus a markdown summary; no figures are rendered."""
    root = Path(cfg.out)
    root.mkdir(parents=True, exist_ok=True)
    written = []
    for rep in reports:
        stem = f"report_n{rep.meta['degree']}_s{rep.meta['signature'].replace(',', '-')}_{rep.meta['E'].replace('=', '').replace(',', '_')}"
        p = root / f"{stem}.json"
        p.write_text(rep.to_json() + "\n")
        written.append(p)
        for name, rows in rep.tables.items():
            if not rows:
                continue
            tp = root / f"{stem}_{name}.csv"
            with tp.open("w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
                w.writeheader()
                for r in rows:
                    w.writerow({k: _fmt(v) for k, v in r.items()})
            written.append(tp)
    md = root / "report.md"
    md.write_text(markdown_summary(reports))
    written.append(md)
    return written


def markdown_summary(reports: list[EquidistReport]) -> str:
    lines = ["# nfgrids report", ""]
    for rep in reports:
        m = rep.meta
        lines.append(f"## degree {m['degree']}, signature ({m['signature']}), E: {m['E']}")
        lines.append("")
        lines.append(f"- run id `{rep.run_id}`; fields {m['n_fields']}, grids {m['n_grids']}, quarantined {m['n_quarantined']}")
        s = rep.sections
        if "weyl" in s:
            lines.append(f"- max |S_k| over 0 < |k| <= 3: {s['weyl']['max_abs_S']:.4g} at k = {tuple(s['weyl']['argmax_k'])} (N = {s['weyl']['N']})")
        if "torsion" in s:
            t = s["torsion"]
            lines.append(f"- torsion support {t['support']}, unclassified {t['unclassified']} of {t['N']}")
        if "two_atom" in s:
            a = s["two_atom"]
            lines.append(f"- two-atom fit: mass at 0 {a['mass_0']:.6f}, at 1/2 {a['mass_half']:.6f}, outliers {a['outliers']}")
        if "shape" in s and "tv" in s["shape"]:
            sh = s["shape"]
            lines.append(f"- shape TV distance {sh['tv']:.4f}, chi2 {sh['chi2']:.1f} on {sh['dof']} dof; cusp observed {sh['cusp_observed']:.4f} vs {sh['cusp_expected']:.4f}")
        if "shape" in s and "undersized" in s["shape"]:
            lines.append(f"- shape test skipped, sample undersized: {s['shape']['undersized']}")
        if "joint" in s:
            j = s["joint"]
            lines.append(f"- shape x torus independence: chi2 {j['chi2']:.1f} on {j['dof']} dof, p = {j['p_value']:.3g}")
        if "convergence" in s:
            dec = s["convergence"]["decreasing_first_to_last"]
            lines.append(f"- tracked |S_k| decreasing from first to last checkpoint: {sum(dec.values())} of {len(dec)}")
        lines.append("")
    return "\n".join(lines)
